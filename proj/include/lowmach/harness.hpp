#pragma once

#include "lowmach/constitutive.hpp"
#include "lowmach/diagnostics.hpp"
#include "lowmach/dynamics.hpp"
#include "lowmach/errors.hpp"
#include "lowmach/spectral.hpp"
#include "lowmach/state.hpp"
#include "lowmach/timestepper.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace lowmach {

// ---------------------------------------------------------------------------
// Rate fitting

struct RateFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};

/// Least-squares fit of log(err) against log(eps): err ~ exp(intercept) eps^slope.
inline RateFit fit_rate(const std::vector<std::pair<double, double>>& points) {
    if (points.size() < 2) throw std::invalid_argument("fit_rate: need at least two points");
    for (const auto& [e, err] : points) {
        if (!(e > 0.0)) throw std::invalid_argument("fit_rate: eps must be positive");
        if (!(err > 0.0))
            throw std::invalid_argument("fit_rate: error " + std::to_string(err) + " at eps " + std::to_string(e) +
                                        " is not positive; the two solutions coincide to rounding");
    }
    const double m = double(points.size());
    double sx = 0.0, sy = 0.0;
    for (const auto& [e, err] : points) {
        sx += std::log(e);
        sy += std::log(err);
    }
    const double mx = sx / m, my = sy / m;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (const auto& [e, err] : points) {
        const double dx = std::log(e) - mx, dy = std::log(err) - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (sxx == 0.0) throw std::invalid_argument("fit_rate: all eps values coincide");
    RateFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ss_res = 0.0;
    for (const auto& [e, err] : points) {
        const double r = std::log(err) - (f.intercept + f.slope * std::log(e));
        ss_res += r * r;
    }
    f.r2 = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
    return f;
}

// ---------------------------------------------------------------------------
// Sweep configuration and result

struct SweepConfig {
    ModelKind model = ModelKind::cahn_hilliard;
    std::vector<double> eps_list{0.4, 0.2, 0.1, 0.05};
    int dim = 2;
    int n = 64;
    double t_end = 0.5;
    std::vector<double> sample_times;  // empty: 11 equispaced instants in [0, t_end]
    int s_index = 3;
    std::string initial = "taylor_green_bubble";
    double velocity_amplitude = 1.0;
    double kappa0 = 0.1;
    std::uint64_t seed = 1;
    StepperConfig stepper;
    int parallel = 1;

    std::vector<double> resolved_sample_times() const {
        return sample_times.empty() ? equispaced_times(t_end, 10) : sample_times;
    }

    void validate() const {
        if (eps_list.empty()) throw ConfigError("sweep: eps_list is empty");
        for (std::size_t i = 0; i < eps_list.size(); ++i) {
            if (!(eps_list[i] > 0.0)) throw ConfigError("sweep: eps values must be positive");
            if (i > 0 && !(eps_list[i] < eps_list[i - 1]))
                throw ConfigError("sweep: eps_list must be strictly decreasing");
        }
        if (!(t_end > 0.0)) throw ConfigError("sweep: t_end must be > 0");
        const auto st = resolved_sample_times();
        for (std::size_t i = 0; i < st.size(); ++i) {
            if (st[i] < 0.0 || st[i] > t_end) throw ConfigError("sweep: sample_times must lie in [0, t_end]");
            if (i > 0 && !(st[i] > st[i - 1])) throw ConfigError("sweep: sample_times must be increasing");
        }
        if (s_index < 2) throw ConfigError("sweep: s_index must be >= 2");
        if (!is_known_preset(initial)) throw ConfigError("sweep: unknown initial preset '" + initial + "'");
        if (kappa0 < 0.0) throw ConfigError("sweep: kappa0 must be >= 0");
        if (parallel < 1) throw ConfigError("sweep: parallel must be >= 1");
        if (dim != 2) throw ConfigError("sweep: the incompressible reference needs dim = 2");
        try {
            TorusGrid(dim, n);
            stepper.validate();
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("sweep: ") + e.what());
        }
    }
};

/// Error norms between the compressible solution at one eps and the
/// incompressible reference, at one sample time. All are squared norms.
struct SweepSample {
    double time = 0.0;
    double err_u = 0.0;         // ||u_eps - u||^2 in L2
    double err_phi = 0.0;       // ||phi_eps - phi||^2 in H1 (CH) or H2 (AC)
    double err_rho = 0.0;       // ||rho_eps - 1||^2 in H^s
    double err_grad_rho = 0.0;  // ||grad(rho_eps - 1)||^2 in H^s (CH) or H^(s-2) (AC)
    double integrand = 0.0;     // ||u_eps - u||_1^2 + ||phi_eps - phi||_3^2
    double distance = 0.0;      // modulated energy distance
    double modulated_full = 0.0;
};

struct EpsRecord {
    double eps = 0.0;
    bool failed = false;
    std::string failure;
    std::vector<SweepSample> trace;
    // Maxima over the sample times.
    double err_u = 0.0;
    double err_phi = 0.0;
    double err_combined = 0.0;  // sup of err_u + err_phi
    double err_rho = 0.0;
    double err_grad_rho = 0.0;
    double time_integrated = 0.0;  // trapezoid rule over the samples
    double last_dt = 0.0;
};

struct SweepSlopes {
    std::optional<RateFit> err_u, err_phi, err_combined, err_rho, err_grad_rho, time_integrated;
};

struct SweepResult {
    ModelKind model = ModelKind::cahn_hilliard;
    int s_index = 3;
    std::vector<double> sample_times;
    std::vector<EpsRecord> records;
    SweepSlopes slopes;

    bool complete() const {
        return std::none_of(records.begin(), records.end(), [](const EpsRecord& r) { return r.failed; });
    }
    std::vector<double> failed_eps() const {
        std::vector<double> out;
        for (const auto& r : records)
            if (r.failed) out.push_back(r.eps);
        return out;
    }
};

namespace detail {

inline double gradient_sobolev_square(const Field& f, int s) {
    const auto& kk = f.grid().k_squared_table();
    return weighted_spectral_sum(f, [&](std::size_t i) { return kk[i] * std::pow(1.0 + kk[i], s); });
}

inline SweepSample compare(double t, const CompressibleState& cs, const IncompressibleState& ref, int s_index,
                           const Constitutive& c) {
    const auto [ue, phie] = primitives(cs);
    const VectorField du = ue - ref.u.to_physical();
    const Field dphi = phie - ref.phi.to_physical();
    const Field drho = cs.rho.to_physical().add_constant(-1.0);
    const bool ch = cs.model == ModelKind::cahn_hilliard;
    auto sq = [](double v) { return v * v; };

    SweepSample smp;
    smp.time = t;
    smp.err_u = sq(sobolev_norm(du, 0));
    smp.err_phi = sq(sobolev_norm(dphi, ch ? 1 : 2));
    smp.err_rho = sq(sobolev_norm(drho, s_index));
    smp.err_grad_rho = gradient_sobolev_square(drho, ch ? s_index : s_index - 2);
    smp.integrand = sq(sobolev_norm(du, 1)) + sq(sobolev_norm(dphi, 3));
    const auto me = modulated_energy(cs, ref, c);
    smp.distance = me.distance;
    smp.modulated_full = me.full;
    return smp;
}

inline std::optional<std::size_t> sample_index(const std::vector<double>& times, double t) {
    for (std::size_t i = 0; i < times.size(); ++i)
        if (std::abs(times[i] - t) <= 1e-12 * std::max(1.0, std::abs(t))) return i;
    return std::nullopt;
}

inline void summarize(EpsRecord& r) {
    for (std::size_t i = 0; i < r.trace.size(); ++i) {
        const auto& s = r.trace[i];
        r.err_u = std::max(r.err_u, s.err_u);
        r.err_phi = std::max(r.err_phi, s.err_phi);
        r.err_combined = std::max(r.err_combined, s.err_u + s.err_phi);
        r.err_rho = std::max(r.err_rho, s.err_rho);
        r.err_grad_rho = std::max(r.err_grad_rho, s.err_grad_rho);
        if (i > 0) r.time_integrated += 0.5 * (s.time - r.trace[i - 1].time) * (s.integrand + r.trace[i - 1].integrand);
    }
}

template <class Get>
std::optional<RateFit> fit_family(const std::vector<EpsRecord>& records, Get get) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& r : records)
        if (!r.failed) pts.emplace_back(r.eps, get(r));
    if (pts.size() < 2) return std::nullopt;
    for (const auto& p : pts)
        if (!(p.second > 0.0)) return std::nullopt;
    return fit_rate(pts);
}

}  // namespace detail

/// Reference trajectory sampled at the sweep's sample times.
inline std::vector<IncompressibleState> reference_trajectory(const SweepConfig& cfg, const Constitutive& c) {
    const TorusGrid g(cfg.dim, cfg.n);
    const auto init = initial_preset(cfg.initial, g, cfg.velocity_amplitude);
    const auto times = cfg.resolved_sample_times();
    std::vector<IncompressibleState> out(times.size());
    IncompressibleState s{leray_project(init.u0.to_spectral()).to_physical(), init.phi0, cfg.model};
    integrate<IncompressibleState>(s, c, cfg.stepper, times, [&](double t, const IncompressibleState& st, double) {
        if (auto i = detail::sample_index(times, t)) out[*i] = st;
    });
    return out;
}

/// Compressible run at one eps compared against a precomputed reference.
inline EpsRecord run_single_eps(const SweepConfig& cfg, const Constitutive& c, double eps,
                                const std::vector<IncompressibleState>& reference) {
    const TorusGrid g(cfg.dim, cfg.n);
    const auto init = initial_preset(cfg.initial, g, cfg.velocity_amplitude);
    const auto times = cfg.resolved_sample_times();
    EpsRecord rec;
    rec.eps = eps;
    try {
        const auto s0 = well_prepared_initial(init.u0, init.phi0, eps, cfg.kappa0, cfg.seed, cfg.model, cfg.s_index);
        integrate<CompressibleState>(s0, c, cfg.stepper, times, [&](double t, const CompressibleState& st, double dt) {
            if (auto i = detail::sample_index(times, t)) rec.trace.push_back(detail::compare(t, st, reference[*i], cfg.s_index, c));
            if (dt > 0.0) rec.last_dt = dt;
        });
    } catch (const NumericalError& e) {
        rec.failed = true;
        rec.failure = e.what();
    }
    detail::summarize(rec);
    return rec;
}

/// Runs the eps sweep: one incompressible reference, one compressible run per
/// eps (optionally on `cfg.parallel` threads), then log-log rate fits over the
/// successful entries.
inline SweepResult run_sweep(const SweepConfig& cfg, const Constitutive& c) {
    cfg.validate();
    c.validate();
    SweepResult res;
    res.model = cfg.model;
    res.s_index = cfg.s_index;
    res.sample_times = cfg.resolved_sample_times();

    const auto reference = reference_trajectory(cfg, c);
    res.records.resize(cfg.eps_list.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < cfg.eps_list.size(); i = next++)
            res.records[i] = run_single_eps(cfg, c, cfg.eps_list[i], reference);
    };
    const int nthreads = std::min<int>(cfg.parallel, int(cfg.eps_list.size()));
    if (nthreads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    auto& sl = res.slopes;
    sl.err_u = detail::fit_family(res.records, [](const EpsRecord& r) { return r.err_u; });
    sl.err_phi = detail::fit_family(res.records, [](const EpsRecord& r) { return r.err_phi; });
    sl.err_combined = detail::fit_family(res.records, [](const EpsRecord& r) { return r.err_combined; });
    sl.err_rho = detail::fit_family(res.records, [](const EpsRecord& r) { return r.err_rho; });
    sl.err_grad_rho = detail::fit_family(res.records, [](const EpsRecord& r) { return r.err_grad_rho; });
    sl.time_integrated = detail::fit_family(res.records, [](const EpsRecord& r) { return r.time_integrated; });
    return res;
}

/// Max pointwise difference at t_end between the reference at n and at 2n,
/// compared on the coarse nodes.
inline double reference_resolution_gap(const SweepConfig& cfg, const Constitutive& c) {
    SweepConfig fine = cfg;
    fine.n = 2 * cfg.n;
    fine.sample_times = {cfg.t_end};
    SweepConfig coarse = cfg;
    coarse.sample_times = {cfg.t_end};
    const auto a = reference_trajectory(coarse, c).back().to_physical();
    const auto b = reference_trajectory(fine, c).back().to_physical();
    const int n = cfg.n;
    double gap = 0.0;
    auto cmp = [&](const Field& fc, const Field& ff) {
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                gap = std::max(gap, std::abs(fc[std::size_t(i) * n + j] - ff[std::size_t(2 * i) * (2 * n) + 2 * j]));
    };
    for (std::size_t k = 0; k < a.u.size(); ++k) cmp(a.u[k], b.u[k]);
    cmp(a.phi, b.phi);
    return gap;
}

// ---------------------------------------------------------------------------
// Acoustic dispersion

struct DispersionResult {
    double measured = 0.0;
    double predicted = 0.0;
    int crossings = 0;
    double relative_error() const { return std::abs(measured - predicted) / predicted; }
};

struct DispersionConfig {
    int dim = 2;
    int n = 64;
    double periods = 6.0;            // horizon in units of the predicted period
    int samples_per_period = 100;
    StepperConfig stepper;
};

/// Starts from rho = 1 + amplitude cos(k x), u = 0, phi = 1 and times the zero
/// crossings of the real part of the k-th density coefficient.
inline DispersionResult acoustic_dispersion_check(double eps, int k, double amplitude, const Constitutive& c,
                                                  const DispersionConfig& dc = {}) {
    if (!(eps > 0.0)) throw ConfigError("dispersion: eps must be > 0");
    if (k < 1) throw ConfigError("dispersion: k must be >= 1");
    if (!(amplitude > 0.0) || amplitude > 1e-3 * eps * eps * (1.0 + 1e-12))
        throw ConfigError("dispersion: amplitude must lie in (0, 1e-3 eps^2] for the linear regime");
    const TorusGrid g(dc.dim, dc.n);
    if (k > g.dealias_cutoff()) throw ConfigError("dispersion: k above the dealiasing cutoff");

    DispersionResult out;
    out.predicted = double(k) * c.sound_speed() / eps;
    const double period = 2.0 * std::numbers::pi / out.predicted;
    const double t_end = dc.periods * period;
    const int nsamples = int(std::ceil(dc.periods * dc.samples_per_period));

    Field rho = dc.dim == 1 ? Field::sample(g, [&](double x) { return 1.0 + amplitude * std::cos(k * x); })
                            : Field::sample(g, [&](double x, double) { return 1.0 + amplitude * std::cos(k * x); });
    const auto s0 = pack(rho, VectorField::zeros(g), Field::constant(g, 1.0), eps, ModelKind::cahn_hilliard);

    double prev_t = 0.0, prev_v = 0.0;
    bool have_prev = false;
    std::vector<double> zeros;
    integrate<CompressibleState>(s0, c, dc.stepper, equispaced_times(t_end, nsamples),
                                 [&](double t, const CompressibleState& s, double) {
                                     const double v = s.rho.to_spectral().coefficient(k, 0).real();
                                     if (have_prev && ((prev_v < 0.0 && v >= 0.0) || (prev_v > 0.0 && v <= 0.0)))
                                         zeros.push_back(prev_t + (t - prev_t) * prev_v / (prev_v - v));
                                     prev_t = t;
                                     prev_v = v;
                                     have_prev = true;
                                 });
    out.crossings = int(zeros.size());
    if (zeros.size() < 3)
        throw NumericalError("dispersion: only " + std::to_string(zeros.size()) +
                             " zero crossings before t_end; horizon too short");
    out.measured = std::numbers::pi * double(zeros.size() - 1) / (zeros.back() - zeros.front());
    return out;
}

}  // namespace lowmach
