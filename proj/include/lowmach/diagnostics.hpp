#pragma once

#include "lowmach/constitutive.hpp"
#include "lowmach/dynamics.hpp"
#include "lowmach/field.hpp"
#include "lowmach/spectral.hpp"
#include "lowmach/state.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <utility>
#include <vector>

namespace lowmach {

inline double sobolev_norm(const VectorField& v, int s) {
    double sum = 0.0;
    for (const auto& f : v) {
        const double n = sobolev_norm(f, s);
        sum += n * n;
    }
    return std::sqrt(sum);
}

/// Energy components and the instantaneous dissipation rate. For the
/// incompressible system internal == 0 and the potential uses rho = 1.
struct EnergyReport {
    double time = 0.0;
    double kinetic = 0.0;
    double internal = 0.0;
    double gradient = 0.0;
    double potential = 0.0;
    double total = 0.0;
    double dissipation = 0.0;

    bool all_finite() const {
        for (double v : {kinetic, internal, gradient, potential, total, dissipation})
            if (!std::isfinite(v)) return false;
        return true;
    }
};

namespace detail {

// omega(rho) - p(1) (rho - 1), evaluated without cancellation near rho = 1.
inline double relative_potential(const Constitutive& c, double rho) {
    const double d = rho - 1.0;
    if (c.gamma == 2.0) return c.pressure_coeff * d * d;
    const double a = c.pressure_coeff;
    if (c.gamma == 1.0) return a * (rho * std::log1p(d) - d);
    const double g1 = c.gamma - 1.0;
    return a * (rho * std::expm1(g1 * std::log1p(d)) / g1 - d);
}

inline Field relative_potential(const Constitutive& c, const Field& rho) {
    require_no_vacuum(rho, "relative_potential");
    return rho.to_physical().map([&c](double r) { return relative_potential(c, r); });
}

// int |grad f|^2 by Parseval.
inline double gradient_square(const Field& f) {
    const auto& kk = f.grid().k_squared_table();
    return weighted_spectral_sum(f, [&](std::size_t s) { return kk[s]; });
}

inline double gradient_square(const VectorField& v) {
    double s = 0.0;
    for (const auto& f : v) s += gradient_square(f);
    return s;
}

inline double phase_dissipation(const Field& mu, ModelKind model) {
    return model == ModelKind::cahn_hilliard ? gradient_square(mu)
                                             : weighted_spectral_sum(mu, [](std::size_t) { return 1.0; });
}

}  // namespace detail

/// Compressible energy
///   int 1/2 rho |u|^2 + eps^-2 omega(rho) + 1/2 |grad phi|^2 + 1/4 rho (phi^2 - 1)^2
/// and its dissipation int nu |grad u|^2 + eta |div u|^2 + D, with D = int |grad mu|^2
/// for Cahn-Hilliard and D = int mu^2 for Allen-Cahn. Non-quadratic integrands
/// are evaluated on the twice-refined grid.
inline EnergyReport energy_compressible(const CompressibleState& s, const Constitutive& c, double time = 0.0) {
    s.validate();
    require_no_vacuum(s.rho, "energy_compressible");
    const auto [u, phi] = primitives(s);
    const Field rho_f = oversample(s.rho);
    const VectorField m = s.mom.to_physical();
    std::vector<Field> mf;
    for (const auto& comp : m) mf.push_back(oversample(comp));
    const VectorField m_f(std::move(mf));
    const Field q_f = oversample(s.q);
    require_no_vacuum(rho_f, "energy_compressible (refined grid)");

    EnergyReport e;
    e.time = time;
    e.kinetic = 0.5 * integrate(dot(m_f, m_f) / rho_f);
    // int omega = int (omega - p(1)(rho - 1)) + p(1) int (rho - 1).
    const Field drho = s.rho.to_physical().map([](double r) { return r - 1.0; });
    e.internal = (integrate(detail::relative_potential(c, rho_f)) + c.p(1.0) * integrate(drho)) / (s.eps * s.eps);
    e.gradient = 0.5 * detail::gradient_square(phi);
    const Field phi_f = q_f / rho_f;
    e.potential = 0.25 * integrate(rho_f * phi_f.map([](double p) { return (p * p - 1.0) * (p * p - 1.0); }));
    e.total = e.kinetic + e.internal + e.gradient + e.potential;

    const Field mu = chemical_potential(s.rho, phi);
    if (c.constant_viscosity()) {
        e.dissipation = c.nu0 * detail::gradient_square(u) +
                        c.eta0 * weighted_spectral_sum(divergence(u), [](std::size_t) { return 1.0; });
    } else {
        const Field rho = s.rho.to_physical();
        const Field nu = c.viscosity_nu(rho, phi);
        const Field eta = c.viscosity_eta(rho, phi);
        double acc = 0.0;
        for (const auto& comp : u) {
            const VectorField gu = gradient(comp);
            acc += integrate(nu * dot(gu, gu));
        }
        const Field du = divergence(u);
        acc += integrate(eta * du * du);
        e.dissipation = acc;
    }
    e.dissipation += detail::phase_dissipation(mu, s.model);
    if (!e.all_finite()) throw NumericalError("energy_compressible: non-finite energy");
    return e;
}

/// Incompressible energy int 1/2 |u|^2 + 1/2 |grad phi|^2 + 1/4 (phi^2 - 1)^2 and
/// dissipation int nu |grad u|^2 + D.
inline EnergyReport energy_incompressible(const IncompressibleState& s, const Constitutive& c, double time = 0.0) {
    EnergyReport e;
    e.time = time;
    e.kinetic = 0.5 * std::pow(l2_norm(s.u), 2);
    e.gradient = 0.5 * detail::gradient_square(s.phi);
    const Field phi_f = oversample(s.phi.to_physical());
    e.potential = 0.25 * integrate(phi_f.map([](double p) { return (p * p - 1.0) * (p * p - 1.0); }));
    e.total = e.kinetic + e.gradient + e.potential;

    const Field phi = s.phi.to_physical();
    if (c.constant_viscosity()) {
        e.dissipation = c.nu0 * detail::gradient_square(s.u);
    } else {
        const Field nu = c.viscosity_nu(Field::constant(phi.grid(), 1.0), phi);
        for (const auto& comp : s.u) {
            const VectorField gu = gradient(comp.to_physical());
            e.dissipation += integrate(nu * dot(gu, gu));
        }
    }
    e.dissipation += detail::phase_dissipation(chemical_potential(phi), s.model);
    if (!e.all_finite()) throw NumericalError("energy_incompressible: non-finite energy");
    return e;
}

/// Relative energy between a compressible solution and an incompressible one.
/// distance = int 1/2 |sqrt(rho) u_eps - u|^2 + Pi + 1/2 |grad(phi_eps - phi)|^2,
/// Pi = eps^-2 (omega(rho) - p(1)(rho - 1)); full adds both double-well energies.
struct ModulatedEnergy {
    double full = 0.0;
    double distance = 0.0;
};

inline ModulatedEnergy modulated_energy(const CompressibleState& cs, const IncompressibleState& is_,
                                        const Constitutive& c) {
    if (!(cs.grid() == is_.grid())) throw std::invalid_argument("modulated_energy: states on different grids");
    const auto [ue, phie] = primitives(cs);
    const Field rho_f = oversample(cs.rho);
    require_no_vacuum(rho_f, "modulated_energy (refined grid)");
    const Field sq = rho_f.map([](double r) { return std::sqrt(r); });

    double kin = 0.0;
    for (std::size_t i = 0; i < ue.size(); ++i) {
        const Field diff = sq * oversample(ue[i]) - oversample(is_.u[i].to_physical());
        kin += integrate(diff * diff);
    }
    ModulatedEnergy out;
    const double pi_term = integrate(detail::relative_potential(c, rho_f)) / (cs.eps * cs.eps);
    out.distance = 0.5 * kin + pi_term + 0.5 * detail::gradient_square(phie - is_.phi.to_physical());

    const Field phie_f = oversample(phie);
    const Field phi_f = oversample(is_.phi.to_physical());
    auto well = [](double p) { return (p * p - 1.0) * (p * p - 1.0); };
    out.full = out.distance + 0.25 * integrate(rho_f * phie_f.map(well)) + 0.25 * integrate(phi_f.map(well));
    return out;
}

// ---------------------------------------------------------------------------
// Sobolev energy functionals

/// equivalent: weight (1 + |k|^2)^s.
/// multi_index: exact sum over |alpha| <= s of prod_i k_i^(2 alpha_i).
enum class SobolevWeight { equivalent, multi_index };

namespace detail {

inline std::vector<std::pair<int, int>> multi_indices(int dim, int s) {
    std::vector<std::pair<int, int>> out;
    for (int a = 0; a <= s; ++a)
        for (int b = 0; b <= (dim == 2 ? s - a : 0); ++b) out.emplace_back(a, b);
    return out;
}

inline double multi_index_weight(const TorusGrid& g, std::size_t slot, int s) {
    double w = 0.0;
    const double k0 = g.wavenumber(0, slot);
    const double k1 = g.dim() == 2 ? g.wavenumber(1, slot) : 0.0;
    for (auto [a, b] : multi_indices(g.dim(), s)) w += std::pow(k0 * k0, a) * std::pow(k1 * k1, b);
    return w;
}

inline double sobolev_square(const Field& f, int s, SobolevWeight w) {
    if (s < 0) throw std::invalid_argument("Sobolev index must be >= 0");
    const auto& g = f.grid();
    if (w == SobolevWeight::equivalent) {
        const auto& kk = g.k_squared_table();
        return weighted_spectral_sum(f, [&](std::size_t i) { return std::pow(1.0 + kk[i], s); });
    }
    return weighted_spectral_sum(f, [&](std::size_t i) { return multi_index_weight(g, i, s); });
}

// grad^alpha f in physical space, alpha = (a, b).
inline Field mixed_derivative(const Field& f, int a, int b) {
    const auto& g = f.grid();
    const int nyq = g.n() / 2;
    using C = std::complex<double>;
    auto factor = [nyq](int k, int p) -> C {
        if (p == 0) return 1.0;
        if (p % 2 == 1 && k == nyq) return 0.0;
        return std::pow(C(0.0, double(k)), p);
    };
    Field s = apply_symbol(f.to_spectral(), [&](std::size_t i) {
        C v = factor(g.wavenumber(0, i), a);
        if (g.dim() == 2) v *= factor(g.wavenumber(1, i), b);
        return v;
    });
    return s.to_physical();
}

}  // namespace detail

/// E_s = sum_{|alpha| <= s} int eps^-2 |D^alpha (rho - 1)|^2 + |D^alpha u|^2.
inline double functional_Es(const CompressibleState& st, int s, SobolevWeight w = SobolevWeight::equivalent) {
    const Field drho = st.rho.to_physical().map([](double r) { return r - 1.0; });
    const auto [u, phi] = primitives(st);
    double e = detail::sobolev_square(drho, s, w) / (st.eps * st.eps);
    for (const auto& comp : u) e += detail::sobolev_square(comp, s, w);
    return e;
}

/// Density/pressure weighted variant
/// sum_{|alpha| <= s} int p'(rho)/(eps^2 rho) |D^alpha (rho - 1)|^2 + rho |D^alpha u|^2.
inline double functional_Es_weighted(const CompressibleState& st, const Constitutive& c, int s) {
    if (s < 0) throw std::invalid_argument("Sobolev index must be >= 0");
    const Field rho = st.rho.to_physical();
    const Field drho = rho.map([](double r) { return r - 1.0; });
    const Field wr = c.pressure_prime(rho) / rho;
    const auto [u, phi] = primitives(st);
    double e = 0.0;
    for (auto [a, b] : detail::multi_indices(st.grid().dim(), s)) {
        const Field dr = detail::mixed_derivative(drho, a, b);
        e += integrate(wr * dr * dr) / (st.eps * st.eps);
        for (const auto& comp : u) {
            const Field du = detail::mixed_derivative(comp, a, b);
            e += integrate(rho * du * du);
        }
    }
    return e;
}

/// F_s = sum_{|alpha| <= s} int |grad D^alpha phi|^2.
inline double functional_Fs(const Field& phi, int s, SobolevWeight w = SobolevWeight::equivalent) {
    if (s < 0) throw std::invalid_argument("Sobolev index must be >= 0");
    const auto& g = phi.grid();
    const auto& kk = g.k_squared_table();
    if (w == SobolevWeight::equivalent)
        return weighted_spectral_sum(phi, [&](std::size_t i) { return kk[i] * std::pow(1.0 + kk[i], s); });
    return weighted_spectral_sum(phi, [&](std::size_t i) { return kk[i] * detail::multi_index_weight(g, i, s); });
}

/// Density weighted F_s: sum int rho |grad D^alpha phi|^2.
inline double functional_Fs_weighted(const Field& rho, const Field& phi, int s) {
    if (s < 0) throw std::invalid_argument("Sobolev index must be >= 0");
    const Field r = rho.to_physical();
    double e = 0.0;
    for (auto [a, b] : detail::multi_indices(phi.grid().dim(), s)) {
        const VectorField gd = gradient(detail::mixed_derivative(phi, a, b));
        e += integrate(r * dot(gd, gd));
    }
    return e;
}

// ---------------------------------------------------------------------------
// Conservation

struct ConservationReport {
    std::size_t samples = 0;
    double mass_drift = 0.0;        // relative drift of int rho
    double phase_mass_drift = 0.0;  // relative drift of int rho phi (int phi when incompressible)
    bool phase_mass_conserved = true;  // false for Allen-Cahn: drift reported, not expected to vanish
    double max_divergence = 0.0;       // incompressible only
};

/// Running record of conserved quantities along a trajectory.
class ConservationLedger {
  public:
    void record(const CompressibleState& s) {
        const Field rho = s.rho.to_physical();
        const Field q = s.q.to_physical();
        push(integrate(rho), integrate(rho.map([](double v) { return std::abs(v); })), integrate(q),
             integrate(q.map([](double v) { return std::abs(v); })), s.model);
    }

    void record(const IncompressibleState& s) {
        const Field phi = s.phi.to_physical();
        push(0.0, 0.0, integrate(phi), integrate(phi.map([](double v) { return std::abs(v); })), s.model);
        rep_.max_divergence = std::max(rep_.max_divergence, divergence(s.u.to_physical()).max_abs());
    }

    const ConservationReport& report() const { return rep_; }

  private:
    static double relative(double q, double q0, double scale0) {
        const double denom = std::max(std::abs(q0), scale0);
        return denom > 0.0 ? std::abs(q - q0) / denom : std::abs(q - q0);
    }

    void push(double mass, double mass_scale, double phase, double phase_scale, ModelKind model) {
        if (rep_.samples == 0) {
            mass0_ = mass;
            mass_scale0_ = mass_scale;
            phase0_ = phase;
            phase_scale0_ = phase_scale;
        }
        ++rep_.samples;
        rep_.mass_drift = std::max(rep_.mass_drift, relative(mass, mass0_, mass_scale0_));
        rep_.phase_mass_drift = std::max(rep_.phase_mass_drift, relative(phase, phase0_, phase_scale0_));
        rep_.phase_mass_conserved = model == ModelKind::cahn_hilliard;
    }

    ConservationReport rep_;
    double mass0_ = 0.0, mass_scale0_ = 0.0, phase0_ = 0.0, phase_scale0_ = 0.0;
};

template <class State>
ConservationReport conservation_ledger(const std::vector<State>& trajectory) {
    ConservationLedger l;
    for (const auto& s : trajectory) l.record(s);
    return l.report();
}

}  // namespace lowmach
