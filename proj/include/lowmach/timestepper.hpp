#pragma once

#include "lowmach/constitutive.hpp"
#include "lowmach/dynamics.hpp"
#include "lowmach/errors.hpp"
#include "lowmach/field.hpp"
#include "lowmach/spectral.hpp"
#include "lowmach/state.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace lowmach {

/// rk4: classical explicit Runge-Kutta.
/// imex: first-order, stiff linear part implicit.
/// etdrk4: exponential time differencing RK4, stiff linear part exact.
enum class Scheme { rk4, imex, etdrk4 };

inline const char* to_string(Scheme s) {
    switch (s) {
        case Scheme::rk4: return "rk4";
        case Scheme::imex: return "imex";
        default: return "etdrk4";
    }
}

inline Scheme parse_scheme(const std::string& s) {
    if (s == "rk4") return Scheme::rk4;
    if (s == "imex") return Scheme::imex;
    if (s == "etdrk4") return Scheme::etdrk4;
    throw std::invalid_argument("unknown scheme '" + s + "' (expected rk4, imex or etdrk4)");
}

struct PicardConfig {
    bool enabled = false;
    double tol = 1e-10;
    int max_iter = 50;
};

struct StepperConfig {
    Scheme scheme = Scheme::etdrk4;
    double cfl = 0.4;
    std::optional<double> dt_override;
    double t_end = 1.0;
    PicardConfig picard;
    bool dealias_each_stage = true;

    void validate() const {
        if (!(cfl > 0.0 && cfl <= 1.0)) throw std::invalid_argument("cfl must lie in (0, 1]");
        if (dt_override && !(*dt_override > 0.0)) throw std::invalid_argument("dt_override must be > 0");
        if (!(t_end >= 0.0)) throw std::invalid_argument("t_end must be >= 0");
        if (!(picard.tol > 0.0)) throw std::invalid_argument("picard.tol must be > 0");
        if (picard.max_iter < 1) throw std::invalid_argument("picard.max_iter must be >= 1");
    }
};

// ---------------------------------------------------------------------------
// Step size control

/// dt = cfl * dx / (umax + sqrt(p'(1)) / eps).
inline double acoustic_dt(double eps, const TorusGrid& g, const Constitutive& c, double cfl, double umax) {
    if (!(eps > 0.0)) throw std::invalid_argument("acoustic_dt: eps must be > 0");
    return cfl * g.dx() / (umax + c.sound_speed() / eps);
}

namespace detail {

// Extent of the explicit stability region of RK4 on the negative real axis.
constexpr double rk4_real_extent = 2.78;
constexpr double euler_real_extent = 2.0;

inline double real_extent(Scheme s) { return s == Scheme::imex ? euler_real_extent : rk4_real_extent; }

// max |1 - phi^2|: the explicit remainder of the linearized double well
// after the -2 Lap split is 3 (1 - phi^2) Lap.
inline double well_excess(const Field& phi) {
    const Field p = phi.to_physical();
    double m = 0.0;
    for (double v : p.values()) m = std::max(m, std::abs(1.0 - v * v));
    return m;
}

inline double cap(double extent, double rate) {
    return rate > 0.0 ? extent / rate : std::numeric_limits<double>::infinity();
}

}  // namespace detail

/// Largest stable step for the compressible system under `scheme`: the
/// acoustic limit combined with the parabolic limit of whatever is treated
/// explicitly.
inline double stable_dt(const CompressibleState& s, const Constitutive& c, Scheme scheme, double cfl) {
    const auto& g = s.grid();
    const auto [u, phi] = primitives(s);
    const Field rho = s.rho.to_physical();
    const double rho_min = rho.min();
    const double kk = g.max_resolved_k_squared();
    const bool ch = s.model == ModelKind::cahn_hilliard;
    double rate = 0.0;
    if (scheme == Scheme::rk4) {
        rate = kk * (c.nu_max() + c.eta_max()) / rho_min;
        rate += ch ? kk * kk / (rho_min * rho_min) + 3.0 * kk / rho_min : kk / (rho_min * rho_min) + 2.0 / rho_min;
    } else {
        rate = kk * c.eta_max() / rho_min;
        if (!c.constant_viscosity()) rate += kk * (c.nu_max() - c.nu_star) / rho_min;
        rate += ch ? 3.0 * detail::well_excess(phi) * kk / rho_min : 2.0 / rho_min;
    }
    const double dt_acoustic = acoustic_dt(s.eps, g, c, cfl, max_abs(u));
    return std::min(dt_acoustic, cfl * detail::cap(detail::real_extent(scheme), rate));
}

inline double stable_dt(const IncompressibleState& s, const Constitutive& c, Scheme scheme, double cfl) {
    const auto& g = s.grid();
    const double kk = g.max_resolved_k_squared();
    const bool ch = s.model == ModelKind::cahn_hilliard;
    double rate = 0.0;
    if (scheme == Scheme::rk4) {
        rate = kk * c.nu_max() + (ch ? kk * kk + 3.0 * kk : kk + 2.0);
    } else {
        if (!c.constant_viscosity()) rate += kk * (c.nu_max() - c.nu_star);
        rate += ch ? 3.0 * detail::well_excess(s.phi) * kk : 2.0;
    }
    const double umax = max_abs(s.u);
    const double dt_adv = umax > 0.0 ? cfl * g.dx() / umax : std::numeric_limits<double>::infinity();
    return std::min(dt_adv, cfl * detail::cap(detail::real_extent(scheme), rate));
}

// ---------------------------------------------------------------------------
// Generic steppers on a list of spectral fields

using Bundle = std::vector<Field>;
using BundleRhs = std::function<Bundle(const Bundle&)>;

/// Diagonal linear operator -(lap |k|^2 + bilap |k|^4) acting on one field.
struct Stiffness {
    double lap = 0.0;
    double bilap = 0.0;
    double symbol(double kk) const { return -(lap * kk + bilap * kk * kk); }
};

namespace detail {

inline Bundle combine(const Bundle& a, double s, const Bundle& b) {
    Bundle out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out[i].axpy(s, b[i]);
    return out;
}

inline Bundle scale_symbol(const Bundle& b, const std::vector<Stiffness>& L,
                           const std::function<double(double)>& fn) {
    Bundle out;
    out.reserve(b.size());
    for (std::size_t i = 0; i < b.size(); ++i) {
        const auto& kk = b[i].grid().k_squared_table();
        const Stiffness st = L[i];
        out.push_back(detail::apply_symbol(b[i].to_spectral(), [&](std::size_t s) { return fn(st.symbol(kk[s])); }));
    }
    return out;
}

inline void require_finite(const Bundle& b, const char* what) {
    for (const auto& f : b) require_finite(f, what);
}

}  // namespace detail

/// Classical RK4 step.
inline Bundle step_rk4(const Bundle& u, const BundleRhs& f, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("step_rk4: dt must be > 0");
    const Bundle k1 = f(u);
    const Bundle k2 = f(detail::combine(u, 0.5 * dt, k1));
    const Bundle k3 = f(detail::combine(u, 0.5 * dt, k2));
    const Bundle k4 = f(detail::combine(u, dt, k3));
    Bundle out = u;
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i].axpy(dt / 6.0, k1[i]);
        out[i].axpy(dt / 3.0, k2[i]);
        out[i].axpy(dt / 3.0, k3[i]);
        out[i].axpy(dt / 6.0, k4[i]);
    }
    detail::require_finite(out, "step_rk4");
    return out;
}

/// u+ = (1 - dt L)^-1 (u + dt (f(u) - L u)); u must be spectral.
inline Bundle step_imex(const Bundle& u, const BundleRhs& f, const std::vector<Stiffness>& L, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("step_imex: dt must be > 0");
    const Bundle fu = f(u);
    Bundle rhs = detail::scale_symbol(u, L, [dt](double l) { return 1.0 - dt * l; });
    for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i].axpy(dt, fu[i]);
    Bundle out = detail::scale_symbol(rhs, L, [dt](double l) { return 1.0 / (1.0 - dt * l); });
    detail::require_finite(out, "step_imex");
    return out;
}

namespace detail {

// phi_1, phi_2, phi_3 of z, with phi_k(z) = sum_j z^j / (j + k)!.
struct PhiFunctions {
    double p1, p2, p3;
};

inline PhiFunctions phi_functions(double z) {
    if (std::abs(z) < 1.0) {
        PhiFunctions r{0.0, 0.0, 0.0};
        double term = 1.0;  // z^j / j!
        for (int j = 0; j < 24; ++j) {
            r.p1 += term / double(j + 1);
            r.p2 += term / double((j + 1) * (j + 2));
            r.p3 += term / double((j + 1) * (j + 2) * (j + 3));
            term *= z / double(j + 1);
        }
        return r;
    }
    const double p1 = std::expm1(z) / z;
    const double p2 = (p1 - 1.0) / z;
    return {p1, p2, (p2 - 0.5) / z};
}

}  // namespace detail

namespace detail {

// Per-slot weights of one exponential RK4 step for one field.
struct EtdTables {
    std::vector<double> symbol, e_half, phi_half, w1, w2, w3;
};

inline EtdTables etd_tables(const TorusGrid& g, const Stiffness& st, double dt) {
    const auto& kk = g.k_squared_table();
    EtdTables t;
    const std::size_t n = kk.size();
    for (auto* v : {&t.symbol, &t.e_half, &t.phi_half, &t.w1, &t.w2, &t.w3}) v->resize(n);
    for (std::size_t s = 0; s < n; ++s) {
        const double l = st.symbol(kk[s]);
        const auto h = phi_functions(0.5 * dt * l);
        const auto p = phi_functions(dt * l);
        t.symbol[s] = l;
        t.e_half[s] = std::exp(0.5 * dt * l);
        t.phi_half[s] = 0.5 * dt * h.p1;
        t.w1[s] = dt * (p.p1 - 3.0 * p.p2 + 4.0 * p.p3);
        t.w2[s] = dt * (p.p2 - 2.0 * p.p3);
        t.w3[s] = dt * (4.0 * p.p3 - p.p2);
    }
    return t;
}

// out += w * b, slot by slot; b must be spectral.
inline void add_weighted(Field& out, const std::vector<double>& w, const Field& b) {
    auto o = out.coefficients();
    const auto x = b.coefficients();
    for (std::size_t s = 0; s < o.size(); ++s) o[s] += w[s] * x[s];
}

}  // namespace detail

/// Exponential time differencing RK4 (Cox-Matthews): the diagonal part L is
/// propagated exactly and the remainder enters through phi-function weights,
/// so strongly damped modes relax to their quasi-static values. u must be
/// spectral.
inline Bundle step_etdrk4(const Bundle& u, const BundleRhs& f, const std::vector<Stiffness>& L, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("step_etdrk4: dt must be > 0");
    const std::size_t m = u.size();
    std::vector<detail::EtdTables> tab;
    for (std::size_t i = 0; i < m; ++i) tab.push_back(detail::etd_tables(u[i].grid(), L[i], dt));

    auto zero_like = [&] {
        Bundle z;
        for (const auto& f0 : u) z.emplace_back(f0.grid(), Repr::spectral);
        return z;
    };
    auto N = [&](const Bundle& b) {
        Bundle r = f(b);
        for (std::size_t i = 0; i < m; ++i) {
            r[i] = r[i].to_spectral();
            detail::add_weighted(r[i], tab[i].symbol, b[i] * -1.0);
        }
        return r;
    };
    // out_i = sum_j w_j[i] * x_j[i]
    auto mix = [&](std::initializer_list<std::pair<std::vector<double> detail::EtdTables::*, const Bundle*>> terms) {
        Bundle out = zero_like();
        for (std::size_t i = 0; i < m; ++i)
            for (const auto& [w, x] : terms) detail::add_weighted(out[i], tab[i].*w, (*x)[i]);
        return out;
    };
    using T = detail::EtdTables;

    Bundle us;
    for (const auto& f0 : u) us.push_back(f0.to_spectral());
    const Bundle nu = N(us);
    const Bundle a = mix({{&T::e_half, &us}, {&T::phi_half, &nu}});
    const Bundle na = N(a);
    const Bundle b = mix({{&T::e_half, &us}, {&T::phi_half, &na}});
    const Bundle nb = N(b);
    Bundle two_nb_minus_nu = nb;
    for (std::size_t i = 0; i < m; ++i) {
        two_nb_minus_nu[i] *= 2.0;
        two_nb_minus_nu[i] -= nu[i];
    }
    const Bundle c = mix({{&T::e_half, &a}, {&T::phi_half, &two_nb_minus_nu}});
    const Bundle nc = N(c);

    Bundle nab = na;
    for (std::size_t i = 0; i < m; ++i) nab[i] += nb[i];
    const Bundle eu = mix({{&T::e_half, &us}});
    Bundle out = mix({{&T::e_half, &eu}, {&T::w1, &nu}, {&T::w2, &nab}, {&T::w2, &nab}, {&T::w3, &nc}});
    detail::require_finite(out, "step_etdrk4");
    return out;
}

// ---------------------------------------------------------------------------
// State-level stepping

namespace detail {

inline Bundle to_bundle(const CompressibleState& s, bool smooth_state) {
    Bundle b;
    auto put = [&](const Field& f) { b.push_back(smooth_state ? dealias(f.to_spectral()) : f.to_spectral()); };
    put(s.rho);
    for (const auto& m : s.mom) put(m);
    put(s.q);
    return b;
}

inline CompressibleState compressible_from(const Bundle& b, const CompressibleState& like) {
    const int d = like.grid().dim();
    std::vector<Field> m;
    for (int i = 0; i < d; ++i) m.push_back(b[1 + i].to_physical());
    return {like.eps, b[0].to_physical(), VectorField(std::move(m)), b[1 + d].to_physical(), like.model};
}

inline Bundle to_bundle(const IncompressibleState& s, bool smooth_state) {
    Bundle b;
    auto put = [&](const Field& f) { b.push_back(smooth_state ? dealias(f.to_spectral()) : f.to_spectral()); };
    for (const auto& u : s.u) put(u);
    put(s.phi);
    return b;
}

inline IncompressibleState incompressible_from(const Bundle& b, const IncompressibleState& like) {
    const int d = like.grid().dim();
    std::vector<Field> u;
    for (int i = 0; i < d; ++i) u.push_back(b[i].to_physical());
    return {VectorField(std::move(u)), b[d].to_physical(), like.model};
}

inline Stiffness phase_stiffness(ModelKind model, double inv_rho) {
    // Cahn-Hilliard: -|k|^4 / rho^2 plus a stabilizing -2|k|^2 / rho that
    // matches the linearized double-well at the pure phases.
    if (model == ModelKind::cahn_hilliard) return {2.0 * inv_rho, inv_rho * inv_rho};
    return {inv_rho * inv_rho, 0.0};
}

}  // namespace detail

/// Splitting used by imex and etdrk4 for the compressible system.
inline std::vector<Stiffness> compressible_stiffness(const CompressibleState& s, const Constitutive& c) {
    const Field rho = s.rho.to_physical();
    const double inv_rho = 1.0 / rho.min();
    std::vector<Stiffness> L;
    L.push_back({});
    const double visc = c.constant_viscosity() ? c.nu0 * inv_rho : c.nu_star / rho.max();
    for (int i = 0; i < s.grid().dim(); ++i) L.push_back({visc, 0.0});
    L.push_back(detail::phase_stiffness(s.model, inv_rho));
    return L;
}

inline std::vector<Stiffness> incompressible_stiffness(const IncompressibleState& s, const Constitutive& c) {
    std::vector<Stiffness> L;
    const double visc = c.constant_viscosity() ? c.nu0 : c.nu_star;
    for (int i = 0; i < s.grid().dim(); ++i) L.push_back({visc, 0.0});
    L.push_back(detail::phase_stiffness(s.model, 1.0));
    return L;
}

inline CompressibleState step(const CompressibleState& s, const Constitutive& c, Scheme scheme, double dt,
                              bool dealias_state = true) {
    s.validate();
    const Bundle u = detail::to_bundle(s, dealias_state);
    const BundleRhs f = [&](const Bundle& b) {
        const CompressibleState st = detail::compressible_from(b, s);
        CompressibleRates r = rhs_compressible(st, c);
        Bundle out{std::move(r.drho)};
        for (auto& m : r.dmom) out.push_back(std::move(m));
        out.push_back(std::move(r.dq));
        return out;
    };
    Bundle next;
    switch (scheme) {
        case Scheme::rk4: next = step_rk4(u, f, dt); break;
        case Scheme::imex: next = step_imex(u, f, compressible_stiffness(s, c), dt); break;
        case Scheme::etdrk4: next = step_etdrk4(u, f, compressible_stiffness(s, c), dt); break;
    }
    CompressibleState out = detail::compressible_from(next, s);
    require_no_vacuum(out.rho, "step");
    return out;
}

inline IncompressibleState step(const IncompressibleState& s, const Constitutive& c, Scheme scheme, double dt,
                                bool dealias_state = true) {
    const Bundle u = detail::to_bundle(s, dealias_state);
    const BundleRhs f = [&](const Bundle& b) {
        IncompressibleRates r = rhs_incompressible(detail::incompressible_from(b, s), c);
        Bundle out;
        for (auto& v : r.du) out.push_back(std::move(v));
        out.push_back(std::move(r.dphi));
        return out;
    };
    Bundle next;
    switch (scheme) {
        case Scheme::rk4: next = step_rk4(u, f, dt); break;
        case Scheme::imex: next = step_imex(u, f, incompressible_stiffness(s, c), dt); break;
        case Scheme::etdrk4: next = step_etdrk4(u, f, incompressible_stiffness(s, c), dt); break;
    }
    return detail::incompressible_from(next, s);
}

// ---------------------------------------------------------------------------
// Picard iteration for one implicit Euler step

struct PicardReport {
    int iterations = 0;
    std::vector<double> ratios;
    std::vector<double> differences;
    bool converged = false;
    double residual = 0.0;
};

/// Primitive unknowns (rho, u, phi), all spectral.
struct PrimitiveState {
    Field rho;
    VectorField u;
    Field phi;
};

namespace detail {

inline PrimitiveState to_primitive(const CompressibleState& s) {
    const auto [u, phi] = primitives(s);
    return {dealias(s.rho.to_spectral()), dealias(u.to_spectral()), dealias(phi.to_spectral())};
}

inline double composite_h1(const PrimitiveState& a, const PrimitiveState& b, double eps) {
    const double r = sobolev_norm(a.rho - b.rho, 1) / eps;
    double su = 0.0;
    for (std::size_t i = 0; i < a.u.size(); ++i) {
        const double n = sobolev_norm(a.u[i] - b.u[i], 1);
        su += n * n;
    }
    return r + std::sqrt(su) + sobolev_norm(a.phi - b.phi, 1);
}

struct ReferenceCoefficients {
    double inv_eps2_c2;  // p'(1) / eps^2
    double nu;
    double eta;
    ModelKind model;
};

// L_ref applied to V: the constant-coefficient linearization about (1, 0, .).
inline PrimitiveState apply_reference(const PrimitiveState& v, const ReferenceCoefficients& rc) {
    const int d = v.rho.grid().dim();
    PrimitiveState out;
    out.rho = -divergence(v.u);
    const Field div_u = divergence(v.u);
    std::vector<Field> du;
    for (int i = 0; i < d; ++i) {
        Field f = derivative(v.rho, i, 1) * (-rc.inv_eps2_c2);
        f.axpy(rc.nu, laplacian(v.u[i]));
        f.axpy(rc.eta, derivative(div_u, i, 1));
        du.push_back(std::move(f));
    }
    out.u = VectorField(std::move(du));
    out.phi = rc.model == ModelKind::cahn_hilliard ? -biharmonic(v.phi) : laplacian(v.phi);
    return out;
}

// Solves (I/dt - L_ref) U = F mode by mode.
inline PrimitiveState solve_reference(const PrimitiveState& f, const ReferenceCoefficients& rc, double dt) {
    const auto& g = f.rho.grid();
    const int d = g.dim();
    PrimitiveState out{Field(g, Repr::spectral), VectorField::zeros(g, Repr::spectral), Field(g, Repr::spectral)};
    const auto fr = f.rho.coefficients();
    const auto fp = f.phi.coefficients();
    auto orho = out.rho.coefficients();
    auto ophi = out.phi.coefficients();
    const auto& kk = g.k_squared_table();
    using C = std::complex<double>;
    const C I(0.0, 1.0);
    std::vector<const double*> ke;
    std::vector<const C*> fu;
    std::vector<C*> ou;
    for (int a = 0; a < d; ++a) {
        ke.push_back(g.derivative_wavenumbers(a).data());
        fu.push_back(f.u[a].coefficients().data());
        ou.push_back(out.u[a].coefficients().data());
    }
    const double inv_dt = 1.0 / dt;
    for (std::size_t s = 0; s < g.spectral_size(); ++s) {
        double ke2 = 0.0;
        C ik_fu = 0.0;
        for (int a = 0; a < d; ++a) {
            ke2 += ke[a][s] * ke[a][s];
            ik_fu += I * ke[a][s] * fu[a][s];
        }
        const double A = inv_dt + rc.nu * kk[s];
        const double acoustic = rc.inv_eps2_c2 * ke2 * dt;
        const C div = (ik_fu + acoustic * fr[s]) / (A + rc.eta * ke2 + acoustic);
        const C rho = dt * (fr[s] - div);
        orho[s] = rho;
        for (int a = 0; a < d; ++a)
            ou[a][s] = (fu[a][s] - rc.inv_eps2_c2 * I * ke[a][s] * rho + rc.eta * I * ke[a][s] * div) / A;
        const double lphi = rc.model == ModelKind::cahn_hilliard ? kk[s] * kk[s] : kk[s];
        ophi[s] = fp[s] / (inv_dt + lphi);
    }
    return out;
}

inline PrimitiveState picard_map(const PrimitiveState& un, const PrimitiveState& v, double eps,
                                 const ReferenceCoefficients& rc, const Constitutive& c, double dt) {
    const PrimitiveRates fv = rhs_primitive(v.rho, v.u, v.phi, eps, rc.model, c);
    const PrimitiveState lv = apply_reference(v, rc);
    const double inv_dt = 1.0 / dt;
    PrimitiveState rhs{un.rho * inv_dt + fv.drho - lv.rho, un.u * inv_dt + fv.du - lv.u,
                       un.phi * inv_dt + fv.dphi - lv.phi};
    PrimitiveState out = solve_reference(rhs, rc, dt);
    out.rho = dealias(out.rho);
    out.u = dealias(out.u);
    out.phi = dealias(out.phi);
    return out;
}

}  // namespace detail

/// Composite-norm residual of the implicit Euler equations
/// U - U^n - dt F(U) for primitive unknowns.
inline double implicit_euler_residual(const CompressibleState& next, const CompressibleState& prev,
                                      const Constitutive& c, double dt) {
    const PrimitiveState u = detail::to_primitive(next);
    const PrimitiveState un = detail::to_primitive(prev);
    const PrimitiveRates f = rhs_primitive(u.rho, u.u, u.phi, next.eps, next.model, c);
    const PrimitiveState target{un.rho + dt * f.drho, un.u + dt * f.du, un.phi + dt * f.dphi};
    return detail::composite_h1(u, target, next.eps);
}

/// One implicit Euler step solved by the fixed-point iteration
/// U^{m+1} = Lambda(U^m): coefficients frozen at U^m, the constant-coefficient
/// acoustic/viscous/phase block solved exactly per mode, everything else
/// lagged. Differences are measured in |rho|_1 / eps + |u|_1 + |phi|_1.
inline std::pair<CompressibleState, PicardReport> picard_step(const CompressibleState& s, const Constitutive& c,
                                                              double dt, const PicardConfig& cfg) {
    if (!(dt > 0.0)) throw std::invalid_argument("picard_step: dt must be > 0");
    if (!(cfg.tol > 0.0) || cfg.max_iter < 1) throw std::invalid_argument("picard_step: invalid configuration");
    s.validate();
    const detail::ReferenceCoefficients rc{c.dp(1.0) / (s.eps * s.eps), c.nu(1.0, 0.0), c.eta(1.0, 0.0), s.model};
    const PrimitiveState un = detail::to_primitive(s);

    PicardReport rep;
    PrimitiveState cur = detail::picard_map(un, un, s.eps, rc, c, dt);
    for (int m = 0; m < cfg.max_iter; ++m) {
        PrimitiveState next = detail::picard_map(un, cur, s.eps, rc, c, dt);
        const double diff = detail::composite_h1(next, cur, s.eps);
        if (!std::isfinite(diff)) throw NumericalError("picard_step: iteration diverged to non-finite values");
        if (!rep.differences.empty() && rep.differences.back() > 0.0)
            rep.ratios.push_back(diff / rep.differences.back());
        rep.differences.push_back(diff);
        rep.iterations = m + 1;
        cur = std::move(next);
        if (diff < cfg.tol) {
            rep.converged = true;
            break;
        }
    }
    CompressibleState out = pack(cur.rho, cur.u, cur.phi, s.eps, s.model);
    rep.residual = implicit_euler_residual(out, s, c, dt);
    return {std::move(out), std::move(rep)};
}

// ---------------------------------------------------------------------------
// Driver

/// Observer called at t = 0 and at every sample time with the current state
/// and the step size used to reach it.
template <class State>
using SampleObserver = std::function<void(double t, const State& s, double dt)>;

namespace detail {

inline double choose_dt(const CompressibleState& s, const Constitutive& c, const StepperConfig& cfg) {
    if (cfg.dt_override) return *cfg.dt_override;
    if (cfg.picard.enabled) return acoustic_dt(s.eps, s.grid(), c, cfg.cfl, max_abs(primitives(s).first));
    return stable_dt(s, c, cfg.scheme, cfg.cfl);
}

inline double choose_dt(const IncompressibleState& s, const Constitutive& c, const StepperConfig& cfg) {
    if (cfg.dt_override) return *cfg.dt_override;
    return stable_dt(s, c, cfg.scheme, cfg.cfl);
}

inline CompressibleState advance(const CompressibleState& s, const Constitutive& c, const StepperConfig& cfg,
                                 double dt) {
    if (!cfg.picard.enabled) return step(s, c, cfg.scheme, dt, cfg.dealias_each_stage);
    auto [next, rep] = picard_step(s, c, dt, cfg.picard);
    return next;
}

inline IncompressibleState advance(const IncompressibleState& s, const Constitutive& c, const StepperConfig& cfg,
                                   double dt) {
    return step(s, c, cfg.scheme, dt, cfg.dealias_each_stage);
}

}  // namespace detail

/// Integrates from t = 0 through every entry of `sample_times` (sorted,
/// within [0, t_end]), landing exactly on each one: inside an interval of
/// length h the step is h / ceil(h / dt_stable), with dt_stable refreshed at
/// the start of the interval.
template <class State>
State integrate(State s, const Constitutive& c, const StepperConfig& cfg, const std::vector<double>& sample_times,
                const SampleObserver<State>& observe = {}) {
    cfg.validate();
    double t = 0.0;
    double last_dt = 0.0;
    if (observe) observe(t, s, last_dt);
    for (double target : sample_times) {
        if (target < t - 1e-14) throw std::invalid_argument("integrate: sample times must be increasing");
        const double span = target - t;
        if (span <= 1e-14) continue;
        const double dt_max = detail::choose_dt(s, c, cfg);
        if (!(dt_max > 0.0) || !std::isfinite(dt_max))
            throw NumericalError("integrate: no admissible time step at t = " + std::to_string(t));
        const long nsteps = std::max(1L, long(std::ceil(span / dt_max - 1e-9)));
        const double dt = span / double(nsteps);
        for (long i = 0; i < nsteps; ++i) s = detail::advance(s, c, cfg, dt);
        t = target;
        last_dt = dt;
        if (observe) observe(t, s, last_dt);
    }
    return s;
}

/// n + 1 equispaced instants 0, T/n, ..., T.
inline std::vector<double> equispaced_times(double t_end, int n) {
    if (n < 1) throw std::invalid_argument("equispaced_times: need at least one interval");
    std::vector<double> t;
    for (int i = 0; i <= n; ++i) t.push_back(t_end * double(i) / double(n));
    return t;
}

}  // namespace lowmach
