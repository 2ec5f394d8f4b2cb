#pragma once

#include "lowmach/constitutive.hpp"
#include "lowmach/errors.hpp"
#include "lowmach/field.hpp"
#include "lowmach/spectral.hpp"
#include "lowmach/state.hpp"

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace lowmach {

/// Time derivatives of the conservative compressible unknowns (spectral,
/// dealiased).
struct CompressibleRates {
    Field drho;
    VectorField dmom;
    Field dq;
};

/// Time derivatives of the incompressible unknowns (spectral, dealiased).
struct IncompressibleRates {
    VectorField du;
    Field dphi;
};

enum class CapillaryForm { reduced, tensor };

namespace detail {

inline Field smooth(const Field& f) { return dealias(f.to_spectral()); }
inline VectorField smooth(const VectorField& v) { return dealias(v.to_spectral()); }

// Dealiased spectral image of a physical product.
inline Field project(const Field& physical) { return dealias(physical.to_spectral()); }

inline void require_finite(const Field& f, const char* what) {
    if (!f.all_finite()) throw NumericalError(std::string(what) + ": non-finite value encountered");
}
inline void require_finite(const VectorField& v, const char* what) {
    if (!v.all_finite()) throw NumericalError(std::string(what) + ": non-finite value encountered");
}

inline Field apply_phase_operator(const Field& mu_spectral, ModelKind model) {
    return model == ModelKind::cahn_hilliard ? laplacian(mu_spectral) : -mu_spectral;
}

// -Lap(phi) grad(phi) from spectral phi; physical result, not yet dealiased.
inline VectorField capillary_physical(const Field& phi_s) {
    const Field lap = laplacian(phi_s).to_physical();
    VectorField g = gradient(phi_s).to_physical();
    for (auto& c : g) c = -(lap * c);
    return g;
}

// sum_j d/dx_j (a_i b_j) as spectral fields; a, b physical.
inline VectorField flux_divergence(const VectorField& a, const VectorField& b) {
    const int d = int(a.size());
    std::vector<Field> out;
    for (int i = 0; i < d; ++i) out.emplace_back(a.grid(), Repr::spectral);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) out[i] += derivative(project(a[i] * b[j]), j, 1);
    return VectorField(std::move(out));
}

}  // namespace detail

/// Capillary force -Lap(phi) grad(phi), returned in physical space.
inline VectorField capillary_force(const Field& phi) {
    const Field s = detail::smooth(phi);
    VectorField f = detail::capillary_physical(s);
    std::vector<Field> c;
    for (const auto& comp : f) c.push_back(detail::project(comp).to_physical());
    return VectorField(std::move(c));
}

/// The same force evaluated as -div(grad(phi) (x) grad(phi) - |grad(phi)|^2/2 I).
inline VectorField capillary_force_tensor(const Field& phi) {
    const Field s = detail::smooth(phi);
    const VectorField g = gradient(s).to_physical();
    const int d = int(g.size());
    const Field half_sq = 0.5 * dot(g, g);
    std::vector<Field> out;
    for (int i = 0; i < d; ++i) {
        Field acc(phi.grid(), Repr::spectral);
        for (int j = 0; j < d; ++j) {
            Field t = g[i] * g[j];
            if (i == j) t -= half_sq;
            acc -= derivative(detail::project(t), j, 1);
        }
        out.push_back(dealias(acc).to_physical());
    }
    return VectorField(std::move(out));
}

/// Recovers u = m / rho and phi = q / rho.
inline std::pair<VectorField, Field> primitives(const CompressibleState& s) {
    require_no_vacuum(s.rho, "primitives");
    const Field r = s.rho.to_physical();
    return {s.mom.to_physical() / r, s.q.to_physical() / r};
}

/// Packs primitive variables into conservative form.
inline CompressibleState pack(const Field& rho, const VectorField& u, const Field& phi, double eps,
                              ModelKind model) {
    require_no_vacuum(rho, "pack");
    const Field r = rho.to_physical();
    CompressibleState s{eps, r, u.to_physical() * r, phi.to_physical() * r, model};
    s.validate();
    return s;
}

/// Right-hand side of the conservative compressible system
///   rho_t   = -div(m)
///   m_t     = -div(m (x) u) - eps^-2 grad P + nu Lap u + eta grad div u - Lap(phi) grad(phi)
///   (rho phi)_t = -div(rho phi u) + A_K mu,  rho mu = -Lap(phi) + rho (phi^3 - phi)
/// with u = m / rho and phi = q / rho. Every product is formed from dealiased
/// inputs and dealiased again, so the k = 0 mode of drho (and of dq for
/// Cahn-Hilliard) is exactly zero.
inline CompressibleRates rhs_compressible(const CompressibleState& s, const Constitutive& c,
                                          CapillaryForm capillary = CapillaryForm::reduced) {
    const auto& g = s.rho.grid();
    const int d = g.dim();

    const Field rho_s = detail::smooth(s.rho);
    const VectorField m_s = detail::smooth(s.mom);
    const Field q_s = detail::smooth(s.q);
    const Field rho = rho_s.to_physical();
    require_no_vacuum(rho, "rhs_compressible");
    const VectorField m = m_s.to_physical();
    const Field q = q_s.to_physical();

    const VectorField u_s = detail::smooth(m / rho);
    const Field phi_s = detail::smooth(q / rho);
    const VectorField u = u_s.to_physical();
    const Field phi = phi_s.to_physical();

    CompressibleRates out;
    out.drho = -divergence(m_s);

    // Momentum.
    VectorField dmom = detail::flux_divergence(m, u);
    dmom *= -1.0;
    const Field pres = detail::project(c.pressure(rho));
    const double inv_eps2 = 1.0 / (s.eps * s.eps);
    for (int i = 0; i < d; ++i) dmom[i].axpy(-inv_eps2, derivative(pres, i, 1));

    const VectorField lap_u = laplacian(u_s);
    const Field div_u = divergence(u_s);
    VectorField body = capillary == CapillaryForm::reduced
                           ? detail::capillary_physical(phi_s)
                           : capillary_force_tensor(phi_s);
    if (c.constant_viscosity()) {
        for (int i = 0; i < d; ++i) {
            dmom[i] += detail::project(body[i]);
            dmom[i].axpy(c.nu0, lap_u[i]);
            dmom[i].axpy(c.eta0, derivative(div_u, i, 1));
        }
    } else {
        const Field nu = c.viscosity_nu(rho, phi);
        const Field eta = c.viscosity_eta(rho, phi);
        for (int i = 0; i < d; ++i) {
            Field f = body[i];
            f += nu * lap_u[i].to_physical();
            f += eta * derivative(div_u, i, 1).to_physical();
            dmom[i] += detail::project(f);
        }
    }
    out.dmom = dealias(dmom);

    // Phase density.
    const Field mu = detail::project(chemical_potential(rho, phi_s));
    Field dq = detail::apply_phase_operator(mu, s.model);
    std::vector<Field> qu;
    for (int i = 0; i < d; ++i) qu.push_back(detail::project(q * u[i]));
    dq -= divergence(VectorField(std::move(qu)));
    out.dq = dealias(dq);

    detail::require_finite(out.drho, "rhs_compressible");
    detail::require_finite(out.dmom, "rhs_compressible");
    detail::require_finite(out.dq, "rhs_compressible");
    return out;
}

/// Incompressible momentum forcing before projection:
///   -div(u (x) u) + nu(1, phi) Lap u - Lap(phi) grad(phi).
/// The divergence form equals -(u.grad)u for divergence-free u.
inline VectorField incompressible_forcing(const VectorField& u_in, const Field& phi_in, const Constitutive& c) {
    const VectorField u_s = detail::smooth(u_in);
    const Field phi_s = detail::smooth(phi_in);
    const VectorField u = u_s.to_physical();
    const int d = int(u.size());

    VectorField f = detail::flux_divergence(u, u);
    f *= -1.0;
    const VectorField body = detail::capillary_physical(phi_s);
    const VectorField lap_u = laplacian(u_s);
    if (c.constant_viscosity()) {
        for (int i = 0; i < d; ++i) {
            f[i] += detail::project(body[i]);
            f[i].axpy(c.nu0, lap_u[i]);
        }
    } else {
        const Field phi = phi_s.to_physical();
        const Field nu = c.viscosity_nu(Field::constant(phi.grid(), 1.0), phi);
        for (int i = 0; i < d; ++i) f[i] += detail::project(body[i] + nu * lap_u[i].to_physical());
    }
    return dealias(f);
}

/// Right-hand side of the incompressible system
///   u_t   = P( -(u.grad)u + nu(phi) Lap u - Lap(phi) grad(phi) )
///   phi_t = -u.grad(phi) + A_K mu,  mu = -Lap(phi) + phi^3 - phi
/// with P the Leray projection. Phase advection uses div(phi u), identical
/// for divergence-free u, so that the phase mass is conserved exactly.
inline IncompressibleRates rhs_incompressible(const IncompressibleState& s, const Constitutive& c) {
    const auto& g = s.phi.grid();
    if (g.dim() < 2) throw std::invalid_argument("rhs_incompressible: needs dim >= 2");
    IncompressibleRates out;
    out.du = leray_project(incompressible_forcing(s.u, s.phi, c));

    const VectorField u = detail::smooth(s.u).to_physical();
    const Field phi_s = detail::smooth(s.phi);
    const Field phi = phi_s.to_physical();
    const Field mu = detail::project(chemical_potential(phi_s));
    Field dphi = detail::apply_phase_operator(mu, s.model);
    std::vector<Field> flux;
    for (std::size_t i = 0; i < u.size(); ++i) flux.push_back(detail::project(phi * u[i]));
    dphi -= divergence(VectorField(std::move(flux)));
    out.dphi = dealias(dphi);

    detail::require_finite(out.du, "rhs_incompressible");
    detail::require_finite(out.dphi, "rhs_incompressible");
    return out;
}

/// Primitive-variable compressible right-hand side
///   rho_t = -div(rho u)
///   u_t   = -(u.grad)u - grad P / (eps^2 rho) + (nu Lap u + eta grad div u - Lap(phi) grad(phi)) / rho
///   phi_t = -u.grad(phi) + A_K mu / rho
/// used by the Picard solver. Inputs and outputs are spectral.
struct PrimitiveRates {
    Field drho;
    VectorField du;
    Field dphi;
};

inline PrimitiveRates rhs_primitive(const Field& rho_in, const VectorField& u_in, const Field& phi_in, double eps,
                                    ModelKind model, const Constitutive& c) {
    const int d = rho_in.grid().dim();
    const Field rho_s = detail::smooth(rho_in);
    const VectorField u_s = detail::smooth(u_in);
    const Field phi_s = detail::smooth(phi_in);
    const Field rho = rho_s.to_physical();
    require_no_vacuum(rho, "rhs_primitive");
    const VectorField u = u_s.to_physical();
    const Field phi = phi_s.to_physical();
    const Field inv_rho = rho.map([](double r) { return 1.0 / r; });

    PrimitiveRates out;
    {
        std::vector<Field> flux;
        for (int i = 0; i < d; ++i) flux.push_back(detail::project(rho * u[i]));
        out.drho = -divergence(VectorField(std::move(flux)));
        out.drho = dealias(out.drho);
    }

    const Field pres = detail::project(c.pressure(rho));
    const Field div_u = divergence(u_s);
    const VectorField lap_u = laplacian(u_s);
    const VectorField cap = detail::capillary_physical(phi_s);
    const Field nu = c.viscosity_nu(rho, phi);
    const Field eta = c.viscosity_eta(rho, phi);
    std::vector<Field> du;
    for (int i = 0; i < d; ++i) {
        const Field du_i = derivative(u_s[i], 0, 1).to_physical();
        Field adv = u[0] * du_i;
        for (int j = 1; j < d; ++j) adv += u[j] * derivative(u_s[i], j, 1).to_physical();
        Field f = -adv;
        Field forcing = derivative(pres, i, 1).to_physical() * (-1.0 / (eps * eps));
        forcing += nu * lap_u[i].to_physical();
        forcing += eta * derivative(div_u, i, 1).to_physical();
        forcing += cap[i];
        f += forcing * inv_rho;
        du.push_back(detail::project(f));
    }
    out.du = VectorField(std::move(du));

    const Field mu = detail::project(chemical_potential(rho, phi_s));
    const Field amu = detail::apply_phase_operator(mu, model).to_physical();
    const VectorField gphi = gradient(phi_s).to_physical();
    Field dphi = amu * inv_rho - dot(u, gphi);
    out.dphi = detail::project(dphi);

    detail::require_finite(out.drho, "rhs_primitive");
    detail::require_finite(out.du, "rhs_primitive");
    detail::require_finite(out.dphi, "rhs_primitive");
    return out;
}

// ---------------------------------------------------------------------------
// Initial data

/// Reproducible band-limited random field with unit H^s norm. Modes with
/// 1 <= max_i |k_i| <= band carry coefficients drawn uniformly from [-1, 1].
inline Field random_smooth_field(const TorusGrid& g, std::uint64_t seed, int sobolev_index = 3, int band = 2);

/// Velocity and phase for one of the named presets.
struct InitialData {
    VectorField u0;
    Field phi0;
};

inline InitialData initial_preset(const std::string& name, const TorusGrid& g, double velocity_amplitude = 1.0) {
    using std::cos;
    using std::sin;
    constexpr double pi = std::numbers::pi;
    VectorField u0 = VectorField::zeros(g);
    Field phi0;
    if (name == "taylor_green_bubble") {
        // Periodic chord distance to the domain centre keeps the bubble smooth.
        constexpr double r2 = 2.25, width = 3.0;
        if (g.dim() == 1) {
            phi0 = Field::sample(g, [](double x) { return std::tanh((r2 - 2.0 * (1.0 - cos(x - pi))) / width); });
        } else {
            phi0 = Field::sample(g, [](double x, double y) {
                const double d2 = 2.0 * (1.0 - cos(x - pi)) + 2.0 * (1.0 - cos(y - pi));
                return std::tanh((r2 - d2) / width);
            });
            u0[0] = Field::sample(g, [&](double x, double y) { return velocity_amplitude * sin(x) * cos(y); });
            u0[1] = Field::sample(g, [&](double x, double y) { return -velocity_amplitude * cos(x) * sin(y); });
        }
    } else if (name == "single_mode") {
        if (g.dim() == 1) {
            phi0 = Field::sample(g, [](double x) { return 0.6 * cos(x); });
        } else {
            phi0 = Field::sample(g, [](double x, double) { return 0.6 * cos(x); });
            u0[0] = Field::sample(g, [&](double, double y) { return velocity_amplitude * sin(y); });
        }
    } else {
        throw std::invalid_argument("unknown initial preset '" + name + "'");
    }
    return {std::move(u0), std::move(phi0)};
}

inline bool is_known_preset(const std::string& name) {
    return name == "taylor_green_bubble" || name == "single_mode";
}

/// H^s norm with weight (1 + |k|^2)^s; forward declared for initial data.
inline double sobolev_norm(const Field& f, int s);

/// Well-prepared compressible data around (u0, phi0):
///   rho = 1 + eps^2 kappa0 r1,  u = u0 + eps kappa0 r2,  phi = phi0 + eps kappa0 r3
/// with r_i fixed-seed smooth fields of unit H^s norm. u0 must be divergence-free.
inline CompressibleState well_prepared_initial(const VectorField& u0, const Field& phi0, double eps, double kappa0,
                                               std::uint64_t seed, ModelKind model = ModelKind::cahn_hilliard,
                                               int sobolev_index = 3) {
    if (!(eps > 0.0)) throw std::invalid_argument("well_prepared_initial: eps must be > 0");
    if (kappa0 < 0.0) throw std::invalid_argument("well_prepared_initial: kappa0 must be >= 0");
    const auto& g = phi0.grid();
    const double div_max = divergence(u0).to_physical().max_abs();
    if (div_max > 1e-10)
        throw std::invalid_argument("well_prepared_initial: u0 is not divergence-free (max |div u0| = " +
                                    std::to_string(div_max) + ")");

    Field rho = Field::constant(g, 1.0);
    VectorField u = u0.to_physical();
    Field phi = phi0.to_physical();
    if (kappa0 > 0.0) {
        rho.axpy(eps * eps * kappa0, random_smooth_field(g, seed, sobolev_index));
        for (int a = 0; a < g.dim(); ++a)
            u[a].axpy(eps * kappa0, random_smooth_field(g, seed + 101 + std::uint64_t(a), sobolev_index));
        phi.axpy(eps * kappa0, random_smooth_field(g, seed + 211, sobolev_index));
    }
    return pack(rho, u, phi, eps, model);
}

inline Field random_smooth_field(const TorusGrid& g, std::uint64_t seed, int sobolev_index, int band) {
    std::mt19937_64 rng(seed);
    // 53-bit mantissa mapping keeps draws identical across standard libraries.
    auto draw = [&rng] { return double(rng() >> 11) * 0x1.0p-53 * 2.0 - 1.0; };
    struct Mode {
        int k0, k1;
        double a, b;
    };
    std::vector<Mode> modes;
    if (g.dim() == 1) {
        for (int k = 1; k <= band; ++k) {
            const double a = draw(), b = draw();
            modes.push_back({k, 0, a, b});
        }
    } else {
        // Half plane: k1 > 0, or k1 == 0 and k0 > 0.
        for (int k0 = -band; k0 <= band; ++k0)
            for (int k1 = 0; k1 <= band; ++k1) {
                if (k1 == 0 && k0 <= 0) continue;
                const double a = draw(), b = draw();
                modes.push_back({k0, k1, a, b});
            }
    }
    Field f = Field::sample(g, [&](double x, double y) {
        double v = 0.0;
        for (const auto& m : modes) {
            const double th = m.k0 * x + m.k1 * y;
            v += m.a * std::cos(th) + m.b * std::sin(th);
        }
        return v;
    });
    const double norm = sobolev_norm(f, sobolev_index);
    return f * (1.0 / norm);
}

inline double sobolev_norm(const Field& f, int s) {
    if (s < 0) throw std::invalid_argument("sobolev_norm: s must be >= 0");
    if (!f.all_finite()) throw std::domain_error("sobolev_norm: non-finite field");
    const auto& kk = f.grid().k_squared_table();
    return std::sqrt(weighted_spectral_sum(f, [&](std::size_t i) { return std::pow(1.0 + kk[i], s); }));
}

}  // namespace lowmach
