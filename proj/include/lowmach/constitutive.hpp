#pragma once

#include "lowmach/errors.hpp"
#include "lowmach/field.hpp"
#include "lowmach/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace lowmach {

/// Selects the phase operator: Cahn-Hilliard applies the Laplacian to the
/// chemical potential, Allen-Cahn applies minus the identity.
enum class ModelKind { cahn_hilliard, allen_cahn };

inline const char* to_string(ModelKind m) { return m == ModelKind::cahn_hilliard ? "nsch" : "nsac"; }

enum class ViscosityKind { constant, affine };

namespace detail {

inline std::string locate(const TorusGrid& g, std::size_t idx) {
    char buf[128];
    if (g.dim() == 1) {
        std::snprintf(buf, sizeof buf, "index %zu (x=%.6g)", idx, g.coordinate(int(idx)));
    } else {
        const int i = int(idx / std::size_t(g.n()));
        const int j = int(idx % std::size_t(g.n()));
        std::snprintf(buf, sizeof buf, "index (%d,%d) (x=%.6g, y=%.6g)", i, j, g.coordinate(i), g.coordinate(j));
    }
    return buf;
}

}  // namespace detail

/// Throws VacuumError naming the first grid point where rho <= 0 (or is not finite).
inline void require_no_vacuum(const Field& rho, const char* where = "density") {
    const Field r = rho.to_physical();
    const auto v = r.values();
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!(v[i] > 0.0)) {
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.17g", v[i]);
            throw VacuumError(std::string(where) + ": vacuum (rho = " + buf + ") at " +
                              detail::locate(r.grid(), i));
        }
    }
}

/// Pressure law p_e(rho) = a rho^gamma, double-well G(phi) = (phi^2 - 1)^2 / 4
/// and density/phase dependent viscosities clamped into their uniform bounds.
struct Constitutive {
    double gamma = 2.0;
    double pressure_coeff = 1.0;

    ViscosityKind visc_kind = ViscosityKind::constant;
    double nu0 = 0.1, nu_rho = 0.0, nu_phi = 0.0;
    double eta0 = 0.1, eta_rho = 0.0, eta_phi = 0.0;
    double nu_star = 0.01, nu_upper = 10.0;
    double eta_star = 0.01, eta_upper = 10.0;

    void validate() const {
        if (!(pressure_coeff > 0.0)) throw std::invalid_argument("pressure_coeff must be > 0");
        if (!(gamma > 0.0)) throw std::invalid_argument("gamma must be > 0");
        if (!(nu_star > 0.0) || nu_upper < nu_star) throw std::invalid_argument("need 0 < nu_star <= nu_upper");
        if (!(eta_star > 0.0) || eta_upper < eta_star)
            throw std::invalid_argument("need 0 < eta_star <= eta_upper");
        if (visc_kind == ViscosityKind::constant) {
            if (nu0 < nu_star || nu0 > nu_upper) throw std::invalid_argument("nu0 outside [nu_star, nu_upper]");
            if (eta0 < eta_star || eta0 > eta_upper)
                throw std::invalid_argument("eta0 outside [eta_star, eta_upper]");
        }
    }

    // Scalar versions.
    double p(double rho) const { return pressure_coeff * std::pow(rho, gamma); }
    double dp(double rho) const { return pressure_coeff * gamma * std::pow(rho, gamma - 1.0); }
    double omega(double rho) const {
        if (gamma == 1.0) return pressure_coeff * rho * std::log(rho);
        return pressure_coeff * rho * (std::pow(rho, gamma - 1.0) - 1.0) / (gamma - 1.0);
    }
    /// Sound speed at the reference density, sqrt(p_e'(1)).
    double sound_speed() const { return std::sqrt(dp(1.0)); }

    double nu(double rho, double phi) const {
        if (visc_kind == ViscosityKind::constant) return nu0;
        return std::clamp(nu0 + nu_rho * (rho - 1.0) + nu_phi * phi * phi, nu_star, nu_upper);
    }
    double eta(double rho, double phi) const {
        if (visc_kind == ViscosityKind::constant) return eta0;
        return std::clamp(eta0 + eta_rho * (rho - 1.0) + eta_phi * phi * phi, eta_star, eta_upper);
    }
    bool constant_viscosity() const { return visc_kind == ViscosityKind::constant; }

    /// Upper bounds used for stability estimates.
    double nu_max() const { return constant_viscosity() ? nu0 : nu_upper; }
    double eta_max() const { return constant_viscosity() ? eta0 : eta_upper; }

    Field pressure(const Field& rho) const {
        require_no_vacuum(rho, "pressure");
        return rho.to_physical().map([this](double r) { return p(r); });
    }
    Field pressure_prime(const Field& rho) const {
        require_no_vacuum(rho, "pressure_prime");
        return rho.to_physical().map([this](double r) { return dp(r); });
    }
    /// omega(rho) = rho * int_1^rho p_e(z) / z^2 dz, in closed form.
    Field omega(const Field& rho) const {
        require_no_vacuum(rho, "omega");
        return rho.to_physical().map([this](double r) { return omega(r); });
    }

    Field viscosity_nu(const Field& rho, const Field& phi) const { return pointwise_visc(rho, phi, true); }
    Field viscosity_eta(const Field& rho, const Field& phi) const { return pointwise_visc(rho, phi, false); }

  private:
    Field pointwise_visc(const Field& rho, const Field& phi, bool is_nu) const {
        require_no_vacuum(rho, is_nu ? "viscosity_nu" : "viscosity_eta");
        const Field r = rho.to_physical();
        const Field f = phi.to_physical();
        r.check_compatible(f);
        Field out(r.grid(), Repr::physical);
        auto o = out.values();
        const auto rv = r.values();
        const auto fv = f.values();
        for (std::size_t i = 0; i < o.size(); ++i) o[i] = is_nu ? nu(rv[i], fv[i]) : eta(rv[i], fv[i]);
        return out;
    }
};

inline double double_well(double phi) {
    const double s = phi * phi - 1.0;
    return 0.25 * s * s;
}
inline double double_well_prime(double phi) { return phi * phi * phi - phi; }

inline Field double_well(const Field& phi) {
    return phi.to_physical().map([](double f) { return double_well(f); });
}
inline Field double_well_prime(const Field& phi) {
    return phi.to_physical().map([](double f) { return double_well_prime(f); });
}

/// phi^3 - phi with the cube formed from the dealiased phase field and the
/// product dealiased again; used inside the spectral right-hand sides.
inline Field double_well_prime_dealiased(const Field& phi) {
    const Field smooth = dealias(phi.to_spectral()).to_physical();
    return dealias(double_well_prime(smooth).to_spectral()).to_physical();
}

/// mu = -Laplacian(phi) / rho + G'(phi), pointwise in physical space.
inline Field chemical_potential(const Field& rho, const Field& phi) {
    require_no_vacuum(rho, "chemical_potential");
    const Field r = rho.to_physical();
    const Field lap = laplacian(phi.to_spectral()).to_physical();
    Field mu = double_well_prime_dealiased(phi);
    auto m = mu.values();
    const auto l = lap.values();
    const auto rv = r.values();
    for (std::size_t i = 0; i < m.size(); ++i) m[i] -= l[i] / rv[i];
    return mu;
}

/// Incompressible specialization mu = -Laplacian(phi) + phi^3 - phi.
inline Field chemical_potential(const Field& phi) {
    return chemical_potential(Field::constant(phi.grid(), 1.0), phi);
}

}  // namespace lowmach
