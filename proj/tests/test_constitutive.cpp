#include "lowmach/constitutive.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace lowmach;
using lowmach::testing::max_diff;
using lowmach::testing::random_field;

namespace {

// Composite Simpson quadrature of rho * int_1^rho p(z) / z^2 dz.
double omega_quadrature(const Constitutive& c, double rho) {
    const int m = 2000;
    const double a = 1.0, b = rho, h = (b - a) / m;
    auto f = [&](double z) { return c.p(z) / (z * z); };
    double s = f(a) + f(b);
    for (int i = 1; i < m; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
    return rho * s * h / 3.0;
}

}  // namespace

TEST(Pressure, DefaultLaw) {
    Constitutive c;
    TorusGrid g(1, 8);
    EXPECT_DOUBLE_EQ(c.pressure(Field::constant(g, 1.0)).max(), 1.0);
    EXPECT_DOUBLE_EQ(c.pressure_prime(Field::constant(g, 1.0)).max(), 2.0);
    EXPECT_DOUBLE_EQ(c.pressure(Field::constant(g, 2.0)).max(), 4.0);
}

TEST(Pressure, VacuumRejectedWithLocation) {
    Constitutive c;
    TorusGrid g(2, 8);
    Field rho = Field::constant(g, 1.0);
    rho[10] = 0.0;
    try {
        c.pressure(rho);
        FAIL() << "expected VacuumError";
    } catch (const VacuumError& e) {
        EXPECT_NE(std::string(e.what()).find("(1,2)"), std::string::npos) << e.what();
    }
}

TEST(Pressure, DerivativePositive) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> d(0.01, 10.0);
    for (double gamma : {1.0, 1.4, 2.0, 3.0}) {
        Constitutive c;
        c.gamma = gamma;
        for (int i = 0; i < 200; ++i) EXPECT_GT(c.dp(d(rng)), 0.0);
    }
}

TEST(Omega, ClosedFormMatchesQuadrature) {
    Constitutive c;
    EXPECT_DOUBLE_EQ(c.omega(1.0), 0.0);
    EXPECT_NEAR(c.omega(2.0), 2.0, 1e-14);
    EXPECT_NEAR(c.omega(2.0), omega_quadrature(c, 2.0), 1e-10);
    c.gamma = 1.4;
    EXPECT_NEAR(c.omega(2.0), 1.5976, 1e-4);
    EXPECT_NEAR(c.omega(2.0), omega_quadrature(c, 2.0), 1e-10);
    c.gamma = 1.0;
    EXPECT_NEAR(c.omega(3.0), omega_quadrature(c, 3.0), 1e-10);
}

TEST(Omega, RelativePotentialNonnegative) {
    // omega(rho) - p(1)(rho - 1) >= 0 with equality only at rho = 1.
    for (double gamma : {1.4, 2.0}) {
        Constitutive c;
        c.gamma = gamma;
        for (double r = 0.2; r <= 5.0; r += 0.01) {
            const double v = c.omega(r) - c.p(1.0) * (r - 1.0);
            if (std::abs(r - 1.0) > 1e-9) {
                EXPECT_GT(v, 0.0) << "rho=" << r;
            }
        }
        EXPECT_NEAR(c.omega(1.0) - c.p(1.0) * 0.0, 0.0, 1e-15);
    }
}

TEST(Omega, FieldVersionAndVacuum) {
    Constitutive c;
    TorusGrid g(1, 8);
    EXPECT_NEAR(c.omega(Field::constant(g, 2.0)).max(), 2.0, 1e-14);
    EXPECT_THROW(c.omega(Field::constant(g, -1.0)), VacuumError);
}

TEST(DoubleWell, Values) {
    EXPECT_DOUBLE_EQ(double_well(1.0), 0.0);
    EXPECT_DOUBLE_EQ(double_well(-1.0), 0.0);
    EXPECT_DOUBLE_EQ(double_well_prime(1.0), 0.0);
    EXPECT_DOUBLE_EQ(double_well(0.0), 0.25);
    EXPECT_DOUBLE_EQ(double_well_prime(0.0), 0.0);
    EXPECT_DOUBLE_EQ(double_well_prime(0.5), -0.375);
}

TEST(Viscosity, ConstantAndAffine) {
    TorusGrid g(1, 8);
    const Field one = Field::constant(g, 1.0);
    Constitutive c;
    c.nu0 = 1.0;
    EXPECT_DOUBLE_EQ(c.viscosity_nu(one, one).max(), 1.0);

    c.visc_kind = ViscosityKind::affine;
    c.nu_rho = 0.1;
    c.nu_phi = 0.1;
    EXPECT_NEAR(c.viscosity_nu(one, one).max(), 1.1, 1e-15);
    c.nu_phi = 100.0;
    EXPECT_DOUBLE_EQ(c.viscosity_nu(one, one).max(), c.nu_upper);
}

TEST(Viscosity, ClampedIntoBounds) {
    Constitutive c;
    c.visc_kind = ViscosityKind::affine;
    c.nu0 = 0.5;
    c.nu_rho = 3.0;
    c.nu_phi = -2.0;
    c.eta0 = 0.2;
    c.eta_rho = -5.0;
    c.eta_phi = 4.0;
    TorusGrid g(2, 16);
    Field rho = random_field(g, 2);
    rho = rho.map([](double v) { return 1.0 + 0.5 * std::tanh(v); });
    const Field phi = random_field(g, 3);
    const Field nu = c.viscosity_nu(rho, phi);
    const Field eta = c.viscosity_eta(rho, phi);
    EXPECT_GE(nu.min(), c.nu_star);
    EXPECT_LE(nu.max(), c.nu_upper);
    EXPECT_GE(eta.min(), c.eta_star);
    EXPECT_LE(eta.max(), c.eta_upper);
}

TEST(Validate, RejectsBadBounds) {
    Constitutive c;
    c.nu_star = 0.0;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    Constitutive d;
    d.nu0 = 100.0;
    EXPECT_THROW(d.validate(), std::invalid_argument);
    Constitutive e;
    e.pressure_coeff = -1.0;
    EXPECT_THROW(e.validate(), std::invalid_argument);
}

TEST(ChemicalPotential, ConstantPhases) {
    TorusGrid g(2, 16);
    const Field rho = random_field(g, 4).map([](double v) { return 1.5 + 0.3 * std::sin(v); });
    EXPECT_LT(chemical_potential(rho, Field::constant(g, 1.0)).max_abs(), 1e-14);
    EXPECT_NEAR(chemical_potential(Field::constant(g, 0.5)).max(), -0.375, 1e-14);
    EXPECT_NEAR(chemical_potential(Field::constant(g, 0.5)).min(), -0.375, 1e-14);
}

TEST(ChemicalPotential, CosineSpotValue) {
    TorusGrid g(1, 32);
    const Field phi = Field::sample(g, [](double x) { return std::cos(x); });
    const Field mu = chemical_potential(phi);
    EXPECT_NEAR(mu[0], 1.0, 1e-12);
    const Field expect = Field::sample(g, [](double x) { return std::cos(x) + std::pow(std::cos(x), 3) - std::cos(x); });
    EXPECT_LT(max_diff(mu, expect), 1e-12);
}

TEST(ChemicalPotential, VariableDensity) {
    TorusGrid g(1, 32);
    const Field phi = Field::sample(g, [](double x) { return 0.3 * std::cos(2.0 * x); });
    const Field rho = Field::sample(g, [](double x) { return 2.0 + std::sin(x); });
    const Field expect = Field::sample(g, [](double x) {
        const double p = 0.3 * std::cos(2.0 * x);
        return 1.2 * std::cos(2.0 * x) / (2.0 + std::sin(x)) + p * p * p - p;
    });
    EXPECT_LT(max_diff(chemical_potential(rho, phi), expect), 1e-12);
    Field vac = rho;
    vac[5] = -0.1;
    EXPECT_THROW(chemical_potential(vac, phi), VacuumError);
}

TEST(ChemicalPotential, PairingWithFreeEnergyGradient) {
    // For rho = 1, int mu (phi^3 - phi - Lap phi) = int mu^2.
    TorusGrid g(2, 32);
    const Field phi = random_field(g, 12, 4) * 0.2;
    const Field mu = chemical_potential(phi);
    const Field other = double_well_prime_dealiased(phi) - laplacian(phi);
    EXPECT_NEAR(inner(mu, other), inner(mu, mu), 1e-10 * inner(mu, mu));
}
