#include "lowmach/dynamics.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace lowmach;
using lowmach::testing::max_diff;
using lowmach::testing::random_field;
using lowmach::testing::random_vector;

namespace {

CompressibleState uniform_state(const TorusGrid& g, double rho0, double phi0, ModelKind model, double eps = 0.2) {
    return pack(Field::constant(g, rho0), VectorField::zeros(g), Field::constant(g, phi0), eps, model);
}

VectorField solenoidal(const TorusGrid& g, std::uint64_t seed) {
    return leray_project(random_vector(g, seed, 4));
}

}  // namespace

TEST(Capillary, ConstantAndCosine) {
    TorusGrid g(2, 32);
    EXPECT_LT(max_abs(capillary_force(Field::constant(g, 0.7))), 1e-15);
    const Field phi = Field::sample(g, [](double x, double) { return std::cos(x); });
    const VectorField f = capillary_force(phi);
    const Field expect = Field::sample(g, [](double x, double) { return -std::cos(x) * std::sin(x); });
    EXPECT_LT(max_diff(f[0], expect), 1e-12);
    EXPECT_LT(f[1].max_abs(), 1e-13);
}

TEST(Capillary, TensorFormAgrees) {
    TorusGrid g(2, 64);
    const Field phi = random_field(g, 17, 6);
    EXPECT_LT(max_diff(capillary_force(phi), capillary_force_tensor(phi)), 1e-10);
}

TEST(CompressibleRhs, UniformRestIsEquilibrium) {
    Constitutive c;
    for (int dim : {1, 2}) {
        TorusGrid g(dim, 16);
        for (auto model : {ModelKind::cahn_hilliard, ModelKind::allen_cahn}) {
            for (double phi0 : {1.0, -1.0}) {
                const auto r = rhs_compressible(uniform_state(g, 1.3, phi0, model), c);
                EXPECT_LT(r.drho.to_physical().max_abs(), 1e-14);
                EXPECT_LT(max_abs(r.dmom), 1e-14);
                EXPECT_LT(r.dq.to_physical().max_abs(), 1e-14);
            }
        }
    }
}

TEST(CompressibleRhs, UniformPhaseRelaxation) {
    Constitutive c;
    TorusGrid g(2, 16);
    const double phi0 = 0.3;
    const auto ac = rhs_compressible(uniform_state(g, 1.0, phi0, ModelKind::allen_cahn), c);
    const Field dq = ac.dq.to_physical();
    EXPECT_NEAR(dq.max(), -(phi0 * phi0 * phi0 - phi0), 1e-14);
    EXPECT_NEAR(dq.min(), -(phi0 * phi0 * phi0 - phi0), 1e-14);
    EXPECT_LT(ac.drho.to_physical().max_abs(), 1e-15);
    EXPECT_LT(max_abs(ac.dmom), 1e-15);
    const auto ch = rhs_compressible(uniform_state(g, 1.0, phi0, ModelKind::cahn_hilliard), c);
    EXPECT_LT(ch.dq.to_physical().max_abs(), 1e-15);
}

TEST(CompressibleRhs, ConservedModesExactlyZero) {
    Constitutive c;
    c.visc_kind = ViscosityKind::affine;
    c.nu_rho = 0.05;
    c.nu_phi = 0.02;
    TorusGrid g(2, 32);
    const Field rho = random_field(g, 1, 4).map([](double v) { return 1.0 + 0.1 * std::tanh(v); });
    const auto s = pack(rho, random_vector(g, 2, 4), random_field(g, 3, 4) * 0.5, 0.2, ModelKind::cahn_hilliard);
    const auto r = rhs_compressible(s, c);
    EXPECT_EQ(r.drho.coefficients()[0], Field::complex(0.0, 0.0));
    EXPECT_EQ(r.dq.coefficients()[0], Field::complex(0.0, 0.0));
}

TEST(CompressibleRhs, TensorCapillaryMatchesReduced) {
    Constitutive c;
    TorusGrid g(2, 64);
    const Field rho = random_field(g, 5, 3).map([](double v) { return 1.0 + 0.05 * std::tanh(v); });
    const auto s = pack(rho, random_vector(g, 6, 3), random_field(g, 7, 3) * 0.5, 0.3, ModelKind::allen_cahn);
    const auto a = rhs_compressible(s, c, CapillaryForm::reduced);
    const auto b = rhs_compressible(s, c, CapillaryForm::tensor);
    EXPECT_LT(max_diff(a.dmom, b.dmom), 1e-9);
}

TEST(CompressibleRhs, MomentumReducesToIncompressibleForcing) {
    Constitutive c;
    TorusGrid g(2, 32);
    const VectorField u = solenoidal(g, 8);
    const Field phi = Field::constant(g, 0.4);
    const auto s = pack(Field::constant(g, 1.0), u, phi, 0.1, ModelKind::cahn_hilliard);
    const auto r = rhs_compressible(s, c);
    const VectorField f = incompressible_forcing(u, phi, c);
    // The compressible side additionally carries eta grad div u, which vanishes here.
    EXPECT_LT(max_diff(r.dmom, f), 1e-11);
}

TEST(CompressibleRhs, VacuumReported) {
    Constitutive c;
    TorusGrid g(1, 16);
    CompressibleState s = uniform_state(g, 1.0, 1.0, ModelKind::cahn_hilliard);
    s.rho[4] = -0.5;
    EXPECT_THROW(rhs_compressible(s, c), VacuumError);
}

TEST(IncompressibleRhs, Equilibria) {
    Constitutive c;
    TorusGrid g(2, 16);
    for (auto model : {ModelKind::cahn_hilliard, ModelKind::allen_cahn}) {
        const IncompressibleState s{VectorField::zeros(g), Field::constant(g, 1.0), model};
        const auto r = rhs_incompressible(s, c);
        EXPECT_LT(max_abs(r.du), 1e-15);
        EXPECT_LT(r.dphi.to_physical().max_abs(), 1e-15);
    }
    const IncompressibleState s{VectorField::zeros(g), Field::constant(g, -0.2), ModelKind::allen_cahn};
    EXPECT_NEAR(rhs_incompressible(s, c).dphi.to_physical().max(), -(-0.008 + 0.2), 1e-15);
}

TEST(IncompressibleRhs, TaylorGreenViscousTerm) {
    Constitutive c;
    c.nu0 = 0.3;
    TorusGrid g(2, 32);
    const VectorField u{Field::sample(g, [](double x, double y) { return std::sin(x) * std::cos(y); }),
                        Field::sample(g, [](double x, double y) { return -std::cos(x) * std::sin(y); })};
    EXPECT_LT(max_diff(laplacian(u), -2.0 * u), 1e-12);
    const IncompressibleState s{u, Field::constant(g, 1.0), ModelKind::cahn_hilliard};
    const VectorField du = rhs_incompressible(s, c).du;

    VectorField adv = VectorField::zeros(g);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) adv[i] += u[j] * derivative(u[i], j, 1);
    const VectorField expect = leray_project(-1.0 * adv) - 2.0 * c.nu0 * u;
    EXPECT_LT(max_diff(du, expect), 1e-12);
    // For Taylor-Green the advective term is a pure gradient.
    EXPECT_LT(max_diff(du, -2.0 * c.nu0 * u), 1e-12);
}

TEST(IncompressibleRhs, ProjectedRateIsDivergenceFree) {
    Constitutive c;
    TorusGrid g(2, 32);
    const IncompressibleState s{solenoidal(g, 9), random_field(g, 10, 4) * 0.5, ModelKind::cahn_hilliard};
    const auto r = rhs_incompressible(s, c);
    EXPECT_LT(divergence(r.du).to_physical().max_abs(), 1e-10);
    EXPECT_EQ(r.dphi.coefficients()[0], Field::complex(0.0, 0.0));
    EXPECT_THROW(rhs_incompressible(IncompressibleState{VectorField::zeros(TorusGrid(1, 16)),
                                                        Field::constant(TorusGrid(1, 16), 0.0),
                                                        ModelKind::allen_cahn},
                                    c),
                 std::invalid_argument);
}

TEST(Primitives, RecoverAndRoundTrip) {
    TorusGrid g(2, 16);
    CompressibleState s{0.1, Field::constant(g, 2.0), VectorField{Field::constant(g, 2.0), Field::constant(g, 0.0)},
                        Field::constant(g, 1.0), ModelKind::cahn_hilliard};
    const auto [u, phi] = primitives(s);
    EXPECT_NEAR(u[0].min(), 1.0, 1e-15);
    EXPECT_NEAR(u[0].max(), 1.0, 1e-15);
    EXPECT_NEAR(phi.max(), 0.5, 1e-15);

    const Field rho = random_field(g, 11).map([](double v) { return 1.0 + 0.3 * std::tanh(v); });
    const VectorField uu = random_vector(g, 12);
    const Field ph = random_field(g, 13);
    const auto [u2, p2] = primitives(pack(rho, uu, ph, 0.1, ModelKind::allen_cahn));
    EXPECT_LT(max_diff(u2, uu), 1e-13);
    EXPECT_LT(max_diff(p2, ph), 1e-13);

    s.rho[3] = 0.0;
    EXPECT_THROW(primitives(s), VacuumError);
}

TEST(WellPrepared, ZeroKappaIsIdentity) {
    TorusGrid g(2, 32);
    const auto init = initial_preset("taylor_green_bubble", g);
    const auto s = well_prepared_initial(init.u0, init.phi0, 0.1, 0.0, 42);
    EXPECT_LT((s.rho - Field::constant(g, 1.0)).max_abs(), 1e-15);
    const auto [u, phi] = primitives(s);
    EXPECT_LT(max_diff(u, init.u0), 1e-15);
    EXPECT_LT(max_diff(phi, init.phi0), 1e-15);
}

TEST(WellPrepared, ScalingContract) {
    TorusGrid g(2, 32);
    const auto init = initial_preset("taylor_green_bubble", g);
    for (double eps : {0.4, 0.1}) {
        const double kappa = 0.3;
        const auto s = well_prepared_initial(init.u0, init.phi0, eps, kappa, 7);
        const auto [u, phi] = primitives(s);
        const Field drho = s.rho - Field::constant(g, 1.0);
        EXPECT_LE(sobolev_norm(drho, 3) / (eps * eps), kappa * (1.0 + 1e-12));
        for (int a = 0; a < 2; ++a) EXPECT_LE(sobolev_norm(u[a] - init.u0[a], 3) / eps, kappa * (1.0 + 1e-12));
        EXPECT_LE(sobolev_norm(phi - init.phi0, 3) / eps, kappa * (1.0 + 1e-12));
    }
}

TEST(WellPrepared, Deterministic) {
    TorusGrid g(2, 32);
    const auto init = initial_preset("single_mode", g);
    const auto a = well_prepared_initial(init.u0, init.phi0, 0.2, 0.1, 99);
    const auto b = well_prepared_initial(init.u0, init.phi0, 0.2, 0.1, 99);
    const auto c = well_prepared_initial(init.u0, init.phi0, 0.2, 0.1, 100);
    EXPECT_TRUE(std::equal(a.rho.values().begin(), a.rho.values().end(), b.rho.values().begin()));
    EXPECT_TRUE(std::equal(a.q.values().begin(), a.q.values().end(), b.q.values().begin()));
    EXPECT_FALSE(std::equal(a.rho.values().begin(), a.rho.values().end(), c.rho.values().begin()));
}

TEST(WellPrepared, RejectsCompressibleVelocity) {
    TorusGrid g(2, 32);
    const VectorField u{Field::sample(g, [](double x, double) { return std::sin(x); }), Field(g, Repr::physical)};
    EXPECT_THROW(well_prepared_initial(u, Field::constant(g, 0.0), 0.1, 0.1, 1), std::invalid_argument);
}

TEST(Presets, DivergenceFreeAndResolved) {
    for (const char* name : {"taylor_green_bubble", "single_mode"}) {
        TorusGrid g(2, 64);
        const auto init = initial_preset(name, g);
        EXPECT_LT(divergence(init.u0).max_abs(), 1e-12);
        // Spectral tail beyond the dealiasing cutoff is negligible.
        const Field s = init.phi0.to_spectral();
        const Field cut = s - dealias(s);
        EXPECT_LT(l2_norm(cut), 1e-12 * l2_norm(s)) << name;
    }
    EXPECT_THROW(initial_preset("nope", TorusGrid(2, 16)), std::invalid_argument);
}
