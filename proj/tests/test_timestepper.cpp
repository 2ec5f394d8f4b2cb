#include "lowmach/timestepper.hpp"
#include "support.hpp"

#include <boost/numeric/odeint.hpp>
#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace lowmach;
using lowmach::testing::max_diff;
using lowmach::testing::random_field;

namespace {

double logistic_cubic(double phi0, double t) {
    return phi0 * std::exp(t) / std::sqrt(1.0 + phi0 * phi0 * (std::exp(2.0 * t) - 1.0));
}

// Independent high-accuracy solution of phi' = phi - phi^3.
double odeint_reference(double phi0, double t_end) {
    namespace ode = boost::numeric::odeint;
    double x = phi0;
    auto stepper = ode::make_dense_output(1e-14, 1e-14, ode::runge_kutta_dopri5<double>());
    ode::integrate_const(stepper, [](double y, double& dy, double) { dy = y - y * y * y; }, x, 0.0, t_end, 1e-3);
    return x;
}

Bundle single(const Field& f) { return Bundle{f.to_spectral()}; }

CompressibleState perturbed_state(int n, double eps, ModelKind model, double kappa = 0.1) {
    TorusGrid g(2, n);
    const auto init = initial_preset("taylor_green_bubble", g);
    return well_prepared_initial(init.u0, init.phi0, eps, kappa, 2024, model);
}

}  // namespace

TEST(AcousticDt, WorkedExample) {
    Constitutive c;
    TorusGrid g(2, 64);
    EXPECT_NEAR(acoustic_dt(0.1, g, c, 0.5, 0.0), 0.5 * (2.0 * std::numbers::pi / 64.0) / (std::sqrt(2.0) / 0.1), 1e-16);
    // 0.5 * (2 pi / 64) / (sqrt(2) / 0.1) = 3.47100e-3 to six digits.
    EXPECT_NEAR(acoustic_dt(0.1, g, c, 0.5, 0.0), 3.47100e-3, 5e-9);
    EXPECT_NEAR(acoustic_dt(0.05, g, c, 0.5, 0.0), 0.5 * acoustic_dt(0.1, g, c, 0.5, 0.0), 1e-16);
    double prev = acoustic_dt(0.1, g, c, 0.5, 0.0);
    for (double u : {0.1, 1.0, 10.0, 1e3, 1e6}) {
        const double dt = acoustic_dt(0.1, g, c, 0.5, u);
        EXPECT_LT(dt, prev);
        prev = dt;
    }
    EXPECT_LT(prev, 1e-6);
    EXPECT_THROW(acoustic_dt(0.0, g, c, 0.5, 0.0), std::invalid_argument);
}

TEST(StepperConfig, Validation) {
    StepperConfig cfg;
    EXPECT_NO_THROW(cfg.validate());
    cfg.cfl = 1.5;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
    cfg = {};
    cfg.picard.tol = 0.0;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
    cfg = {};
    cfg.picard.max_iter = 0;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
    cfg = {};
    cfg.dt_override = -1.0;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
    EXPECT_EQ(parse_scheme("imex"), Scheme::imex);
    EXPECT_THROW(parse_scheme("euler"), std::invalid_argument);
}

TEST(Rk4, ZeroRhsLeavesStateUnchanged) {
    TorusGrid g(1, 16);
    const Bundle u = single(random_field(g, 1));
    const Bundle out = step_rk4(u, [](const Bundle& b) { return Bundle{Field(b[0].grid(), Repr::spectral)}; }, 0.1);
    EXPECT_EQ(max_diff(out[0], u[0]), 0.0);
}

TEST(Rk4, LinearDecayIsTaylorPolynomial) {
    TorusGrid g(1, 8);
    const Bundle u = single(Field::constant(g, 1.0));
    const Bundle out = step_rk4(u, [](const Bundle& b) { return Bundle{-b[0]}; }, 0.1);
    const double h = 0.1;
    EXPECT_NEAR(out[0].to_physical().max(), 1.0 - h + h * h / 2 - h * h * h / 6 + h * h * h * h / 24, 1e-15);
}

TEST(Rk4, CubicRelaxationMatchesClosedFormAndOdeint) {
    const double phi0 = 0.5;
    const double ref = odeint_reference(phi0, 1.0);
    EXPECT_NEAR(ref, logistic_cubic(phi0, 1.0), 1e-11);

    TorusGrid g(1, 8);
    Bundle u = single(Field::constant(g, phi0));
    const BundleRhs f = [](const Bundle& b) {
        return Bundle{b[0].to_physical().map([](double p) { return p - p * p * p; }).to_spectral()};
    };
    for (int i = 0; i < 1000; ++i) u = step_rk4(u, f, 1e-3);
    const double got = u[0].to_physical().max();
    EXPECT_NEAR(got, logistic_cubic(phi0, 1.0), 1e-9);
    EXPECT_NEAR(got, ref, 1e-9);
}

TEST(Rk4, NonFiniteStageAborts) {
    TorusGrid g(1, 8);
    const Bundle u = single(Field::constant(g, 1.0));
    const BundleRhs bad = [](const Bundle& b) {
        Field f(b[0].grid(), Repr::spectral);
        f.coefficients()[0] = std::numeric_limits<double>::infinity();
        return Bundle{f};
    };
    EXPECT_THROW(step_rk4(u, bad, 0.1), NumericalError);
}

TEST(Imex, ExactImplicitSolvesAtUnitWavenumber) {
    TorusGrid g(1, 16);
    const Field c = Field::sample(g, [](double x) { return std::cos(x); });
    const double dt = 0.3;
    const BundleRhs bih = [](const Bundle& b) { return Bundle{-biharmonic(b[0])}; };
    const Bundle a = step_imex(single(c), bih, {Stiffness{0.0, 1.0}}, dt);
    EXPECT_LT(max_diff(a[0], c * (1.0 / (1.0 + dt))), 1e-15);
    const BundleRhs heat = [](const Bundle& b) { return Bundle{laplacian(b[0])}; };
    const Bundle h = step_imex(single(c), heat, {Stiffness{1.0, 0.0}}, dt);
    EXPECT_LT(max_diff(h[0], c * (1.0 / (1.0 + dt))), 1e-15);
}

TEST(Imex, EquilibriumUnchanged) {
    Constitutive c;
    TorusGrid g(2, 16);
    const IncompressibleState s{VectorField::zeros(g), Field::constant(g, 1.0), ModelKind::cahn_hilliard};
    const auto next = step(s, c, Scheme::imex, 0.5);
    EXPECT_LT(max_diff(next.phi, s.phi), 1e-15);
    EXPECT_LT(max_abs(next.u), 1e-15);
}

TEST(ExponentialRk4, LinearPartPropagatedExactly) {
    TorusGrid g(1, 16);
    const Field f = random_field(g, 3, 5);
    const double dt = 0.7;
    const BundleRhs bih = [](const Bundle& b) { return Bundle{-biharmonic(b[0])}; };
    const Bundle out = step_etdrk4(single(f), bih, {Stiffness{0.0, 1.0}}, dt);
    const auto& kk = g.k_squared_table();
    const Field expect = detail::apply_symbol(f.to_spectral(), [&](std::size_t s) { return std::exp(-dt * kk[s] * kk[s]); });
    EXPECT_LT(max_diff(out[0], expect), 1e-14);
}

TEST(ExponentialRk4, FourthOrderWithStiffPart) {
    // u = a(t) cos x with u' = -Lap^2 u + (a - a^3) cos x, so a' = -a^3 and
    // a(t) = a0 / sqrt(1 + 2 a0^2 t). The biharmonic part is the split-off L.
    TorusGrid g(1, 16);
    const BundleRhs f = [&g](const Bundle& b) {
        const double a = 2.0 * b[0].coefficient(1).real() / double(g.n());
        Field rest = Field::sample(g, [a](double x) { return (a - a * a * a) * std::cos(x); }).to_spectral();
        return Bundle{rest - biharmonic(b[0])};
    };
    const std::vector<Stiffness> L{Stiffness{0.0, 1.0}};
    const double a0 = 0.8, T = 1.0;
    auto run = [&](int n) {
        Bundle u = single(Field::sample(g, [a0](double x) { return a0 * std::cos(x); }));
        for (int i = 0; i < n; ++i) u = step_etdrk4(u, f, L, T / n);
        const double a = 2.0 * u[0].to_spectral().coefficient(1).real() / double(g.n());
        return std::abs(a - a0 / std::sqrt(1.0 + 2.0 * a0 * a0 * T));
    };
    const double r = run(10) / run(20);
    EXPECT_GT(r, 12.0);
    EXPECT_LT(r, 20.0);
}

TEST(ExponentialRk4, StiffModesRelaxToQuasiStaticValue) {
    // u' = Lap u + cos 5x from u = 0 with dt far beyond the explicit limit:
    // constant forcing is integrated exactly, landing on cos(5x) / 25.
    TorusGrid g(1, 16);
    const Field forcing = Field::sample(g, [](double x) { return std::cos(5.0 * x); }).to_spectral();
    const BundleRhs heat = [&](const Bundle& b) { return Bundle{laplacian(b[0]) + forcing}; };
    const Bundle out = step_etdrk4(single(Field::constant(g, 0.0).to_spectral()), heat, {Stiffness{1.0, 0.0}}, 100.0);
    const Field expect = Field::sample(g, [](double x) { return std::cos(5.0 * x) / 25.0; });
    EXPECT_LT(max_diff(out[0], expect), 1e-13);
}

TEST(Conservation, MassAndPhaseMassOverThousandRk4Steps) {
    Constitutive c;
    const auto s0 = perturbed_state(16, 0.2, ModelKind::cahn_hilliard);
    const double dt = stable_dt(s0, c, Scheme::rk4, 0.5);
    auto s = s0;
    const double m0 = integrate(s0.rho), q0 = integrate(s0.q);
    for (int i = 0; i < 1000; ++i) s = step(s, c, Scheme::rk4, dt);
    EXPECT_LT(std::abs(integrate(s.rho) - m0) / std::abs(m0), 1e-10);
    EXPECT_LT(std::abs(integrate(s.q) - q0) / integrate(s0.q.map([](double v) { return std::abs(v); })), 1e-10);
}

TEST(Incompressible, DivergenceFreeOverThousandSteps) {
    Constitutive c;
    TorusGrid g(2, 16);
    const auto init = initial_preset("taylor_green_bubble", g);
    IncompressibleState s{init.u0, init.phi0, ModelKind::cahn_hilliard};
    const double dt = stable_dt(s, c, Scheme::etdrk4, 0.4);
    for (int i = 0; i < 1000; ++i) {
        s = step(s, c, Scheme::etdrk4, dt);
        if (i % 100 == 0) {
            ASSERT_LT(divergence(s.u).max_abs(), 1e-9) << "step " << i;
        }
    }
    EXPECT_LT(divergence(s.u).max_abs(), 1e-9);
}

TEST(Incompressible, ImexGapHalvesWithStep) {
    Constitutive c;
    TorusGrid g(2, 16);
    const auto init = initial_preset("single_mode", g);
    const IncompressibleState s0{init.u0, init.phi0, ModelKind::cahn_hilliard};
    const double T = 0.2;
    StepperConfig ref;
    ref.scheme = Scheme::rk4;
    ref.cfl = 0.5;
    const auto truth = integrate(s0, c, ref, {T});
    auto gap = [&](double dt) {
        StepperConfig cfg;
        cfg.scheme = Scheme::imex;
        cfg.dt_override = dt;
        const auto s = integrate(s0, c, cfg, {T});
        return std::sqrt(std::pow(l2_norm(s.u - truth.u), 2) + std::pow(l2_norm(s.phi - truth.phi), 2));
    };
    const double r = gap(0.005) / gap(0.01);
    EXPECT_GT(r, 0.4);
    EXPECT_LT(r, 0.6);
}

TEST(Integrate, LandsOnSampleTimes) {
    Constitutive c;
    TorusGrid g(2, 16);
    const auto init = initial_preset("single_mode", g);
    const IncompressibleState s0{init.u0, init.phi0, ModelKind::allen_cahn};
    StepperConfig cfg;
    std::vector<double> seen;
    integrate<IncompressibleState>(s0, c, cfg, equispaced_times(0.1, 4),
                                   [&](double t, const IncompressibleState&, double) { seen.push_back(t); });
    ASSERT_EQ(seen.size(), 5u);
    for (int i = 0; i <= 4; ++i) EXPECT_DOUBLE_EQ(seen[i], 0.1 * i / 4.0);
}

TEST(Picard, VanishingStepConvergesImmediately) {
    Constitutive c;
    const auto s = perturbed_state(16, 0.2, ModelKind::cahn_hilliard);
    PicardConfig cfg;
    cfg.tol = 1e-8;
    const auto [next, rep] = picard_step(s, c, 1e-8, cfg);
    EXPECT_TRUE(rep.converged);
    EXPECT_EQ(rep.iterations, 1);
}

TEST(Picard, EquilibriumIsFixedPoint) {
    Constitutive c;
    TorusGrid g(2, 16);
    const auto s = pack(Field::constant(g, 1.0), VectorField::zeros(g), Field::constant(g, 1.0), 0.2,
                        ModelKind::cahn_hilliard);
    const auto [next, rep] = picard_step(s, c, 0.01, PicardConfig{});
    EXPECT_TRUE(rep.converged);
    EXPECT_EQ(rep.iterations, 1);
    for (double r : rep.ratios) EXPECT_LT(r, 1e-10);
    EXPECT_LT(max_diff(next.q, s.q), 1e-15);
}

TEST(Picard, ContractsAndSolvesImplicitEuler) {
    Constitutive c;
    for (auto model : {ModelKind::cahn_hilliard, ModelKind::allen_cahn}) {
        const auto s = perturbed_state(32, 0.2, model);
        const double dt = acoustic_dt(s.eps, s.grid(), c, 0.5, max_abs(primitives(s).first));
        PicardConfig cfg;
        const auto [next, rep] = picard_step(s, c, dt, cfg);
        ASSERT_TRUE(rep.converged) << to_string(model);
        EXPECT_FALSE(rep.ratios.empty());
        for (double r : rep.ratios) EXPECT_LT(r, 1.0);
        EXPECT_LT(rep.residual, 10.0 * cfg.tol) << to_string(model);
    }
}
