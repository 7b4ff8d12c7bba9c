#include <doctest.h>

#include <cmath>
#include <vector>

#include "subdiff/errors.hpp"
#include "subdiff/examples.hpp"
#include "subdiff/hamiltonian.hpp"

using namespace subdiff;

namespace {

ControlProblem regulator() {
    RegulatorConfig config;
    return regulator_problem(config);
}

}  // namespace

TEST_CASE("regulator Hamiltonian values") {
    const auto p = regulator();
    CHECK(hamiltonian_simple(p, {0.0, 0.0, 1.0, 0.0}, Adjoint{}) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(hamiltonian_simple(p, {0.0, 0.0, 0.0, 0.0}, Adjoint{0.0, 1.0, JumpAdjoint::zero()}) ==
          doctest::Approx(1.0).epsilon(1e-15));
    CHECK(hamiltonian_simple(p, {0.0, 0.0, 2.0, 3.0}, Adjoint{0.5, 0.0, JumpAdjoint::zero()}) ==
          doctest::Approx(6.5 + 1.5).epsilon(1e-15));
}

TEST_CASE("jump term integrates gamma times r") {
    ControlProblem p;
    p.gamma = [](double, double, double, double, double z) { return z; };
    p.jump_spec = JumpMeasureSpec::standard_normal();
    const Adjoint adj{0.0, 0.0, JumpAdjoint::linear(1.0)};
    CHECK(hamiltonian_simple(p, {}, adj) == doctest::Approx(1.0).epsilon(1e-12));
    const Adjoint cubic{0.0, 0.0, JumpAdjoint::polynomial({0.0, 0.0, 0.0, 1.0})};
    CHECK(hamiltonian_simple(p, {}, cubic) == doctest::Approx(3.0).epsilon(1e-12));
    const Adjoint closed{0.0, 0.0, JumpAdjoint::closed_form([](double z) { return 2.0 * z; })};
    CHECK(hamiltonian_simple(p, {}, closed) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("general Hamiltonian reduces on flat periods") {
    auto p = consumption_problem(ConsumptionConfig{});
    const StatePoint s{0.3, 0.2, 1.1, 0.7};
    const Adjoint adj{1.4, 0.3, JumpAdjoint::linear(0.5)};
    const double flat = hamiltonian_general(p, s, adj, 0.0);
    CHECK(flat == doctest::Approx(1.4 * -0.7 + std::exp(0.001 * 0.3) * 0.49).epsilon(1e-14));
    CHECK_THROWS_AS(hamiltonian_general(p, s, adj, -1.0), ParameterError);
}

TEST_CASE("general and simple Hamiltonians agree without dt terms") {
    RandomStream rng(8);
    ConsumptionConfig config;
    for (int k = 0; k < 200; ++k) {
        auto p = consumption_problem(config);
        p.mu = zero_coefficient();
        p.f = zero_coefficient();
        const StatePoint s{rng.uniform(), rng.uniform(0, 2), rng.uniform(-3, 3), rng.uniform(-3, 3)};
        const Adjoint adj{rng.uniform(-5, 5), rng.uniform(-5, 5), JumpAdjoint::linear(rng.uniform(-2, 2))};
        const double simple = hamiltonian_simple(p, s, adj);
        CHECK(hamiltonian_general(p, s, adj, 1.0) == doctest::Approx(simple).epsilon(1e-14));
    }
}

TEST_CASE("consumption Hamiltonian is stationary at the closed-form control") {
    const ConsumptionConfig config;
    const auto p = consumption_problem(config);
    for (double t : {0.0, 0.5, 1.0}) {
        for (double pv : {0.5, 2.0}) {
            const double u = pv * std::exp(config.delta * t) / 2.0;
            const Adjoint adj{pv, 0.0, JumpAdjoint::zero()};
            auto H = [&](double v) { return hamiltonian_general(p, {t, 0.1, 1.0, v}, adj, 0.0); };
            const double h = 1e-5;
            CHECK(std::abs((H(u + h) - H(u - h)) / (2 * h)) <= 1e-8);
            CHECK(H(u) == doctest::Approx(-pv * u + std::exp(-config.delta * t) * u * u).epsilon(1e-14));
        }
    }
}

TEST_CASE("regulator optimum is minus p") {
    const auto p = regulator();
    const auto res = maximize_hamiltonian(p, 0.0, 0.0, 0.3, Adjoint{2.0, 0.0, JumpAdjoint::zero()}, Sense::minimize);
    CHECK(res.u_star == doctest::Approx(-2.0).epsilon(1e-7));
    RandomStream rng(12);
    for (int k = 0; k < 100; ++k) {
        const double pv = rng.uniform(-10, 10);
        const auto r = maximize_hamiltonian(p, 0.2, 0.1, rng.uniform(-1, 1),
                                            Adjoint{pv, rng.uniform(-1, 1), JumpAdjoint::linear(0.3)},
                                            Sense::minimize, 1e-9);
        CHECK(std::abs(r.u_star + pv) <= 1e-6);
    }
}

TEST_CASE("scalar optimizer examples") {
    const auto lin = optimize_scalar([](double u) { return 2.0 * u; }, {0.0, 1.0}, Sense::maximize, 1e-10, false);
    CHECK(lin.u_star == 1.0);
    const auto quad =
        optimize_scalar([](double u) { return -(u - 3) * (u - 3); }, {0.0, 10.0}, Sense::maximize, 1e-10, false);
    CHECK(quad.u_star == doctest::Approx(3.0).epsilon(1e-8));
    CHECK(std::abs(quad.value) <= 1e-12);
    const auto flat = optimize_scalar([](double) { return 1.0; }, {-1.0, 1.0}, Sense::maximize, 1e-10, false);
    CHECK(flat.u_star == -1.0);
    const auto point = optimize_scalar([](double u) { return u; }, {2.0, 2.0}, Sense::minimize, 1e-10, false);
    CHECK(point.u_star == 2.0);
}

TEST_CASE("positive scaling does not move the optimizer") {
    RandomStream rng(4);
    for (int k = 0; k < 50; ++k) {
        const double a = rng.uniform(-4, 4), b = rng.uniform(0.1, 3.0), scale = rng.uniform(0.01, 100.0);
        auto f = [&](double u) { return -b * (u - a) * (u - a) + std::sin(u) * 0.01; };
        const ControlSet set{-5.0, 5.0};
        const auto r1 = optimize_scalar(f, set, Sense::maximize, 1e-10, false);
        const auto r2 = optimize_scalar([&](double u) { return scale * f(u); }, set, Sense::maximize, 1e-10, false);
        CHECK(std::abs(r1.u_star - r2.u_star) <= 1e-7);
    }
}

TEST_CASE("unbounded sets need a coercive Hamiltonian") {
    CHECK_THROWS_AS(optimize_scalar([](double u) { return u * u; }, {}, Sense::minimize, 1e-8, false),
                    OptimizerDivergedError);
    CHECK_THROWS_AS(optimize_scalar([](double u) { return u; }, {}, Sense::maximize, 1e-8, true),
                    OptimizerDivergedError);
    const auto far = optimize_scalar([](double u) { return (u - 1e4) * (u - 1e4); }, {}, Sense::minimize, 1e-8, true);
    CHECK(far.u_star == doctest::Approx(1e4).epsilon(1e-10));
    auto p = regulator();
    p.coercive_hamiltonian = false;
    CHECK_THROWS_AS(maximize_hamiltonian(p, 0, 0, 0, Adjoint{}, Sense::minimize), OptimizerDivergedError);
}

TEST_CASE("terminal adjoint") {
    RegulatorConfig config;
    CHECK(terminal_adjoint(regulator_problem(config), 2.0) == -2.0);
    config.lambda = 0.75;
    CHECK(terminal_adjoint(regulator_problem(config), -1.0) == -1.5);
    ControlProblem constant_cost;
    constant_cost.h = [](double) { return 4.0; };
    CHECK(terminal_adjoint(constant_cost, 3.0) == 0.0);
    CHECK(terminal_adjoint(consumption_problem(ConsumptionConfig{}), 5.0) == 0.0);
}

TEST_CASE("concavity diagnostic") {
    const auto p = regulator();
    const std::vector<double> xs{-1.0, -0.5, 0.0, 0.5, 1.0};
    CHECK(hamiltonian_concavity_defect(p, 0, 0, Adjoint{}, xs, Sense::minimize) == 0.0);
    ControlProblem convex;
    convex.g = [](double, double, double x, double u) { return x * x - u * u; };
    convex.control_set = {-1.0, 1.0};
    CHECK(hamiltonian_concavity_defect(convex, 0, 0, Adjoint{}, xs, Sense::maximize) ==
          doctest::Approx(2.0).epsilon(1e-6));
}
