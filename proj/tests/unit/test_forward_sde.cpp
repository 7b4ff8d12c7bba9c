#include <doctest.h>

#include <cmath>
#include <vector>

#include "subdiff/errors.hpp"
#include "subdiff/forward_sde.hpp"

using namespace subdiff;

namespace {

NoiseBundle noise(std::uint64_t index, std::size_t steps, const JumpMeasureSpec& spec = JumpMeasureSpec::none(),
                  double alpha = 0.8, double op_step = 1e-3) {
    auto rng = RandomStream::for_path(21, index);
    const auto grid = uniform_time_grid(1.0, steps);
    return sample_noise(simulate_inverse({alpha, 1.0}, op_step, grid, rng), spec, rng);
}

Coefficient constant(double c) {
    return [c](double, double, double, double) { return c; };
}

SmoothFunction square() {
    SmoothFunction F;
    F.value = [](double, double, double x) { return x * x; };
    return F;
}

SmoothFunction identity() {
    SmoothFunction F;
    F.value = [](double, double, double x) { return x; };
    F.d_t1 = F.d_t2 = F.d_xx = [](double, double, double) { return 0.0; };
    F.d_x = [](double, double, double) { return 1.0; };
    return F;
}

}  // namespace

TEST_CASE("zero coefficients keep the state fixed") {
    const auto b = noise(0, 100, JumpMeasureSpec::standard_normal());
    ControlProblem p;
    p.jump_spec = JumpMeasureSpec::standard_normal();
    const auto path = simulate_forward(p, ControlSignal::constant(0.0), b, 1.7);
    REQUIRE(path.size() == 101);
    for (double x : path.x_values) CHECK(x == 1.7);
}

TEST_CASE("constant drift integrates real time") {
    const auto b = noise(1, 64);
    ControlProblem p;
    p.mu = constant(1.0);
    const auto path = simulate_forward(p, ControlSignal::constant(0.0), b, 0.0);
    for (std::size_t i = 0; i < path.size(); ++i) CHECK(path.x_values[i] == path.t_grid[i]);
    const auto shifted = simulate_forward(p, ControlSignal::constant(0.0), b, 2.5);
    for (std::size_t i = 0; i < path.size(); ++i)
        CHECK(shifted.x_values[i] == doctest::Approx(2.5 + path.t_grid[i]).epsilon(1e-14));
}

TEST_CASE("unit time-change drift integrates E") {
    const auto b = noise(2, 100);
    ControlProblem p;
    p.b = constant(1.0);
    const auto path = simulate_forward(p, ControlSignal::constant(0.0), b, 0.3);
    for (std::size_t i = 0; i < path.size(); ++i)
        CHECK(path.x_values[i] == doctest::Approx(0.3 + path.e_values[i] - path.e_values[0]).epsilon(1e-13));
}

TEST_CASE("stop rule ends the path after the triggering step") {
    const auto b = noise(3, 100);
    ControlProblem p;
    p.mu = constant(-1.0);
    const auto path = simulate_forward(p, ControlSignal::constant(0.0), b, 0.505,
                                       [](double, double x) { return x <= 0.0; });
    REQUIRE(path.stopped_at.has_value());
    CHECK(*path.stopped_at == 51);
    CHECK(path.size() == 52);
    CHECK(path.u_values.size() == 52);
    CHECK(path.x_values.back() <= 0.0);
    CHECK(path.x_values[50] > 0.0);
}

TEST_CASE("controls outside U and non-finite states are errors") {
    const auto b = noise(4, 20);
    ControlProblem p;
    p.control_set = {0.0, 1.0};
    CHECK_THROWS_AS(simulate_forward(p, ControlSignal::constant(2.0), b, 0.0), ParameterError);
    CHECK_THROWS_AS(simulate_forward(p, ControlSignal::constant(0.5), b, NAN), ParameterError);

    ControlProblem blow;
    blow.mu = [](double, double, double x, double) { return x * 1e200; };
    try {
        simulate_forward(blow, ControlSignal::constant(0.0), b, 1e200);
        FAIL("expected divergence");
    } catch (const DivergenceError& err) {
        CHECK(err.step() == 1);
    }
}

TEST_CASE("control paths and feedback see the documented context") {
    const auto b = noise(5, 10);
    ControlProblem p;
    p.mu = [](double, double, double, double u) { return u; };
    std::vector<double> u(11);
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = static_cast<double>(i);
    const auto path = simulate_forward(p, ControlSignal::path(u), b, 0.0);
    CHECK(path.u_values == u);
    CHECK_THROWS_AS(simulate_forward(p, ControlSignal::path({1.0, 2.0}), b, 0.0), ParameterError);

    double seen_terminal = -1.0;
    simulate_forward(p, ControlSignal::feedback([&](const ControlContext& c) {
                         seen_terminal = c.e_terminal;
                         return 0.0;
                     }),
                     b, 0.0);
    CHECK(seen_terminal == b.inverse.terminal());
}

TEST_CASE("generator examples") {
    ControlProblem p;
    const StatePoint s{0.2, 0.4, 1.3, 0.0};
    CHECK(generator_L1(identity(), p, s) == 0.0);

    p.sigma = constant(1.0);
    CHECK(generator_L2(square(), p, s) == doctest::Approx(1.0).epsilon(1e-6));

    ControlProblem jumps;
    jumps.gamma = [](double, double, double, double, double y) { return y; };
    jumps.jump_spec = JumpMeasureSpec::standard_normal();
    CHECK(generator_L2(square(), jumps, s) == doctest::Approx(1.0).epsilon(1e-6));

    SmoothFunction F;
    F.value = [](double t1, double t2, double x) { return t1 * t2 * x; };
    p.mu = constant(2.0);
    CHECK(generator_L1(F, p, s) == doctest::Approx(0.4 * 1.3 + 0.2 * 0.4 * 2.0).epsilon(1e-8));
}

TEST_CASE("Ito residual vanishes for algebraic identities") {
    ControlProblem p;
    p.b = [](double, double, double x, double) { return 0.3 * x; };
    p.sigma = [](double, double, double x, double) { return 1.0 + 0.1 * x; };
    for (int i = 0; i < 10; ++i) {
        const auto b = noise(30 + i, 100);
        const auto path = simulate_forward(p, ControlSignal::constant(0.0), b, 1.0);
        CHECK(std::abs(ito_residual(identity(), p, path, b)) <= 1e-12);

        SmoothFunction t1;
        t1.value = [](double t, double, double) { return t; };
        t1.d_t1 = [](double, double, double) { return 1.0; };
        CHECK(ito_residual(t1, p, path, b) == doctest::Approx(0.0).epsilon(1e-12));
    }

    ControlProblem jumpy = p;
    jumpy.jump_spec = JumpMeasureSpec::standard_normal(2.0);
    jumpy.gamma = [](double, double, double, double, double y) { return y; };
    const auto b = noise(40, 100, jumpy.jump_spec);
    const auto path = simulate_forward(jumpy, ControlSignal::constant(0.0), b, 1.0);
    CHECK(std::abs(ito_residual(identity(), jumpy, path, b)) <= 1e-10);
}

TEST_CASE("Euler error shrinks under refinement") {
    ControlProblem p;
    p.b = [](double, double, double x, double) { return x; };
    p.sigma = [](double, double, double x, double) { return 0.5 * x; };
    double err_coarse = 0.0, err_fine = 0.0;
    const int n_paths = 200;
    for (int i = 0; i < n_paths; ++i) {
        const auto ref = noise(100 + i, 400, JumpMeasureSpec::none(), 0.9, 1e-4);
        const double x_ref = simulate_forward(p, ControlSignal::constant(0.0), ref, 1.0).x_values.back();
        const auto fine = coarsen(ref, 4);
        const auto coarse = coarsen(ref, 8);
        const double xf = simulate_forward(p, ControlSignal::constant(0.0), fine, 1.0).x_values.back();
        const double xc = simulate_forward(p, ControlSignal::constant(0.0), coarse, 1.0).x_values.back();
        err_fine += (xf - x_ref) * (xf - x_ref);
        err_coarse += (xc - x_ref) * (xc - x_ref);
    }
    CHECK(err_fine < err_coarse);
}

TEST_CASE("Lipschitz coefficients keep nearby paths close") {
    const double K = 1.5;
    ControlProblem p;
    p.mu = [K](double, double, double x, double) { return K * std::sin(x); };
    p.b = [K](double, double, double x, double) { return K * std::cos(x); };
    p.sigma = constant(1.0);
    p.jump_spec = JumpMeasureSpec::standard_normal();
    p.gamma = [](double, double, double, double, double y) { return y; };
    p.lipschitz_K = K;
    for (int i = 0; i < 20; ++i) {
        const auto b = noise(200 + i, 200, p.jump_spec);
        const double x0 = 0.3, y0 = 0.35;
        const auto a = simulate_forward(p, ControlSignal::constant(0.0), b, x0);
        const auto c = simulate_forward(p, ControlSignal::constant(0.0), b, y0);
        double sup = 0.0;
        for (std::size_t k = 0; k < a.size(); ++k) sup = std::max(sup, std::abs(a.x_values[k] - c.x_values[k]));
        CHECK(sup <= std::abs(x0 - y0) * std::exp(K * (1.0 + b.inverse.terminal())) + 1e-12);
    }
}

TEST_CASE("terminal derivative defect") {
    ControlProblem p;
    p.h = [](double x) { return x * x; };
    p.h_x = [](double x) { return 2.0 * x; };
    const std::vector<double> xs{-2.0, 0.0, 1.5};
    CHECK(terminal_derivative_defect(p, xs) <= 1e-8);
    p.h_x = [](double x) { return x; };
    CHECK(terminal_derivative_defect(p, xs) == doctest::Approx(2.0).epsilon(1e-6));
}
