#include <doctest.h>

#include <cmath>
#include <vector>

#include "subdiff/errors.hpp"
#include "subdiff/examples.hpp"

using namespace subdiff;

namespace {

// h' = h² − 1 in s = e_t − e_T, integrated from s = 0 down to s_end with RK4.
double riccati_rk4(double lambda, double s_end, int steps = 20000) {
    double h = 2.0 * lambda;
    const double ds = s_end / steps;
    auto f = [](double v) { return v * v - 1.0; };
    for (int k = 0; k < steps; ++k) {
        const double k1 = f(h);
        const double k2 = f(h + 0.5 * ds * k1);
        const double k3 = f(h + 0.5 * ds * k2);
        const double k4 = f(h + ds * k3);
        h += ds * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0;
    }
    return h;
}

ControlledPath manual_path(std::vector<double> e, std::vector<double> x) {
    ControlledPath p;
    for (std::size_t i = 0; i < e.size(); ++i) p.t_grid.push_back(0.1 * i);
    p.e_values = std::move(e);
    p.x_values = std::move(x);
    p.u_values.assign(p.x_values.size(), 0.0);
    return p;
}

}  // namespace

TEST_CASE("regulator gain terminal value and the neutral case") {
    for (double lambda : {-2.0, -0.5, 0.0, 0.3, 1.0, 4.0}) CHECK(regulator_gain(1.7, 1.7, lambda) == 2.0 * lambda);
    RandomStream rng(1);
    for (int k = 0; k < 1000; ++k) {
        const double et = rng.uniform(0, 3);
        CHECK(regulator_gain(et, et + rng.uniform(0, 3), -0.5) == -1.0);
    }
}

TEST_CASE("regulator gain solves its Riccati equation") {
    const double step = 1e-4;
    for (double lambda : {1.0, 0.25, -0.3}) {
        for (double s = -2.0; s <= 0.0; s += 0.05) {
            const double h = regulator_gain(s, 0.0, lambda);
            const double dh = (regulator_gain(s + step, 0.0, lambda) - regulator_gain(s - step, 0.0, lambda)) /
                              (2.0 * step);
            CHECK(std::abs(dh - h * h + 1.0) <= 1e-6);
        }
        for (double s : {-0.5, -1.0, -2.0})
            CHECK(regulator_gain(s, 0.0, lambda) == doctest::Approx(riccati_rk4(lambda, s)).epsilon(1e-9));
    }
}

TEST_CASE("gain singularity is reported with its location") {
    const double s_star = std::atanh(-0.5);
    try {
        regulator_gain(1.0 + s_star, 1.0, -1.0);
        FAIL("expected a singular gain");
    } catch (const GainSingularityError& err) {
        CHECK(err.e_t() == doctest::Approx(1.0 + s_star));
    }
    CHECK(std::isfinite(regulator_gain(1.0 + s_star + 0.01, 1.0, -1.0)));
    CHECK_THROWS_AS(regulator_gain(1.0 + s_star - 0.01, 1.0, -1.0), GainSingularityError);
    CHECK_THROWS_AS(regulator_gain(0.0, 3.0, -0.75), GainSingularityError);
    CHECK(std::isfinite(regulator_gain(0.0, 30.0, -0.5)));
    CHECK(std::isfinite(regulator_gain(0.0, 30.0, 5.0)));
}

TEST_CASE("regulator policy examples") {
    RegulatorConfig config;
    config.lambda = 1.0;
    const auto terminal = manual_path({0.2, 0.5}, {1.0, 3.0});
    const auto policy = regulator_policy(config, terminal);
    ControlContext last{1, 0.1, 0.5, 3.0, 0.5};
    CHECK(policy.control.value(last) == doctest::Approx(-6.0).epsilon(1e-15));
    CHECK(policy.adjoint.p[1] == doctest::Approx(6.0).epsilon(1e-15));
    CHECK(policy.adjoint.q[1] == doctest::Approx(2.0 * config.sigma).epsilon(1e-15));
    CHECK(policy.adjoint.r[1](1.5) == doctest::Approx(3.0).epsilon(1e-15));
    CHECK(policy.adjoint.p[1] == terminal_adjoint(regulator_problem(config), 3.0));

    RegulatorConfig neutral;
    const auto path = manual_path({0.1, 0.3, 0.3, 0.9}, {0.5, -2.0, 0.0, 1.0});
    const auto p2 = regulator_policy(neutral, path);
    for (std::size_t i = 0; i < path.size(); ++i) {
        ControlContext c{i, path.t_grid[i], path.e_values[i], path.x_values[i], 0.9};
        CHECK(p2.control.value(c) == path.x_values[i]);
    }
    CHECK(p2.control.value(ControlContext{2, 0.2, 0.3, 0.0, 0.9}) == 0.0);
}

TEST_CASE("regulator feedback matches the policy along a simulated path") {
    RegulatorConfig config;
    config.lambda = 0.8;
    auto rng = RandomStream::for_path(3, 0);
    const auto grid = uniform_time_grid(1.0, 100);
    const auto bundle = sample_noise(simulate_inverse({0.9, 1.0}, 1e-3, grid, rng), config.jump_spec, rng);
    const auto path = simulate_forward(regulator_problem(config), regulator_control(config), bundle, config.x0);
    const auto policy = regulator_policy(config, path);
    for (std::size_t i = 0; i < path.size(); ++i) {
        ControlContext c{i, path.t_grid[i], path.e_values[i], path.x_values[i], path.e_values.back()};
        CHECK(policy.control.value(c) == path.u_values[i]);
        const auto opt = maximize_hamiltonian(regulator_problem(config), path.t_grid[i], path.e_values[i],
                                              path.x_values[i], policy.adjoint.at(i), Sense::minimize, 1e-10);
        CHECK(opt.u_star == doctest::Approx(path.u_values[i]).epsilon(1e-6).scale(1.0));
    }
}

TEST_CASE("consumption gain satisfies its ODE") {
    const double delta = -0.001, step = 1e-4;
    for (double t = 0.0; t <= 1.0; t += 0.05) {
        const double h = consumption_gain(t, delta);
        const double dh = (consumption_gain(t + step, delta) - consumption_gain(t - step, delta)) / (2 * step);
        CHECK(std::abs(dh / h - 0.5 * std::exp(delta * t)) <= 1e-6);
    }
    CHECK(consumption_gain(0.5, 2.0) == doctest::Approx(std::exp(std::exp(1.0) / 4.0)));
    CHECK_THROWS_AS(consumption_gain(0.5, 0.0), ParameterError);
    ConsumptionConfig bad;
    bad.delta = 0.0;
    CHECK_THROWS_AS(consumption_problem(bad), ParameterError);
    ConsumptionConfig broke;
    broke.x0 = 0.0;
    CHECK_THROWS_AS(broke.validate(), ParameterError);
}

TEST_CASE("consumption policy identities") {
    ConsumptionConfig config;
    config.delta = 0.7;
    config.sigma = 0.4;
    config.theta = 1.3;
    const auto path = manual_path({0.1, 0.2, 0.4, 0.4}, {2.0, 1.5, 0.0, 0.7});
    const auto policy = consumption_policy(config, path);
    for (std::size_t i = 0; i < path.size(); ++i) {
        const double t = path.t_grid[i];
        const double u = policy.control.value(ControlContext{i, t, path.e_values[i], path.x_values[i], 0.4});
        const double lead = 2.0 * std::exp(-config.delta * t) * u;
        CHECK(policy.adjoint.q[i] == doctest::Approx(lead * config.sigma).epsilon(1e-14));
        CHECK(policy.adjoint.r[i](2.0) == doctest::Approx(2.0 * lead * config.theta).epsilon(1e-14));
        CHECK(policy.adjoint.p[i] == doctest::Approx(consumption_gain(t, config.delta) * path.x_values[i]));
        if (path.x_values[i] == 0.0) CHECK(u == 0.0);
    }
}

TEST_CASE("consumption drift and dynamics") {
    ConsumptionConfig config;
    config.sigma = 0.5;
    config.theta = 2.0;
    CHECK(config.b_drift() == doctest::Approx(-(0.25 + 4.0) / 2.0));
    config.jump_spec = JumpMeasureSpec::discrete({1.0, -2.0}, {0.5, 0.25});
    CHECK(config.b_drift() == doctest::Approx(-(0.25 + 4.0 * 1.5) / 2.0));
}

TEST_CASE("figure presets") {
    const auto fig2 = reproduce_figure(Figure::fig2, 7, 100);
    REQUIRE(fig2.preset.size() == 4);
    CHECK(fig2.preset[0].second == -0.5);
    CHECK(fig2.preset[1].second == 1.0);
    CHECK(fig2.preset[2].second == -0.01);
    CHECK(fig2.preset[3].second == 0.9);
    CHECK(figure_regulator_preset(Figure::fig3).alpha == 0.7);
    CHECK(figure_regulator_preset(Figure::fig4).alpha == 0.5);
    const auto fig5 = reproduce_figure(Figure::fig5, 7, 100);
    const std::vector<double> expected{-0.001, 1.0, 1.0, 1.0, 0.9};
    REQUIRE(fig5.preset.size() == expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i) CHECK(fig5.preset[i].second == expected[i]);
    CHECK(parse_figure("fig4") == Figure::fig4);
    CHECK(figure_name(Figure::fig3) == "fig3");
    CHECK_THROWS_AS(parse_figure("fig6"), ParameterError);
}

TEST_CASE("figure tables are reproducible and well formed") {
    const auto a = reproduce_figure(Figure::fig3, 11, 200);
    const auto b = reproduce_figure(Figure::fig3, 11, 200);
    CHECK(a.u_star == b.u_star);
    CHECK(a.rows() == 201);
    CHECK(a.t.front() == 0.0);
    CHECK(a.t.back() == 1.0);
    CHECK(a.x.front() == -0.01);
}

TEST_CASE("regulator u* is flat exactly where nothing moves") {
    for (auto which : {Figure::fig2, Figure::fig3, Figure::fig4}) {
        const auto table = reproduce_figure(which, 5, 500);
        for (std::size_t i = 0; i + 1 < table.rows(); ++i) {
            if (table.delta_e[i] == 0.0) CHECK(table.u_star[i + 1] == table.u_star[i]);
            if (table.delta_e[i] > 0.0) CHECK(table.u_star[i + 1] != table.u_star[i]);
        }
    }
}

TEST_CASE("smaller alpha gives longer constant periods") {
    double f2 = 0.0, f4 = 0.0;
    for (std::uint64_t seed = 1; seed <= 30; ++seed) {
        f2 += flat_fraction(reproduce_figure(Figure::fig2, seed, 200));
        f4 += flat_fraction(reproduce_figure(Figure::fig4, seed, 200));
    }
    CHECK(f4 > f2);
}

TEST_CASE("consumption table identities and stopping") {
    const auto config = figure_consumption_preset();
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto table = reproduce_figure(Figure::fig5, seed, 300);
        CHECK(consumption_identity_defect(config, table) <= 1e-12);
        for (std::size_t i = 0; i + 1 < table.rows(); ++i) CHECK(table.x[i] > 0.0);
        if (table.rows() < 301) CHECK(table.x.back() <= 0.0);
    }
}

TEST_CASE("perturbation set") {
    RegulatorConfig config;
    const auto basic = regulator_perturbations(config, false);
    REQUIRE(basic.size() == 6);
    CHECK(basic[0].first == "shift+0.1");
    CHECK(basic[5].first == "scale1.25");
    const ControlContext c{0, 0.2, 0.3, 2.0, 1.0};
    CHECK(basic[0].second.value(c) == doctest::Approx(2.1));
    CHECK(basic[4].second.value(c) == doctest::Approx(1.5));
    const auto extra = regulator_perturbations(config, true);
    REQUIRE(extra.size() == 8);
    CHECK(extra[6].second.value(ControlContext{0, 0.7, 0.3, 2.0, 1.0}) == 0.0);
    CHECK(extra[7].second.value(c) == 0.0);
}
