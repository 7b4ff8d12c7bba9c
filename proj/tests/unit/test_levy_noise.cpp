#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "subdiff/errors.hpp"
#include "subdiff/levy_noise.hpp"
#include "subdiff/quadrature.hpp"

using namespace subdiff;

namespace {

double trapezoid(double lo, double hi, int n, const std::function<double(double)>& fn) {
    const double h = (hi - lo) / n;
    double s = 0.5 * (fn(lo) + fn(hi));
    for (int k = 1; k < n; ++k) s += fn(lo + k * h);
    return s * h;
}

double phi(double y) { return std::exp(-0.5 * y * y) / std::sqrt(2.0 * std::numbers::pi); }

NoiseBundle bundle_for(std::uint64_t seed, std::uint64_t index, double alpha, std::size_t steps,
                       const JumpMeasureSpec& spec, double horizon = 1.0) {
    auto rng = RandomStream::for_path(seed, index);
    const auto grid = uniform_time_grid(horizon, steps);
    const auto inv = simulate_inverse({alpha, 1.0}, 1e-3, grid, rng);
    return sample_noise(inv, spec, rng);
}

struct Stats {
    double mean, std_error;
};

Stats stats(const std::vector<double>& xs) {
    double m = 0.0;
    for (double x : xs) m += x;
    m /= xs.size();
    double v = 0.0;
    for (double x : xs) v += (x - m) * (x - m);
    return {m, std::sqrt(v / (xs.size() - 1) / xs.size())};
}

}  // namespace

TEST_CASE("Gauss rules integrate normal moments") {
    const auto& gh = gauss_hermite_normal(64);
    double w = 0.0, m2 = 0.0, m4 = 0.0;
    for (std::size_t i = 0; i < gh.nodes.size(); ++i) {
        w += gh.weights[i];
        m2 += gh.weights[i] * std::pow(gh.nodes[i], 2);
        m4 += gh.weights[i] * std::pow(gh.nodes[i], 4);
    }
    CHECK(w == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(m2 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(m4 == doctest::Approx(3.0).epsilon(1e-12));

    const auto& gl = gauss_legendre(64);
    double poly = 0.0;
    for (std::size_t i = 0; i < gl.nodes.size(); ++i) poly += gl.weights[i] * std::pow(gl.nodes[i], 6);
    CHECK(poly == doctest::Approx(2.0 / 7.0).epsilon(1e-12));
}

TEST_CASE("jump measure validation") {
    CHECK_THROWS_AS(JumpMeasureSpec::standard_normal(-1.0), ParameterError);
    CHECK_THROWS_AS(JumpMeasureSpec::standard_normal(1.0, 0.0), ParameterError);
    CHECK_THROWS_AS(JumpMeasureSpec::discrete({1.0}, {}), ParameterError);
    CHECK_THROWS_AS(JumpMeasureSpec::discrete({1.0}, {-0.5}), ParameterError);
    CHECK(JumpMeasureSpec::none().total_mass() == 0.0);
}

TEST_CASE("normal jump measure moments") {
    const auto full = JumpMeasureSpec::standard_normal(2.0);
    CHECK(full.total_mass() == 2.0);
    CHECK(full.second_moment() == 2.0);
    CHECK(full.integrate([](double y) { return y * y; }) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(full.integrate([](double y) { return y; }) == doctest::Approx(0.0).epsilon(1e-12));

    const double c = 1.3;
    const auto cut = JumpMeasureSpec::standard_normal(1.0, c);
    const double mass = trapezoid(-c, c, 200000, phi);
    const double second = trapezoid(-c, c, 200000, [](double y) { return y * y * phi(y); });
    CHECK(cut.total_mass() == doctest::Approx(mass).epsilon(1e-9));
    CHECK(cut.second_moment() == doctest::Approx(second).epsilon(1e-9));
    CHECK(cut.integrate([](double y) { return y * y; }) == doctest::Approx(second).epsilon(1e-9));
    CHECK(cut.integrate([](double y) { return std::cos(y); }) ==
          doctest::Approx(trapezoid(-c, c, 200000, [](double y) { return std::cos(y) * phi(y); })).epsilon(1e-9));
}

TEST_CASE("non-integrable jump function fails") {
    const auto spec = JumpMeasureSpec::standard_normal();
    CHECK_THROWS_AS(spec.integrate([](double) { return std::numeric_limits<double>::infinity(); }),
                    QuadratureError);
}

TEST_CASE("discrete jump measure") {
    const auto spec = JumpMeasureSpec::discrete({-1.0, 0.5, 3.0}, {0.2, 0.3, 0.5}, 2.0);
    CHECK(spec.total_mass() == doctest::Approx(0.5));
    CHECK(spec.second_moment() == doctest::Approx(0.2 + 0.3 * 0.25));
    CHECK(spec.integrate([](double y) { return y; }) == doctest::Approx(-0.2 + 0.15));
    RandomStream rng(3);
    int minus = 0;
    const int n = 20000;
    for (int k = 0; k < n; ++k) {
        const double y = spec.sample_size(rng);
        CHECK((y == -1.0 || y == 0.5));
        minus += y == -1.0;
    }
    CHECK(static_cast<double>(minus) / n == doctest::Approx(0.4).epsilon(0.05));
}

TEST_CASE("bundle invariants") {
    const auto spec = JumpMeasureSpec::standard_normal(3.0);
    for (int i = 0; i < 20; ++i) {
        const auto b = bundle_for(10, i, 0.6, 200, spec);
        double sum = 0.0;
        for (std::size_t k = 0; k < b.steps(); ++k) {
            CHECK(b.delta_e[k] >= 0.0);
            sum += b.delta_e[k];
            if (b.delta_e[k] == 0.0) {
                CHECK(b.delta_b[k] == 0.0);
                CHECK(b.jumps(k).empty());
            }
        }
        CHECK(sum == doctest::Approx(b.inverse.terminal() - b.inverse.e_values[0]).epsilon(1e-12));
    }
}

TEST_CASE("truncated jumps stay inside the cutoff") {
    const auto spec = JumpMeasureSpec::standard_normal(50.0, 0.4);
    const auto b = bundle_for(11, 0, 0.9, 100, spec);
    CHECK(!b.jump_sizes.empty());
    for (double y : b.jump_sizes) CHECK(std::abs(y) < 0.4);
}

TEST_CASE("expected jump count equals expected E_T") {
    const auto spec = JumpMeasureSpec::standard_normal();
    const int n_paths = 10000;
    std::vector<double> counts(n_paths);
    for (int i = 0; i < n_paths; ++i) counts[i] = bundle_for(12, i, 0.9, 100, spec).jump_sizes.size();
    const auto s = stats(counts);
    CHECK(std::abs(s.mean - 1.0 / std::tgamma(1.9)) <= 3.0 * s.std_error + 1e-3);
}

TEST_CASE("compensated integrals") {
    const auto spec = JumpMeasureSpec::standard_normal();
    const std::vector<double> jumps{0.5, -2.0};
    CHECK(compensated_integral([](double) { return 0.0; }, jumps, 0.3, spec) == 0.0);
    CHECK(compensated_integral([](double y) { return y; }, jumps, 0.3, spec) ==
          doctest::Approx(-1.5).epsilon(1e-12));
    CHECK(compensated_integral([](double y) { return y * y; }, jumps, 0.3, spec) ==
          doctest::Approx(4.25 - 0.3).epsilon(1e-12));
    CHECK(compensated_sum([](double y) { return 2 * y; }, jumps, 0.5, 4.0) == doctest::Approx(-3.0 - 2.0));
}

TEST_CASE("compensated jump integral is a martingale") {
    const auto spec = JumpMeasureSpec::standard_normal(2.0, 1.5);
    const int n_paths = 5000;
    std::vector<double> lin(n_paths), sq(n_paths);
    for (int i = 0; i < n_paths; ++i) {
        const auto b = bundle_for(13, i, 0.8, 50, spec);
        double a = 0.0, c = 0.0;
        for (std::size_t k = 0; k < b.steps(); ++k) {
            a += compensated_integral([](double y) { return y; }, b.jumps(k), b.delta_e[k], spec);
            c += compensated_integral([](double y) { return y * y; }, b.jumps(k), b.delta_e[k], spec);
        }
        lin[i] = a;
        sq[i] = c;
    }
    const auto s1 = stats(lin);
    const auto s2 = stats(sq);
    CHECK(std::abs(s1.mean) <= 3.0 * s1.std_error);
    CHECK(std::abs(s2.mean) <= 3.0 * s2.std_error);
}

TEST_CASE("normalized Brownian increments look Gaussian") {
    std::vector<double> z;
    for (int i = 0; i < 500; ++i) {
        const auto b = bundle_for(14, i, 0.7, 100, JumpMeasureSpec::none());
        for (std::size_t k = 0; k < b.steps(); ++k)
            if (b.delta_e[k] > 0.0) z.push_back(b.delta_b[k] / std::sqrt(b.delta_e[k]));
    }
    double m2 = 0.0, m4 = 0.0;
    for (double v : z) {
        m2 += v * v;
        m4 += v * v * v * v;
    }
    m2 /= z.size();
    m4 /= z.size();
    const double kurtosis = m4 / (m2 * m2);
    // sd of the sample kurtosis of a normal sample is about sqrt(24/n)
    CHECK(std::abs(kurtosis - 3.0) <= 4.0 * std::sqrt(24.0 / z.size()));
    CHECK(m2 == doctest::Approx(1.0).epsilon(4.0 * std::sqrt(2.0 / z.size())));
}

TEST_CASE("coarsening preserves the realization") {
    const auto spec = JumpMeasureSpec::standard_normal(2.0);
    const auto fine = bundle_for(15, 0, 0.9, 200, spec);
    const auto coarse = coarsen(fine, 4);
    REQUIRE(coarse.steps() == 50);
    CHECK(coarse.jump_sizes == fine.jump_sizes);
    double fb = 0.0, cb = 0.0;
    for (double v : fine.delta_b) fb += v;
    for (double v : coarse.delta_b) cb += v;
    CHECK(cb == doctest::Approx(fb).epsilon(1e-12));
    for (std::size_t i = 0; i <= coarse.steps(); ++i) {
        CHECK(coarse.inverse.t_grid[i] == fine.inverse.t_grid[4 * i]);
        CHECK(coarse.inverse.e_values[i] == fine.inverse.e_values[4 * i]);
    }
    CHECK_THROWS_AS(coarsen(fine, 3), ParameterError);
}
