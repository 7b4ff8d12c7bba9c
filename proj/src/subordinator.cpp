#include "subdiff/subordinator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "subdiff/errors.hpp"

namespace subdiff {

void StableParams::validate() const {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw ParameterError("stable index alpha must lie in (0, 1), got " + std::to_string(alpha));
    if (!(scale > 0.0) || !std::isfinite(scale))
        throw ParameterError("subordinator scale must be positive, got " + std::to_string(scale));
}

double StableParams::laplace_exponent(double lambda) const {
    return std::pow(scale * lambda, alpha);
}

void OperationalGrid::validate() const {
    if (!(step > 0.0) || !std::isfinite(step))
        throw ParameterError("operational step must be positive, got " + std::to_string(step));
    if (n_steps < 1) throw ParameterError("operational grid needs at least one step");
}

double sample_positive_stable(double alpha, RandomStream& rng) {
    const double v = rng.uniform(0.0, std::numbers::pi);
    const double w = rng.exponential();
    const double a = std::sin(alpha * v) / std::pow(std::sin(v), 1.0 / alpha);
    const double b = std::pow(std::sin((1.0 - alpha) * v) / w, (1.0 - alpha) / alpha);
    return a * b;
}

void extend_subordinator(SubordinatorPath& path, const StableParams& params,
                         std::size_t extra_steps, RandomStream& rng) {
    if (path.n_steps() < 1) throw ParameterError("cannot extend a path without a step size");
    const double step = path.step();
    const double increment_scale = params.scale * std::pow(step, 1.0 / params.alpha);
    const std::size_t start = path.tau.size();
    path.tau.reserve(start + extra_steps);
    path.d_values.reserve(start + extra_steps);
    double d = path.d_values.back();
    for (std::size_t k = 0; k < extra_steps; ++k) {
        d += increment_scale * sample_positive_stable(params.alpha, rng);
        path.tau.push_back(static_cast<double>(start + k) * step);
        path.d_values.push_back(d);
    }
}

SubordinatorPath simulate_subordinator(const StableParams& params, const OperationalGrid& grid,
                                       RandomStream& rng) {
    params.validate();
    grid.validate();
    SubordinatorPath path;
    path.tau = {0.0};
    path.d_values = {0.0};
    const double increment_scale = params.scale * std::pow(grid.step, 1.0 / params.alpha);
    path.tau.reserve(grid.n_steps + 1);
    path.d_values.reserve(grid.n_steps + 1);
    double d = 0.0;
    for (std::size_t k = 1; k <= grid.n_steps; ++k) {
        d += increment_scale * sample_positive_stable(params.alpha, rng);
        path.tau.push_back(static_cast<double>(k) * grid.step);
        path.d_values.push_back(d);
    }
    return path;
}

SubordinatorPath simulate_subordinator_covering(const StableParams& params, double step,
                                                double horizon, RandomStream& rng) {
    params.validate();
    if (!(horizon >= 0.0) || !std::isfinite(horizon))
        throw ParameterError("horizon must be finite and nonnegative");
    // E_T is of order (T/scale)^α; start a little above that and double as needed.
    const double typical = std::pow(std::max(horizon, 1e-12) / params.scale, params.alpha);
    const auto initial = static_cast<std::size_t>(std::ceil(2.0 * typical / step)) + 16;
    SubordinatorPath path = simulate_subordinator(params, OperationalGrid{step, initial}, rng);
    while (path.d_values.back() <= horizon) {
        extend_subordinator(path, params, path.n_steps(), rng);
    }
    return path;
}

InversePath invert_subordinator(const SubordinatorPath& path, std::span<const double> t_grid) {
    if (path.d_values.empty() || path.d_values.size() != path.tau.size())
        throw ParameterError("subordinator path is empty or misaligned");
    if (t_grid.empty()) throw ParameterError("time grid is empty");
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        if (!(t_grid[i] >= 0.0)) throw ParameterError("time grid must be nonnegative");
        if (i > 0 && t_grid[i] < t_grid[i - 1]) throw ParameterError("time grid must be sorted");
    }
    if (!(path.d_values.back() > t_grid.back()))
        throw InsufficientPathError("subordinator reaches " + std::to_string(path.d_values.back()) +
                                    " but the horizon is " + std::to_string(t_grid.back()) +
                                    "; extend the operational grid");

    InversePath inverse;
    inverse.t_grid.assign(t_grid.begin(), t_grid.end());
    inverse.e_values.resize(t_grid.size());
    std::size_t k = 0;
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        while (path.d_values[k] <= t_grid[i]) ++k;
        inverse.e_values[i] = path.tau[k];
    }
    return inverse;
}

std::vector<double> uniform_time_grid(double horizon, std::size_t n_steps) {
    if (!(horizon > 0.0) || !std::isfinite(horizon))
        throw ParameterError("horizon must be positive, got " + std::to_string(horizon));
    if (n_steps < 1) throw ParameterError("time grid needs at least one step");
    std::vector<double> grid(n_steps + 1);
    for (std::size_t i = 0; i < n_steps; ++i)
        grid[i] = horizon * static_cast<double>(i) / static_cast<double>(n_steps);
    grid[n_steps] = horizon;
    return grid;
}

InversePath simulate_inverse(const StableParams& params, double op_step,
                             std::span<const double> t_grid, RandomStream& rng) {
    if (!(op_step > 0.0)) throw ParameterError("operational step must be positive");
    const auto path = simulate_subordinator_covering(params, op_step, t_grid.back(), rng);
    return invert_subordinator(path, t_grid);
}

double inverse_moment(int n, double t, double alpha) {
    if (n < 1) throw ParameterError("moment order must be >= 1");
    if (!(t >= 0.0) || !std::isfinite(t)) throw ParameterError("t must be finite and >= 0");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ParameterError("alpha must lie in (0, 1)");
    const double na = static_cast<double>(n) * alpha;
    // n! t^{nα} / Γ(1+nα), in log space to stay finite for large n
    return std::exp(std::lgamma(n + 1.0) + na * std::log(t) - std::lgamma(1.0 + na));
}

}  // namespace subdiff
