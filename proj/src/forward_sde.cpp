#include "subdiff/forward_sde.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "subdiff/errors.hpp"

namespace subdiff {

Coefficient zero_coefficient() {
    return [](double, double, double, double) { return 0.0; };
}

JumpCoefficient zero_jump_coefficient() {
    return [](double, double, double, double, double) { return 0.0; };
}

TerminalFunction zero_terminal() {
    return [](double) { return 0.0; };
}

double ControlProblem::compensator(const StatePoint& s) const {
    if (gamma_compensator) return gamma_compensator(s.t, s.e, s.x, s.u);
    return jump_spec.integrate([&](double y) { return gamma(s.t, s.e, s.x, s.u, y); });
}

double ControlProblem::jump_increment(const StatePoint& s, std::span<const double> jumps,
                                      double delta_e) const {
    if (jumps.empty() && delta_e == 0.0) return 0.0;
    const double comp = delta_e > 0.0 ? compensator(s) : 0.0;
    return compensated_sum([&](double y) { return gamma(s.t, s.e, s.x, s.u, y); }, jumps, delta_e, comp);
}

double terminal_derivative_defect(const ControlProblem& problem, std::span<const double> xs, double eps) {
    double worst = 0.0;
    for (double x : xs) {
        const double fd = (problem.h(x + eps) - problem.h(x - eps)) / (2.0 * eps);
        worst = std::max(worst, std::abs(fd - problem.h_x(x)));
    }
    return worst;
}

double compensated_integral(const JumpCoefficient& gamma, const StatePoint& state,
                            std::span<const double> jumps, double delta_e, const JumpMeasureSpec& spec) {
    return compensated_integral([&](double y) { return gamma(state.t, state.e, state.x, state.u, y); },
                                jumps, delta_e, spec);
}

ControlSignal ControlSignal::feedback(Feedback fn) {
    if (!fn) throw ParameterError("feedback control must be callable");
    return ControlSignal(std::move(fn));
}

ControlSignal ControlSignal::path(std::vector<double> values) {
    if (values.empty()) throw ParameterError("control path must not be empty");
    return ControlSignal(std::move(values));
}

ControlSignal ControlSignal::constant(double value) {
    return feedback([value](const ControlContext&) { return value; });
}

double ControlSignal::value(const ControlContext& ctx) const {
    if (const auto* fn = std::get_if<Feedback>(&kind_)) return (*fn)(ctx);
    const auto& values = std::get<std::vector<double>>(kind_);
    if (ctx.step >= values.size())
        throw ParameterError("control path has " + std::to_string(values.size()) +
                             " values, step " + std::to_string(ctx.step) + " requested");
    return values[ctx.step];
}

ControlledPath simulate_forward(const ControlProblem& problem, const ControlSignal& control,
                                const NoiseBundle& bundle, double x0, const StopRule& stop) {
    if (!std::isfinite(x0)) throw ParameterError("initial state must be finite");
    const auto& grid = bundle.inverse.t_grid;
    const auto& e = bundle.inverse.e_values;
    const std::size_t n = bundle.steps();
    if (grid.size() != n + 1 || e.size() != n + 1 || bundle.delta_b.size() != n ||
        bundle.jump_offsets.size() != n + 1)
        throw ParameterError("noise bundle arrays are not aligned with its grid");

    const double e_terminal = e.back();
    auto control_at = [&](std::size_t i, double x) {
        const double u = control.value(ControlContext{i, grid[i], e[i], x, e_terminal});
        if (!problem.control_set.contains(u))
            throw ParameterError("control value " + std::to_string(u) + " outside U at step " +
                                 std::to_string(i));
        return u;
    };

    ControlledPath path;
    path.t_grid.reserve(n + 1);
    path.e_values.reserve(n + 1);
    path.x_values.reserve(n + 1);
    path.u_values.reserve(n + 1);

    double x = x0;
    path.t_grid.push_back(grid[0]);
    path.e_values.push_back(e[0]);
    path.x_values.push_back(x);
    for (std::size_t i = 0; i < n; ++i) {
        const double u = control_at(i, x);
        path.u_values.push_back(u);
        const StatePoint s{grid[i], e[i], x, u};
        const double de = bundle.delta_e[i];
        double dx = problem.mu(s.t, s.e, s.x, s.u) * bundle.dt(i);
        if (de > 0.0) {
            dx += problem.b(s.t, s.e, s.x, s.u) * de + problem.sigma(s.t, s.e, s.x, s.u) * bundle.delta_b[i];
            dx += problem.jump_increment(s, bundle.jumps(i), de);
        }
        x += dx;
        if (!std::isfinite(x)) throw DivergenceError("forward state is not finite", i + 1);
        path.t_grid.push_back(grid[i + 1]);
        path.e_values.push_back(e[i + 1]);
        path.x_values.push_back(x);
        if (stop && stop(grid[i + 1], x)) {
            path.stopped_at = i + 1;
            break;
        }
    }
    path.u_values.push_back(control_at(path.x_values.size() - 1, x));
    return path;
}

namespace {

double fd_step(double at) { return 1e-5 * std::max(1.0, std::abs(at)); }

}  // namespace

double SmoothFunction::partial_t1(double t1, double t2, double x) const {
    if (d_t1) return d_t1(t1, t2, x);
    const double h = fd_step(t1);
    return (value(t1 + h, t2, x) - value(t1 - h, t2, x)) / (2.0 * h);
}

double SmoothFunction::partial_t2(double t1, double t2, double x) const {
    if (d_t2) return d_t2(t1, t2, x);
    const double h = fd_step(t2);
    return (value(t1, t2 + h, x) - value(t1, t2 - h, x)) / (2.0 * h);
}

double SmoothFunction::partial_x(double t1, double t2, double x) const {
    if (d_x) return d_x(t1, t2, x);
    const double h = fd_step(x);
    return (value(t1, t2, x + h) - value(t1, t2, x - h)) / (2.0 * h);
}

double SmoothFunction::partial_xx(double t1, double t2, double x) const {
    if (d_xx) return d_xx(t1, t2, x);
    const double h = fd_step(x);
    return (value(t1, t2, x + h) - 2.0 * value(t1, t2, x) + value(t1, t2, x - h)) / (h * h);
}

double generator_L1(const SmoothFunction& F, const ControlProblem& problem, const StatePoint& s) {
    return F.partial_t1(s.t, s.e, s.x) + F.partial_x(s.t, s.e, s.x) * problem.mu(s.t, s.e, s.x, s.u);
}

double generator_L2(const SmoothFunction& F, const ControlProblem& problem, const StatePoint& s) {
    const double fx = F.partial_x(s.t, s.e, s.x);
    const double sig = problem.sigma(s.t, s.e, s.x, s.u);
    double out = F.partial_t2(s.t, s.e, s.x) + fx * problem.b(s.t, s.e, s.x, s.u) +
                 0.5 * F.partial_xx(s.t, s.e, s.x) * sig * sig;
    if (problem.jump_spec.total_mass() > 0.0) {
        const double f0 = F(s.t, s.e, s.x);
        out += problem.jump_spec.integrate([&](double y) {
            const double g = problem.gamma(s.t, s.e, s.x, s.u, y);
            return F(s.t, s.e, s.x + g) - f0 - fx * g;
        });
    }
    return out;
}

double ito_residual(const SmoothFunction& F, const ControlProblem& problem, const ControlledPath& path,
                    const NoiseBundle& bundle) {
    const std::size_t last = path.size() - 1;
    if (last > bundle.steps()) throw ParameterError("path is longer than its noise bundle");
    double rhs = 0.0;
    for (std::size_t i = 0; i < last; ++i) {
        const StatePoint s{path.t_grid[i], path.e_values[i], path.x_values[i], path.u_values[i]};
        const double de = bundle.delta_e[i];
        rhs += generator_L1(F, problem, s) * bundle.dt(i);
        if (de > 0.0) {
            rhs += generator_L2(F, problem, s) * de;
            rhs += F.partial_x(s.t, s.e, s.x) * problem.sigma(s.t, s.e, s.x, s.u) * bundle.delta_b[i];
            if (problem.jump_spec.total_mass() > 0.0) {
                const double f0 = F(s.t, s.e, s.x);
                auto jump_gain = [&](double y) {
                    return F(s.t, s.e, s.x + problem.gamma(s.t, s.e, s.x, s.u, y)) - f0;
                };
                rhs += compensated_integral(jump_gain, bundle.jumps(i), de, problem.jump_spec);
            }
        }
    }
    const double start = F(path.t_grid[0], path.e_values[0], path.x_values[0]);
    const double end = F(path.t_grid[last], path.e_values[last], path.x_values[last]);
    return end - start - rhs;
}

}  // namespace subdiff
