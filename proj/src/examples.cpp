#include "subdiff/examples.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "subdiff/errors.hpp"
#include "subdiff/random_stream.hpp"
#include "subdiff/subordinator.hpp"

namespace subdiff {

void RegulatorConfig::validate() const {
    if (!std::isfinite(lambda)) throw ParameterError("lambda must be finite");
    if (!std::isfinite(sigma)) throw ParameterError("sigma must be finite");
    if (!std::isfinite(x0)) throw ParameterError("x0 must be finite");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ParameterError("alpha must lie in (0, 1)");
    if (!(T > 0.0) || !std::isfinite(T)) throw ParameterError("T must be positive");
}

double ConsumptionConfig::b_drift() const {
    return -(sigma * sigma + theta * theta * jump_spec.second_moment()) / 2.0;
}

void ConsumptionConfig::validate() const {
    if (delta == 0.0 || !std::isfinite(delta)) throw ParameterError("delta must be finite and nonzero");
    if (!std::isfinite(sigma) || !std::isfinite(theta)) throw ParameterError("sigma and theta must be finite");
    if (!(x0 > 0.0) || !std::isfinite(x0)) throw ParameterError("x0 must be positive");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ParameterError("alpha must lie in (0, 1)");
    if (!(T > 0.0) || !std::isfinite(T)) throw ParameterError("T must be positive");
}

double regulator_gain(double e_t, double e_terminal, double lambda) {
    const double a = 2.0 * lambda;
    if (std::abs(a) == 1.0) return a;  // equilibria of the Riccati equation
    const double th = std::tanh(e_t - e_terminal);
    const double den = 1.0 - a * th;
    // den > 0 on the whole backward interval until the Riccati pole is reached
    if (!(den > 1e-12 * (1.0 + std::abs(a))))
        throw GainSingularityError("regulator gain is at or beyond its Riccati pole", e_t);
    return (a - th) / den;
}

namespace {

// ∫ y ν(dy) for the identity jump coefficient; zero for the symmetric normal law.
double first_moment(const JumpMeasureSpec& spec) {
    if (spec.law() == JumpMeasureSpec::Law::none || spec.law() == JumpMeasureSpec::Law::standard_normal)
        return 0.0;
    return spec.integrate([](double y) { return y; });
}

}  // namespace

ControlProblem regulator_problem(const RegulatorConfig& config) {
    config.validate();
    ControlProblem p;
    const double sigma = config.sigma;
    const double lambda = config.lambda;
    const double m1 = first_moment(config.jump_spec);
    p.b = [](double, double, double, double u) { return u; };
    p.sigma = [sigma](double, double, double, double) { return sigma; };
    p.gamma = [](double, double, double, double, double y) { return y; };
    p.gamma_compensator = [m1](double, double, double, double) { return m1; };
    p.g = [](double, double, double x, double u) { return (x * x + u * u) / 2.0; };
    p.h = [lambda](double x) { return lambda * x * x; };
    p.h_x = [lambda](double x) { return 2.0 * lambda * x; };
    p.jump_spec = config.jump_spec;
    p.lipschitz_K = 1.0;
    p.sense = Sense::minimize;
    p.coercive_hamiltonian = true;
    return p;
}

ControlSignal regulator_control(const RegulatorConfig& config) {
    config.validate();
    const double lambda = config.lambda;
    return ControlSignal::feedback(
        [lambda](const ControlContext& c) { return -regulator_gain(c.e, c.e_terminal, lambda) * c.x; });
}

Policy regulator_policy(const RegulatorConfig& config, const ControlledPath& path) {
    config.validate();
    if (path.size() == 0) throw ParameterError("empty path");
    const double e_terminal = path.e_values.back();
    std::vector<double> u(path.size());
    AdjointTriple adj;
    adj.p.resize(path.size());
    adj.q.resize(path.size());
    adj.r.reserve(path.size());
    for (std::size_t i = 0; i < path.size(); ++i) {
        const double h = regulator_gain(path.e_values[i], e_terminal, config.lambda);
        u[i] = -h * path.x_values[i];
        adj.p[i] = h * path.x_values[i];
        adj.q[i] = h * config.sigma;
        adj.r.push_back(JumpAdjoint::linear(h));
    }
    return Policy{ControlSignal::path(std::move(u)), std::move(adj)};
}

double consumption_gain(double t, double delta) {
    if (delta == 0.0) throw ParameterError("delta = 0 makes the consumption gain singular");
    return std::exp(std::exp(delta * t) / (2.0 * delta));
}

ControlProblem consumption_problem(const ConsumptionConfig& config) {
    config.validate();
    ControlProblem p;
    const double b = config.b_drift();
    const double sigma = config.sigma;
    const double theta = config.theta;
    const double delta = config.delta;
    p.mu = [](double, double, double, double u) { return -u; };
    p.b = [b](double, double, double x, double) { return b * x; };
    p.sigma = [sigma](double, double, double x, double) { return sigma * x; };
    p.gamma = [theta](double, double, double x, double, double z) { return theta * x * z; };
    if (config.jump_spec.law() != JumpMeasureSpec::Law::discrete)
        p.gamma_compensator = [](double, double, double, double) { return 0.0; };
    p.f = [delta](double t, double, double, double u) { return std::exp(-delta * t) * u * u; };
    p.jump_spec = config.jump_spec;
    p.lipschitz_K = std::max({std::abs(b), std::abs(sigma), std::abs(theta)});
    p.sense = Sense::maximize;
    return p;
}

ControlSignal consumption_control(const ConsumptionConfig& config) {
    config.validate();
    const double delta = config.delta;
    return ControlSignal::feedback([delta](const ControlContext& c) {
        return std::exp(std::exp(delta * c.t) / (2.0 * delta) + delta * c.t) * c.x / 2.0;
    });
}

StopRule consumption_stop() {
    return [](double, double x) { return x <= 0.0; };
}

Policy consumption_policy(const ConsumptionConfig& config, const ControlledPath& path) {
    config.validate();
    std::vector<double> u(path.size());
    AdjointTriple adj;
    adj.p.resize(path.size());
    adj.q.resize(path.size());
    adj.r.reserve(path.size());
    for (std::size_t i = 0; i < path.size(); ++i) {
        const double t = path.t_grid[i];
        const double x = path.x_values[i];
        const double h = consumption_gain(t, config.delta);
        u[i] = std::exp(std::exp(config.delta * t) / (2.0 * config.delta) + config.delta * t) * x / 2.0;
        adj.p[i] = h * x;
        adj.q[i] = h * x * config.sigma;
        adj.r.push_back(JumpAdjoint::linear(h * x * config.theta));
    }
    return Policy{ControlSignal::path(std::move(u)), std::move(adj)};
}

std::vector<std::pair<std::string, ControlSignal>> regulator_perturbations(const RegulatorConfig& config,
                                                                           bool include_extra) {
    config.validate();
    const double lambda = config.lambda;
    auto optimal = [lambda](const ControlContext& c) { return -regulator_gain(c.e, c.e_terminal, lambda) * c.x; };
    std::vector<std::pair<std::string, ControlSignal>> out;
    const std::pair<const char*, double> shifts[] = {
        {"shift+0.1", 0.1}, {"shift-0.1", -0.1}, {"shift+0.5", 0.5}, {"shift-0.5", -0.5}};
    for (const auto& [id, eps] : shifts)
        out.emplace_back(id, ControlSignal::feedback([=](const ControlContext& c) { return optimal(c) + eps; }));
    out.emplace_back("scale0.75", ControlSignal::feedback([=](const ControlContext& c) { return 0.75 * optimal(c); }));
    out.emplace_back("scale1.25", ControlSignal::feedback([=](const ControlContext& c) { return 1.25 * optimal(c); }));
    if (include_extra) {
        const double half = config.T / 2.0;
        out.emplace_back("truncate_half", ControlSignal::feedback([=](const ControlContext& c) {
                             return c.t < half ? optimal(c) : 0.0;
                         }));
        out.emplace_back("zero", ControlSignal::constant(0.0));
    }
    return out;
}

Figure parse_figure(const std::string& name) {
    if (name == "fig2") return Figure::fig2;
    if (name == "fig3") return Figure::fig3;
    if (name == "fig4") return Figure::fig4;
    if (name == "fig5") return Figure::fig5;
    throw ParameterError("unknown figure '" + name + "' (expected fig2, fig3, fig4 or fig5)");
}

std::string figure_name(Figure which) {
    switch (which) {
        case Figure::fig2: return "fig2";
        case Figure::fig3: return "fig3";
        case Figure::fig4: return "fig4";
        case Figure::fig5: return "fig5";
    }
    return "fig2";
}

RegulatorConfig figure_regulator_preset(Figure which) {
    RegulatorConfig c;
    c.lambda = -0.5;
    c.sigma = 1.0;
    c.x0 = -0.01;
    switch (which) {
        case Figure::fig2: c.alpha = 0.9; break;
        case Figure::fig3: c.alpha = 0.7; break;
        case Figure::fig4: c.alpha = 0.5; break;
        case Figure::fig5: throw ParameterError("fig5 is the consumption example");
    }
    return c;
}

ConsumptionConfig figure_consumption_preset() {
    ConsumptionConfig c;
    c.delta = -0.001;
    c.sigma = 1.0;
    c.theta = 1.0;
    c.x0 = 1.0;
    c.alpha = 0.9;
    return c;
}

namespace {

FigureTable tabulate(Figure which, const ControlledPath& path, const NoiseBundle& bundle) {
    FigureTable table;
    table.which = which;
    table.t = path.t_grid;
    table.e = path.e_values;
    table.x = path.x_values;
    table.u_star = path.u_values;
    table.delta_e.assign(path.size(), 0.0);
    table.jump_counts.assign(path.size(), 0);
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
        table.delta_e[i] = bundle.delta_e[i];
        table.jump_counts[i] = bundle.jumps(i).size();
    }
    return table;
}

}  // namespace

FigureTable reproduce_figure(Figure which, std::uint64_t seed, std::size_t steps, double op_step) {
    RandomStream rng(seed);
    if (which == Figure::fig5) {
        const auto config = figure_consumption_preset();
        const auto grid = uniform_time_grid(config.T, steps);
        const auto inverse = simulate_inverse(StableParams{config.alpha, 1.0}, op_step, grid, rng);
        const auto bundle = sample_noise(inverse, config.jump_spec, rng);
        const auto path = simulate_forward(consumption_problem(config), consumption_control(config), bundle,
                                           config.x0, consumption_stop());
        auto table = tabulate(which, path, bundle);
        table.preset = {{"delta", config.delta}, {"sigma", config.sigma}, {"theta", config.theta},
                        {"x0", config.x0}, {"alpha", config.alpha}};
        return table;
    }
    const auto config = figure_regulator_preset(which);
    const auto grid = uniform_time_grid(config.T, steps);
    const auto inverse = simulate_inverse(StableParams{config.alpha, 1.0}, op_step, grid, rng);
    const auto bundle = sample_noise(inverse, config.jump_spec, rng);
    const auto path = simulate_forward(regulator_problem(config), regulator_control(config), bundle, config.x0);
    auto table = tabulate(which, path, bundle);
    table.preset = {{"lambda", config.lambda}, {"sigma", config.sigma}, {"x0", config.x0}, {"alpha", config.alpha}};
    return table;
}

double flat_fraction(const FigureTable& table) {
    if (table.rows() < 2) return 0.0;
    std::size_t flat = 0;
    for (std::size_t i = 0; i + 1 < table.rows(); ++i)
        if (table.u_star[i + 1] == table.u_star[i]) ++flat;
    return static_cast<double>(flat) / static_cast<double>(table.rows() - 1);
}

double consumption_identity_defect(const ConsumptionConfig& config, const FigureTable& table) {
    auto rel = [](double a, double b) {
        const double scale = std::max(std::abs(a), std::abs(b));
        return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
    };
    double worst = 0.0;
    for (std::size_t i = 0; i < table.rows(); ++i) {
        const double h = consumption_gain(table.t[i], config.delta);
        const double lead = 2.0 * std::exp(-config.delta * table.t[i]) * table.u_star[i];
        worst = std::max(worst, rel(h * table.x[i] * config.sigma, lead * config.sigma));
        worst = std::max(worst, rel(h * table.x[i] * config.theta, lead * config.theta));
    }
    return worst;
}

}  // namespace subdiff
