#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "subdiff/levy_noise.hpp"

namespace subdiff {

/// Arguments of every coefficient: real time, time change, state, control.
struct StatePoint {
    double t = 0.0;
    double e = 0.0;
    double x = 0.0;
    double u = 0.0;
};

using Coefficient = std::function<double(double t, double e, double x, double u)>;
using JumpCoefficient = std::function<double(double t, double e, double x, double u, double y)>;
using TerminalFunction = std::function<double(double x)>;
/// Fires on (t, X(t)) after a full step; the path ends at that index.
using StopRule = std::function<bool(double t, double x)>;

enum class Sense { maximize, minimize };

/// Closed interval U = [lo, hi]; either end may be infinite.
struct ControlSet {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();

    bool contains(double u) const { return u >= lo && u <= hi; }
    bool bounded() const { return std::isfinite(lo) && std::isfinite(hi); }
};

Coefficient zero_coefficient();
JumpCoefficient zero_jump_coefficient();
TerminalFunction zero_terminal();

/// dX = μ dt + b dE + σ dB_E + ∫ γ Ñ(dE, dy) with running costs f (dt), g (dE)
/// and terminal cost h. Unset coefficients are identically zero.
struct ControlProblem {
    Coefficient mu = zero_coefficient();
    Coefficient b = zero_coefficient();
    Coefficient sigma = zero_coefficient();
    JumpCoefficient gamma = zero_jump_coefficient();
    /// Closed form of ∫ γ(t,e,x,u,y) ν(dy) when known; quadrature otherwise.
    Coefficient gamma_compensator;
    Coefficient f = zero_coefficient();
    Coefficient g = zero_coefficient();
    TerminalFunction h = zero_terminal();
    TerminalFunction h_x = zero_terminal();
    ControlSet control_set;
    JumpMeasureSpec jump_spec = JumpMeasureSpec::none();
    /// Declared Lipschitz constant K of (b, σ, γ) in x.
    double lipschitz_K = 0.0;
    Sense sense = Sense::maximize;
    /// The Hamiltonian is known to be unimodal and coercive in u (needed to
    /// optimize over an unbounded U).
    bool coercive_hamiltonian = false;

    double compensator(const StatePoint& s) const;
    /// Σ_j γ(s, y_j) − ΔE ∫ γ(s, y) ν(dy) for one step.
    double jump_increment(const StatePoint& s, std::span<const double> jumps, double delta_e) const;
};

/// Largest |(h(x+ε) − h(x−ε))/2ε − h_x(x)| over the sample points.
double terminal_derivative_defect(const ControlProblem& problem, std::span<const double> xs,
                                  double eps = 1e-4);

/// Step's Ñ(dE, dy) integral of γ at a fixed state.
double compensated_integral(const JumpCoefficient& gamma, const StatePoint& state,
                            std::span<const double> jumps, double delta_e, const JumpMeasureSpec& spec);

/// What a feedback control may look at. e_terminal = E_T is legal because the
/// whole time change is known at time 0 in the enlarged filtration.
struct ControlContext {
    std::size_t step = 0;
    double t = 0.0;
    double e = 0.0;
    double x = 0.0;
    double e_terminal = 0.0;
};

class ControlSignal {
public:
    using Feedback = std::function<double(const ControlContext&)>;

    static ControlSignal feedback(Feedback fn);
    /// One value per grid point (n_steps + 1 values).
    static ControlSignal path(std::vector<double> values);
    static ControlSignal constant(double value);

    double value(const ControlContext& ctx) const;
    bool is_feedback() const { return std::holds_alternative<Feedback>(kind_); }

private:
    explicit ControlSignal(std::variant<Feedback, std::vector<double>> kind) : kind_(std::move(kind)) {}

    std::variant<Feedback, std::vector<double>> kind_;
};

struct ControlledPath {
    std::vector<double> t_grid;
    std::vector<double> e_values;
    std::vector<double> x_values;
    std::vector<double> u_values;
    std::optional<std::size_t> stopped_at;

    std::size_t size() const { return x_values.size(); }
};

/// Explicit Euler with coefficients frozen at the left endpoint (X(t−)).
/// Throws DivergenceError on a non-finite state and ParameterError when the
/// control leaves U.
ControlledPath simulate_forward(const ControlProblem& problem, const ControlSignal& control,
                                const NoiseBundle& bundle, double x0, const StopRule& stop = {});

/// F(t1, t2, x) with optional analytic partials; missing partials fall back to
/// central differences with step 1e-5·max(1, |argument|).
struct SmoothFunction {
    std::function<double(double, double, double)> value;
    std::function<double(double, double, double)> d_t1;
    std::function<double(double, double, double)> d_t2;
    std::function<double(double, double, double)> d_x;
    std::function<double(double, double, double)> d_xx;

    double operator()(double t1, double t2, double x) const { return value(t1, t2, x); }
    double partial_t1(double t1, double t2, double x) const;
    double partial_t2(double t1, double t2, double x) const;
    double partial_x(double t1, double t2, double x) const;
    double partial_xx(double t1, double t2, double x) const;
};

/// L1 F = F_{t1} + F_x μ
double generator_L1(const SmoothFunction& F, const ControlProblem& problem, const StatePoint& s);
/// L2 F = F_{t2} + F_x b + ½ F_xx σ² + ∫ [F(x+γ) − F(x) − F_x γ] ν(dy)
double generator_L2(const SmoothFunction& F, const ControlProblem& problem, const StatePoint& s);

/// F at the end of the path minus F at its start minus the discretized
/// right-hand side of the time-changed Itô formula, driven by the same noise.
double ito_residual(const SmoothFunction& F, const ControlProblem& problem, const ControlledPath& path,
                    const NoiseBundle& bundle);

}  // namespace subdiff
