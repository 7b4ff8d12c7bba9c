#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "subdiff/forward_sde.hpp"
#include "subdiff/hamiltonian.hpp"
#include "subdiff/levy_noise.hpp"

namespace subdiff {

/// Linear regulator: dX = u dE + σ dB_E + ∫ y Ñ(dE, dy), cost ∫ (X² + u²)/2 dE + λ X(T)², minimized.
struct RegulatorConfig {
    double lambda = -0.5;
    double sigma = 1.0;
    double x0 = -0.01;
    double alpha = 0.9;
    double T = 1.0;
    JumpMeasureSpec jump_spec = JumpMeasureSpec::standard_normal();

    void validate() const;
};

/// Consumption: dX = −u dt + b X dE + σ X dB_E + ∫ θ X z Ñ(dE, dz), reward ∫ e^{−δt} u² dt, stopped at X ≤ 0.
struct ConsumptionConfig {
    double delta = -0.001;
    double sigma = 1.0;
    double theta = 1.0;
    double x0 = 1.0;
    double alpha = 0.9;
    double T = 1.0;
    JumpMeasureSpec jump_spec = JumpMeasureSpec::standard_normal();

    /// b = −(σ² + θ² ∫ z² ν(dz)) / 2
    double b_drift() const;
    void validate() const;
};

/// Solution of h' = h² − 1 (derivative in s = e_t − e_T) with h(0) = 2λ:
/// h = (2λ − tanh s) / (1 − 2λ tanh s). Throws GainSingularityError at or past
/// the pole where the denominator reaches 0 (only possible for 2λ < −1).
double regulator_gain(double e_t, double e_terminal, double lambda);

ControlProblem regulator_problem(const RegulatorConfig& config);
/// u*(t) = −h(E_t, E_T) X(t) as a feedback.
ControlSignal regulator_control(const RegulatorConfig& config);

struct Policy {
    ControlSignal control;
    AdjointTriple adjoint;
};

/// Along a path run to T: u* = −hX, p = hX, q = hσ, r(z) = h z.
Policy regulator_policy(const RegulatorConfig& config, const ControlledPath& path);

/// h(t) = exp(e^{δt} / (2δ)); ParameterError for δ = 0.
double consumption_gain(double t, double delta);
ControlProblem consumption_problem(const ConsumptionConfig& config);
/// u*(t) = exp(e^{δt}/(2δ) + δt) X(t) / 2
ControlSignal consumption_control(const ConsumptionConfig& config);
StopRule consumption_stop();

/// p = hX, q = hXσ, r(z) = hXθz.
Policy consumption_policy(const ConsumptionConfig& config, const ControlledPath& path);

/// Controls compared against u* in the optimality check, with report ids.
/// Shifts ±0.1, ±0.5, scalings ×0.75, ×1.25; optionally truncation after T/2 and the zero control.
std::vector<std::pair<std::string, ControlSignal>> regulator_perturbations(const RegulatorConfig& config,
                                                                           bool include_extra);

enum class Figure { fig2, fig3, fig4, fig5 };

Figure parse_figure(const std::string& name);
std::string figure_name(Figure which);
RegulatorConfig figure_regulator_preset(Figure which);
ConsumptionConfig figure_consumption_preset();

struct FigureTable {
    Figure which = Figure::fig2;
    std::vector<double> t;
    std::vector<double> e;
    std::vector<double> x;
    std::vector<double> u_star;
    std::vector<double> delta_e;
    std::vector<std::size_t> jump_counts;
    std::vector<std::pair<std::string, double>> preset;  // parameter echo

    std::size_t rows() const { return t.size(); }
};

/// One trajectory of u* with its time change on a uniform grid of `steps`
/// steps; randomness from RandomStream(seed).
FigureTable reproduce_figure(Figure which, std::uint64_t seed, std::size_t steps = 1000, double op_step = 1e-3);

/// Fraction of steps on which u* does not change.
double flat_fraction(const FigureTable& table);

/// Largest relative deviation of q = hXσ from 2e^{−δt}u*σ and of r(z)/z = hXθ
/// from 2e^{−δt}u*θ over the rows of a fig5 table.
double consumption_identity_defect(const ConsumptionConfig& config, const FigureTable& table);

}  // namespace subdiff
