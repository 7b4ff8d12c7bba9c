#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "subdiff/random_stream.hpp"

namespace subdiff {

/// One-sided stable subordinator with Laplace exponent φ(λ) = (scale·λ)^α,
/// i.e. E[exp(-λ D(t))] = exp(-t (scale·λ)^α).
///
/// This is the only Laplace exponent implemented; callers that need the
/// exponent itself go through laplace_exponent() so another subordinator
/// family can slot in behind the same interface.
struct StableParams {
    double alpha = 0.9;
    double scale = 1.0;

    void validate() const;
    double laplace_exponent(double lambda) const;
};

/// Uniform grid in operational time τ.
struct OperationalGrid {
    double step = 1e-3;
    std::size_t n_steps = 1000;

    void validate() const;
};

/// D sampled on the operational grid: d_values[k] = D(tau[k]).
struct SubordinatorPath {
    std::vector<double> tau;
    std::vector<double> d_values;

    double step() const { return tau.size() > 1 ? tau[1] - tau[0] : 0.0; }
    std::size_t n_steps() const { return tau.empty() ? 0 : tau.size() - 1; }
};

/// E_t = inf{τ > 0 : D(τ) > t} evaluated on a real-time grid.
struct InversePath {
    std::vector<double> t_grid;
    std::vector<double> e_values;

    std::size_t n_steps() const { return t_grid.empty() ? 0 : t_grid.size() - 1; }
    double horizon() const { return t_grid.back(); }
    double terminal() const { return e_values.back(); }
};

/// Positive α-stable draw S with E[exp(-λS)] = exp(-λ^α), via the
/// Chambers–Mallows–Stuck (Kanter) representation.
double sample_positive_stable(double alpha, RandomStream& rng);

SubordinatorPath simulate_subordinator(const StableParams& params, const OperationalGrid& grid,
                                       RandomStream& rng);

/// Appends `extra_steps` increments to an existing path, continuing the same stream.
void extend_subordinator(SubordinatorPath& path, const StableParams& params,
                         std::size_t extra_steps, RandomStream& rng);

/// Simulates D on a grid of the given step, doubling the number of steps until
/// D exceeds `horizon`.
SubordinatorPath simulate_subordinator_covering(const StableParams& params, double step,
                                                double horizon, RandomStream& rng);

/// First-passage inverse on the supplied real-time grid. Returns the left grid
/// point τ_k (smallest k with D(τ_k) > t), so plateaus of E are exact.
/// Throws InsufficientPathError when D does not exceed max(t_grid).
InversePath invert_subordinator(const SubordinatorPath& path, std::span<const double> t_grid);

/// Uniform real-time grid 0 = t_0 < ... < t_n = horizon (last point set exactly).
std::vector<double> uniform_time_grid(double horizon, std::size_t n_steps);

/// Covering simulation followed by inversion on t_grid.
InversePath simulate_inverse(const StableParams& params, double op_step,
                             std::span<const double> t_grid, RandomStream& rng);

/// E[E_t^n] = n! t^{nα} / Γ(1 + nα) for the standard (scale 1) stable subordinator.
double inverse_moment(int n, double t, double alpha);

}  // namespace subdiff
