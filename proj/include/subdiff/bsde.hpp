#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "subdiff/forward_sde.hpp"
#include "subdiff/levy_noise.hpp"

namespace subdiff {

/// dX = −μ(t, E_t, X, u) dE + u dB_E + ∫ h(t, z) Ñ(dE, dz),  X(T) = ξ.
struct BsdeSpec {
    /// μ(t, e, x, u)
    Coefficient driver = zero_coefficient();
    /// Declared L_μ: |μ(x1,u1) − μ(x2,u2)| ≤ L_μ(|x1−x2| + |u1−u2|).
    double lipschitz_mu = 0.0;
    /// ξ as a functional of the noise path.
    std::function<double(const NoiseBundle&)> terminal;
    /// h(t, z); empty means no jump term.
    std::function<double(double t, double z)> jump_kernel;
    JumpMeasureSpec jump_spec = JumpMeasureSpec::none();
    double horizon = 1.0;
    /// Path-level regressor W_t (one value per grid point); empty means B_{E_t}.
    std::function<std::vector<double>(const NoiseBundle&)> state_factor;

    void validate() const;
};

/// Least-squares predictor on monomials of the regressors (W_t, E_t, E_T).
/// Only regressors that vary across the ensemble enter the monomials
/// (`variables`); of those monomials, `columns` are the non-constant ones,
/// standardized by shift/scale. coef[0] is the intercept.
struct LinearFit {
    std::vector<std::size_t> variables;
    int degree = 0;
    std::vector<std::size_t> columns;
    std::vector<double> shift;
    std::vector<double> scale;
    std::vector<double> coef;
    double offset = 0.0;

    double evaluate(double w, double e, double e_terminal) const;
};

struct PicardIterate {
    int n = 0;
    std::vector<std::vector<double>> x_paths;  // per path, one value per grid point
    std::vector<std::vector<double>> u_paths;  // per path, one value per step
    /// Mean over paths of Σ_i (X_n − X_{n−1})²(t_i) ΔE_i.
    double diff_norm = 0.0;
    bool converged = false;
    /// Per time step: conditional-expectation fit for X and the u fit.
    std::vector<LinearFit> x_fits;
    std::vector<LinearFit> u_fits;
};

struct PicardResult {
    PicardIterate solution;
    std::vector<double> history;
};

/// Monomials of the given values of total degree 1..degree, in a fixed order.
std::vector<double> basis_features(std::span<const double> values, int degree);

/// Picard recursion with cross-path least-squares conditional expectations.
/// Stops when diff_norm ≤ tol; after max_iter returns the iterate with the
/// smallest diff_norm flagged unconverged. Throws RegressionRankError when a
/// time step's basis is rank deficient on the ensemble.
PicardResult picard_solve(const BsdeSpec& spec, std::span<const NoiseBundle> ensemble, int basis_degree,
                          int max_iter, double tol);

/// Applies a solved iterate's fits to a path it was not trained on.
std::vector<double> evaluate_solution(const PicardIterate& solution, const BsdeSpec& spec,
                                      const NoiseBundle& bundle);

struct PicardReport {
    std::vector<double> history;
    /// history[n+1] / history[n]; 0/0 counts as 0.
    std::vector<double> ratios;
    /// Last entry exactly 0, or every ratio from the third iterate on is < 1.
    bool success = false;
    /// history[n] ≤ history[n−1] for every n ≥ 3 (1-based).
    bool non_increasing_from_third = true;
};

PicardReport picard_diagnostics(std::span<const double> history);

/// Largest |Δμ| / (|Δx| + |Δu|) over random pairs; compare with lipschitz_mu.
double driver_lipschitz_ratio(const BsdeSpec& spec, std::size_t samples, std::uint64_t seed);

}  // namespace subdiff
