#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "subdiff/random_stream.hpp"
#include "subdiff/subordinator.hpp"

namespace subdiff {

/// Finite Lévy measure ν restricted to {0 < |y| < c}, factored as
/// total_mass × (jump-size law conditioned on |y| < c).
class JumpMeasureSpec {
public:
    enum class Law { none, standard_normal, discrete };

    /// ν ≡ 0: no jumps.
    static JumpMeasureSpec none();
    /// ν = intensity · N(0, 1), truncated to |y| < c.
    static JumpMeasureSpec standard_normal(double intensity = 1.0,
                                           double truncation = std::numeric_limits<double>::infinity());
    /// ν = Σ weights[j] δ_{atoms[j]}, truncated to |y| < c. Weights are masses, not probabilities.
    static JumpMeasureSpec discrete(std::vector<double> atoms, std::vector<double> weights,
                                    double truncation = std::numeric_limits<double>::infinity());

    Law law() const { return law_; }
    double truncation() const { return truncation_; }
    /// ν({0 < |y| < c})
    double total_mass() const { return total_mass_; }
    /// ∫_{|y|<c} y² ν(dy)
    double second_moment() const { return second_moment_; }

    /// Jump size drawn from ν/total_mass (i.e. conditioned on |y| < c).
    double sample_size(RandomStream& rng) const;

    /// ∫_{|y|<c} fn(y) ν(dy). Gauss–Hermite (64 nodes) for the untruncated
    /// normal, Gauss–Legendre against the density for finite c, exact sum for
    /// atoms. Throws QuadratureError on a non-finite result.
    double integrate(const std::function<double(double)>& fn) const;

private:
    JumpMeasureSpec() = default;

    Law law_ = Law::none;
    double intensity_ = 0.0;
    double truncation_ = std::numeric_limits<double>::infinity();
    double total_mass_ = 0.0;
    double second_moment_ = 0.0;
    std::vector<double> atoms_;
    std::vector<double> weights_;
    std::vector<double> cumulative_;  // discrete sampler, over atoms inside the truncation
};

/// Driving noise on a real-time grid: ΔE, ΔB_E and the jump sizes of each step.
struct NoiseBundle {
    InversePath inverse;
    std::vector<double> delta_e;
    std::vector<double> delta_b;
    std::vector<double> jump_sizes;          // all jumps, step-major
    std::vector<std::size_t> jump_offsets;   // step i owns [offsets[i], offsets[i+1])

    std::size_t steps() const { return delta_e.size(); }
    std::span<const double> jumps(std::size_t i) const {
        return std::span<const double>(jump_sizes).subspan(jump_offsets[i],
                                                           jump_offsets[i + 1] - jump_offsets[i]);
    }
    double dt(std::size_t i) const { return inverse.t_grid[i + 1] - inverse.t_grid[i]; }
};

/// Per step: ΔB ~ N(0, ΔE), #jumps ~ Poisson(total_mass·ΔE), sizes i.i.d. from
/// the truncated law. Flat steps (ΔE = 0) draw nothing.
NoiseBundle sample_noise(const InversePath& inverse, const JumpMeasureSpec& spec, RandomStream& rng);

/// Same realization on a grid `factor` times coarser (increments summed, jumps merged).
NoiseBundle coarsen(const NoiseBundle& fine, std::size_t factor);

/// Σ_j γ(y_j) − ΔE·compensator for a step whose compensator ∫γ dν is known.
double compensated_sum(const std::function<double(double)>& gamma, std::span<const double> jumps,
                       double delta_e, double compensator);

/// Σ_j γ(y_j) − ΔE·∫_{|y|<c} γ(y) ν(dy), the step's Ñ(dE, dy) integral.
double compensated_integral(const std::function<double(double)>& gamma, std::span<const double> jumps,
                            double delta_e, const JumpMeasureSpec& spec);

}  // namespace subdiff
