#pragma once

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "subdiff/forward_sde.hpp"
#include "subdiff/levy_noise.hpp"
#include "subdiff/subordinator.hpp"

namespace subdiff {

struct SimulationSetup {
    StableParams stable;
    double horizon = 1.0;
    std::size_t n_steps = 100;
    double op_step = 1e-3;
    double x0 = 0.0;
    StopRule stop;

    void validate() const;
};

struct PerformanceEstimate {
    double mean = 0.0;
    /// sample standard deviation / √n_paths
    double std_error = 0.0;
    std::size_t n_paths = 0;
    std::size_t excluded = 0;
    Sense sense = Sense::maximize;
};

/// Noise for path `index`: inverse subordinator then ΔB and jumps, all from
/// RandomStream::for_path(master_seed, index).
NoiseBundle path_noise(const SimulationSetup& setup, const JumpMeasureSpec& jumps, std::uint64_t master_seed,
                       std::size_t index);

/// Σ f Δt + Σ g ΔE + h(X_last) along a simulated path (left endpoints).
double path_performance(const ControlProblem& problem, const ControlledPath& path, const NoiseBundle& bundle);

/// Paths that diverge are excluded and counted; more than 1% exclusions throws DivergenceError.
PerformanceEstimate estimate_performance(const ControlProblem& problem, const ControlSignal& control,
                                         std::size_t n_paths, std::uint64_t master_seed,
                                         const SimulationSetup& setup);

struct ComparisonRow {
    std::string control_id;
    double mean = 0.0;
    double std_error = 0.0;
    /// mean of J(alternative) − J(base) over common noise
    double paired_diff = 0.0;
    double paired_std_error = 0.0;
    /// BASE, PASS (base better by ≥ z paired stderrs), FAIL (alternative better
    /// by ≥ z paired stderrs) or INCONCLUSIVE.
    std::string verdict;
};

struct ComparisonReport {
    std::vector<ComparisonRow> rows;
    std::size_t n_paths = 0;
    std::size_t excluded = 0;
    Sense sense = Sense::maximize;

    bool all_pass() const;
};

ComparisonReport compare_controls(const ControlProblem& problem, const ControlSignal& base,
                                  const std::vector<std::pair<std::string, ControlSignal>>& alternatives,
                                  std::size_t n_paths, std::uint64_t master_seed, const SimulationSetup& setup,
                                  double z = 2.0);

/// control_id,mean,stderr,paired_diff_vs_base,paired_stderr,verdict
void write_report_csv(std::ostream& out, const ComparisonReport& report);

}  // namespace subdiff
