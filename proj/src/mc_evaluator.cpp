#include "subdiff/mc_evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

#include "subdiff/csv.hpp"
#include "subdiff/errors.hpp"
#include "subdiff/parallel.hpp"
#include "subdiff/random_stream.hpp"

namespace subdiff {

void SimulationSetup::validate() const {
    stable.validate();
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ParameterError("horizon must be positive");
    if (n_steps < 1) throw ParameterError("n_steps must be >= 1");
    if (!(op_step > 0.0) || !std::isfinite(op_step)) throw ParameterError("operational step must be positive");
    if (!std::isfinite(x0)) throw ParameterError("x0 must be finite");
}

NoiseBundle path_noise(const SimulationSetup& setup, const JumpMeasureSpec& jumps, std::uint64_t master_seed,
                       std::size_t index) {
    auto rng = RandomStream::for_path(master_seed, index);
    const auto grid = uniform_time_grid(setup.horizon, setup.n_steps);
    const auto inverse = simulate_inverse(setup.stable, setup.op_step, grid, rng);
    return sample_noise(inverse, jumps, rng);
}

double path_performance(const ControlProblem& problem, const ControlledPath& path, const NoiseBundle& bundle) {
    const std::size_t last = path.size() - 1;
    // Separate sums: Δt values are exact grid differences, so Σ Δt reproduces T.
    double dt_part = 0.0;
    double de_part = 0.0;
    for (std::size_t i = 0; i < last; ++i) {
        const double t = path.t_grid[i];
        const double e = path.e_values[i];
        const double x = path.x_values[i];
        const double u = path.u_values[i];
        dt_part += problem.f(t, e, x, u) * (path.t_grid[i + 1] - t);
        if (bundle.delta_e[i] > 0.0) de_part += problem.g(t, e, x, u) * bundle.delta_e[i];
    }
    return dt_part + de_part + problem.h(path.x_values[last]);
}

namespace {

struct Moments {
    double mean = 0.0;
    double std_error = 0.0;
};

// Accumulates relative to the first value so identical samples give an exact
// mean and a zero standard error.
Moments moments(const std::vector<double>& values, const std::vector<char>& keep) {
    std::optional<double> shift;
    std::size_t n = 0;
    double sum = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!keep[i]) continue;
        if (!shift) shift = values[i];
        sum += values[i] - *shift;
        ++n;
    }
    if (n == 0) return {};
    const double centred = sum / static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!keep[i]) continue;
        const double d = values[i] - *shift - centred;
        ss += d * d;
    }
    Moments m;
    m.mean = *shift + centred;
    m.std_error = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n)) : 0.0;
    return m;
}

void check_exclusions(std::size_t excluded, std::size_t n_paths, std::size_t first_step) {
    if (static_cast<double>(excluded) > 0.01 * static_cast<double>(n_paths))
        throw DivergenceError(std::to_string(excluded) + " of " + std::to_string(n_paths) +
                                  " paths diverged (more than 1%)",
                              first_step);
}

}  // namespace

PerformanceEstimate estimate_performance(const ControlProblem& problem, const ControlSignal& control,
                                         std::size_t n_paths, std::uint64_t master_seed,
                                         const SimulationSetup& setup) {
    setup.validate();
    if (n_paths < 1) throw ParameterError("n_paths must be >= 1");
    std::vector<double> values(n_paths, 0.0);
    std::vector<char> keep(n_paths, 1);
    std::vector<std::size_t> failed_step(n_paths, 0);
    parallel_for(n_paths, [&](std::size_t i) {
        const auto bundle = path_noise(setup, problem.jump_spec, master_seed, i);
        try {
            const auto path = simulate_forward(problem, control, bundle, setup.x0, setup.stop);
            values[i] = path_performance(problem, path, bundle);
            if (!std::isfinite(values[i])) throw DivergenceError("performance is not finite", path.size() - 1);
        } catch (const DivergenceError& err) {
            keep[i] = 0;
            failed_step[i] = err.step();
        }
    });

    PerformanceEstimate est;
    est.sense = problem.sense;
    est.excluded = static_cast<std::size_t>(std::count(keep.begin(), keep.end(), 0));
    est.n_paths = n_paths - est.excluded;
    std::size_t first_step = 0;
    for (std::size_t i = 0; i < n_paths; ++i)
        if (!keep[i]) {
            first_step = failed_step[i];
            break;
        }
    check_exclusions(est.excluded, n_paths, first_step);
    const auto m = moments(values, keep);
    est.mean = m.mean;
    est.std_error = m.std_error;
    return est;
}

bool ComparisonReport::all_pass() const {
    return std::all_of(rows.begin(), rows.end(),
                       [](const ComparisonRow& r) { return r.verdict == "BASE" || r.verdict == "PASS"; });
}

ComparisonReport compare_controls(const ControlProblem& problem, const ControlSignal& base,
                                  const std::vector<std::pair<std::string, ControlSignal>>& alternatives,
                                  std::size_t n_paths, std::uint64_t master_seed, const SimulationSetup& setup,
                                  double z) {
    setup.validate();
    if (n_paths < 1) throw ParameterError("n_paths must be >= 1");
    if (!(z > 0.0)) throw ParameterError("z threshold must be positive");
    const std::size_t n_controls = alternatives.size() + 1;
    auto control_at = [&](std::size_t c) -> const ControlSignal& { return c == 0 ? base : alternatives[c - 1].second; };

    std::vector<std::vector<double>> values(n_controls, std::vector<double>(n_paths, 0.0));
    std::vector<char> keep(n_paths, 1);
    std::vector<std::size_t> failed_step(n_paths, 0);
    parallel_for(n_paths, [&](std::size_t i) {
        const auto bundle = path_noise(setup, problem.jump_spec, master_seed, i);
        for (std::size_t c = 0; c < n_controls; ++c) {
            try {
                const auto path = simulate_forward(problem, control_at(c), bundle, setup.x0, setup.stop);
                values[c][i] = path_performance(problem, path, bundle);
                if (!std::isfinite(values[c][i])) throw DivergenceError("performance is not finite", path.size() - 1);
            } catch (const DivergenceError& err) {
                keep[i] = 0;
                failed_step[i] = err.step();
                return;
            }
        }
    });

    ComparisonReport report;
    report.sense = problem.sense;
    report.excluded = static_cast<std::size_t>(std::count(keep.begin(), keep.end(), 0));
    report.n_paths = n_paths - report.excluded;
    std::size_t first_step = 0;
    for (std::size_t i = 0; i < n_paths; ++i)
        if (!keep[i]) {
            first_step = failed_step[i];
            break;
        }
    check_exclusions(report.excluded, n_paths, first_step);

    for (std::size_t c = 0; c < n_controls; ++c) {
        ComparisonRow row;
        row.control_id = c == 0 ? "base" : alternatives[c - 1].first;
        const auto m = moments(values[c], keep);
        row.mean = m.mean;
        row.std_error = m.std_error;
        if (c == 0) {
            row.verdict = "BASE";
        } else {
            std::vector<double> diff(n_paths);
            for (std::size_t i = 0; i < n_paths; ++i) diff[i] = values[c][i] - values[0][i];
            const auto d = moments(diff, keep);
            row.paired_diff = d.mean;
            row.paired_std_error = d.std_error;
            // Positive advantage means the base control is better in the problem's sense.
            const double advantage = problem.sense == Sense::minimize ? d.mean : -d.mean;
            const double bar = z * d.std_error;
            if (advantage > 0.0 && advantage >= bar) {
                row.verdict = "PASS";
            } else if (advantage < 0.0 && -advantage >= bar) {
                row.verdict = "FAIL";
            } else {
                row.verdict = "INCONCLUSIVE";
            }
        }
        report.rows.push_back(std::move(row));
    }
    return report;
}

void write_report_csv(std::ostream& out, const ComparisonReport& report) {
    const std::vector<std::string> header = {"control_id", "mean", "stderr", "paired_diff_vs_base",
                                             "paired_stderr", "verdict"};
    std::vector<std::vector<std::string>> rows;
    for (const auto& r : report.rows)
        rows.push_back({r.control_id, format_number(r.mean), format_number(r.std_error),
                        format_number(r.paired_diff), format_number(r.paired_std_error), r.verdict});
    write_csv(out, header, rows);
}

}  // namespace subdiff
