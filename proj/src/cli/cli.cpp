#include "subdiff/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "subdiff/bsde.hpp"
#include "subdiff/csv.hpp"
#include "subdiff/errors.hpp"
#include "subdiff/examples.hpp"
#include "subdiff/forward_sde.hpp"
#include "subdiff/levy_noise.hpp"
#include "subdiff/mc_evaluator.hpp"
#include "subdiff/parallel.hpp"
#include "subdiff/random_stream.hpp"
#include "subdiff/subordinator.hpp"
#include "svg.hpp"

namespace subdiff::cli {

namespace {

namespace fs = std::filesystem;
using Rows = std::vector<std::vector<std::string>>;

std::string fmt(const char* pattern, double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), pattern, value);
    return buf;
}

class Output {
public:
    explicit Output(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

    void text(const std::string& name, const std::string& content) const {
        const auto path = dir_ / name;
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + path.string());
        out << content;
        std::cout << "wrote " << path.string() << '\n';
    }

    void table(const std::string& name, const std::vector<std::string>& header, const Rows& rows) const {
        std::ostringstream out;
        write_csv(out, header, rows);
        text(name, out.str());
    }

private:
    fs::path dir_;
};

struct MeanError {
    double mean = 0.0;
    double std_error = 0.0;
};

MeanError mean_error(const std::vector<double>& v) {
    if (v.empty()) return {};
    const double shift = v.front();
    double sum = 0.0;
    for (double x : v) sum += x - shift;
    const double centred = sum / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - shift - centred) * (x - shift - centred);
    const double n = static_cast<double>(v.size());
    return {shift + centred, v.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0};
}

void require_positive(double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ParameterError(std::string(name) + " must be positive");
}

void require_count(std::size_t v, const char* name) {
    if (v < 1) throw ParameterError(std::string(name) + " must be >= 1");
}

class Command {
public:
    virtual ~Command() = default;

    void register_common(CLI::App* app) {
        app_ = app;
        app->configurable();
        app->add_option("--seed", seed_, "master seed")->capture_default_str();
        app->add_option("--out", out_, "output directory")->capture_default_str();
        app->add_flag("--plot", plot_, "also write SVG plots");
        app->add_flag("--check", check_, "run the acceptance check for this command (exit 4 on failure)");
    }

    CLI::App* app() const { return app_; }
    const std::string& out_dir() const { return out_; }
    bool check_requested() const { return check_; }

    virtual void validate() const = 0;
    /// Returns false when --check was requested and failed.
    virtual bool execute(const Output& out) = 0;

protected:
    CLI::App* app_ = nullptr;
    std::uint64_t seed_ = 1;
    std::string out_ = "subdiff-out";
    bool plot_ = false;
    bool check_ = false;
};

bool report_check(bool ok, const std::string& what) {
    std::cout << "check " << (ok ? "PASS" : "FAIL") << ": " << what << '\n';
    return ok;
}

// subordinator simulate|moments

class SubordinatorCommand final : public Command {
public:
    explicit SubordinatorCommand(CLI::App& root) {
        auto* app = root.add_subcommand("subordinator", "simulate the inverse stable subordinator or its moments");
        register_common(app);
        app->add_option("mode", mode_, "simulate | moments")->required()->check(CLI::IsMember({"simulate", "moments"}));
        app->add_option("--alpha", alpha_, "stable index in (0,1)")->capture_default_str();
        app->add_option("--scale", scale_, "subordinator scale")->capture_default_str();
        app->add_option("--t", t_, "time at which moments are taken")->capture_default_str();
        app->add_option("--n", n_, "moment order")->capture_default_str();
        app->add_option("--paths", paths_, "Monte Carlo paths (0: 10 for simulate, none for moments)")
            ->capture_default_str();
        app->add_option("--steps", steps_, "real-time grid steps")->capture_default_str();
        app->add_option("--T", horizon_, "horizon")->capture_default_str();
        app->add_option("--op-step", op_step_, "operational time step")->capture_default_str();
    }

    void validate() const override {
        StableParams{alpha_, scale_}.validate();
        require_positive(op_step_, "op-step");
        if (mode_ == "moments") {
            if (n_ < 1) throw ParameterError("moment order must be >= 1");
            require_positive(t_, "t");
            if (check_ && paths_ < 2) throw ParameterError("--check on moments needs --paths >= 2");
        } else {
            require_positive(horizon_, "T");
            require_count(steps_, "steps");
        }
    }

    bool execute(const Output& out) override { return mode_ == "moments" ? moments(out) : simulate(out); }

private:
    bool moments(const Output& out) {
        const StableParams params{alpha_, scale_};
        // D(τ) = scale·D₁(τ) in law, so E_t = E¹_{t/scale}.
        const double exact = inverse_moment(n_, t_ / scale_, alpha_);
        std::cout << fmt("%.4f", exact) << '\n';
        Rows rows;
        bool ok = true;
        if (paths_ > 0) {
            std::vector<double> values(paths_);
            const std::vector<double> grid = {0.0, t_};
            parallel_for(paths_, [&](std::size_t i) {
                auto rng = RandomStream::for_path(seed_, i);
                const auto inverse = simulate_inverse(params, op_step_, grid, rng);
                values[i] = std::pow(inverse.terminal(), n_);
            });
            const auto m = mean_error(values);
            std::cout << "monte carlo " << fmt("%.4f", m.mean) << " +/- " << fmt("%.4f", m.std_error) << " ("
                      << paths_ << " paths)\n";
            rows.push_back({std::to_string(n_), format_number(t_), format_number(alpha_), format_number(exact),
                            format_number(m.mean), format_number(m.std_error)});
            if (check_) ok = report_check(std::abs(m.mean - exact) <= 3.0 * m.std_error, "moment within 3 stderr");
        } else {
            rows.push_back({std::to_string(n_), format_number(t_), format_number(alpha_), format_number(exact), "", ""});
        }
        out.table("moments.csv", {"n", "t", "alpha", "exact", "mc_mean", "mc_stderr"}, rows);
        return ok;
    }

    bool simulate(const Output& out) {
        const StableParams params{alpha_, scale_};
        const std::size_t paths = paths_ == 0 ? 10 : paths_;
        const auto grid = uniform_time_grid(horizon_, steps_);
        std::vector<InversePath> inverses(paths);
        parallel_for(paths, [&](std::size_t i) {
            auto rng = RandomStream::for_path(seed_, i);
            inverses[i] = simulate_inverse(params, op_step_, grid, rng);
        });
        Rows rows;
        bool monotone = true;
        for (std::size_t p = 0; p < paths; ++p) {
            for (std::size_t i = 0; i < grid.size(); ++i) {
                rows.push_back({std::to_string(p), format_number(grid[i]), format_number(inverses[p].e_values[i])});
                if (i > 0 && inverses[p].e_values[i] < inverses[p].e_values[i - 1]) monotone = false;
            }
        }
        out.table("inverse.csv", {"path", "t", "E_t"}, rows);
        if (plot_) {
            std::vector<Series> series;
            for (std::size_t p = 0; p < std::min<std::size_t>(paths, 10); ++p)
                series.push_back({"", grid, inverses[p].e_values});
            out.text("inverse.svg", line_chart_svg("inverse stable subordinator, alpha=" + fmt("%g", alpha_), "t",
                                                   "E_t", series));
        }
        return check_ ? report_check(monotone, "E_t nondecreasing on every path") : true;
    }

    std::string mode_;
    double alpha_ = 0.9;
    double scale_ = 1.0;
    double t_ = 1.0;
    int n_ = 1;
    std::size_t paths_ = 0;
    std::size_t steps_ = 100;
    double horizon_ = 1.0;
    double op_step_ = 1e-3;
};

// sde: dX = mu X dt + b X dE + sigma dB_E + theta ∫ y Ñ(dE, dy)

class SdeCommand final : public Command {
public:
    explicit SdeCommand(CLI::App& root) {
        auto* app = root.add_subcommand("sde", "simulate dX = mu X dt + b X dE + sigma dB_E + theta y N~(dE,dy)");
        register_common(app);
        app->add_option("--alpha", alpha_, "stable index in (0,1)")->capture_default_str();
        app->add_option("--paths", paths_, "number of paths")->capture_default_str();
        app->add_option("--steps", steps_, "real-time grid steps")->capture_default_str();
        app->add_option("--T", horizon_, "horizon")->capture_default_str();
        app->add_option("--op-step", op_step_, "operational time step")->capture_default_str();
        app->add_option("--x0", x0_, "initial state")->capture_default_str();
        app->add_option("--mu", mu_, "dt drift rate")->capture_default_str();
        app->add_option("--b", b_, "dE drift rate")->capture_default_str();
        app->add_option("--sigma", sigma_, "diffusion coefficient")->capture_default_str();
        app->add_option("--theta", theta_, "jump coefficient")->capture_default_str();
        app->add_option("--jump-intensity", intensity_, "mass of the standard normal Levy measure (0: no jumps)")
            ->capture_default_str();
    }

    void validate() const override {
        StableParams{alpha_, 1.0}.validate();
        require_count(paths_, "paths");
        require_count(steps_, "steps");
        require_positive(horizon_, "T");
        require_positive(op_step_, "op-step");
        for (double v : {x0_, mu_, b_, sigma_, theta_})
            if (!std::isfinite(v)) throw ParameterError("SDE coefficients must be finite");
        if (!(intensity_ >= 0.0) || !std::isfinite(intensity_)) throw ParameterError("jump-intensity must be >= 0");
    }

    bool execute(const Output& out) override {
        ControlProblem problem;
        const double mu = mu_, b = b_, sigma = sigma_, theta = theta_;
        problem.mu = [mu](double, double, double x, double) { return mu * x; };
        problem.b = [b](double, double, double x, double) { return b * x; };
        problem.sigma = [sigma](double, double, double, double) { return sigma; };
        problem.gamma = [theta](double, double, double, double, double y) { return theta * y; };
        problem.gamma_compensator = [](double, double, double, double) { return 0.0; };
        problem.jump_spec = intensity_ > 0.0 ? JumpMeasureSpec::standard_normal(intensity_) : JumpMeasureSpec::none();

        const auto grid = uniform_time_grid(horizon_, steps_);
        std::vector<ControlledPath> paths(paths_);
        parallel_for(paths_, [&](std::size_t i) {
            auto rng = RandomStream::for_path(seed_, i);
            const auto inverse = simulate_inverse(StableParams{alpha_, 1.0}, op_step_, grid, rng);
            const auto bundle = sample_noise(inverse, problem.jump_spec, rng);
            paths[i] = simulate_forward(problem, ControlSignal::constant(0.0), bundle, x0_);
        });
        Rows rows;
        for (std::size_t p = 0; p < paths_; ++p)
            for (std::size_t i = 0; i < paths[p].size(); ++i)
                rows.push_back({std::to_string(p), format_number(paths[p].t_grid[i]),
                                format_number(paths[p].e_values[i]), format_number(paths[p].x_values[i])});
        out.table("sde.csv", {"path", "t", "E_t", "X"}, rows);
        if (plot_) {
            std::vector<Series> series;
            for (std::size_t p = 0; p < std::min<std::size_t>(paths_, 10); ++p)
                series.push_back({"", paths[p].t_grid, paths[p].x_values});
            out.text("sde.svg", line_chart_svg("time-changed SDE, alpha=" + fmt("%g", alpha_), "t", "X(t)", series));
        }
        return true;
    }

private:
    double alpha_ = 0.9;
    std::size_t paths_ = 1;
    std::size_t steps_ = 1000;
    double horizon_ = 1.0;
    double op_step_ = 1e-3;
    double x0_ = 0.0;
    double mu_ = 0.0;
    double b_ = 0.0;
    double sigma_ = 1.0;
    double theta_ = 1.0;
    double intensity_ = 0.0;
};

// ito-check: F = x² under dX = sigma dB_E, residual at N and 2N steps on shared noise

class ItoCheckCommand final : public Command {
public:
    explicit ItoCheckCommand(CLI::App& root) {
        auto* app = root.add_subcommand("ito-check", "Ito formula residual for F=x^2 at two grid resolutions");
        register_common(app);
        app->add_option("--alpha", alpha_, "stable index in (0,1)")->capture_default_str();
        app->add_option("--paths", paths_, "number of paths")->capture_default_str();
        app->add_option("--steps", steps_, "coarse grid steps (the fine grid has twice as many)")
            ->capture_default_str();
        app->add_option("--T", horizon_, "horizon")->capture_default_str();
        app->add_option("--op-step", op_step_, "operational time step")->capture_default_str();
        app->add_option("--sigma", sigma_, "diffusion coefficient")->capture_default_str();
        app->add_option("--x0", x0_, "initial state")->capture_default_str();
        app->add_option("--min-ratio", min_ratio_, "required RMS reduction when the step is halved")
            ->capture_default_str();
    }

    void validate() const override {
        StableParams{alpha_, 1.0}.validate();
        require_count(paths_, "paths");
        require_count(steps_, "steps");
        require_positive(horizon_, "T");
        require_positive(op_step_, "op-step");
        if (!std::isfinite(sigma_) || !std::isfinite(x0_)) throw ParameterError("sigma and x0 must be finite");
    }

    bool execute(const Output& out) override {
        ControlProblem problem;
        const double sigma = sigma_;
        problem.sigma = [sigma](double, double, double, double) { return sigma; };
        SmoothFunction square;
        square.value = [](double, double, double x) { return x * x; };
        square.d_t1 = [](double, double, double) { return 0.0; };
        square.d_t2 = [](double, double, double) { return 0.0; };
        square.d_x = [](double, double, double x) { return 2.0 * x; };
        square.d_xx = [](double, double, double) { return 2.0; };

        const auto grid = uniform_time_grid(horizon_, 2 * steps_);
        std::vector<double> coarse(paths_), fine(paths_);
        parallel_for(paths_, [&](std::size_t i) {
            auto rng = RandomStream::for_path(seed_, i);
            const auto inverse = simulate_inverse(StableParams{alpha_, 1.0}, op_step_, grid, rng);
            const auto fine_noise = sample_noise(inverse, JumpMeasureSpec::none(), rng);
            const auto coarse_noise = coarsen(fine_noise, 2);
            const auto control = ControlSignal::constant(0.0);
            fine[i] = ito_residual(square, problem, simulate_forward(problem, control, fine_noise, x0_), fine_noise);
            coarse[i] =
                ito_residual(square, problem, simulate_forward(problem, control, coarse_noise, x0_), coarse_noise);
        });
        auto rms = [](const std::vector<double>& v) {
            double s = 0.0;
            for (double x : v) s += x * x;
            return std::sqrt(s / static_cast<double>(v.size()));
        };
        const double rms_coarse = rms(coarse);
        const double rms_fine = rms(fine);
        const double ratio = rms_coarse / rms_fine;
        std::cout << "rms residual " << fmt("%.6g", rms_coarse) << " at " << steps_ << " steps, "
                  << fmt("%.6g", rms_fine) << " at " << 2 * steps_ << " steps, ratio " << fmt("%.4f", ratio) << '\n';
        out.table("ito.csv", {"steps", "rms_residual"},
                  {{std::to_string(steps_), format_number(rms_coarse)},
                   {std::to_string(2 * steps_), format_number(rms_fine)}});
        if (plot_) {
            std::vector<double> idx(paths_);
            for (std::size_t i = 0; i < paths_; ++i) idx[i] = static_cast<double>(i);
            out.text("ito.svg", line_chart_svg("Ito residual per path", "path", "residual",
                                               {{"N=" + std::to_string(steps_), idx, coarse},
                                                {"N=" + std::to_string(2 * steps_), idx, fine}}));
        }
        return check_ ? report_check(ratio >= min_ratio_, "RMS ratio " + fmt("%.4f", ratio) + " >= " +
                                                               fmt("%g", min_ratio_))
                      : true;
    }

private:
    double alpha_ = 0.9;
    std::size_t paths_ = 1000;
    std::size_t steps_ = 100;
    double horizon_ = 1.0;
    double op_step_ = 1e-4;
    double sigma_ = 1.0;
    double x0_ = 1.0;
    double min_ratio_ = 1.3;
};

// bsde constant|brownian|linear

class BsdeCommand final : public Command {
public:
    explicit BsdeCommand(CLI::App& root) {
        auto* app = root.add_subcommand("bsde", "Picard solve of a time-changed BSDE with a known answer");
        register_common(app);
        app->add_option("case", case_, "constant | brownian | linear")
            ->required()
            ->check(CLI::IsMember({"constant", "brownian", "linear"}));
        app->add_option("--alpha", alpha_, "stable index in (0,1)")->capture_default_str();
        app->add_option("--paths", paths_, "ensemble size")->capture_default_str();
        app->add_option("--steps", steps_, "real-time grid steps")->capture_default_str();
        app->add_option("--T", horizon_, "horizon")->capture_default_str();
        app->add_option("--op-step", op_step_, "operational time step")->capture_default_str();
        app->add_option("--degree", degree_, "regression basis degree")->capture_default_str();
        app->add_option("--max-iter", max_iter_, "Picard iteration cap")->capture_default_str();
        app->add_option("--tol", tol_, "stop when diff_norm <= tol")->capture_default_str();
        app->add_option("--a", a_, "driver slope for the linear case")->capture_default_str();
        app->add_option("--terminal", terminal_, "terminal constant C")->capture_default_str();
        app->add_option("--rms-tol", rms_tol_, "allowed RMS error against the exact solution")->capture_default_str();
    }

    void validate() const override {
        StableParams{alpha_, 1.0}.validate();
        require_count(paths_, "paths");
        require_count(steps_, "steps");
        require_positive(horizon_, "T");
        require_positive(op_step_, "op-step");
        if (degree_ < 0) throw ParameterError("degree must be >= 0");
        if (max_iter_ < 1) throw ParameterError("max-iter must be >= 1");
        if (!(tol_ >= 0.0)) throw ParameterError("tol must be >= 0");
        if (!std::isfinite(a_) || !std::isfinite(terminal_)) throw ParameterError("a and terminal must be finite");
    }

    bool execute(const Output& out) override {
        const auto grid = uniform_time_grid(horizon_, steps_);
        std::vector<NoiseBundle> ensemble(paths_);
        parallel_for(paths_, [&](std::size_t i) {
            auto rng = RandomStream::for_path(seed_, i);
            const auto inverse = simulate_inverse(StableParams{alpha_, 1.0}, op_step_, grid, rng);
            ensemble[i] = sample_noise(inverse, JumpMeasureSpec::none(), rng);
        });

        BsdeSpec spec;
        spec.horizon = horizon_;
        const double c = terminal_;
        const double a = a_;
        if (case_ == "brownian") {
            spec.terminal = [](const NoiseBundle& b) {
                double s = 0.0;
                for (double v : b.delta_b) s += v;
                return s;
            };
        } else {
            spec.terminal = [c](const NoiseBundle&) { return c; };
        }
        if (case_ == "linear") {
            spec.driver = [a](double, double, double x, double) { return a * x; };
            spec.lipschitz_mu = std::abs(a);
        }

        const auto result = picard_solve(spec, ensemble, degree_, max_iter_, tol_);
        const auto report = picard_diagnostics(result.history);
        const auto& sol = result.solution;

        auto exact_x = [&](std::size_t p, std::size_t i) {
            const auto& b = ensemble[p];
            if (case_ == "brownian") {
                double s = 0.0;
                for (std::size_t k = 0; k < i; ++k) s += b.delta_b[k];
                return s;
            }
            if (case_ == "linear") return c * std::exp(a * (b.inverse.terminal() - b.inverse.e_values[i]));
            return c;
        };
        const double exact_u = case_ == "brownian" ? 1.0 : 0.0;

        Rows solution_rows;
        double x_ss = 0.0, u_ss = 0.0;
        for (std::size_t i = 0; i <= steps_; ++i) {
            double x_mean = 0.0, x_err = 0.0, u_mean = 0.0, u_err = 0.0;
            for (std::size_t p = 0; p < paths_; ++p) {
                const double dx = sol.x_paths[p][i] - exact_x(p, i);
                x_mean += sol.x_paths[p][i];
                x_err += dx * dx;
                if (i < steps_) {
                    const double du = sol.u_paths[p][i] - exact_u;
                    u_mean += sol.u_paths[p][i];
                    u_err += du * du;
                }
            }
            x_ss += x_err;
            u_ss += u_err;
            const double n = static_cast<double>(paths_);
            solution_rows.push_back({format_number(grid[i]), format_number(x_mean / n), format_number(std::sqrt(x_err / n)),
                                     i < steps_ ? format_number(u_mean / n) : "",
                                     i < steps_ ? format_number(std::sqrt(u_err / n)) : ""});
        }
        const double x_rms = std::sqrt(x_ss / static_cast<double>(paths_ * (steps_ + 1)));
        const double u_rms = std::sqrt(u_ss / static_cast<double>(paths_ * steps_));

        Rows history_rows;
        for (std::size_t k = 0; k < report.history.size(); ++k)
            history_rows.push_back({std::to_string(k + 1), format_number(report.history[k]),
                                    k == 0 ? "" : format_number(report.ratios[k - 1])});
        out.table("bsde_history.csv", {"iteration", "diff_norm", "ratio"}, history_rows);
        out.table("bsde_solution.csv", {"t", "x_mean", "x_rms_error", "u_mean", "u_rms_error"}, solution_rows);
        std::cout << case_ << ": " << result.history.size() << " iteration(s), "
                  << (sol.converged ? "converged" : "not converged") << ", rms error X " << fmt("%.4g", x_rms)
                  << ", u " << fmt("%.4g", u_rms) << '\n';
        if (plot_) {
            std::vector<double> it(report.history.size()), logd(report.history.size());
            for (std::size_t k = 0; k < it.size(); ++k) {
                it[k] = static_cast<double>(k + 1);
                logd[k] = std::log10(std::max(report.history[k], 1e-300));
            }
            out.text("bsde_history.svg",
                     line_chart_svg("Picard diff_norm (" + case_ + ")", "iteration", "log10 diff_norm", {{"", it, logd}}));
        }
        if (!check_) return true;
        bool ok = report_check(report.non_increasing_from_third, "diff_norm non-increasing from iteration 3");
        if (case_ == "constant") {
            ok = report_check(sol.converged && result.history.size() == 1 && result.history[0] == 0.0 && x_rms == 0.0,
                              "exact convergence in one iteration") && ok;
        } else {
            ok = report_check(x_rms <= rms_tol_, "RMS error of X " + fmt("%.4g", x_rms) + " <= " + fmt("%g", rms_tol_)) &&
                 ok;
            if (case_ == "brownian")
                ok = report_check(u_rms <= rms_tol_, "RMS error of u " + fmt("%.4g", u_rms) + " <= " + fmt("%g", rms_tol_)) &&
                     ok;
        }
        return ok;
    }

private:
    std::string case_;
    double alpha_ = 0.9;
    std::size_t paths_ = 1000;
    std::size_t steps_ = 50;
    double horizon_ = 1.0;
    double op_step_ = 1e-3;
    int degree_ = 2;
    int max_iter_ = 10;
    double tol_ = 1e-12;
    double a_ = 0.5;
    double terminal_ = 1.0;
    double rms_tol_ = 0.05;
};

// example fig2|fig3|fig4|fig5

class ExampleCommand final : public Command {
public:
    explicit ExampleCommand(CLI::App& root) {
        auto* app = root.add_subcommand("example", "one trajectory of the optimal control for a figure preset");
        register_common(app);
        app->add_option("which", which_, "fig2 | fig3 | fig4 | fig5")
            ->required()
            ->check(CLI::IsMember({"fig2", "fig3", "fig4", "fig5"}));
        app->add_option("--steps", steps_, "real-time grid steps")->capture_default_str();
        app->add_option("--op-step", op_step_, "operational time step")->capture_default_str();
    }

    void validate() const override {
        parse_figure(which_);
        require_count(steps_, "steps");
        require_positive(op_step_, "op-step");
    }

    bool execute(const Output& out) override {
        const auto fig = parse_figure(which_);
        const auto table = reproduce_figure(fig, seed_, steps_, op_step_);
        std::cout << "preset";
        for (const auto& [name, value] : table.preset) std::cout << ' ' << name << '=' << fmt("%g", value);
        std::cout << '\n';
        Rows rows;
        for (std::size_t i = 0; i < table.rows(); ++i)
            rows.push_back({format_number(table.t[i]), format_number(table.e[i]), format_number(table.x[i]),
                            format_number(table.u_star[i])});
        out.table(which_ + ".csv", {"t", "E_t", "X", "u_star"}, rows);
        if (plot_)
            out.text(which_ + ".svg", line_chart_svg("optimal control u*(t), " + which_, "t", "u*(t)",
                                                     {{"", table.t, table.u_star}}));
        if (!check_) return true;
        if (fig == Figure::fig5) {
            const double defect = consumption_identity_defect(figure_consumption_preset(), table);
            bool ok = report_check(defect <= 1e-12, "q and r identities, max relative defect " + fmt("%.3g", defect));
            bool stop_ok = true;
            for (std::size_t i = 0; i + 1 < table.rows(); ++i)
                if (table.x[i] <= 0.0) stop_ok = false;
            const bool reached_end = table.rows() == steps_ + 1;
            if (!reached_end && table.x.back() > 0.0) stop_ok = false;
            return report_check(stop_ok, "path stops at the first X <= 0") && ok;
        }
        bool flat_ok = true;
        for (std::size_t i = 0; i + 1 < table.rows(); ++i) {
            const bool flat = table.u_star[i + 1] == table.u_star[i];
            if (table.delta_e[i] == 0.0 && !flat) flat_ok = false;
        }
        return report_check(flat_ok, "u* constant on every step with dE = 0 (flat fraction " +
                                         fmt("%.3f", flat_fraction(table)) + ")");
    }

private:
    std::string which_;
    std::size_t steps_ = 1000;
    double op_step_ = 1e-3;
};

// evaluate estimate|compare

class EvaluateCommand final : public Command {
public:
    explicit EvaluateCommand(CLI::App& root) {
        auto* app = root.add_subcommand("evaluate", "Monte Carlo performance of the optimal control");
        register_common(app);
        app->add_option("mode", mode_, "estimate | compare")->required()->check(CLI::IsMember({"estimate", "compare"}));
        app->add_option("--example", example_, "regulator | consumption")
            ->capture_default_str()
            ->check(CLI::IsMember({"regulator", "consumption"}));
        app->add_option("--alpha", alpha_, "stable index in (0,1)")->capture_default_str();
        app->add_option("--paths", paths_, "number of paths")->capture_default_str();
        app->add_option("--steps", steps_, "real-time grid steps")->capture_default_str();
        app->add_option("--T", horizon_, "horizon")->capture_default_str();
        app->add_option("--op-step", op_step_, "operational time step")->capture_default_str();
        app->add_option("--lambda", lambda_, "regulator terminal weight")->capture_default_str();
        app->add_option("--sigma", sigma_, "diffusion coefficient")->capture_default_str();
        app->add_option("--x0", x0_, "initial state, or 'preset' for the example's value")->capture_default_str();
        app->add_option("--z", z_, "paired-stderr multiple required for a verdict")->capture_default_str();
    }

    void validate() const override {
        StableParams{alpha_, 1.0}.validate();
        require_count(paths_, "paths");
        require_count(steps_, "steps");
        require_positive(horizon_, "T");
        require_positive(op_step_, "op-step");
        require_positive(z_, "z");
        initial_state();
        if (example_ == "consumption") {
            consumption_config().validate();
            if (mode_ == "compare") throw ParameterError("compare is only defined for the regulator example");
        } else {
            regulator_config().validate();
        }
    }

    bool execute(const Output& out) override {
        SimulationSetup setup;
        setup.stable = StableParams{alpha_, 1.0};
        setup.horizon = horizon_;
        setup.n_steps = steps_;
        setup.op_step = op_step_;
        setup.x0 = initial_state();

        if (example_ == "consumption") {
            const auto config = consumption_config();
            setup.stop = consumption_stop();
            const auto est =
                estimate_performance(consumption_problem(config), consumption_control(config), paths_, seed_, setup);
            return write_estimate(out, est);
        }
        const auto config = regulator_config();
        const auto problem = regulator_problem(config);
        if (mode_ == "estimate")
            return write_estimate(out, estimate_performance(problem, regulator_control(config), paths_, seed_, setup));

        const auto report =
            compare_controls(problem, regulator_control(config), regulator_perturbations(config, true), paths_, seed_,
                             setup, z_);
        std::ostringstream csv;
        write_report_csv(csv, report);
        out.text("report.csv", csv.str());
        for (const auto& row : report.rows)
            std::cout << row.control_id << ": J=" << fmt("%.6g", row.mean) << " gap=" << fmt("%.4g", row.paired_diff)
                      << " (" << fmt("%.2f", row.paired_std_error > 0 ? row.paired_diff / row.paired_std_error : 0.0)
                      << " stderr) " << row.verdict << '\n';
        std::cout << "ordering " << (report.all_pass() ? "PASS" : "FAIL") << " over " << report.n_paths << " paths ("
                  << report.excluded << " excluded)\n";
        return check_ ? report_check(report.all_pass(), "u* beats every perturbation by >= z paired stderrs") : true;
    }

private:
    double initial_state() const {
        if (x0_ == "preset") return example_ == "consumption" ? figure_consumption_preset().x0 : RegulatorConfig{}.x0;
        try {
            std::size_t used = 0;
            const double v = std::stod(x0_, &used);
            if (used != x0_.size() || !std::isfinite(v)) throw std::invalid_argument(x0_);
            return v;
        } catch (const std::exception&) {
            throw ParameterError("x0 must be a number or 'preset', got '" + x0_ + "'");
        }
    }

    RegulatorConfig regulator_config() const {
        RegulatorConfig c;
        c.lambda = lambda_;
        c.sigma = sigma_;
        c.x0 = initial_state();
        c.alpha = alpha_;
        c.T = horizon_;
        return c;
    }

    ConsumptionConfig consumption_config() const {
        ConsumptionConfig c = figure_consumption_preset();
        c.sigma = sigma_;
        c.x0 = initial_state();
        c.alpha = alpha_;
        c.T = horizon_;
        return c;
    }

    bool write_estimate(const Output& out, const PerformanceEstimate& est) const {
        out.table("estimate.csv", {"control_id", "mean", "stderr", "n_paths", "excluded"},
                  {{"optimal", format_number(est.mean), format_number(est.std_error), std::to_string(est.n_paths),
                    std::to_string(est.excluded)}});
        std::cout << "J(u*) = " << fmt("%.6g", est.mean) << " +/- " << fmt("%.3g", est.std_error) << " ("
                  << est.n_paths << " paths, " << est.excluded << " excluded)\n";
        return true;
    }

    std::string mode_;
    std::string example_ = "regulator";
    double alpha_ = 0.9;
    std::size_t paths_ = 10000;
    std::size_t steps_ = 100;
    double horizon_ = 0.5;
    double op_step_ = 1e-3;
    double lambda_ = -0.5;
    double sigma_ = 1.0;
    std::string x0_ = "preset";
    double z_ = 2.0;
};

}  // namespace

int run(int argc, char** argv) {
    CLI::App root{"Optimal control of time-changed Levy-driven SDEs: simulation, BSDE and Monte Carlo tools",
                  "subdiff"};
    root.set_config("--config", "", "read options from a TOML file (flags given on the command line win)");
    root.require_subcommand(1);

    std::vector<std::unique_ptr<Command>> commands;
    commands.push_back(std::make_unique<SubordinatorCommand>(root));
    commands.push_back(std::make_unique<SdeCommand>(root));
    commands.push_back(std::make_unique<ItoCheckCommand>(root));
    commands.push_back(std::make_unique<BsdeCommand>(root));
    commands.push_back(std::make_unique<ExampleCommand>(root));
    commands.push_back(std::make_unique<EvaluateCommand>(root));

    try {
        root.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return root.exit(e);
    } catch (const CLI::ParseError& e) {
        root.exit(e);
        return 2;
    }

    Command* selected = nullptr;
    for (auto& c : commands)
        if (c->app()->parsed()) {
            selected = c.get();
            break;
        }
    if (selected == nullptr) {
        std::cerr << root.help();
        return 2;
    }

    try {
        selected->validate();
        const Output out(selected->out_dir());
        out.text("config.echo.toml", "[" + selected->app()->get_name() + "]\n" +
                                         root.get_config_formatter()->to_config(selected->app(), true, false, ""));
        const bool ok = selected->execute(out);
        return ok ? 0 : 4;
    } catch (const ParameterError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace subdiff::cli
