#include "subdiff/bsde.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "subdiff/errors.hpp"
#include "subdiff/parallel.hpp"
#include "subdiff/random_stream.hpp"

namespace subdiff {

void BsdeSpec::validate() const {
    if (!driver) throw ParameterError("BSDE driver must be callable");
    if (!terminal) throw ParameterError("BSDE terminal functional must be callable");
    if (!(lipschitz_mu >= 0.0) || !std::isfinite(lipschitz_mu))
        throw ParameterError("driver Lipschitz constant must be finite and >= 0");
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ParameterError("BSDE horizon must be positive");
}

namespace {

void append_monomials(std::span<const double> values, int remaining, std::size_t from, double acc,
                      std::vector<double>& out) {
    if (remaining == 0) {
        out.push_back(acc);
        return;
    }
    if (from == values.size()) return;
    // Highest power of values[from] first, then hand the rest to later values.
    for (int power = remaining; power >= 0; --power) {
        append_monomials(values, remaining - power, from + 1, acc * std::pow(values[from], power), out);
    }
}

}  // namespace

std::vector<double> basis_features(std::span<const double> values, int degree) {
    std::vector<double> out;
    for (int d = 1; d <= degree; ++d) append_monomials(values, d, 0, 1.0, out);
    return out;
}

double LinearFit::evaluate(double w, double e, double e_terminal) const {
    if (coef.empty()) return offset;
    const double all[3] = {w, e, e_terminal};
    std::vector<double> used;
    for (std::size_t v : variables) used.push_back(all[v]);
    const auto features = basis_features(used, degree);
    double out = offset + coef[0];
    for (std::size_t j = 0; j < columns.size(); ++j)
        out += coef[j + 1] * (features[columns[j]] - shift[j]) / scale[j];
    return out;
}

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr std::size_t kRegressors = 3;  // W_t, E_t, E_T

bool spread(double lo, double hi) { return hi - lo > 1e-12 * std::max({1.0, std::abs(lo), std::abs(hi)}); }

// A regressor that is the same on every path would only duplicate the
// intercept (and its products would duplicate other monomials).
void select_variables(const MatrixXd& base, const std::vector<std::size_t>& rows, LinearFit& fit) {
    for (std::size_t v = 0; v < kRegressors; ++v) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (std::size_t r : rows) {
            const double x = base(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(v));
            lo = std::min(lo, x);
            hi = std::max(hi, x);
        }
        if (spread(lo, hi)) fit.variables.push_back(v);
    }
}

MatrixXd monomial_matrix(const MatrixXd& base, const std::vector<std::size_t>& rows, const LinearFit& fit) {
    std::vector<double> used(fit.variables.size(), 0.0);
    const auto width = static_cast<Eigen::Index>(basis_features(used, fit.degree).size());
    MatrixXd out(static_cast<Eigen::Index>(rows.size()), width);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t k = 0; k < fit.variables.size(); ++k)
            used[k] = base(static_cast<Eigen::Index>(rows[r]), static_cast<Eigen::Index>(fit.variables[k]));
        const auto f = basis_features(used, fit.degree);
        for (std::size_t j = 0; j < f.size(); ++j) out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = f[j];
    }
    return out;
}

void select_columns(const MatrixXd& features, LinearFit& fit) {
    const auto n = static_cast<double>(features.rows());
    for (Eigen::Index j = 0; j < features.cols(); ++j) {
        const auto col = features.col(j);
        if (!spread(col.minCoeff(), col.maxCoeff())) continue;
        const double mean = col.sum() / n;
        const double sd = std::sqrt((col.array() - mean).square().sum() / n);
        if (!(sd > 0.0)) continue;
        fit.columns.push_back(static_cast<std::size_t>(j));
        fit.shift.push_back(mean);
        fit.scale.push_back(sd);
    }
}

MatrixXd design(const MatrixXd& features, const LinearFit& fit) {
    MatrixXd d(features.rows(), static_cast<Eigen::Index>(fit.columns.size() + 1));
    d.col(0).setOnes();
    for (std::size_t j = 0; j < fit.columns.size(); ++j)
        d.col(static_cast<Eigen::Index>(j + 1)) =
            (features.col(static_cast<Eigen::Index>(fit.columns[j])).array() - fit.shift[j]) / fit.scale[j];
    return d;
}

LinearFit fit_conditional_mean(const MatrixXd& base, const VectorXd& target, int degree, std::size_t step) {
    std::vector<std::size_t> rows(static_cast<std::size_t>(base.rows()));
    for (std::size_t r = 0; r < rows.size(); ++r) rows[r] = r;
    LinearFit fit;
    fit.degree = degree;
    select_variables(base, rows, fit);
    const MatrixXd features = monomial_matrix(base, rows, fit);
    select_columns(features, fit);
    const std::size_t k = fit.columns.size() + 1;
    if (rows.size() < k)
        throw RegressionRankError("step " + std::to_string(step) + ": " + std::to_string(rows.size()) +
                                  " paths for " + std::to_string(k) + " basis columns");
    const MatrixXd d = design(features, fit);
    // Centring on one sample makes a constant target come back exactly.
    fit.offset = target(0);
    const VectorXd rhs = target.array() - fit.offset;
    Eigen::ColPivHouseholderQR<MatrixXd> qr(d);
    qr.setThreshold(1e-10);
    if (qr.rank() < static_cast<Eigen::Index>(k))
        throw RegressionRankError("step " + std::to_string(step) + ": basis has rank " +
                                  std::to_string(qr.rank()) + " of " + std::to_string(k));
    const VectorXd beta = qr.solve(rhs);
    fit.coef.assign(beta.data(), beta.data() + beta.size());
    return fit;
}

// ΔM ≈ (β·φ) ΔB over the paths whose clock moved on this step.
LinearFit fit_integrand(const MatrixXd& base, const VectorXd& delta_m, const VectorXd& delta_b,
                        const VectorXd& delta_e, int degree) {
    std::vector<std::size_t> active;
    for (Eigen::Index r = 0; r < delta_e.size(); ++r)
        if (delta_e(r) > 0.0) active.push_back(static_cast<std::size_t>(r));
    LinearFit fit;
    fit.degree = degree;
    if (active.empty()) {
        fit.coef = {0.0};
        return fit;
    }
    select_variables(base, active, fit);
    const MatrixXd features = monomial_matrix(base, active, fit);
    select_columns(features, fit);
    if (active.size() < fit.columns.size() + 1) {
        fit.variables.clear();
        fit.columns.clear();
        fit.shift.clear();
        fit.scale.clear();
        double num = 0.0;
        double den = 0.0;
        for (std::size_t r : active) {
            const auto i = static_cast<Eigen::Index>(r);
            num += delta_m(i) * delta_b(i);
            den += delta_b(i) * delta_b(i);
        }
        fit.coef = {den > 0.0 ? num / den : 0.0};
        return fit;
    }
    MatrixXd d = design(features, fit);
    VectorXd rhs(static_cast<Eigen::Index>(active.size()));
    for (std::size_t r = 0; r < active.size(); ++r) {
        const auto i = static_cast<Eigen::Index>(active[r]);
        d.row(static_cast<Eigen::Index>(r)) *= delta_b(i);
        rhs(static_cast<Eigen::Index>(r)) = delta_m(i);
    }
    const VectorXd beta = d.completeOrthogonalDecomposition().solve(rhs);
    fit.coef.assign(beta.data(), beta.data() + beta.size());
    return fit;
}

std::vector<double> state_factor_path(const BsdeSpec& spec, const NoiseBundle& bundle) {
    if (spec.state_factor) {
        auto w = spec.state_factor(bundle);
        if (w.size() != bundle.steps() + 1) throw ParameterError("state factor must have one value per grid point");
        return w;
    }
    std::vector<double> w(bundle.steps() + 1, 0.0);
    for (std::size_t i = 0; i < bundle.steps(); ++i) w[i + 1] = w[i] + bundle.delta_b[i];
    return w;
}

std::vector<double> jump_compensators(const BsdeSpec& spec, const std::vector<double>& t_grid) {
    std::vector<double> comp(t_grid.size() - 1, 0.0);
    if (!spec.jump_kernel || spec.jump_spec.total_mass() == 0.0) return comp;
    for (std::size_t i = 0; i + 1 < t_grid.size(); ++i) {
        const double t = t_grid[i];
        comp[i] = spec.jump_spec.integrate([&](double z) { return spec.jump_kernel(t, z); });
    }
    return comp;
}

struct Ensemble {
    std::size_t paths = 0;
    std::size_t steps = 0;
    MatrixXd de;    // paths × steps
    MatrixXd db;    // paths × steps
    MatrixXd jump;  // paths × steps, known compensated h-jumps
    MatrixXd e;     // paths × (steps + 1)
    VectorXd xi;
    std::vector<MatrixXd> base;  // per step: paths × (W_t, E_t, E_T)
    std::vector<double> t_grid;
};

Ensemble prepare(const BsdeSpec& spec, std::span<const NoiseBundle> bundles) {
    Ensemble ens;
    ens.paths = bundles.size();
    ens.t_grid = bundles.front().inverse.t_grid;
    ens.steps = bundles.front().steps();
    const double horizon = ens.t_grid.back();
    if (std::abs(horizon - spec.horizon) > 1e-12 * std::max(1.0, spec.horizon))
        throw ParameterError("ensemble horizon does not match the BSDE horizon");
    for (const auto& b : bundles)
        if (b.inverse.t_grid != ens.t_grid) throw ParameterError("ensemble paths must share one time grid");

    const auto n = static_cast<Eigen::Index>(ens.paths);
    const auto m = static_cast<Eigen::Index>(ens.steps);
    ens.de.resize(n, m);
    ens.db.resize(n, m);
    ens.jump.resize(n, m);
    ens.e.resize(n, m + 1);
    ens.xi.resize(n);
    ens.base.assign(ens.steps, MatrixXd(n, static_cast<Eigen::Index>(kRegressors)));
    const auto comp = jump_compensators(spec, ens.t_grid);

    parallel_for(ens.paths, [&](std::size_t p) {
        const auto& b = bundles[p];
        const auto row = static_cast<Eigen::Index>(p);
        const auto w = state_factor_path(spec, b);
        const double e_terminal = b.inverse.terminal();
        ens.xi(row) = spec.terminal(b);
        for (std::size_t i = 0; i <= ens.steps; ++i) ens.e(row, static_cast<Eigen::Index>(i)) = b.inverse.e_values[i];
        for (std::size_t i = 0; i < ens.steps; ++i) {
            const auto col = static_cast<Eigen::Index>(i);
            ens.de(row, col) = b.delta_e[i];
            ens.db(row, col) = b.delta_b[i];
            double j = 0.0;
            if (spec.jump_kernel) {
                const double t = ens.t_grid[i];
                j = compensated_sum([&](double z) { return spec.jump_kernel(t, z); }, b.jumps(i), b.delta_e[i],
                                    comp[i]);
            }
            ens.jump(row, col) = j;
            ens.base[i](row, 0) = w[i];
            ens.base[i](row, 1) = b.inverse.e_values[i];
            ens.base[i](row, 2) = e_terminal;
        }
    });
    return ens;
}

MatrixXd driver_values(const BsdeSpec& spec, const Ensemble& ens, const MatrixXd& x, const MatrixXd& u) {
    MatrixXd mu(x.rows(), static_cast<Eigen::Index>(ens.steps));
    parallel_for(ens.paths, [&](std::size_t p) {
        const auto row = static_cast<Eigen::Index>(p);
        for (std::size_t i = 0; i < ens.steps; ++i) {
            const auto col = static_cast<Eigen::Index>(i);
            mu(row, col) = spec.driver(ens.t_grid[i], ens.e(row, col), x(row, col), u(row, col));
        }
    });
    return mu;
}

PicardIterate to_iterate(int n, const MatrixXd& x, const MatrixXd& u, double diff, std::vector<LinearFit> x_fits,
                         std::vector<LinearFit> u_fits) {
    PicardIterate it;
    it.n = n;
    it.diff_norm = diff;
    it.x_paths.resize(static_cast<std::size_t>(x.rows()));
    it.u_paths.resize(static_cast<std::size_t>(u.rows()));
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        it.x_paths[static_cast<std::size_t>(r)].resize(static_cast<std::size_t>(x.cols()));
        it.u_paths[static_cast<std::size_t>(r)].resize(static_cast<std::size_t>(u.cols()));
        for (Eigen::Index c = 0; c < x.cols(); ++c) it.x_paths[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] = x(r, c);
        for (Eigen::Index c = 0; c < u.cols(); ++c) it.u_paths[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] = u(r, c);
    }
    it.x_fits = std::move(x_fits);
    it.u_fits = std::move(u_fits);
    return it;
}

}  // namespace

double driver_lipschitz_ratio(const BsdeSpec& spec, std::size_t samples, std::uint64_t seed) {
    RandomStream rng(seed);
    double worst = 0.0;
    for (std::size_t k = 0; k < samples; ++k) {
        const double t = rng.uniform(0.0, spec.horizon);
        const double e = rng.uniform(0.0, 2.0 * spec.horizon + 1.0);
        const double x1 = rng.uniform(-10.0, 10.0);
        const double x2 = rng.uniform(-10.0, 10.0);
        const double u1 = rng.uniform(-10.0, 10.0);
        const double u2 = rng.uniform(-10.0, 10.0);
        const double num = std::abs(spec.driver(t, e, x1, u1) - spec.driver(t, e, x2, u2));
        worst = std::max(worst, num / (std::abs(x1 - x2) + std::abs(u1 - u2)));
    }
    return worst;
}

PicardResult picard_solve(const BsdeSpec& spec, std::span<const NoiseBundle> ensemble, int basis_degree,
                          int max_iter, double tol) {
    spec.validate();
    if (ensemble.empty()) throw ParameterError("BSDE ensemble is empty");
    if (basis_degree < 0) throw ParameterError("basis degree must be >= 0");
    if (max_iter < 1) throw ParameterError("max_iter must be >= 1");
    if (!(tol >= 0.0)) throw ParameterError("tolerance must be >= 0");
    const double ratio = driver_lipschitz_ratio(spec, 256, 0x5eedULL);
    if (ratio > spec.lipschitz_mu * (1.0 + 1e-9) + 1e-12)
        throw ParameterError("driver violates its declared Lipschitz constant (observed " + std::to_string(ratio) +
                             ", declared " + std::to_string(spec.lipschitz_mu) + ")");

    const Ensemble ens = prepare(spec, ensemble);
    const auto n = static_cast<Eigen::Index>(ens.paths);
    const auto m = static_cast<Eigen::Index>(ens.steps);

    MatrixXd x_prev = ens.xi.replicate(1, m + 1);
    MatrixXd u_prev = MatrixXd::Zero(n, m);
    MatrixXd mu_prev = driver_values(spec, ens, x_prev, u_prev);

    PicardResult result;
    bool have_best = false;
    for (int iter = 1; iter <= max_iter; ++iter) {
        // Backward pathwise targets ξ + Σ_{k>i} μΔE − Σ_{k≥i} (uΔB + J).
        MatrixXd target(n, m);
        VectorXd acc = ens.xi;
        for (Eigen::Index i = m - 1; i >= 0; --i) {
            if (i + 1 < m) acc += mu_prev.col(i + 1).cwiseProduct(ens.de.col(i + 1));
            acc -= u_prev.col(i).cwiseProduct(ens.db.col(i)) + ens.jump.col(i);
            target.col(i) = acc;
        }

        MatrixXd x_next(n, m + 1);
        x_next.col(m) = ens.xi;
        std::vector<LinearFit> x_fits(ens.steps);
        parallel_for(ens.steps, [&](std::size_t i) {
            const auto col = static_cast<Eigen::Index>(i);
            const auto& base = ens.base[i];
            x_fits[i] = fit_conditional_mean(base, target.col(col), basis_degree, i);
            for (Eigen::Index r = 0; r < n; ++r)
                x_next(r, col) = mu_prev(r, col) * ens.de(r, col) + x_fits[i].evaluate(base(r, 0), base(r, 1), base(r, 2));
        });

        MatrixXd u_next(n, m);
        std::vector<LinearFit> u_fits(ens.steps);
        parallel_for(ens.steps, [&](std::size_t i) {
            const auto col = static_cast<Eigen::Index>(i);
            const VectorXd delta_m = x_next.col(col + 1) - x_next.col(col) +
                                     mu_prev.col(col).cwiseProduct(ens.de.col(col)) - ens.jump.col(col);
            const auto& base = ens.base[i];
            u_fits[i] = fit_integrand(base, delta_m, ens.db.col(col), ens.de.col(col), basis_degree);
            for (Eigen::Index r = 0; r < n; ++r) u_next(r, col) = u_fits[i].evaluate(base(r, 0), base(r, 1), base(r, 2));
        });

        double diff = 0.0;
        for (Eigen::Index r = 0; r < n; ++r) {
            double path_sum = 0.0;
            for (Eigen::Index i = 0; i < m; ++i) {
                const double d = x_next(r, i) - x_prev(r, i);
                path_sum += d * d * ens.de(r, i);
            }
            diff += path_sum;
        }
        diff /= static_cast<double>(n);
        if (!std::isfinite(diff)) throw DivergenceError("Picard iteration produced a non-finite iterate", static_cast<std::size_t>(iter));
        result.history.push_back(diff);

        const bool converged = diff <= tol;
        if (!have_best || diff <= result.solution.diff_norm || converged) {
            result.solution = to_iterate(iter, x_next, u_next, diff, std::move(x_fits), std::move(u_fits));
            have_best = true;
        }
        if (converged) {
            result.solution.converged = true;
            break;
        }
        x_prev = std::move(x_next);
        u_prev = std::move(u_next);
        mu_prev = driver_values(spec, ens, x_prev, u_prev);
    }
    return result;
}

std::vector<double> evaluate_solution(const PicardIterate& solution, const BsdeSpec& spec,
                                      const NoiseBundle& bundle) {
    const std::size_t steps = bundle.steps();
    if (solution.x_fits.size() != steps || solution.u_fits.size() != steps)
        throw ParameterError("bundle grid does not match the solved iterate");
    const auto w = state_factor_path(spec, bundle);
    std::vector<double> x(steps + 1);
    x[steps] = spec.terminal(bundle);
    for (std::size_t i = 0; i < steps; ++i) {
        const double e = bundle.inverse.e_values[i];
        const double p = solution.x_fits[i].evaluate(w[i], e, bundle.inverse.terminal());
        const double u = solution.u_fits[i].evaluate(w[i], e, bundle.inverse.terminal());
        x[i] = p + spec.driver(bundle.inverse.t_grid[i], e, p, u) * bundle.delta_e[i];
    }
    return x;
}

PicardReport picard_diagnostics(std::span<const double> history) {
    PicardReport report;
    report.history.assign(history.begin(), history.end());
    for (std::size_t k = 1; k < history.size(); ++k) {
        const double prev = history[k - 1];
        const double cur = history[k];
        if (prev == 0.0) {
            report.ratios.push_back(cur == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
        } else {
            report.ratios.push_back(cur / prev);
        }
    }
    for (std::size_t k = 2; k < history.size(); ++k)
        if (history[k] > history[k - 1]) report.non_increasing_from_third = false;

    if (history.empty()) return report;
    if (history.back() == 0.0) {
        report.success = true;
        return report;
    }
    if (report.ratios.empty()) return report;
    const std::size_t first = std::min<std::size_t>(1, report.ratios.size() - 1);
    report.success = std::all_of(report.ratios.begin() + static_cast<std::ptrdiff_t>(first), report.ratios.end(),
                                 [](double r) { return r < 1.0; });
    return report;
}

}  // namespace subdiff
