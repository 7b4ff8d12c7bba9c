#include "subdiff/hamiltonian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "subdiff/errors.hpp"

namespace subdiff {

JumpAdjoint JumpAdjoint::zero() { return JumpAdjoint(std::monostate{}); }

JumpAdjoint JumpAdjoint::closed_form(std::function<double(double)> fn) {
    if (!fn) return zero();
    return JumpAdjoint(std::move(fn));
}

JumpAdjoint JumpAdjoint::polynomial(std::array<double, 4> coefficients) {
    return JumpAdjoint(coefficients);
}

JumpAdjoint JumpAdjoint::linear(double slope) { return polynomial({0.0, slope, 0.0, 0.0}); }

double JumpAdjoint::operator()(double z) const {
    if (const auto* fn = std::get_if<std::function<double(double)>>(&repr_)) return (*fn)(z);
    if (const auto* c = std::get_if<std::array<double, 4>>(&repr_))
        return ((c->at(3) * z + c->at(2)) * z + c->at(1)) * z + c->at(0);
    return 0.0;
}

namespace {

double jump_term(const ControlProblem& problem, const StatePoint& s, const Adjoint& adjoint) {
    if (adjoint.r.is_zero() || problem.jump_spec.total_mass() == 0.0) return 0.0;
    return problem.jump_spec.integrate(
        [&](double z) { return problem.gamma(s.t, s.e, s.x, s.u, z) * adjoint.r(z); });
}

}  // namespace

double hamiltonian_simple(const ControlProblem& problem, const StatePoint& s, const Adjoint& adjoint) {
    return problem.g(s.t, s.e, s.x, s.u) + adjoint.p * problem.b(s.t, s.e, s.x, s.u) +
           adjoint.q * problem.sigma(s.t, s.e, s.x, s.u) + jump_term(problem, s, adjoint);
}

double hamiltonian_general(const ControlProblem& problem, const StatePoint& s, const Adjoint& adjoint,
                           double de_dt) {
    if (!(de_dt >= 0.0)) throw ParameterError("dE/dt ratio must be >= 0");
    double out = adjoint.p * problem.mu(s.t, s.e, s.x, s.u) + problem.f(s.t, s.e, s.x, s.u);
    if (de_dt > 0.0) {
        const double dE_part = adjoint.p * problem.b(s.t, s.e, s.x, s.u) +
                               adjoint.q * problem.sigma(s.t, s.e, s.x, s.u) + problem.g(s.t, s.e, s.x, s.u);
        out += (dE_part + jump_term(problem, s, adjoint)) * de_dt;
    }
    return out;
}

namespace {

constexpr int kScanPoints = 64;
const double kInvPhi = (std::sqrt(5.0) - 1.0) / 2.0;

struct Scan {
    double best_u;
    double best_score;
    int best_index;
    double spacing;
};

// Higher score is better; strict comparison keeps the first (smallest) u on ties.
Scan scan(const std::function<double(double)>& score, double lo, double hi) {
    Scan out{lo, score(lo), 0, (hi - lo) / (kScanPoints - 1)};
    for (int k = 1; k < kScanPoints; ++k) {
        const double u = (k == kScanPoints - 1) ? hi : lo + k * out.spacing;
        const double v = score(u);
        if (v > out.best_score) {
            out = Scan{u, v, k, out.spacing};
        }
    }
    return out;
}

double golden_section(const std::function<double(double)>& score, double a, double b, double tol) {
    double c = b - kInvPhi * (b - a);
    double d = a + kInvPhi * (b - a);
    double fc = score(c);
    double fd = score(d);
    while (b - a > tol) {
        if (fc >= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - kInvPhi * (b - a);
            fc = score(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + kInvPhi * (b - a);
            fd = score(d);
        }
    }
    return 0.5 * (a + b);
}

}  // namespace

OptimizerResult optimize_scalar(const std::function<double(double)>& objective, const ControlSet& set,
                                Sense sense, double tol, bool coercive) {
    if (!(tol > 0.0)) throw ParameterError("optimizer tolerance must be positive");
    if (set.lo > set.hi) throw ParameterError("control set is empty");
    auto score = [&](double u) {
        const double v = objective(u);
        if (std::isnan(v)) return -std::numeric_limits<double>::infinity();
        return sense == Sense::maximize ? v : -v;
    };

    if (set.lo == set.hi) return OptimizerResult{set.lo, objective(set.lo)};

    double lo = set.lo;
    double hi = set.hi;
    Scan best{};
    if (set.bounded()) {
        best = scan(score, lo, hi);
    } else {
        if (!coercive)
            throw OptimizerDivergedError("unbounded control set requires a Hamiltonian declared coercive");
        const double centre = std::clamp(0.0, set.lo, set.hi);
        double width = 1.0;
        for (;;) {
            lo = std::max(set.lo, centre - width);
            hi = std::min(set.hi, centre + width);
            best = scan(score, lo, hi);
            const bool at_open_low = best.best_index == 0 && lo > set.lo;
            const bool at_open_high = best.best_index == kScanPoints - 1 && hi < set.hi;
            if (!at_open_low && !at_open_high && std::isfinite(best.best_score)) break;
            width *= 2.0;
            if (width > 1e15) throw OptimizerDivergedError("Hamiltonian optimum escapes every bracket");
        }
    }

    const double a = std::max(lo, best.best_u - best.spacing);
    const double b = std::min(hi, best.best_u + best.spacing);
    const double refined = golden_section(score, a, b, tol);
    const double refined_score = score(refined);
    OptimizerResult result;
    if (refined_score > best.best_score || (refined_score == best.best_score && refined < best.best_u)) {
        result.u_star = refined;
    } else {
        result.u_star = best.best_u;
    }
    result.value = objective(result.u_star);
    return result;
}

OptimizerResult maximize_hamiltonian(const ControlProblem& problem, double t, double e, double x,
                                     const Adjoint& adjoint, Sense sense, double tol) {
    auto objective = [&](double v) { return hamiltonian_simple(problem, StatePoint{t, e, x, v}, adjoint); };
    return optimize_scalar(objective, problem.control_set, sense, tol, problem.coercive_hamiltonian);
}

double terminal_adjoint(const ControlProblem& problem, double x_terminal) {
    return problem.h_x(x_terminal);
}

double hamiltonian_concavity_defect(const ControlProblem& problem, double t, double e,
                                    const Adjoint& adjoint, std::span<const double> xs, Sense sense,
                                    double tol) {
    if (xs.size() < 3) return 0.0;
    std::vector<double> values(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i)
        values[i] = maximize_hamiltonian(problem, t, e, xs[i], adjoint, sense, tol).value;
    const double sign = sense == Sense::maximize ? 1.0 : -1.0;
    double worst = 0.0;
    for (std::size_t i = 1; i + 1 < xs.size(); ++i) {
        const double left = (values[i] - values[i - 1]) / (xs[i] - xs[i - 1]);
        const double right = (values[i + 1] - values[i]) / (xs[i + 1] - xs[i]);
        const double second = 2.0 * (right - left) / (xs[i + 1] - xs[i - 1]);
        worst = std::max(worst, sign * second);
    }
    return worst;
}

}  // namespace subdiff
