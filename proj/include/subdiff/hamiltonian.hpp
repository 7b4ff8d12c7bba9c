#pragma once

#include <array>
#include <functional>
#include <span>
#include <variant>
#include <vector>

#include "subdiff/forward_sde.hpp"

namespace subdiff {

/// The jump component r(t, z) of the adjoint at a fixed time, as a function of z.
class JumpAdjoint {
public:
    static JumpAdjoint zero();
    static JumpAdjoint closed_form(std::function<double(double)> fn);
    /// r(z) = c0 + c1 z + c2 z² + c3 z³
    static JumpAdjoint polynomial(std::array<double, 4> coefficients);
    /// r(z) = slope·z, the shape both worked problems produce.
    static JumpAdjoint linear(double slope);

    double operator()(double z) const;
    bool is_zero() const { return std::holds_alternative<std::monostate>(repr_); }

private:
    using Repr = std::variant<std::monostate, std::function<double(double)>, std::array<double, 4>>;
    explicit JumpAdjoint(Repr repr) : repr_(std::move(repr)) {}

    Repr repr_;
};

/// Adjoint values (p, q, r(·)) at one time.
struct Adjoint {
    double p = 0.0;
    double q = 0.0;
    JumpAdjoint r = JumpAdjoint::zero();
};

/// (p, q, r) along a path grid.
struct AdjointTriple {
    std::vector<double> p;
    std::vector<double> q;
    std::vector<JumpAdjoint> r;

    std::size_t size() const { return p.size(); }
    Adjoint at(std::size_t i) const { return Adjoint{p[i], q[i], r[i]}; }
};

/// H = g + p b + q σ + ∫ γ(·, z) r(z) ν(dz)   (costs against dE only)
double hamiltonian_simple(const ControlProblem& problem, const StatePoint& s, const Adjoint& adjoint);

/// H = (p μ + f) + (p b + q σ + g)·dE/dt + (∫ γ r ν(dz))·dE/dt, where de_dt
/// is the caller's discrete ratio ΔE/Δt.
double hamiltonian_general(const ControlProblem& problem, const StatePoint& s, const Adjoint& adjoint,
                           double de_dt);

struct OptimizerResult {
    double u_star = 0.0;
    double value = 0.0;
};

/// Optimizes a scalar function over U: 64-point scan, then golden-section
/// search around the best scan point; ties go to the smaller u. An unbounded U
/// requires `coercive`, in which case a bracket is grown until the objective
/// turns; OptimizerDivergedError if it never does.
OptimizerResult optimize_scalar(const std::function<double(double)>& objective, const ControlSet& set,
                                Sense sense, double tol, bool coercive);

/// argmax/argmin over v ∈ U of hamiltonian_simple at (t, e, x, v).
OptimizerResult maximize_hamiltonian(const ControlProblem& problem, double t, double e, double x,
                                     const Adjoint& adjoint, Sense sense, double tol = 1e-8);

/// p(T) = h_x(X(T))
double terminal_adjoint(const ControlProblem& problem, double x_terminal);

/// Diagnostic for the concavity hypothesis on ĥ(x) = opt_v H(t, e, x, v):
/// the largest positive second difference of ĥ over `xs` (0 means no
/// violation seen for a maximization; for minimization the sign is flipped).
double hamiltonian_concavity_defect(const ControlProblem& problem, double t, double e,
                                    const Adjoint& adjoint, std::span<const double> xs, Sense sense,
                                    double tol = 1e-8);

}  // namespace subdiff
