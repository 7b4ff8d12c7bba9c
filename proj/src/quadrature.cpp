#include "subdiff/quadrature.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <mutex>

namespace subdiff {

namespace {

// Golub–Welsch: nodes are the eigenvalues of the Jacobi matrix, weights the
// squared first eigenvector components times the total mass.
QuadratureRule golub_welsch(const Eigen::VectorXd& off_diagonal, double total_mass) {
    const auto n = off_diagonal.size() + 1;
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index k = 0; k + 1 < n; ++k) {
        jacobi(k, k + 1) = off_diagonal(k);
        jacobi(k + 1, k) = off_diagonal(k);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi);
    QuadratureRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        rule.nodes[i] = solver.eigenvalues()(i);
        const double v0 = solver.eigenvectors()(0, i);
        rule.weights[i] = total_mass * v0 * v0;
    }
    return rule;
}

template <typename Builder>
const QuadratureRule& cached(std::map<std::size_t, QuadratureRule>& cache, std::mutex& mutex,
                             std::size_t n, Builder build) {
    std::lock_guard lock(mutex);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, build(n)).first;
    return it->second;
}

}  // namespace

const QuadratureRule& gauss_hermite_normal(std::size_t n) {
    static std::map<std::size_t, QuadratureRule> cache;
    static std::mutex mutex;
    return cached(cache, mutex, n, [](std::size_t m) {
        // probabilists' Hermite recurrence: x He_k = He_{k+1} + k He_{k-1}
        Eigen::VectorXd off(static_cast<Eigen::Index>(m) - 1);
        for (Eigen::Index k = 0; k < off.size(); ++k) off(k) = std::sqrt(static_cast<double>(k + 1));
        return golub_welsch(off, 1.0);
    });
}

const QuadratureRule& gauss_legendre(std::size_t n) {
    static std::map<std::size_t, QuadratureRule> cache;
    static std::mutex mutex;
    return cached(cache, mutex, n, [](std::size_t m) {
        Eigen::VectorXd off(static_cast<Eigen::Index>(m) - 1);
        for (Eigen::Index k = 0; k < off.size(); ++k) {
            const double j = static_cast<double>(k + 1);
            off(k) = j / std::sqrt(4.0 * j * j - 1.0);
        }
        return golub_welsch(off, 2.0);
    });
}

}  // namespace subdiff
