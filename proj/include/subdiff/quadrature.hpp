#pragma once

#include <cstddef>
#include <vector>

namespace subdiff {

struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// n-point Gauss rule for the standard normal weight: Σ w_i f(x_i) ≈ E f(Z).
/// Weights sum to 1; exact for polynomials of degree ≤ 2n-1.
const QuadratureRule& gauss_hermite_normal(std::size_t n = 64);

/// n-point Gauss–Legendre rule on [-1, 1].
const QuadratureRule& gauss_legendre(std::size_t n = 64);

}  // namespace subdiff
