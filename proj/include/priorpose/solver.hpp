#pragma once

#include "priorpose/types.hpp"

#include <array>
#include <span>
#include <vector>

namespace priorpose {

struct MinimalSample {
    std::array<size_t, 5> indices{};
};

/// Five-point essential matrix solver (Nister-style hidden-variable
/// formulation). Returns 0 to 10 solutions with unit Frobenius norm, sorted
/// by ascending epipolar residual over the sample, ties broken by entries.
///
/// Degenerate samples (repeated points, rank-deficient epipolar system, no
/// real roots) yield an empty list. Throws TooFewCorrespondences /
/// InvalidArgument when the input does not hold exactly five finite points.
std::vector<EssentialMatrix> five_point(std::span<const Correspondence> sample);

/// Hartley-normalized linear eight-point estimate projected onto the
/// essential manifold with singular values (s, s, 0).
EssentialMatrix eight_point_normalized(std::span<const Correspondence> m);

/// Coefficients of a real polynomial, lowest degree first.
using Polynomial = std::vector<double>;

/// Real roots via companion-matrix eigenvalues, each polished by one Newton
/// step. Used by five_point; exposed for testing.
std::vector<double> real_roots(const Polynomial &coeffs);

}  // namespace priorpose
