#pragma once

#include "srdice/mdp.hpp"

namespace srdice {

/// Moore-Penrose pseudo-inverse by SVD. Singular values at or below
/// rel_cutoff * sigma_max are treated as zero.
Matrix pseudo_inverse(const Matrix& m, double rel_cutoff = 1e-10);

/// Minimum-norm least-squares solution of x * w ~ y through the Gram
/// pseudo-inverse, (X^T X)^+ X^T y.
Vector least_squares(const Matrix& x, const Vector& y, double rel_cutoff = 1e-10);

}  // namespace srdice
