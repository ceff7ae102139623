#pragma once

#include <cstddef>
#include <string>

#include "vinf/nn.hpp"

namespace vinf::linalg {

using nn::Mat;
using nn::Vec;

/// Thin SVD, A = U diag(S) V^T, with singular values non-negative and
/// descending. U is m x k, V is n x k, k = min(m, n).
struct Svd {
    Mat u;
    Vec s;
    Mat v;
};

/// One-sided Jacobi. Throws NumericError when the sweep cap is reached.
Svd svd_small(const Mat& a, std::size_t max_sweeps = 100, double tol = 1e-15);

/// Pseudo-inverse from the normal equations: (A^T A)^-1 A^T when A has full
/// column rank, A^T (A A^T)^-1 when it has full row rank. Throws
/// NumericError mentioning `what` when the chosen Gram matrix is singular.
Mat pinv_normal(const Mat& a, const std::string& what = "matrix");
/// V S^-1 U^T, dropping singular values below the usual relative cutoff.
Mat pinv_svd(const Mat& a);
/// (A^T A + lambda I)^-1 A^T.
Mat pinv_regularized(const Mat& a, double lambda = 1e-4);

}  // namespace vinf::linalg
