#include "vinf/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "vinf/error.hpp"

namespace vinf::linalg {

namespace {

// Works on a tall matrix (rows >= cols).
Svd jacobi_tall(Mat a, std::size_t max_sweeps, double tol) {
    const Eigen::Index n = a.cols();
    Mat v = Mat::Identity(n, n);
    bool converged = n < 2;
    for (std::size_t sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
        converged = true;
        for (Eigen::Index p = 0; p + 1 < n; ++p) {
            for (Eigen::Index q = p + 1; q < n; ++q) {
                const double alpha = a.col(p).squaredNorm();
                const double beta = a.col(q).squaredNorm();
                const double gamma = a.col(p).dot(a.col(q));
                if (std::abs(gamma) <= tol * std::sqrt(alpha * beta) || gamma == 0.0) continue;
                converged = false;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (Eigen::Index i = 0; i < a.rows(); ++i) {
                    const double x = a(i, p), y = a(i, q);
                    a(i, p) = c * x - s * y;
                    a(i, q) = s * x + c * y;
                }
                for (Eigen::Index i = 0; i < n; ++i) {
                    const double x = v(i, p), y = v(i, q);
                    v(i, p) = c * x - s * y;
                    v(i, q) = s * x + c * y;
                }
            }
        }
    }
    if (!converged) throw NumericError("one-sided Jacobi SVD did not converge");

    Vec s(n);
    for (Eigen::Index j = 0; j < n; ++j) s(j) = a.col(j).norm();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&s](auto x, auto y) { return s(x) > s(y); });

    Svd out;
    out.u = Mat::Zero(a.rows(), n);
    out.s = Vec(n);
    out.v = Mat(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const Eigen::Index j = order[static_cast<std::size_t>(k)];
        out.s(k) = s(j);
        out.v.col(k) = v.col(j);
        if (s(j) > 0.0) out.u.col(k) = a.col(j) / s(j);
    }
    // Columns for zero singular values: complete to an orthonormal set.
    for (Eigen::Index k = 0; k < n; ++k) {
        if (out.s(k) > 0.0) continue;
        for (Eigen::Index e = 0; e < a.rows(); ++e) {
            Vec cand = Vec::Unit(a.rows(), e);
            for (Eigen::Index i = 0; i < n; ++i)
                if (i != k) cand -= out.u.col(i).dot(cand) * out.u.col(i);
            if (cand.norm() > 1e-8) {
                out.u.col(k) = cand.normalized();
                break;
            }
        }
    }
    return out;
}

}  // namespace

Svd svd_small(const Mat& a, std::size_t max_sweeps, double tol) {
    if (a.size() == 0) throw ShapeError("SVD of an empty matrix");
    if (!a.allFinite()) throw NumericError("SVD input is not finite");
    if (a.rows() >= a.cols()) return jacobi_tall(a, max_sweeps, tol);
    Svd t = jacobi_tall(a.transpose(), max_sweeps, tol);
    return Svd{t.v, t.s, t.u};
}

Mat pinv_normal(const Mat& a, const std::string& what) {
    const bool tall = a.rows() >= a.cols();
    const Mat gram = tall ? Mat(a.transpose() * a) : Mat(a * a.transpose());
    Eigen::LLT<Mat> llt(gram);
    if (llt.info() != Eigen::Success || llt.rcond() < 1e-14)
        throw NumericError("singular normal equations for " + what);
    if (tall) return llt.solve(a.transpose());
    return a.transpose() * llt.solve(Mat::Identity(gram.rows(), gram.cols()));
}

Mat pinv_svd(const Mat& a) {
    Svd d = svd_small(a);
    const double cutoff = (d.s.size() ? d.s(0) : 0.0) * static_cast<double>(std::max(a.rows(), a.cols())) *
                          std::numeric_limits<double>::epsilon();
    Vec inv(d.s.size());
    for (Eigen::Index i = 0; i < d.s.size(); ++i) inv(i) = d.s(i) > cutoff ? 1.0 / d.s(i) : 0.0;
    return d.v * inv.asDiagonal() * d.u.transpose();
}

Mat pinv_regularized(const Mat& a, double lambda) {
    Mat gram = a.transpose() * a;
    gram.diagonal().array() += lambda;
    return gram.ldlt().solve(a.transpose());
}

}  // namespace vinf::linalg
