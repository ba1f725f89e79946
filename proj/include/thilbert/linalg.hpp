#pragma once

// Small dense matrices and a one-sided Jacobi SVD that works for any scalar
// type with the cmath overloads, including mp_real.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace thilbert {

/// Column-major dense matrix.
template <class Real>
class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, Real(0)) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    Real& operator()(std::size_t i, std::size_t j) { return data_[j * rows_ + i]; }
    const Real& operator()(std::size_t i, std::size_t j) const { return data_[j * rows_ + i]; }

    Real* column(std::size_t j) { return data_.data() + j * rows_; }
    const Real* column(std::size_t j) const { return data_.data() + j * rows_; }

    DenseMatrix transposed() const
    {
        DenseMatrix t(cols_, rows_);
        for (std::size_t j = 0; j < cols_; ++j)
            for (std::size_t i = 0; i < rows_; ++i) t(j, i) = (*this)(i, j);
        return t;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<Real> data_;
};

/// Thin SVD a = u * diag(s) * v^T with s descending; u is rows x r, v is cols x r,
/// r = min(rows, cols).
template <class Real>
struct SvdResult {
    std::vector<Real> s;
    DenseMatrix<Real> u;
    DenseMatrix<Real> v;
    int sweeps = 0;
    bool converged = false;
};

namespace detail {

// Hestenes iteration on the columns of w (m x n, m >= n); v accumulates the
// right rotations.
template <class Real>
SvdResult<Real> hestenes(DenseMatrix<Real> w, int max_sweeps)
{
    using std::abs;
    using std::sqrt;
    const std::size_t m = w.rows();
    const std::size_t n = w.cols();
    DenseMatrix<Real> v(n, n);
    for (std::size_t j = 0; j < n; ++j) v(j, j) = 1;

    const Real tol = Real(m) * std::numeric_limits<Real>::epsilon();
    SvdResult<Real> out;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        bool rotated = false;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                Real alpha = 0;
                Real beta = 0;
                Real gamma = 0;
                const Real* cp = w.column(p);
                const Real* cq = w.column(q);
                for (std::size_t i = 0; i < m; ++i) {
                    alpha += cp[i] * cp[i];
                    beta += cq[i] * cq[i];
                    gamma += cp[i] * cq[i];
                }
                if (gamma == 0 || abs(gamma) <= tol * sqrt(alpha * beta)) continue;
                rotated = true;
                const Real zeta = (beta - alpha) / (2 * gamma);
                const Real t = (zeta >= 0 ? Real(1) : Real(-1)) / (abs(zeta) + sqrt(1 + zeta * zeta));
                const Real c = 1 / sqrt(1 + t * t);
                const Real s = c * t;
                Real* wp = w.column(p);
                Real* wq = w.column(q);
                for (std::size_t i = 0; i < m; ++i) {
                    const Real a = wp[i];
                    const Real b = wq[i];
                    wp[i] = c * a - s * b;
                    wq[i] = s * a + c * b;
                }
                Real* vp = v.column(p);
                Real* vq = v.column(q);
                for (std::size_t i = 0; i < n; ++i) {
                    const Real a = vp[i];
                    const Real b = vq[i];
                    vp[i] = c * a - s * b;
                    vq[i] = s * a + c * b;
                }
            }
        }
        out.sweeps = sweep + 1;
        if (!rotated) {
            out.converged = true;
            break;
        }
    }

    std::vector<Real> norms(n);
    for (std::size_t j = 0; j < n; ++j) {
        Real acc = 0;
        const Real* cj = w.column(j);
        for (std::size_t i = 0; i < m; ++i) acc += cj[i] * cj[i];
        norms[j] = sqrt(acc);
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return norms[a] > norms[b]; });

    out.s.resize(n);
    out.u = DenseMatrix<Real>(m, n);
    out.v = DenseMatrix<Real>(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t j = order[k];
        out.s[k] = norms[j];
        for (std::size_t i = 0; i < m; ++i) out.u(i, k) = norms[j] > 0 ? w(i, j) / norms[j] : Real(0);
        for (std::size_t i = 0; i < n; ++i) out.v(i, k) = v(i, j);
    }
    return out;
}

}  // namespace detail

/// One-sided Jacobi SVD. Small singular values are computed to high relative
/// accuracy for well-scaled columns, which is what the severely ill-conditioned
/// discretizations in this library need.
template <class Real>
SvdResult<Real> jacobi_svd(const DenseMatrix<Real>& a, int max_sweeps = 80)
{
    if (a.rows() == 0 || a.cols() == 0) throw std::invalid_argument("jacobi_svd: empty matrix");
    if (a.rows() >= a.cols()) return detail::hestenes(a, max_sweeps);
    auto r = detail::hestenes(a.transposed(), max_sweeps);
    std::swap(r.u, r.v);
    return r;
}

}  // namespace thilbert
