#pragma once

// Gram matrix of the images of orthonormal cell indicators under the
// truncated transform, and the exponential decay of its least eigenvalue.

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "core.hpp"
#include "linalg.hpp"
#include "mp.hpp"
#include "operator.hpp"
#include "stats.hpp"

namespace thilbert {

struct GramOptions {
    KernelScale scale = KernelScale::Unitary;
    /// Gap: quadrature cells on J (points_j Gauss points each)
    int quad_cells_j = 32;
    int points_j = 10;
    /// Overlap: number of Galerkin cells on J
    int galerkin_cells_j = 1024;
};

struct GramResult {
    int n = 0;
    Eigen::MatrixXd matrix_a;
    /// ascending
    std::vector<double> eigenvalues;
    /// singular values of the half-operator B (A = B^T B), descending
    std::vector<double> singular_values;
    std::vector<double> worst_coeffs;
    StepFunction worst_function;

    double lambda_min() const { return eigenvalues.front(); }
};

namespace detail {

template <class Real>
DenseMatrix<Real> gram_half_operator(const CaseConfig& config, int n, const GramOptions& opt)
{
    using std::sqrt;
    const Interval& I = config.interval_i;
    const Interval& J = config.interval_j;
    const Real amp = sqrt(Real(n) / Real(I.length()));
    std::vector<Real> edges(static_cast<std::size_t>(n) + 1);
    for (int k = 0; k <= n; ++k) edges[static_cast<std::size_t>(k)] = Real(I.lo) + Real(I.length()) * Real(k) / Real(n);

    if (config.case_id == Case::Gap) {
        const auto rule = composite_gauss<Real>(Real(J.lo), Real(J.hi), opt.quad_cells_j, opt.points_j);
        DenseMatrix<Real> b(rule.nodes.size(), static_cast<std::size_t>(n));
        for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
            const Real sw = sqrt(rule.weights[i]);
            for (int k = 0; k < n; ++k) {
                const auto sk = static_cast<std::size_t>(k);
                b(i, sk) = sw * amp * h_indicator_t<Real>(edges[sk], edges[sk + 1], rule.nodes[i], opt.scale);
            }
        }
        return b;
    }
    if (config.case_id == Case::Overlap) {
        const auto op = assemble(config, n, opt.galerkin_cells_j, opt.scale);
        DenseMatrix<Real> b(static_cast<std::size_t>(opt.galerkin_cells_j), static_cast<std::size_t>(n));
        for (int m = 0; m < opt.galerkin_cells_j; ++m)
            for (int k = 0; k < n; ++k) b(static_cast<std::size_t>(m), static_cast<std::size_t>(k)) = Real(op.entries(m, k));
        return b;
    }
    throw std::invalid_argument("gram_for_cells: Gap or Overlap configuration required");
}

}  // namespace detail

/// Gram construction for n equal cells of I. Eigenvalues come from the
/// singular values of B, never from A itself; Real selects the arithmetic of
/// the SVD (mp_real resolves eigenvalues far below 1e-16).
template <class Real = mp_real>
GramResult gram_for_cells(const CaseConfig& config, int n, const GramOptions& opt = {})
{
    if (n < 1) throw std::invalid_argument("gram_for_cells: n must be >= 1");
    if (config.interval_i.length() / n < 1e-12) throw std::invalid_argument("gram_for_cells: cells degenerate");
    const auto b = detail::gram_half_operator<Real>(config, n, opt);
    const auto svd = jacobi_svd(b);

    GramResult r;
    r.n = n;
    const auto sn = static_cast<std::size_t>(n);
    r.singular_values.resize(sn);
    r.eigenvalues.resize(sn);
    for (std::size_t k = 0; k < sn; ++k) {
        r.singular_values[k] = to_double(svd.s[k]);
        r.eigenvalues[sn - 1 - k] = to_double(svd.s[k] * svd.s[k]);
    }
    r.matrix_a.resize(n, n);
    for (std::size_t k = 0; k < sn; ++k) {
        for (std::size_t l = 0; l < sn; ++l) {
            Real acc = 0;
            for (std::size_t i = 0; i < b.rows(); ++i) acc += b(i, k) * b(i, l);
            r.matrix_a(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l)) = to_double(acc);
        }
    }
    r.worst_coeffs.resize(sn);
    std::size_t big = 0;
    for (std::size_t k = 0; k < sn; ++k) {
        r.worst_coeffs[k] = to_double(svd.v(k, sn - 1));
        if (std::abs(r.worst_coeffs[k]) > std::abs(r.worst_coeffs[big])) big = k;
    }
    if (r.worst_coeffs[big] < 0) {
        for (auto& c : r.worst_coeffs) c = -c;
    }
    const double amp = std::sqrt(n / config.interval_i.length());
    std::vector<double> levels(sn);
    for (std::size_t k = 0; k < sn; ++k) levels[k] = amp * r.worst_coeffs[k];
    r.worst_function = StepFunction::uniform(config.interval_i, std::move(levels));
    return r;
}

struct DecayFit {
    double c = 0.0;
    double beta = 0.0;
    double r2 = 0.0;
    std::vector<int> n;
    std::vector<double> lambda_min;
    bool truncated = false;
};

/// Fit ln lambda_min(A_n) = ln C - beta n over n = 2..n_max.
template <class Real = mp_real>
DecayFit decay_fit(const CaseConfig& config, int n_max, const GramOptions& opt = {})
{
    if (n_max < 4) throw std::invalid_argument("decay_fit: n_max must be >= 4");
    DecayFit out;
    std::vector<double> xs, ys;
    for (int n = 2; n <= n_max; ++n) {
        const double lam = gram_for_cells<Real>(config, n, opt).lambda_min();
        if (!(lam > 1e-290)) {
            out.truncated = true;
            break;
        }
        out.n.push_back(n);
        out.lambda_min.push_back(lam);
        xs.push_back(n);
        ys.push_back(std::log(lam));
    }
    if (xs.size() < 3) throw std::runtime_error("decay_fit: too few resolved points");
    const auto f = linear_fit(xs, ys);
    out.beta = -f.slope;
    out.c = std::exp(f.intercept);
    out.r2 = f.r2;
    if (!(out.beta > 0.0)) throw std::runtime_error("decay_fit: non-positive decay rate");
    return out;
}

}  // namespace thilbert
