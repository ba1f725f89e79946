#pragma once

// Piecewise-constant Galerkin discretization of the truncated Hilbert
// transform f -> chi_J H (chi_I f) with exact integration of the log kernel.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "core.hpp"

namespace thilbert {

/// Normalization of the Hilbert kernel. Unitary is 1/(pi (x - y)), under which
/// H is unitary on L^2(R); Plain drops the 1/pi.
enum class KernelScale { Unitary, Plain };

template <class Real = double>
inline Real kernel_prefactor(KernelScale scale)
{
    using std::acos;
    return scale == KernelScale::Unitary ? Real(1) / acos(Real(-1)) : Real(1);
}

/// Hilbert transform of the indicator of [a, b] at x, (1/pi) ln(|x-a|/|x-b|).
template <class Real>
Real h_indicator_t(const Real& a, const Real& b, const Real& x, KernelScale scale = KernelScale::Unitary)
{
    using std::abs;
    using std::log;
    if (!(a < b)) throw std::invalid_argument("h_indicator: need a < b");
    if (x == a || x == b) throw std::domain_error("h_indicator: x at an endpoint (log pole)");
    return kernel_prefactor<Real>(scale) * log(abs(x - a) / abs(x - b));
}

inline double h_indicator(double a, double b, double x, KernelScale scale = KernelScale::Unitary)
{
    return h_indicator_t<double>(a, b, x, scale);
}

namespace detail {

inline long double phi(long double t)
{
    if (t == 0.0L) return 0.0L;
    return t * std::log(std::fabs(t)) - t;
}

}  // namespace detail

/// \int_e^f (H chi_[c,d])(x) dx, exact including overlapping and coincident cells.
inline double entry(double c, double d, double e, double f, KernelScale scale = KernelScale::Unitary)
{
    if (!(c < d) || !(e < f)) throw std::invalid_argument("entry: need c < d and e < f");
    using detail::phi;
    const long double C = c, D = d, E = e, F = f;
    const long double s = phi(F - C) - phi(E - C) - phi(F - D) + phi(E - D);
    const long double pre = scale == KernelScale::Unitary ? 1.0L / std::numbers::pi_v<long double> : 1.0L;
    return static_cast<double>(pre * s);
}

inline std::vector<double> uniform_edges(const Interval& iv, int cells)
{
    if (cells < 1) throw std::invalid_argument("uniform_edges: cells must be >= 1");
    std::vector<double> e(static_cast<std::size_t>(cells) + 1);
    for (int k = 0; k <= cells; ++k) e[static_cast<std::size_t>(k)] = iv.lo + iv.length() * k / cells;
    e.back() = iv.hi;
    return e;
}

/// Matrix of the truncated transform in the orthonormal bases
/// chi_cell / sqrt(h) of I (columns) and J (rows).
struct OperatorMatrix {
    CaseConfig config;
    int cells_i = 0;
    int cells_j = 0;
    KernelScale scale = KernelScale::Unitary;
    Eigen::MatrixXd entries;
    std::vector<double> mesh_i;
    std::vector<double> mesh_j;

    double h_i() const { return config.interval_i.length() / cells_i; }
    double h_j() const { return config.interval_j.length() / cells_j; }

    double norm() const
    {
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(entries);
        return svd.singularValues()(0);
    }
};

inline OperatorMatrix assemble(const CaseConfig& config, int cells_i, int cells_j,
                               KernelScale scale = KernelScale::Unitary)
{
    if (cells_i < 1 || cells_j < 1) throw std::invalid_argument("assemble: cells must be >= 1");
    OperatorMatrix op;
    op.config = config;
    op.cells_i = cells_i;
    op.cells_j = cells_j;
    op.scale = scale;
    op.mesh_i = uniform_edges(config.interval_i, cells_i);
    op.mesh_j = uniform_edges(config.interval_j, cells_j);
    op.entries.resize(cells_j, cells_i);
    const double norm = 1.0 / std::sqrt(op.h_i() * op.h_j());
    for (int n = 0; n < cells_i; ++n) {
        const auto sn = static_cast<std::size_t>(n);
        for (int m = 0; m < cells_j; ++m) {
            const auto sm = static_cast<std::size_t>(m);
            op.entries(m, n) =
                norm * entry(op.mesh_i[sn], op.mesh_i[sn + 1], op.mesh_j[sm], op.mesh_j[sm + 1], scale);
        }
    }
    if (scale == KernelScale::Unitary) {
        // the continuous operator is a contraction
#ifndef NDEBUG
        if (cells_i * cells_j <= 256 * 256 && op.norm() > 1.0 + 1e-8) {
            throw std::logic_error("assemble: discrete operator norm exceeds 1");
        }
#endif
    }
    return op;
}

/// Coordinates of a step function in the orthonormal cell basis of I.
inline Eigen::VectorXd cell_coefficients(const OperatorMatrix& op, const StepFunction& f)
{
    if (!op.config.interval_i.contains(f.span())) {
        throw std::invalid_argument("cell_coefficients: step function not supported in I");
    }
    Eigen::VectorXd c = Eigen::VectorXd::Zero(op.cells_i);
    const auto& bp = f.breakpoints();
    for (int n = 0; n < op.cells_i; ++n) {
        const double lo = op.mesh_i[static_cast<std::size_t>(n)];
        const double hi = op.mesh_i[static_cast<std::size_t>(n) + 1];
        double acc = 0.0;
        for (std::size_t k = 0; k < f.pieces(); ++k) {
            const double a = std::max(lo, bp[k]);
            const double b = std::min(hi, bp[k + 1]);
            if (a < b) acc += f.levels()[k] * (b - a);
        }
        c(n) = acc / std::sqrt(op.h_i());
    }
    return c;
}

/// Coordinates of a grid function; each node contributes to the cell that holds it.
inline Eigen::VectorXd cell_coefficients(const OperatorMatrix& op, const GridFunction& f)
{
    if (!(f.interval() == op.config.interval_i)) {
        throw std::invalid_argument("cell_coefficients: grid function not defined on I");
    }
    Eigen::VectorXd c = Eigen::VectorXd::Zero(op.cells_i);
    const double lo = op.config.interval_i.lo;
    for (std::size_t k = 0; k < f.size(); ++k) {
        int n = static_cast<int>((f.nodes()[k] - lo) / op.h_i());
        n = std::clamp(n, 0, op.cells_i - 1);
        c(n) += f.weights()[k] * f.values()[k];
    }
    return c / std::sqrt(op.h_i());
}

/// Image on J as cell averages on the midpoint grid of the J mesh.
inline GridFunction image_from_coefficients(const OperatorMatrix& op, const Eigen::VectorXd& c)
{
    if (c.size() != op.cells_i) throw std::invalid_argument("apply: coefficient length mismatch");
    const Eigen::VectorXd g = op.entries * c;
    std::vector<double> v(static_cast<std::size_t>(op.cells_j));
    const double s = 1.0 / std::sqrt(op.h_j());
    for (int m = 0; m < op.cells_j; ++m) v[static_cast<std::size_t>(m)] = g(m) * s;
    return GridFunction(op.config.interval_j, midpoint_grid(op.config.interval_j, op.cells_j), std::move(v));
}

inline GridFunction apply(const OperatorMatrix& op, const StepFunction& f)
{
    return image_from_coefficients(op, cell_coefficients(op, f));
}

inline GridFunction apply(const OperatorMatrix& op, const GridFunction& f)
{
    return image_from_coefficients(op, cell_coefficients(op, f));
}

/// Pointwise truncated transform of a step function, summed closed forms.
inline double hilbert_of_step(const StepFunction& f, double x, KernelScale scale = KernelScale::Unitary)
{
    const auto& bp = f.breakpoints();
    double acc = 0.0;
    for (std::size_t k = 0; k < f.pieces(); ++k) {
        if (f.levels()[k] != 0.0) acc += f.levels()[k] * h_indicator(bp[k], bp[k + 1], x, scale);
    }
    return acc;
}

/// Truncated transform of a smooth function sampled on a grid over I, evaluated
/// on a grid over J. Both grids are quadrature rules; this is only accurate
/// when I and J are separated (Gap case).
inline GridFunction apply_separated(const CaseConfig& config, const GridFunction& f, const Grid& grid_j,
                                    KernelScale scale = KernelScale::Unitary)
{
    if (config.case_id != Case::Gap) throw std::invalid_argument("apply_separated: Gap configuration required");
    if (!(f.interval() == config.interval_i)) throw std::invalid_argument("apply_separated: f not on I");
    const double pre = kernel_prefactor<double>(scale);
    std::vector<double> out(grid_j.size());
    for (std::size_t m = 0; m < grid_j.size(); ++m) {
        long double acc = 0.0L;
        for (std::size_t k = 0; k < f.size(); ++k) {
            acc += static_cast<long double>(f.weights()[k]) * f.values()[k] / (grid_j.nodes[m] - f.nodes()[k]);
        }
        out[m] = pre * static_cast<double>(acc);
    }
    return GridFunction(config.interval_j, grid_j, std::move(out));
}

/// Row-major CSV of the matrix entries, "%.17g".
inline void export_csv(const OperatorMatrix& op, const std::string& path)
{
    std::FILE* fp = std::fopen(path.c_str(), "w");
    if (fp == nullptr) throw std::runtime_error("export_csv: cannot open " + path);
    for (int m = 0; m < op.cells_j; ++m) {
        for (int n = 0; n < op.cells_i; ++n) {
            std::fprintf(fp, n == 0 ? "%.17g" : ",%.17g", op.entries(m, n));
        }
        std::fputc('\n', fp);
    }
    std::fclose(fp);
}

}  // namespace thilbert
