#pragma once

// Singular value decomposition of the truncated transform (Galerkin matrix or
// high-precision Nystrom discretization), the commuting Sturm-Liouville
// operator L_I, and the diagnostics that tie the two together.

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "core.hpp"
#include "linalg.hpp"
#include "mp.hpp"
#include "operator.hpp"
#include "stats.hpp"

namespace thilbert {

enum class SpectralSource { OperatorSVD, Nystrom, SturmLiouville };

struct SpectralDecomposition {
    CaseConfig config;
    SpectralSource source = SpectralSource::OperatorSVD;
    /// descending (SVD sources)
    std::vector<double> sigmas;
    /// ascending (Sturm-Liouville source)
    std::vector<double> lambdas;
    std::vector<GridFunction> u_funcs;
    std::vector<GridFunction> v_funcs;
    /// fewer modes than requested were resolvable
    bool truncated = false;
    /// singular values below this are not trusted
    double resolution_floor = 0.0;

    std::size_t size() const { return u_funcs.size(); }
};

// ---------------------------------------------------------------------------
// Galerkin SVD

/// Top-k singular triples of an assembled operator. Singular functions are
/// L^2-normalized grid functions on the midpoint grids of the two meshes.
inline SpectralDecomposition svd_of_operator(const OperatorMatrix& op, int k, double floor = 1e-14)
{
    if (k < 1 || k > std::min(op.cells_i, op.cells_j)) {
        throw std::invalid_argument("svd_of_operator: k must be in 1..min(cells_i, cells_j)");
    }
    Eigen::BDCSVD<Eigen::MatrixXd> svd(op.entries, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& s = svd.singularValues();
    SpectralDecomposition d;
    d.config = op.config;
    d.source = SpectralSource::OperatorSVD;
    d.resolution_floor = floor;
    const Grid gi = midpoint_grid(op.config.interval_i, op.cells_i);
    const Grid gj = midpoint_grid(op.config.interval_j, op.cells_j);
    const double si = 1.0 / std::sqrt(op.h_i());
    const double sj = 1.0 / std::sqrt(op.h_j());
    for (int n = 0; n < k; ++n) {
        if (!(s(n) >= floor)) {
            d.truncated = true;
            break;
        }
        std::vector<double> u(static_cast<std::size_t>(op.cells_i)), v(static_cast<std::size_t>(op.cells_j));
        // fix the sign so that sum of u is non-negative, then v follows from H u = sigma v
        double total = 0.0;
        for (int i = 0; i < op.cells_i; ++i) total += svd.matrixV()(i, n);
        const double sign = total < 0.0 ? -1.0 : 1.0;
        for (int i = 0; i < op.cells_i; ++i) u[static_cast<std::size_t>(i)] = sign * svd.matrixV()(i, n) * si;
        for (int j = 0; j < op.cells_j; ++j) v[static_cast<std::size_t>(j)] = sign * svd.matrixU()(j, n) * sj;
        d.sigmas.push_back(s(n));
        d.u_funcs.emplace_back(op.config.interval_i, gi, std::move(u));
        d.v_funcs.emplace_back(op.config.interval_j, gj, std::move(v));
    }
    return d;
}

/// Galerkin operator for the Overlap case with a J mesh `density` times finer
/// per unit length than the I mesh.
inline OperatorMatrix overlap_operator(const CaseConfig& config, int cells_i, int density = 4,
                                       KernelScale scale = KernelScale::Unitary)
{
    const double ratio = config.interval_j.length() / config.interval_i.length();
    const int cells_j = std::max(1, static_cast<int>(std::lround(cells_i * ratio * density)));
    return assemble(config, cells_i, cells_j, scale);
}

// ---------------------------------------------------------------------------
// Nystrom SVD for separated intervals

struct NystromOptions {
    int nodes_i = 64;
    int nodes_j = 64;
    KernelScale scale = KernelScale::Unitary;
    /// repeat with 3/4 of the nodes and keep only the modes on which both agree
    bool check_resolution = true;
    double agreement = 1e-6;
};

/// Gauss-Legendre Nystrom discretization M_ij = sqrt(wJ_i) K(x_i, y_j) sqrt(wI_j)
/// solved in arithmetic Real. Singular functions extend off the nodes through
/// the Nystrom interpolation formulas.
template <class Real = mp_real>
class NystromSvd {
public:
    NystromSvd(const CaseConfig& config, const NystromOptions& opt = {}) : config_(config), opt_(opt)
    {
        if (config.case_id != Case::Gap) throw std::invalid_argument("NystromSvd: Gap configuration required");
        if (opt.nodes_i < 4 || opt.nodes_j < 4) throw std::invalid_argument("NystromSvd: need >= 4 nodes");
        pre_ = kernel_prefactor<Real>(opt.scale);
        solve(opt.nodes_i, opt.nodes_j, true);
        if (opt.check_resolution) {
            NystromSvd coarse(config, coarse_options(opt));
            std::size_t agree = 0;
            const std::size_t m = std::min(sigmas_.size(), coarse.sigmas_.size());
            while (agree < m && std::abs(sigmas_[agree] - coarse.sigmas_[agree]) <= opt.agreement * sigmas_[agree]) {
                ++agree;
            }
            resolved_ = agree;
            floor_ = agree < sigmas_.size() ? sigmas_[agree] : 0.0;
        } else {
            resolved_ = sigmas_.size();
            floor_ = 0.0;
        }
    }

    const CaseConfig& config() const { return config_; }
    const std::vector<double>& sigmas() const { return sigmas_; }
    std::size_t resolved() const { return resolved_; }
    double resolution_floor() const { return floor_; }

    /// u_n(y) for y in I, Nystrom extension of the left singular vector.
    double u(std::size_t n, double y) const
    {
        const Real yy = Real(y);
        Real acc = 0;
        for (std::size_t i = 0; i < xj_.size(); ++i) acc += swj_[i] * kernel(xj_[i], yy) * U_(i, n);
        return to_double(acc / s_[n]);
    }

    /// v_n(x) for x in J.
    double v(std::size_t n, double x) const
    {
        const Real xx = Real(x);
        Real acc = 0;
        for (std::size_t j = 0; j < yi_.size(); ++j) acc += kernel(xx, yi_[j]) * swi_[j] * V_(j, n);
        return to_double(acc / s_[n]);
    }

    /// First k resolved modes sampled on the given grids and renormalized there.
    SpectralDecomposition decomposition(const Grid& grid_i, const Grid& grid_j, std::size_t k) const
    {
        SpectralDecomposition d;
        d.config = config_;
        d.source = SpectralSource::Nystrom;
        d.resolution_floor = floor_;
        if (k > resolved_) {
            d.truncated = true;
            k = resolved_;
        }
        for (std::size_t n = 0; n < k; ++n) {
            auto u_fn = GridFunction::sample(config_.interval_i, grid_i, [&](double y) { return u(n, y); });
            auto v_fn = GridFunction::sample(config_.interval_j, grid_j, [&](double x) { return v(n, x); });
            d.sigmas.push_back(sigmas_[n]);
            d.u_funcs.push_back(u_fn.scaled(1.0 / u_fn.l2()));
            d.v_funcs.push_back(v_fn.scaled(1.0 / v_fn.l2()));
        }
        return d;
    }

private:
    static NystromOptions coarse_options(NystromOptions o)
    {
        o.nodes_i = o.nodes_i * 3 / 4;
        o.nodes_j = o.nodes_j * 3 / 4;
        o.check_resolution = false;
        return o;
    }

    Real kernel(const Real& x, const Real& y) const { return pre_ / (x - y); }

    void solve(int ni, int nj, bool keep_vectors)
    {
        using std::sqrt;
        const Interval& I = config_.interval_i;
        const Interval& J = config_.interval_j;
        const auto ri = composite_gauss<Real>(Real(I.lo), Real(I.hi), 1, ni);
        const auto rj = composite_gauss<Real>(Real(J.lo), Real(J.hi), 1, nj);
        yi_ = ri.nodes;
        xj_ = rj.nodes;
        swi_.resize(yi_.size());
        swj_.resize(xj_.size());
        for (std::size_t j = 0; j < yi_.size(); ++j) swi_[j] = sqrt(ri.weights[j]);
        for (std::size_t i = 0; i < xj_.size(); ++i) swj_[i] = sqrt(rj.weights[i]);
        DenseMatrix<Real> m(xj_.size(), yi_.size());
        for (std::size_t j = 0; j < yi_.size(); ++j)
            for (std::size_t i = 0; i < xj_.size(); ++i) m(i, j) = swj_[i] * kernel(xj_[i], yi_[j]) * swi_[j];
        auto svd = jacobi_svd(m);
        if (!svd.converged) throw std::runtime_error("NystromSvd: Jacobi iteration did not converge");
        s_ = svd.s;
        U_ = std::move(svd.u);
        V_ = std::move(svd.v);
        sigmas_.resize(s_.size());
        for (std::size_t n = 0; n < s_.size(); ++n) sigmas_[n] = to_double(s_[n]);
        if (keep_vectors) normalize_signs();
    }

    // u_n positive at the node of I nearest to J
    void normalize_signs()
    {
        const bool j_left = config_.interval_j.hi <= config_.interval_i.lo;
        const std::size_t near = j_left ? 0 : yi_.size() - 1;
        for (std::size_t n = 0; n < s_.size(); ++n) {
            if (V_(near, n) < 0) {
                for (std::size_t j = 0; j < V_.rows(); ++j) V_(j, n) = -V_(j, n);
                for (std::size_t i = 0; i < U_.rows(); ++i) U_(i, n) = -U_(i, n);
            }
        }
    }

    CaseConfig config_;
    NystromOptions opt_;
    Real pre_;
    std::vector<Real> yi_, xj_, swi_, swj_, s_;
    DenseMatrix<Real> U_, V_;
    std::vector<double> sigmas_;
    std::size_t resolved_ = 0;
    double floor_ = 0.0;
};

// ---------------------------------------------------------------------------
// Sturm-Liouville operator L psi = (P psi')' + 2 (x - sigma)^2 psi on I

/// Cell-centred conservative discretization of L_I on `cells` equal cells of I.
/// Stored in the original coordinates of the configuration: the polynomial P
/// is built from the original endpoints, which is the mirror image of the
/// canonical one when the configuration is reflected.
struct SturmLiouvilleSpec {
    CaseConfig config;
    /// canonical a1..a4
    std::array<double, 4> endpoints{};
    /// mean of the endpoints, original coordinates
    double sigma_center = 0.0;
    int cells = 0;
    double h = 0.0;
    Grid grid;
    /// 2 (x - sigma)^2 at the cell centres
    std::vector<double> potential;
    /// P at the cells + 1 half-nodes (zero at both ends of I)
    std::vector<double> flux_coeffs;
    /// symmetric tridiagonal matrix of the discrete L_I
    std::vector<double> diag;
    std::vector<double> offdiag;

    double p_of(double x) const
    {
        double p = 1.0;
        for (double a : original_endpoints()) p *= (x - a);
        return p;
    }

    std::array<double, 4> original_endpoints() const
    {
        std::array<double, 4> b{};
        for (std::size_t i = 0; i < 4; ++i) b[i] = config.to_original(endpoints[i]);
        return b;
    }
};

inline SturmLiouvilleSpec make_sturm_liouville(const CaseConfig& config, int cells)
{
    if (config.case_id != Case::Gap) throw std::invalid_argument("sturm_liouville: Gap configuration required");
    if (cells < 4) throw std::invalid_argument("sturm_liouville: need >= 4 cells");
    SturmLiouvilleSpec s;
    s.config = config;
    s.endpoints = config.a();
    s.cells = cells;
    const Interval& I = config.interval_i;
    s.h = I.length() / cells;
    s.grid = midpoint_grid(I, cells);
    const auto b = s.original_endpoints();
    s.sigma_center = 0.25 * (b[0] + b[1] + b[2] + b[3]);
    const auto n = static_cast<std::size_t>(cells);
    s.potential.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double d = s.grid.nodes[i] - s.sigma_center;
        s.potential[i] = 2.0 * d * d;
    }
    s.flux_coeffs.resize(n + 1);
    s.flux_coeffs[0] = 0.0;
    s.flux_coeffs[n] = 0.0;
    for (std::size_t i = 1; i < n; ++i) s.flux_coeffs[i] = s.p_of(I.lo + static_cast<double>(i) * s.h);
    s.diag.resize(n);
    s.offdiag.resize(n - 1);
    const double ih2 = 1.0 / (s.h * s.h);
    for (std::size_t i = 0; i < n; ++i) {
        s.diag[i] = -(s.flux_coeffs[i] + s.flux_coeffs[i + 1]) * ih2 + s.potential[i];
        if (i + 1 < n) s.offdiag[i] = s.flux_coeffs[i + 1] * ih2;
    }
    return s;
}

namespace detail {

// Solve (T - shift) x = b for symmetric tridiagonal T by Gaussian elimination
// with partial pivoting.
inline std::vector<double> tridiag_solve(const std::vector<double>& d, const std::vector<double>& e, double shift,
                                         std::vector<double> b)
{
    const std::size_t n = d.size();
    // rows hold up to three entries after pivoting: main, first and second superdiagonal
    std::vector<double> a0(n), a1(n, 0.0), a2(n, 0.0), sub(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        a0[i] = d[i] - shift;
        if (i + 1 < n) {
            a1[i] = e[i];
            sub[i + 1] = e[i];
        }
    }
    const double tiny = 1e-300;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (std::abs(sub[i + 1]) > std::abs(a0[i])) {
            std::swap(a0[i], sub[i + 1]);
            std::swap(a1[i], a0[i + 1]);
            std::swap(a2[i], a1[i + 1]);
            std::swap(b[i], b[i + 1]);
        }
        const double piv = a0[i] == 0.0 ? tiny : a0[i];
        const double l = sub[i + 1] / piv;
        a0[i + 1] -= l * a1[i];
        a1[i + 1] -= l * a2[i];
        b[i + 1] -= l * b[i];
    }
    std::vector<double> x(n);
    for (std::size_t k = n; k-- > 0;) {
        double r = b[k];
        if (k + 1 < n) r -= a1[k] * x[k + 1];
        if (k + 2 < n) r -= a2[k] * x[k + 2];
        x[k] = r / (a0[k] == 0.0 ? tiny : a0[k]);
    }
    return x;
}

inline std::vector<double> tridiag_apply(const SturmLiouvilleSpec& s, const std::vector<double>& x)
{
    const std::size_t n = x.size();
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        double acc = s.diag[i] * x[i];
        if (i > 0) acc += s.offdiag[i - 1] * x[i - 1];
        if (i + 1 < n) acc += s.offdiag[i] * x[i + 1];
        y[i] = acc;
    }
    return y;
}

}  // namespace detail

struct SturmLiouvilleEigs {
    std::vector<double> lambdas;
    std::vector<GridFunction> eigenfunctions;
};

/// Lowest k eigenpairs of the discrete L_I. Eigenvalues from the tridiagonal
/// QR iteration, eigenvectors by inverse iteration.
inline SturmLiouvilleEigs sturm_liouville_eigs(const SturmLiouvilleSpec& spec, int k)
{
    const auto n = static_cast<std::size_t>(spec.cells);
    if (k < 1 || static_cast<std::size_t>(k) * 10 > n) {
        throw std::invalid_argument("sturm_liouville_eigs: need 1 <= k <= cells/10");
    }
    Eigen::VectorXd diag = Eigen::Map<const Eigen::VectorXd>(spec.diag.data(), static_cast<Eigen::Index>(n));
    Eigen::VectorXd sub = Eigen::Map<const Eigen::VectorXd>(spec.offdiag.data(), static_cast<Eigen::Index>(n - 1));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw std::runtime_error("sturm_liouville_eigs: QR iteration failed");

    SturmLiouvilleEigs out;
    std::vector<std::vector<double>> vecs;
    for (int m = 0; m < k; ++m) {
        const double lam = es.eigenvalues()(m);
        const double shift = lam + 1e-10 * std::max(1.0, std::abs(lam));
        std::vector<double> x(n);
        for (std::size_t i = 0; i < n; ++i) x[i] = 1.0 + 0.001 * static_cast<double>(i % 7);
        for (int it = 0; it < 4; ++it) {
            x = detail::tridiag_solve(spec.diag, spec.offdiag, shift, x);
            for (const auto& prev : vecs) {
                double dot = 0.0;
                for (std::size_t i = 0; i < n; ++i) dot += x[i] * prev[i];
                for (std::size_t i = 0; i < n; ++i) x[i] -= dot * prev[i];
            }
            double nrm = 0.0;
            for (double v : x) nrm += v * v;
            nrm = std::sqrt(nrm);
            for (double& v : x) v /= nrm;
        }
        // sign: positive at the end of I nearest to J
        const bool j_left = spec.config.interval_j.hi <= spec.config.interval_i.lo;
        const double end = j_left ? x.front() : x.back();
        if (end < 0.0) {
            for (double& v : x) v = -v;
        }
        vecs.push_back(x);
        std::vector<double> vals(n);
        const double s = 1.0 / std::sqrt(spec.h);
        for (std::size_t i = 0; i < n; ++i) vals[i] = x[i] * s;
        out.lambdas.push_back(lam);
        out.eigenfunctions.emplace_back(spec.config.interval_i, spec.grid, std::move(vals));
    }
    return out;
}

inline SpectralDecomposition as_decomposition(const SturmLiouvilleSpec& spec, const SturmLiouvilleEigs& e)
{
    SpectralDecomposition d;
    d.config = spec.config;
    d.source = SpectralSource::SturmLiouville;
    d.lambdas = e.lambdas;
    d.u_funcs = e.eigenfunctions;
    return d;
}

/// m-fold application of the discrete L_I to a function on the operator's grid.
/// The first and last `band` cells of f must vanish.
inline GridFunction apply_li_power(const SturmLiouvilleSpec& spec, const GridFunction& f, int m, int band = 1)
{
    if (m < 0) throw std::invalid_argument("apply_li_power: m must be >= 0");
    if (!(f.interval() == spec.config.interval_i) || f.nodes() != spec.grid.nodes) {
        throw std::invalid_argument("apply_li_power: f must live on the operator grid");
    }
    if (m == 0) return f;
    const std::size_t n = f.size();
    const auto b = static_cast<std::size_t>(std::max(band, 0));
    for (std::size_t i = 0; i < std::min(b, n); ++i) {
        if (f.values()[i] != 0.0 || f.values()[n - 1 - i] != 0.0) {
            throw std::invalid_argument("apply_li_power: support touches the boundary cells");
        }
    }
    std::vector<double> x = f.values();
    for (int it = 0; it < m; ++it) x = detail::tridiag_apply(spec, x);
    return f.with_values(std::move(x));
}

/// Discrete quadratic form <L f, f> split as flux part + potential part.
inline std::pair<double, double> quadratic_form_parts(const SturmLiouvilleSpec& spec, const GridFunction& f)
{
    const auto& v = f.values();
    double flux = 0.0, pot = 0.0;
    for (std::size_t i = 0; i + 1 < v.size(); ++i) {
        const double d = (v[i + 1] - v[i]) / spec.h;
        flux += -spec.flux_coeffs[i + 1] * d * d * spec.h;
    }
    for (std::size_t i = 0; i < v.size(); ++i) pot += spec.potential[i] * v[i] * v[i] * spec.h;
    return {flux, pot};
}

// ---------------------------------------------------------------------------
// Diagnostics

/// Sign-aligned correlation of paired modes. Functions on different grids are
/// compared on the finer one after linear interpolation.
inline std::vector<double> cross_validate(const std::vector<GridFunction>& a, const std::vector<GridFunction>& b)
{
    if (a.size() != b.size()) throw std::invalid_argument("cross_validate: mode-count mismatch");
    std::vector<double> out;
    for (std::size_t n = 0; n < a.size(); ++n) {
        const GridFunction& fine = a[n].size() >= b[n].size() ? a[n] : b[n];
        const GridFunction& other = a[n].size() >= b[n].size() ? b[n] : a[n];
        GridFunction g = other.same_grid(fine) ? other
                                               : GridFunction::sample(fine.interval(), fine.grid(),
                                                                      [&](double x) { return other.interpolate(x); });
        out.push_back(std::abs(fine.dot(g)) / (fine.l2() * g.l2()));
    }
    return out;
}

inline std::vector<double> cross_validate(const SpectralDecomposition& svd, const SturmLiouvilleEigs& sl)
{
    const std::size_t k = std::min(svd.size(), sl.eigenfunctions.size());
    std::vector<GridFunction> a(svd.u_funcs.begin(), svd.u_funcs.begin() + static_cast<std::ptrdiff_t>(k));
    std::vector<GridFunction> b(sl.eigenfunctions.begin(), sl.eigenfunctions.begin() + static_cast<std::ptrdiff_t>(k));
    return cross_validate(a, b);
}

struct SigmaDecayFit {
    double rate = 0.0;
    double r2 = 0.0;
    /// sigma_n >= exp(-k2 n) for every fitted n >= 1
    double k2 = 0.0;
    /// sigma_n <= K2_tilde exp(-K2 n) for every fitted n
    double big_k2 = 0.0;
    double big_k2_tilde = 0.0;
    int n_lo = 0;
    int n_hi = 0;
};

/// Slope of ln sigma_n over n_lo..n_hi plus the empirical two-sided bounds.
inline SigmaDecayFit sigma_decay_fit(const std::vector<double>& sigmas, int n_lo, int n_hi, double floor = 1e-13)
{
    if (n_lo < 0 || n_hi <= n_lo || static_cast<std::size_t>(n_hi) >= sigmas.size()) {
        throw std::invalid_argument("sigma_decay_fit: index range outside the computed spectrum");
    }
    int above = 0;
    for (double s : sigmas) above += s > floor ? 1 : 0;
    if (above < 10) throw std::runtime_error("sigma_decay_fit: fewer than 10 resolved singular values");
    std::vector<double> xs, ys;
    for (int n = n_lo; n <= n_hi; ++n) {
        const double s = sigmas[static_cast<std::size_t>(n)];
        if (!(s > floor)) throw std::runtime_error("sigma_decay_fit: range reaches below the resolution floor");
        xs.push_back(n);
        ys.push_back(std::log(s));
    }
    const auto f = linear_fit(xs, ys);
    SigmaDecayFit out;
    out.rate = -f.slope;
    out.r2 = f.r2;
    out.n_lo = n_lo;
    out.n_hi = n_hi;
    out.big_k2 = out.rate;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        if (xs[k] >= 1.0) out.k2 = std::max(out.k2, -ys[k] / xs[k]);
        out.big_k2_tilde = std::max(out.big_k2_tilde, std::exp(ys[k] + out.big_k2 * xs[k]));
    }
    return out;
}

struct CoefficientDecay {
    /// max_n n |<f, u_n>| / tv(f)
    double constant = 0.0;
    double kendall = 0.0;
    std::vector<double> scaled;
};

inline CoefficientDecay coefficient_decay_check(const SpectralDecomposition& d, const GridFunction& f,
                                                double boundary_tol = 1e-12)
{
    if (d.size() < 2) throw std::invalid_argument("coefficient_decay_check: need >= 2 modes");
    if (std::abs(f.values().front()) > boundary_tol * std::max(1.0, f.linf()) ||
        std::abs(f.values().back()) > boundary_tol * std::max(1.0, f.linf())) {
        throw std::invalid_argument("coefficient_decay_check: f must vanish at the ends of I");
    }
    const double tv = f.tv();
    if (!(tv > 0.0)) throw std::invalid_argument("coefficient_decay_check: f has zero variation");
    CoefficientDecay out;
    std::vector<double> ns;
    for (std::size_t n = 1; n < d.size(); ++n) {
        if (!d.u_funcs[n].same_grid(f)) throw std::invalid_argument("coefficient_decay_check: grid mismatch");
        const double c = static_cast<double>(n) * std::abs(f.dot(d.u_funcs[n]));
        out.scaled.push_back(c);
        ns.push_back(static_cast<double>(n));
        out.constant = std::max(out.constant, c / tv);
    }
    out.kendall = ns.size() >= 2 ? kendall_tau(ns, out.scaled) : 0.0;
    return out;
}

/// max_x |\int_{x0}^x u| on the grid of u, with x0 the given end of I; the
/// cumulative integral is exact for the piecewise-constant reading of u on a
/// midpoint grid and trapezoidal otherwise.
inline double max_primitive(const GridFunction& u, bool from_left)
{
    const auto& v = u.values();
    const auto& w = u.weights();
    const std::size_t n = v.size();
    double acc = 0.0, best = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t i = from_left ? k : n - 1 - k;
        acc += w[i] * v[i];
        best = std::max(best, std::abs(acc));
    }
    return best;
}

struct PrimitiveCheck {
    std::vector<int> n;
    std::vector<double> max_primitive;
    LinearFit fit;
};

/// Gap case: max_x |\int_{a3}^x u_n| for n in [n_lo, n_hi], a3 being the end
/// of I facing J, with its log-log fit against n.
inline PrimitiveCheck primitive_check(const SpectralDecomposition& d, int n_lo, int n_hi)
{
    if (d.config.case_id != Case::Gap) throw std::invalid_argument("primitive_check: Gap configuration required");
    if (n_lo < 1 || n_hi <= n_lo || static_cast<std::size_t>(n_hi) >= d.size()) {
        throw std::invalid_argument("primitive_check: mode range outside the decomposition");
    }
    const bool from_left = d.config.interval_j.hi <= d.config.interval_i.lo;
    PrimitiveCheck out;
    std::vector<double> xs;
    for (int n = n_lo; n <= n_hi; ++n) {
        out.n.push_back(n);
        xs.push_back(n);
        out.max_primitive.push_back(max_primitive(d.u_funcs[static_cast<std::size_t>(n)], from_left));
    }
    out.fit = loglog_fit(xs, out.max_primitive);
    return out;
}

struct LocalizationReport {
    double mu = 0.0;
    Interval j_star;
    /// indices into the decomposition of the sigma -> 0 branch modes used
    std::vector<std::size_t> modes;
    std::vector<double> sigmas;
    std::vector<double> norm_inside;
    std::vector<double> norm_outside;
    std::vector<double> max_primitive;
    /// fit of ln norm_inside against the branch index
    LinearFit fit;
    double beta_mu = 0.0;
};

/// J* = [a1 + mu, a3 - mu] in canonical coordinates, returned in original ones.
inline Interval j_star(const CaseConfig& config, double mu)
{
    if (config.case_id != Case::Overlap) throw std::invalid_argument("j_star: Overlap configuration required");
    const auto& a = config.a();
    if (!(mu > 0.0) || !(a[0] + mu < a[1]) || !(a[1] < a[2] - mu)) {
        throw std::invalid_argument("j_star: margin violates a1 + mu < a2 < a3 - mu");
    }
    return config.map_to_original(Interval(a[0] + mu, a[2] - mu));
}

/// Per-mode L^2 norms of u_n on I n J* and on I \ J* for the modes of the
/// sigma -> 0 branch with sigma in (floor, branch_top).
inline LocalizationReport overlap_localization(const SpectralDecomposition& d, double mu, double branch_top = 0.5,
                                               double floor = 1e-10)
{
    LocalizationReport r;
    r.mu = mu;
    r.j_star = j_star(d.config, mu);
    // the end of J* inside I
    const bool j_right = d.config.reflected;
    const double cut = j_right ? r.j_star.lo : r.j_star.hi;
    std::vector<double> xs;
    for (std::size_t n = 0; n < d.size(); ++n) {
        const double s = d.sigmas[n];
        if (!(s < branch_top) || !(s > floor)) continue;
        const GridFunction& u = d.u_funcs[n];
        double in = 0.0, out = 0.0;
        for (std::size_t k = 0; k < u.size(); ++k) {
            const double x = u.nodes()[k];
            const double m = u.weights()[k] * u.values()[k] * u.values()[k];
            if (r.j_star.contains(x)) {
                in += m;
            } else {
                out += m;
            }
        }
        // primitive from the cut point across I \ J*
        const std::size_t sz = u.size();
        double acc = 0.0, best = 0.0;
        if (j_right) {
            for (std::size_t k = sz; k-- > 0;) {
                if (u.nodes()[k] > cut) continue;
                acc += u.weights()[k] * u.values()[k];
                best = std::max(best, std::abs(acc));
            }
        } else {
            for (std::size_t k = 0; k < sz; ++k) {
                if (u.nodes()[k] < cut) continue;
                acc += u.weights()[k] * u.values()[k];
                best = std::max(best, std::abs(acc));
            }
        }
        r.modes.push_back(n);
        r.sigmas.push_back(s);
        r.norm_inside.push_back(std::sqrt(in));
        r.norm_outside.push_back(std::sqrt(out));
        r.max_primitive.push_back(best);
        xs.push_back(static_cast<double>(xs.size()));
    }
    if (xs.size() < 3) throw std::runtime_error("overlap_localization: fewer than 3 branch modes above the floor");
    r.fit = semilog_fit(xs, r.norm_inside);
    r.beta_mu = -r.fit.slope;
    return r;
}

}  // namespace thilbert
