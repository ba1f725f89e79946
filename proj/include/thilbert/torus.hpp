#pragma once

// Convolution operators on the unit-length torus, diagonal in the basis
// e^{2 pi i n x}.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <fftw3.h>

#include "core.hpp"
#include "stats.hpp"

namespace thilbert {

using cplx = std::complex<double>;

/// Fourier coefficients K^(n) for |n| <= bandwidth; zero beyond the band.
class PeriodicKernel {
public:
    PeriodicKernel(std::vector<cplx> coeffs, int grid_size) : coeffs_(std::move(coeffs)), grid_size_(grid_size)
    {
        if (coeffs_.size() % 2 == 0 || coeffs_.empty()) {
            throw std::invalid_argument("PeriodicKernel: need 2K+1 coefficients indexed -K..K");
        }
        if (grid_size_ < static_cast<int>(coeffs_.size())) {
            throw std::invalid_argument("PeriodicKernel: grid_size must be >= 2K+1");
        }
    }

    /// Real kernel with K^(n) = K^(-n) = rate(|n|).
    static PeriodicKernel from_rate(const std::function<double(int)>& rate, int bandwidth, int grid_size)
    {
        if (bandwidth < 0) throw std::invalid_argument("PeriodicKernel: bandwidth must be >= 0");
        std::vector<cplx> c(static_cast<std::size_t>(2 * bandwidth + 1));
        for (int n = -bandwidth; n <= bandwidth; ++n) c[static_cast<std::size_t>(n + bandwidth)] = rate(std::abs(n));
        return PeriodicKernel(std::move(c), grid_size);
    }

    int bandwidth() const { return static_cast<int>(coeffs_.size() / 2); }
    int grid_size() const { return grid_size_; }
    const std::vector<cplx>& coeffs() const { return coeffs_; }

    cplx coeff(int n) const
    {
        const int k = bandwidth();
        return std::abs(n) > k ? cplx(0.0) : coeffs_[static_cast<std::size_t>(n + k)];
    }

    bool hermitian(double tol = 0.0) const
    {
        for (int n = 1; n <= bandwidth(); ++n) {
            if (std::abs(coeff(-n) - std::conj(coeff(n))) > tol) return false;
        }
        return std::abs(coeff(0).imag()) <= tol;
    }

    PeriodicKernel with_coeff(int n, cplx value) const
    {
        if (std::abs(n) > bandwidth()) throw std::out_of_range("PeriodicKernel: mode outside the band");
        auto c = coeffs_;
        c[static_cast<std::size_t>(n + bandwidth())] = value;
        c[static_cast<std::size_t>(-n + bandwidth())] = std::conj(value);
        return PeriodicKernel(std::move(c), grid_size_);
    }

private:
    std::vector<cplx> coeffs_;
    int grid_size_ = 0;
};

/// Uniform torus grid x_j = j/N with weights 1/N.
inline Grid periodic_grid(int n)
{
    if (n < 1) throw std::invalid_argument("periodic_grid: need n >= 1");
    Grid g;
    g.nodes.resize(static_cast<std::size_t>(n));
    g.weights.assign(static_cast<std::size_t>(n), 1.0 / n);
    for (int j = 0; j < n; ++j) g.nodes[static_cast<std::size_t>(j)] = static_cast<double>(j) / n;
    return g;
}

inline bool is_periodic_grid(const GridFunction& f, int n)
{
    if (static_cast<int>(f.size()) != n || !(f.interval() == Interval(0.0, 1.0))) return false;
    for (int j = 0; j < n; ++j) {
        if (std::abs(f.nodes()[static_cast<std::size_t>(j)] - static_cast<double>(j) / n) > 1e-12) return false;
    }
    return true;
}

/// Discrete coefficients f^(n) = (1/N) sum_j f_j e^{-2 pi i n j / N} for n = 0..N/2.
inline std::vector<cplx> dft_coefficients(const std::vector<double>& values)
{
    const int n = static_cast<int>(values.size());
    std::vector<double> in(values);
    std::vector<cplx> out(static_cast<std::size_t>(n / 2 + 1));
    fftw_plan plan = fftw_plan_dft_r2c_1d(n, in.data(), reinterpret_cast<fftw_complex*>(out.data()), FFTW_ESTIMATE);
    fftw_execute(plan);
    fftw_destroy_plan(plan);
    for (auto& c : out) c /= static_cast<double>(n);
    return out;
}

inline std::vector<double> inverse_dft(std::vector<cplx> coeffs, int n)
{
    std::vector<double> out(static_cast<std::size_t>(n));
    fftw_plan plan =
        fftw_plan_dft_c2r_1d(n, reinterpret_cast<fftw_complex*>(coeffs.data()), out.data(), FFTW_ESTIMATE);
    fftw_execute(plan);
    fftw_destroy_plan(plan);
    return out;
}

/// T f = K * f, applied as K^(n) f^(n) on the grid's discrete Fourier modes.
inline GridFunction convolve(const PeriodicKernel& kernel, const GridFunction& f)
{
    const int n = kernel.grid_size();
    if (!is_periodic_grid(f, n)) throw std::invalid_argument("convolve: f must live on the kernel's periodic grid");
    if (!kernel.hermitian(1e-14)) throw std::invalid_argument("convolve: kernel must be real (Hermitian coefficients)");
    auto c = dft_coefficients(f.values());
    for (int m = 0; m < static_cast<int>(c.size()); ++m) {
        // on even grids the Nyquist mode stands for both +N/2 and -N/2, which lie outside any admissible band
        c[static_cast<std::size_t>(m)] *= kernel.coeff(m);
    }
    return f.with_values(inverse_dft(std::move(c), n));
}

/// Exact Fourier coefficient of a step function on [0,1) under e^{2 pi i n x}.
inline cplx fourier_coefficient(const StepFunction& f, int n)
{
    const auto& b = f.breakpoints();
    const auto& l = f.levels();
    if (b.front() < 0.0 || b.back() > 1.0) throw std::invalid_argument("fourier_coefficient: support must lie in [0,1]");
    if (n == 0) return f.integral();
    const double w = -2.0 * std::numbers::pi * n;
    cplx acc = 0.0;
    for (std::size_t k = 0; k < l.size(); ++k) {
        acc += l[k] * (std::exp(cplx(0.0, w * b[k + 1])) - std::exp(cplx(0.0, w * b[k])));
    }
    return acc / cplx(0.0, w);
}

/// Total variation on the torus: interior jumps plus the wrap-around jump,
/// with zero outside the breakpoints when they do not cover [0,1].
inline double periodic_tv(const StepFunction& f)
{
    const auto& b = f.breakpoints();
    const auto& l = f.levels();
    std::vector<double> seq;
    if (b.front() > 0.0) seq.push_back(0.0);
    seq.insert(seq.end(), l.begin(), l.end());
    if (b.back() < 1.0) seq.push_back(0.0);
    double tv = 0.0;
    for (std::size_t k = 1; k < seq.size(); ++k) tv += std::abs(seq[k] - seq[k - 1]);
    return tv + std::abs(seq.front() - seq.back());
}

/// max over 1 <= |n| <= n_max of |n| |f^(n)| / TV(f).
inline double taibleson_check(const StepFunction& f, int n_max = 512)
{
    if (!(f.linf() > 0.0)) throw std::invalid_argument("taibleson_check: zero function");
    if (n_max < 1) throw std::invalid_argument("taibleson_check: need n_max >= 1");
    const double tv = periodic_tv(f);
    double best = 0.0;
    for (int n = 1; n <= n_max; ++n) {
        const double a = std::max(std::abs(fourier_coefficient(f, n)), std::abs(fourier_coefficient(f, -n)));
        best = std::max(best, n * a);
    }
    if (tv == 0.0) return 0.0;
    return best / tv;
}

/// Unit-norm grid function in the kernel's nullspace built from a vanishing
/// coefficient K^(n0) = 0.
inline GridFunction nullspace_vector(const PeriodicKernel& kernel, int n0, double tol = 0.0)
{
    if (std::abs(kernel.coeff(n0)) > tol) throw std::invalid_argument("nullspace_vector: K^(n0) does not vanish");
    const int n = kernel.grid_size();
    if (2 * std::abs(n0) >= n) throw std::invalid_argument("nullspace_vector: mode not resolved by the grid");
    const Grid g = periodic_grid(n);
    std::vector<double> v(static_cast<std::size_t>(n));
    const double amp = n0 == 0 ? 1.0 : std::numbers::sqrt2;
    for (int j = 0; j < n; ++j) {
        v[static_cast<std::size_t>(j)] = amp * std::cos(2.0 * std::numbers::pi * n0 * g.nodes[static_cast<std::size_t>(j)]);
    }
    return GridFunction(Interval(0.0, 1.0), g, std::move(v));
}

/// Orthonormal (discrete L^2) real trigonometric basis of degree <= band,
/// sampled on the kernel grid, one column per function.
inline Eigen::MatrixXd trig_basis(int band, int grid_size)
{
    if (2 * band + 1 > grid_size) throw std::invalid_argument("trig_basis: band exceeds the grid");
    Eigen::MatrixXd b(grid_size, 2 * band + 1);
    for (int j = 0; j < grid_size; ++j) {
        const double x = static_cast<double>(j) / grid_size;
        b(j, 0) = 1.0;
        for (int m = 1; m <= band; ++m) {
            b(j, 2 * m - 1) = std::numbers::sqrt2 * std::cos(2.0 * std::numbers::pi * m * x);
            b(j, 2 * m) = std::numbers::sqrt2 * std::sin(2.0 * std::numbers::pi * m * x);
        }
    }
    return b;
}

/// Matrix of T on trigonometric polynomials of degree <= band, assembled by
/// applying convolve to each basis function.
inline Eigen::MatrixXd band_limited_matrix(const PeriodicKernel& kernel, int band)
{
    const int n = kernel.grid_size();
    const Eigen::MatrixXd b = trig_basis(band, n);
    const Grid g = periodic_grid(n);
    Eigen::MatrixXd tb(n, b.cols());
    for (Eigen::Index c = 0; c < b.cols(); ++c) {
        std::vector<double> v(b.col(c).data(), b.col(c).data() + n);
        const auto out = convolve(kernel, GridFunction(Interval(0.0, 1.0), g, std::move(v)));
        for (int j = 0; j < n; ++j) tb(j, c) = out.values()[static_cast<std::size_t>(j)];
    }
    return b.transpose() * tb / static_cast<double>(n);
}

inline double band_limited_min_singular(const PeriodicKernel& kernel, int band)
{
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(band_limited_matrix(kernel, band));
    return svd.singularValues().minCoeff();
}

inline double min_abs_coeff(const PeriodicKernel& kernel, int band)
{
    double m = std::abs(kernel.coeff(0));
    for (int n = 1; n <= band; ++n) m = std::min({m, std::abs(kernel.coeff(n)), std::abs(kernel.coeff(-n))});
    return m;
}

/// ||T f|| / ||f|| for a step function, evaluated exactly in coefficient space.
inline double periodic_gain(const PeriodicKernel& kernel, const StepFunction& f)
{
    double num = 0.0;
    for (int n = -kernel.bandwidth(); n <= kernel.bandwidth(); ++n) {
        num += std::norm(kernel.coeff(n) * fourier_coefficient(f, n));
    }
    return std::sqrt(num) / f.l2();
}

/// Square wave with n full periods on [0,1), unit L^2 norm, TV = 4n.
inline StepFunction square_wave(int n)
{
    if (n < 1) throw std::invalid_argument("square_wave: need n >= 1");
    std::vector<double> b(static_cast<std::size_t>(2 * n + 1)), l(static_cast<std::size_t>(2 * n));
    for (int k = 0; k <= 2 * n; ++k) b[static_cast<std::size_t>(k)] = static_cast<double>(k) / (2 * n);
    for (int k = 0; k < 2 * n; ++k) l[static_cast<std::size_t>(k)] = k % 2 == 0 ? 1.0 : -1.0;
    return StepFunction(std::move(b), std::move(l));
}

/// Square wave with n periods, shifted by a quarter period (cosine phase).
inline StepFunction square_wave_cos(int n)
{
    if (n < 1) throw std::invalid_argument("square_wave_cos: need n >= 1");
    const double q = 1.0 / (4 * n);
    std::vector<double> b{0.0}, l;
    double level = 1.0;
    for (int k = 0; k < 2 * n; ++k) {
        b.push_back(q + static_cast<double>(k) / (2 * n));
        l.push_back(level);
        level = -level;
    }
    b.push_back(1.0);
    l.push_back(1.0);
    return StepFunction(std::move(b), std::move(l));
}

struct DecayDemoRow {
    int n = 0;
    double kernel_abs = 0.0;
    double envelope = 0.0;
    double ratio = 0.0;
};

struct DecayDemoReport {
    std::vector<DecayDemoRow> rows;
    LinearFit exponential;
    LinearFit polynomial;
    double aic_exponential = 0.0;
    double aic_polynomial = 0.0;
    /// max over rows of max(ratio, 1/ratio)
    double worst_factor = 0.0;

    std::string preferred_model() const { return aic_exponential <= aic_polynomial ? "exponential" : "polynomial"; }
};

/// Kernel with K^(n) = rate(|n|) (the mean mode copies rate(1)) and the envelope n -> inf ||T f|| / ||f||
/// over square waves and pure modes at frequency n (TV of order n).
inline std::pair<PeriodicKernel, DecayDemoReport> designed_decay_demo(const std::function<double(int)>& rate,
                                                                      int n_max = 32)
{
    if (n_max < 3) throw std::invalid_argument("designed_decay_demo: need n_max >= 3");
    for (int n = 1; n <= 3 * n_max; ++n) {
        if (!(rate(n) > 0.0)) throw std::invalid_argument("designed_decay_demo: rate must be positive");
    }
    const int band = 3 * n_max;
    const PeriodicKernel kernel =
        PeriodicKernel::from_rate([&](int n) { return rate(std::max(n, 1)); }, band, 8 * band);
    DecayDemoReport rep;
    std::vector<double> ns, env;
    for (int n = 1; n <= n_max; ++n) {
        DecayDemoRow row;
        row.n = n;
        row.kernel_abs = std::abs(kernel.coeff(n));
        row.envelope = std::min({row.kernel_abs, periodic_gain(kernel, square_wave(n)),
                                 periodic_gain(kernel, square_wave_cos(n))});
        row.ratio = row.envelope / row.kernel_abs;
        rep.worst_factor = std::max(rep.worst_factor, std::max(row.ratio, 1.0 / row.ratio));
        ns.push_back(n);
        env.push_back(row.envelope);
        rep.rows.push_back(row);
    }
    rep.exponential = semilog_fit(ns, env);
    rep.polynomial = loglog_fit(ns, env);
    rep.aic_exponential = aic(rep.exponential);
    rep.aic_polynomial = aic(rep.polynomial);
    return {kernel, rep};
}

}  // namespace thilbert
