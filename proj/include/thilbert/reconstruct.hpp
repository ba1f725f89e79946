#pragma once

// Total-variation regularized inversion with the discrepancy principle and
// the stability-diameter experiment built on it.

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "core.hpp"
#include "operator.hpp"
#include "stats.hpp"

namespace thilbert {

/// Exact solution of min_x 1/2 |x - y|^2 + lambda sum |x_{k+1} - x_k| by the
/// taut-string style direct algorithm of Condat.
inline std::vector<double> tv_prox(const std::vector<double>& y, double lambda)
{
    const int n = static_cast<int>(y.size());
    std::vector<double> x(y.size());
    if (n == 0) return x;
    if (!(lambda > 0.0)) return y;
    int k = 0, k0 = 0, kplus = 0, kminus = 0;
    double umin = lambda, umax = -lambda;
    double vmin = y[0] - lambda, vmax = y[0] + lambda;
    const double twolambda = 2.0 * lambda;
    const double minlambda = -lambda;
    auto at = [&](int i) -> double& { return x[static_cast<std::size_t>(i)]; };
    auto in = [&](int i) { return y[static_cast<std::size_t>(i)]; };
    for (;;) {
        while (k == n - 1) {
            if (umin < 0.0) {
                do at(k0++) = vmin;
                while (k0 <= kminus);
                k = kminus = k0;
                vmin = in(k);
                umin = lambda;
                umax = vmin + umin - vmax;
            } else if (umax > 0.0) {
                do at(k0++) = vmax;
                while (k0 <= kplus);
                k = kplus = k0;
                vmax = in(k);
                umax = minlambda;
                umin = vmax + umax - vmin;
            } else {
                vmin += umin / (k - k0 + 1);
                do at(k0++) = vmin;
                while (k0 <= k);
                return x;
            }
        }
        if ((umin += in(k + 1) - vmin) < minlambda) {
            do at(k0++) = vmin;
            while (k0 <= kminus);
            k = kplus = kminus = k0;
            vmin = in(k);
            vmax = vmin + twolambda;
            umin = lambda;
            umax = minlambda;
        } else if ((umax += in(k + 1) - vmax) > lambda) {
            do at(k0++) = vmax;
            while (k0 <= kplus);
            k = kplus = kminus = k0;
            vmax = in(k);
            vmin = vmax - twolambda;
            umin = lambda;
            umax = minlambda;
        } else {
            ++k;
            if (umin >= lambda) {
                kminus = k;
                vmin += (umin - lambda) / (kminus - k0 + 1);
                umin = lambda;
            }
            if (umax <= minlambda) {
                kplus = k;
                vmax += (umax + lambda) / (kplus - k0 + 1);
                umax = minlambda;
            }
        }
    }
}

inline double sequence_tv(const std::vector<double>& x)
{
    double s = 0.0;
    for (std::size_t k = 1; k < x.size(); ++k) s += std::abs(x[k] - x[k - 1]);
    return s;
}

struct InverseProblem {
    OperatorMatrix op;
    StepFunction f_ex;
    GridFunction g_exact;
    GridFunction g_noisy;
    double delta = 0.0;
    double kappa = 0.0;
    std::uint64_t noise_seed = 0;
    /// delta >= ||g_exact||: the data carry no usable signal
    bool pure_noise = false;
};

/// Noisy data g_exact + e with ||e||_{L^2(J)} = delta exactly.
inline InverseProblem make_problem(const CaseConfig& config, const StepFunction& f_ex, double delta,
                                   std::uint64_t noise_seed, int cells_i = 64, int cells_j = 64,
                                   double kappa = 0.0, KernelScale scale = KernelScale::Unitary)
{
    if (!(f_ex.linf() > 0.0)) throw std::invalid_argument("make_problem: f_ex must be nonzero");
    if (!(delta >= 0.0)) throw std::invalid_argument("make_problem: delta must be >= 0");
    InverseProblem p;
    p.op = assemble(config, cells_i, cells_j, scale);
    p.f_ex = f_ex;
    p.delta = delta;
    p.kappa = kappa > 0.0 ? kappa : f_ex.tv(TvConvention::Interior);
    p.noise_seed = noise_seed;
    p.g_exact = apply(p.op, f_ex);
    std::vector<double> g = p.g_exact.values();
    if (delta > 0.0) {
        std::mt19937_64 rng(noise_seed);
        std::normal_distribution<double> normal(0.0, 1.0);
        std::vector<double> e(g.size());
        for (auto& v : e) v = normal(rng);
        const GridFunction eg = p.g_exact.with_values(e);
        const double s = delta / eg.l2();
        for (std::size_t k = 0; k < g.size(); ++k) g[k] += s * e[k];
    }
    p.g_noisy = p.g_exact.with_values(std::move(g));
    p.pure_noise = delta >= p.g_exact.l2();
    return p;
}

enum class TvMethod {
    /// ADMM on the constrained form: TV prox plus exact projection onto the
    /// discrepancy ball
    Constrained,
    /// monotone FISTA with step 1 / sigma_0^2 on the penalized form, alpha by bisection
    PenalizedFista,
};

struct ReconstructionOptions {
    TvMethod method = TvMethod::Constrained;
    int max_iterations = 50000;
    double objective_rtol = 1e-9;
    double alpha_lo = 1e-14;
    double alpha_hi = 1e2;
    int max_bisections = 60;
    /// accepted residual band as multiples of delta
    double band_lo = 0.95;
    double band_hi = 1.0;
    /// when set, the reconstruction also satisfies int_I f = *integral
    std::optional<double> integral;
};

struct ReconstructionResult {
    GridFunction f_hat;
    double residual = 0.0;
    double tv_of_f_hat = 0.0;
    double alpha = 0.0;
    int iterations = 0;
    int bisections = 0;
    bool converged = false;
    /// the TV budget kappa is exceeded by the output
    bool kappa_binding = false;
    /// objective increased between accepted iterates (should never happen)
    bool monotone = true;
};

namespace detail {

// Cell values x of f on I; data term 1/2 |A x - b|^2 with A = entries * sqrt(h_I)
// and b the orthonormal coordinates of g on J.
class TvSolver {
public:
    TvSolver(const InverseProblem& p, const ReconstructionOptions& opt) : opt_(opt)
    {
        h_ = p.op.h_i();
        a_ = p.op.entries * std::sqrt(h_);
        const double sj = std::sqrt(p.op.h_j());
        b_.resize(p.op.cells_j);
        for (int m = 0; m < p.op.cells_j; ++m) b_(m) = p.g_noisy.values()[static_cast<std::size_t>(m)] * sj;
        if (opt.integral) {
            // x = y - mean(y) + level: TV(x) = TV(y) and A x - b = (A P) y - (b - level A 1)
            if (!std::isfinite(*opt.integral)) throw std::invalid_argument("reconstruct_tv: integral must be finite");
            level_ = *opt.integral / p.op.config.interval_i.length();
            const Eigen::VectorXd a1 = a_.rowwise().sum();
            a_ -= a1 * Eigen::RowVectorXd::Constant(a_.cols(), 1.0 / static_cast<double>(a_.cols()));
            b_ -= *level_ * a1;
        }
        ata_ = a_.transpose() * a_;
        atb_ = a_.transpose() * b_;
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(a_, Eigen::ComputeThinU | Eigen::ComputeThinV);
        lipschitz_ = svd.singularValues()(0) * svd.singularValues()(0);
        svd_s_ = svd.singularValues();
        svd_v_ = svd.matrixV();
        bh_ = svd.matrixU().transpose() * b_;
        b_perp2_ = std::max(0.0, b_.squaredNorm() - bh_.squaredNorm());
    }

    double residual(const Eigen::VectorXd& x) const { return (a_ * x - b_).norm(); }

    double objective(const Eigen::VectorXd& x, double alpha) const
    {
        const double r = residual(x);
        return 0.5 * r * r + alpha * tv(x);
    }

    static double tv(const Eigen::VectorXd& x)
    {
        double s = 0.0;
        for (Eigen::Index k = 1; k < x.size(); ++k) s += std::abs(x(k) - x(k - 1));
        return s;
    }

    Eigen::VectorXd gradient(const Eigen::VectorXd& x) const
    {
        return ata_ * x - atb_;
    }

    Eigen::VectorXd prox(const Eigen::VectorXd& z, double alpha) const { return prox_scaled(z, alpha / lipschitz_); }

    static Eigen::VectorXd prox_scaled(const Eigen::VectorXd& z, double lambda)
    {
        std::vector<double> y(z.data(), z.data() + z.size());
        const auto x = tv_prox(y, lambda);
        return Eigen::Map<const Eigen::VectorXd>(x.data(), z.size());
    }

    /// Cell values of f for a solver iterate (identity without a prescribed integral).
    Eigen::VectorXd cells(const Eigen::VectorXd& y) const
    {
        if (!level_) return y;
        return y.array() - y.mean() + *level_;
    }

    /// FISTA for a fixed alpha, warm-started at x0; the momentum restarts
    /// whenever a step would increase the objective, so accepted iterates are monotone.
    Eigen::VectorXd solve(const Eigen::VectorXd& x0, double alpha, int& iterations, bool& monotone) const
    {
        Eigen::VectorXd x = x0, y = x0;
        double t = 1.0;
        double fx = objective(x, alpha);
        iterations = 0;
        for (int it = 0; it < opt_.max_iterations; ++it) {
            iterations = it + 1;
            Eigen::VectorXd z = prox(y - gradient(y) / lipschitz_, alpha);
            double fz = objective(z, alpha);
            if (fz > fx) {
                if (t == 1.0) {
                    // plain proximal step from x rejected: x is stationary to rounding
                    if (fz > fx + 1e-12 * std::max(1.0, std::abs(fx))) monotone = false;
                    break;
                }
                t = 1.0;
                y = x;
                continue;
            }
            const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
            y = z + ((t - 1.0) / tn) * (z - x);
            const double change = (fx - fz) / std::max(std::abs(fz), std::numeric_limits<double>::min());
            x = std::move(z);
            fx = fz;
            t = tn;
            if (it > 10 && change < opt_.objective_rtol) break;
        }
        return x;
    }

    /// Euclidean projection of v onto {x : |A x - b| <= delta}.
    Eigen::VectorXd project_discrepancy(const Eigen::VectorXd& v, double delta) const
    {
        const Eigen::VectorXd vh = svd_v_.transpose() * v;
        const Eigen::Index n = vh.size();
        Eigen::VectorXd e(n);
        for (Eigen::Index k = 0; k < n; ++k) e(k) = svd_s_(k) * vh(k) - bh_(k);
        auto res2 = [&](double mu) {
            double acc = b_perp2_;
            for (Eigen::Index k = 0; k < n; ++k) {
                const double d = e(k) / (1.0 + mu * svd_s_(k) * svd_s_(k));
                acc += d * d;
            }
            return acc;
        };
        const double target = delta * delta;
        if (res2(0.0) <= target) return v;
        double lo = 0.0, hi = 1.0;
        while (res2(hi) > target && hi < 1e300) hi *= 16.0;
        for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
            const double mid = lo == 0.0 ? hi / 16.0 : std::sqrt(lo * hi);
            if (res2(mid) > target) {
                lo = mid;
            } else {
                hi = mid;
            }
            if (lo == 0.0 && mid < 1e-300) break;
        }
        const double mu = hi;
        Eigen::VectorXd xh(n);
        for (Eigen::Index k = 0; k < n; ++k) {
            const double s2 = svd_s_(k) * svd_s_(k);
            xh(k) = (vh(k) + mu * svd_s_(k) * bh_(k)) / (1.0 + mu * s2);
        }
        return v + svd_v_ * (xh - vh);
    }

    /// ADMM for min TV(w) subject to |A x - b| <= delta and x = w, with the TV
    /// prox on w and the exact discrepancy-ball projection on x. Returns the
    /// feasible iterate x; the multiplier estimate rho * lambda plays the role
    /// of the penalty weight.
    Eigen::VectorXd solve_constrained(const Eigen::VectorXd& x0, double delta, int& iterations, double& alpha) const
    {
        const Eigen::Index n = x0.size();
        Eigen::VectorXd w = x0, u = Eigen::VectorXd::Zero(n), x = x0;
        double rho = 1.0;
        iterations = 0;
        double prev_tv = tv(w);
        int quiet = 0;
        for (int it = 0; it < opt_.max_iterations; ++it) {
            x = project_discrepancy(w - u, delta);
            const Eigen::VectorXd w_old = w;
            w = prox_scaled(x + u, 1.0 / rho);
            u += x - w;
            iterations = it + 1;
            const double primal = (x - w).norm();
            const double dual = rho * (w - w_old).norm();
            const double scale = std::max({x.norm(), w.norm(), 1e-300});
            const double tvx = tv(x);
            quiet = std::abs(tvx - prev_tv) <= opt_.objective_rtol * std::max(tvx, 1e-300) ? quiet + 1 : 0;
            prev_tv = tvx;
            if (it > 10 && quiet >= 5 && primal <= 1e-9 * scale && dual <= 1e-9 * scale * rho) break;
            if (it % 10 == 9) {
                if (primal > 10.0 * dual) {
                    rho *= 2.0;
                    u /= 2.0;
                } else if (dual > 10.0 * primal) {
                    rho /= 2.0;
                    u *= 2.0;
                }
            }
        }
        alpha = 1.0 / rho;
        return x;
    }

    /// Truncated SVD pseudo-inverse, singular values below rcond * s_max dropped.
    Eigen::VectorXd pseudo_inverse(double rcond) const
    {
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(a_, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const auto& s = svd.singularValues();
        Eigen::VectorXd c = svd.matrixU().transpose() * b_;
        for (Eigen::Index k = 0; k < s.size(); ++k) c(k) = s(k) > rcond * s(0) ? c(k) / s(k) : 0.0;
        return svd.matrixV() * c;
    }

    int size() const { return static_cast<int>(a_.cols()); }

private:
    ReconstructionOptions opt_;
    double h_ = 0.0;
    std::optional<double> level_;
    double lipschitz_ = 1.0;
    Eigen::MatrixXd a_;
    Eigen::MatrixXd ata_;
    Eigen::VectorXd svd_s_;
    Eigen::MatrixXd svd_v_;
    Eigen::VectorXd bh_;
    double b_perp2_ = 0.0;
    Eigen::VectorXd b_;
    Eigen::VectorXd atb_;
};

}  // namespace detail

/// Penalized least squares 1/2 |H_T f - g|^2 + alpha TV(f) with alpha chosen by
/// bisection on log alpha until the residual lies in the discrepancy band.
inline ReconstructionResult reconstruct_tv(const InverseProblem& problem, const ReconstructionOptions& opt = {})
{
    const detail::TvSolver solver(problem, opt);
    ReconstructionResult out;
    auto finish = [&](const Eigen::VectorXd& y, double alpha) {
        const Eigen::VectorXd x = solver.cells(y);
        std::vector<double> v(x.data(), x.data() + x.size());
        out.f_hat = GridFunction(problem.op.config.interval_i, midpoint_grid(problem.op.config.interval_i, problem.op.cells_i),
                                 std::move(v));
        out.residual = solver.residual(x);
        out.tv_of_f_hat = detail::TvSolver::tv(x);
        out.alpha = alpha;
        out.kappa_binding = out.tv_of_f_hat > problem.kappa * (1.0 + 1e-6);
    };

    if (problem.delta == 0.0) {
        int it = 0;
        const Eigen::VectorXd x0 = solver.pseudo_inverse(1e-12);
        const Eigen::VectorXd x = solver.solve(x0, opt.alpha_lo, it, out.monotone);
        out.iterations = it;
        finish(x, opt.alpha_lo);
        out.converged = out.residual <= 1e-9;
        return out;
    }

    if (opt.method == TvMethod::Constrained) {
        int it = 0;
        double alpha = 0.0;
        const Eigen::VectorXd x = solver.solve_constrained(Eigen::VectorXd::Zero(solver.size()), problem.delta, it, alpha);
        out.iterations = it;
        finish(x, alpha);
        out.converged = it < opt.max_iterations && out.residual <= opt.band_hi * problem.delta * (1.0 + 1e-9) &&
                        out.residual >= opt.band_lo * problem.delta;
        return out;
    }

    const double lo_target = opt.band_lo * problem.delta;
    const double hi_target = opt.band_hi * problem.delta;
    double log_lo = std::log(opt.alpha_lo);
    double log_hi = std::log(opt.alpha_hi);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(solver.size());
    int total = 0;

    // residual grows with alpha; the upper end must overshoot the band
    int it = 0;
    Eigen::VectorXd x_hi = solver.solve(x, opt.alpha_hi, it, out.monotone);
    total += it;
    if (solver.residual(x_hi) < lo_target) {
        out.iterations = total;
        finish(x_hi, opt.alpha_hi);
        return out;
    }
    x = x_hi;
    for (int b = 0; b < opt.max_bisections; ++b) {
        const double mid = 0.5 * (log_lo + log_hi);
        x = solver.solve(x, std::exp(mid), it, out.monotone);
        total += it;
        out.bisections = b + 1;
        const double r = solver.residual(x);
        if (r >= lo_target && r <= hi_target) {
            out.iterations = total;
            finish(x, std::exp(mid));
            out.converged = true;
            return out;
        }
        if (r > hi_target) {
            log_hi = mid;
        } else {
            log_lo = mid;
        }
    }
    out.iterations = total;
    finish(x, std::exp(0.5 * (log_lo + log_hi)));
    return out;
}

/// ||f_hat - f_ex||_{L^2(I)} including the part of f_ex not representable on the mesh.
inline double reconstruction_error(const InverseProblem& p, const GridFunction& f_hat)
{
    const Eigen::VectorXd c = cell_coefficients(p.op, p.f_ex);
    const double h = p.op.h_i();
    double acc = 0.0, proj = 0.0;
    for (int n = 0; n < p.op.cells_i; ++n) {
        const double avg = c(n) / std::sqrt(h);
        const double d = f_hat.values()[static_cast<std::size_t>(n)] - avg;
        acc += h * d * d;
        proj += c(n) * c(n);
    }
    const double fe = p.f_ex.l2();
    return std::sqrt(acc + std::max(0.0, fe * fe - proj));
}

/// Three-level test target: 0 on the outer quarters of I, 1 on the middle half.
inline StepFunction box_target(const Interval& I)
{
    const double q = 0.25 * I.length();
    return StepFunction({I.lo, I.lo + q, I.hi - q, I.hi}, {0.0, 1.0, 0.0});
}

struct DiameterRow {
    double delta = 0.0;
    double median_error = 0.0;
    double bound = 0.0;
    bool in_regime = false;
    std::vector<double> errors;
    std::vector<double> residuals;
    std::vector<int> iterations;
    int nonconverged = 0;
};

struct DiameterReport {
    std::vector<DiameterRow> rows;
    double c1 = 0.0;
    double c2 = 0.0;
    double kappa = 0.0;
    /// Pearson correlation of median error with 1 / sqrt(|ln delta|)
    double pearson = 0.0;
    bool strictly_decreasing = false;
    bool below_bound = false;
};

/// sqrt((1/(2e) + 4 c2 kappa^2) / |ln(2 delta / c1)|), valid for delta <= c1/2.
inline double diameter_bound(double delta, double c1, double c2, double kappa)
{
    return std::sqrt((1.0 / (2.0 * std::numbers::e) + 4.0 * c2 * kappa * kappa) / std::abs(std::log(2.0 * delta / c1)));
}

inline DiameterReport diameter_rate(const CaseConfig& config, const StepFunction& f_ex,
                                    const std::vector<double>& delta_list, const std::vector<std::uint64_t>& seeds,
                                    double c1, double c2, int cells = 64, double kappa = 0.0,
                                    const ReconstructionOptions& opt = {})
{
    if (delta_list.size() < 4) throw std::invalid_argument("diameter_rate: need >= 4 noise levels");
    for (std::size_t k = 1; k < delta_list.size(); ++k) {
        if (!(delta_list[k] < delta_list[k - 1])) throw std::invalid_argument("diameter_rate: deltas must descend");
    }
    if (!(delta_list.front() / delta_list.back() >= 1e3 * (1.0 - 1e-12))) {
        throw std::invalid_argument("diameter_rate: deltas must span >= 3 decades");
    }
    if (seeds.empty()) throw std::invalid_argument("diameter_rate: need >= 1 seed");
    DiameterReport rep;
    rep.c1 = c1;
    rep.c2 = c2;
    rep.kappa = kappa > 0.0 ? kappa : f_ex.tv(TvConvention::Interior);
    std::vector<double> xs, ys;
    for (double delta : delta_list) {
        DiameterRow row;
        row.delta = delta;
        for (auto seed : seeds) {
            const auto p = make_problem(config, f_ex, delta, seed, cells, cells, rep.kappa);
            const auto r = reconstruct_tv(p, opt);
            row.errors.push_back(reconstruction_error(p, r.f_hat));
            row.residuals.push_back(r.residual);
            row.iterations.push_back(r.iterations);
            if (!r.converged) ++row.nonconverged;
        }
        row.median_error = median(row.errors);
        row.in_regime = delta <= c1 / 2.0;
        row.bound = row.in_regime ? diameter_bound(delta, c1, c2, rep.kappa) : std::numeric_limits<double>::infinity();
        xs.push_back(1.0 / std::sqrt(std::abs(std::log(delta))));
        ys.push_back(row.median_error);
        rep.rows.push_back(std::move(row));
    }
    rep.pearson = pearson(xs, ys);
    rep.strictly_decreasing = true;
    rep.below_bound = true;
    for (std::size_t k = 0; k < rep.rows.size(); ++k) {
        if (k > 0 && !(rep.rows[k].median_error < rep.rows[k - 1].median_error)) rep.strictly_decreasing = false;
        if (rep.rows[k].in_regime && !(rep.rows[k].median_error <= rep.rows[k].bound)) rep.below_bound = false;
    }
    return rep;
}

}  // namespace thilbert
