#pragma once

// Empirical stability bounds: test families, the ratio ||H_T f|| / ||f||
// against the various smoothness regressors, and lower-envelope certificates.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "core.hpp"
#include "operator.hpp"
#include "spectral.hpp"
#include "stats.hpp"

namespace thilbert {

enum class TheoremId { Thm1, Thm2, Thm2a, Thm3, Thm3a, Thm4, Polydecay, Conjecture };

inline std::string_view to_string(TheoremId id)
{
    switch (id) {
    case TheoremId::Thm1: return "thm1";
    case TheoremId::Thm2: return "thm2";
    case TheoremId::Thm2a: return "thm2a";
    case TheoremId::Thm3: return "thm3";
    case TheoremId::Thm3a: return "thm3a";
    case TheoremId::Thm4: return "thm4";
    case TheoremId::Polydecay: return "polydecay";
    case TheoremId::Conjecture: return "conjecture";
    }
    return "?";
}

/// A test function: either an exact step function or samples of a smooth one.
struct FamilyMember {
    std::string label;
    double param = 0.0;
    std::optional<StepFunction> step;
    std::optional<GridFunction> smooth;

    double l2() const { return step ? step->l2() : smooth->l2(); }
};

using Family = std::vector<FamilyMember>;

// ---------------------------------------------------------------------------
// Exact norms for step functions

namespace detail {

template <class F>
double graded_integral(F&& g, double p, double q, int levels = 24, double ratio = 0.2)
{
    const auto& r = bump_rule();
    auto panel = [&](double a, double b) {
        double acc = 0.0;
        const double half = 0.5 * (b - a);
        const double mid = 0.5 * (a + b);
        for (std::size_t k = 0; k < r.nodes.size(); ++k) acc += half * r.weights[k] * g(mid + half * r.nodes[k]);
        return acc;
    };
    const double m = 0.5 * (p + q);
    double acc = 0.0;
    // geometric panels towards p on [p, m] and towards q on [m, q]
    double len = m - p;
    for (int k = 0; k < levels; ++k) {
        const double hi = p + len;
        const double lo = p + len * ratio;
        acc += panel(lo, hi);
        acc += panel(q - (hi - p), q - (lo - p));
        len *= ratio;
    }
    acc += panel(p, p + len);
    acc += panel(q - len, q);
    return acc;
}

}  // namespace detail

/// ||H_T f||_{L^2(window)} for a step function, with the log singularities at
/// breakpoints inside the window integrated on geometrically graded panels.
inline double hilbert_step_norm_l2(const StepFunction& f, const Interval& window,
                                   KernelScale scale = KernelScale::Unitary)
{
    std::vector<double> cuts{window.lo, window.hi};
    for (double t : f.breakpoints()) {
        if (t > window.lo && t < window.hi) cuts.push_back(t);
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    const double pre = kernel_prefactor<double>(scale);
    const auto& bp = f.breakpoints();
    auto sq = [&](double x) {
        double acc = 0.0;
        for (std::size_t k = 0; k < f.pieces(); ++k) {
            if (f.levels()[k] == 0.0) continue;
            const double lo = std::abs(x - bp[k]);
            const double hi = std::abs(x - bp[k + 1]);
            if (lo == 0.0 || hi == 0.0) continue;
            acc += f.levels()[k] * std::log(lo / hi);
        }
        acc *= pre;
        return acc * acc;
    };
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) total += detail::graded_integral(sq, cuts[k], cuts[k + 1]);
    return std::sqrt(total);
}

// ---------------------------------------------------------------------------
// Families

/// sin(2 pi N t) on a sub-interval [lo + 2 width, hi - 2 width] of `region`,
/// with t the affine coordinate of that sub-interval, convolved with the bump
/// of half-width `width` and sampled on `grid` over I.
inline FamilyMember mollified_sine(const Interval& I, const Interval& region, double n, double width, const Grid& grid)
{
    if (!(n > 0.0)) throw std::invalid_argument("mollified_sine: N = 0 gives the zero function");
    if (!I.contains(region)) throw std::invalid_argument("mollified_sine: region outside I");
    if (!(width > 0.0) || !(4.0 * width < region.length())) {
        throw std::invalid_argument("mollified_sine: width too large for the region");
    }
    const Interval s(region.lo + 2.0 * width, region.hi - 2.0 * width);
    auto g = [&](double y) { return std::sin(2.0 * std::numbers::pi * n * (y - s.lo) / s.length()); };
    FamilyMember m;
    m.label = "sine";
    m.param = n;
    m.smooth = convolve_with_bump(g, s, width, I, grid);
    return m;
}

inline Family family_mollified_sine(const Interval& I, const std::vector<double>& n_list, double width,
                                    const Grid& grid)
{
    Family fam;
    for (double n : n_list) {
        if (!(width * n < 0.5)) throw std::invalid_argument("family_mollified_sine: width too large for N");
        fam.push_back(mollified_sine(I, I, n, width, grid));
    }
    return fam;
}

/// Same construction confined to a sub-region of I (zero elsewhere on I).
inline Family family_localized_sine(const Interval& I, const Interval& region, const std::vector<double>& n_list,
                                    double width, const Grid& grid, const std::string& label)
{
    Family fam;
    for (double n : n_list) {
        auto m = mollified_sine(I, region, n, width, grid);
        m.label = label;
        fam.push_back(std::move(m));
    }
    return fam;
}

/// Step functions on m equal cells of `region` with levels uniform in [-1, 1]
/// and one randomly chosen cell set to zero, so that each vanishes on I.
inline Family family_random_steps(const Interval& region, const std::vector<int>& m_list, std::uint64_t seed,
                                  int per_m = 1)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> level(-1.0, 1.0);
    Family fam;
    for (int m : m_list) {
        if (m < 2) throw std::invalid_argument("family_random_steps: need m >= 2");
        for (int rep = 0; rep < per_m; ++rep) {
            std::vector<double> lv(static_cast<std::size_t>(m));
            for (auto& v : lv) v = level(rng);
            std::uniform_int_distribution<int> pick(0, m - 1);
            lv[static_cast<std::size_t>(pick(rng))] = 0.0;
            FamilyMember mem;
            mem.label = "random_step";
            mem.param = m;
            mem.step = StepFunction::uniform(region, std::move(lv));
            fam.push_back(std::move(mem));
        }
    }
    return fam;
}

/// Strictly positive random step functions on I with random breakpoints.
inline std::vector<StepFunction> random_positive_steps(const Interval& I, int count, std::uint64_t seed,
                                                       int max_pieces = 12)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> level(0.1, 2.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> pieces(1, max_pieces);
    std::vector<StepFunction> out;
    for (int c = 0; c < count; ++c) {
        const int m = pieces(rng);
        std::vector<double> cuts;
        for (int k = 0; k < m - 1; ++k) cuts.push_back(I.lo + I.length() * (0.02 + 0.96 * unit(rng)));
        std::sort(cuts.begin(), cuts.end());
        cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
        std::vector<double> bp{I.lo};
        bp.insert(bp.end(), cuts.begin(), cuts.end());
        bp.push_back(I.hi);
        std::vector<double> lv(bp.size() - 1);
        for (auto& v : lv) v = level(rng);
        out.emplace_back(std::move(bp), std::move(lv));
    }
    return out;
}

/// Mollified versions of the given step members, sampled on `grid`.
inline Family family_mollified_steps(const Interval& I, const Family& steps, double width, const Grid& grid)
{
    Family fam;
    for (const auto& s : steps) {
        if (!s.step) throw std::invalid_argument("family_mollified_steps: step members required");
        FamilyMember m;
        m.label = "mollified_" + s.label;
        m.param = s.param;
        m.smooth = mollify(*s.step, I, width, grid, false);
        fam.push_back(std::move(m));
    }
    return fam;
}

// ---------------------------------------------------------------------------
// Evaluation context

struct BoundsOptions {
    KernelScale scale = KernelScale::Unitary;
    /// Gap: cells of the midpoint grid on I shared with L_I
    int cells_i = 2048;
    /// Gap: Gauss grid on J
    int quad_cells_j = 32;
    int points_j = 8;
    /// Overlap: Galerkin cells on I, J density factor and samples per I cell
    int galerkin_cells_i = 384;
    int galerkin_density = 2;
    int samples_per_cell = 4;
};

/// Everything needed to evaluate ||H_T f|| / ||f|| and the regressors for one
/// interval pair.
class BoundsContext {
public:
    explicit BoundsContext(const CaseConfig& config, const BoundsOptions& opt = {}) : config_(config), opt_(opt)
    {
        if (config.case_id == Case::Gap) {
            sl_ = make_sturm_liouville(config, opt.cells_i);
            grid_i_ = sl_->grid;
            grid_j_ = gauss_grid(config.interval_j, opt.quad_cells_j, opt.points_j);
        } else if (config.case_id == Case::Overlap) {
            op_ = overlap_operator(config, opt.galerkin_cells_i, opt.galerkin_density, opt.scale);
            grid_i_ = midpoint_grid(config.interval_i, opt.galerkin_cells_i * opt.samples_per_cell);
        } else {
            throw std::invalid_argument("BoundsContext: Gap or Overlap configuration required");
        }
    }

    const CaseConfig& config() const { return config_; }
    const BoundsOptions& options() const { return opt_; }
    const Grid& grid_i() const { return grid_i_; }
    /// Gauss grid on J (Gap only)
    const Grid& grid_j() const
    {
        if (config_.case_id != Case::Gap) throw std::logic_error("BoundsContext: no J grid for this configuration");
        return grid_j_;
    }
    const SturmLiouvilleSpec& sturm_liouville() const
    {
        if (!sl_) throw std::logic_error("BoundsContext: no L_I for this configuration");
        return *sl_;
    }

    /// ||H_T f||_{L^2(window)} / ||f||_{L^2(I)}; window defaults to J.
    double ratio(const FamilyMember& f, std::optional<Interval> window = std::nullopt) const
    {
        const Interval w = window.value_or(config_.interval_j);
        if (!config_.interval_j.contains(w)) throw std::invalid_argument("ratio: window must lie in J");
        if (f.step) return hilbert_step_norm_l2(*f.step, w, opt_.scale) / f.step->l2();
        const GridFunction& g = *f.smooth;
        if (config_.case_id == Case::Gap) {
            const Grid gw = window ? gauss_grid(w, opt_.quad_cells_j, opt_.points_j) : grid_j_;
            auto cw = config_;
            cw.interval_j = w;
            return apply_separated(cw, g, gw, opt_.scale).l2() / g.l2();
        }
        const Eigen::VectorXd c = cell_coefficients(*op_, g);
        const Eigen::VectorXd img = op_->entries * c;
        double num = 0.0;
        for (int m = 0; m < op_->cells_j; ++m) {
            const double lo = op_->mesh_j[static_cast<std::size_t>(m)];
            const double hi = op_->mesh_j[static_cast<std::size_t>(m) + 1];
            const double overlap = std::max(0.0, std::min(hi, w.hi) - std::max(lo, w.lo));
            num += img(m) * img(m) * overlap / (hi - lo);
        }
        return std::sqrt(num) / c.norm();
    }

private:
    CaseConfig config_;
    BoundsOptions opt_;
    std::optional<SturmLiouvilleSpec> sl_;
    std::optional<OperatorMatrix> op_;
    Grid grid_i_;
    Grid grid_j_;
};

/// For each K in `highest`, the minimiser of ||H_T f||_{L^2(J)} / ||f|| over
/// span{sin(k pi t) : k = lowest..K}, t the affine coordinate on I. These sit
/// near the bottom of the spectrum for their smoothness. Gap only.
inline Family family_sine_span_minimizers(const BoundsContext& ctx, int lowest, const std::vector<int>& highest)
{
    const CaseConfig& cfg = ctx.config();
    if (cfg.case_id != Case::Gap) throw std::invalid_argument("family_sine_span_minimizers: Gap configuration required");
    if (lowest < 1) throw std::invalid_argument("family_sine_span_minimizers: lowest must be >= 1");
    const Interval I = cfg.interval_i;
    const Grid& gj = ctx.grid_j();
    Family fam;
    for (int top : highest) {
        if (top <= lowest) throw std::invalid_argument("family_sine_span_minimizers: need K > lowest");
        const int m = top - lowest + 1;
        std::vector<GridFunction> basis;
        for (int k = lowest; k <= top; ++k) {
            basis.push_back(GridFunction::sample(I, ctx.grid_i(), [&](double x) {
                return std::sin(k * std::numbers::pi * (x - I.lo) / I.length());
            }));
        }
        Eigen::MatrixXd img(static_cast<Eigen::Index>(gj.size()), m), gram(m, m);
        for (int k = 0; k < m; ++k) {
            const auto hk = apply_separated(cfg, basis[static_cast<std::size_t>(k)], gj, ctx.options().scale);
            for (std::size_t i = 0; i < gj.size(); ++i) {
                img(static_cast<Eigen::Index>(i), k) = std::sqrt(gj.weights[i]) * hk.values()[i];
            }
            for (int l = 0; l < m; ++l) gram(k, l) = basis[static_cast<std::size_t>(k)].dot(basis[static_cast<std::size_t>(l)]);
        }
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
        const Eigen::MatrixXd whiten = es.operatorInverseSqrt();
        const Eigen::JacobiSVD<Eigen::MatrixXd> svd(img * whiten, Eigen::ComputeFullV);
        const Eigen::VectorXd c = whiten * svd.matrixV().col(m - 1);
        std::vector<double> v(ctx.grid_i().size(), 0.0);
        for (int k = 0; k < m; ++k) {
            const auto& bk = basis[static_cast<std::size_t>(k)].values();
            for (std::size_t i = 0; i < v.size(); ++i) v[i] += c(k) * bk[i];
        }
        FamilyMember mem;
        mem.label = "sine_span_min";
        mem.param = top;
        mem.smooth = basis.front().with_values(std::move(v));
        fam.push_back(std::move(mem));
    }
    return fam;
}

// ---------------------------------------------------------------------------
// Regressors

/// ||g_x||_{L^2} by centred differences (one-sided at the ends).
inline double derivative_l2(const GridFunction& g)
{
    const auto& x = g.nodes();
    const auto& v = g.values();
    const std::size_t n = v.size();
    if (n < 3) throw std::invalid_argument("derivative_l2: need >= 3 nodes");
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double d;
        if (i == 0) {
            d = (v[1] - v[0]) / (x[1] - x[0]);
        } else if (i + 1 == n) {
            d = (v[n - 1] - v[n - 2]) / (x[n - 1] - x[n - 2]);
        } else {
            d = (v[i + 1] - v[i - 1]) / (x[i + 1] - x[i - 1]);
        }
        acc += g.weights()[i] * d * d;
    }
    return std::sqrt(acc);
}

inline double member_tv(const FamilyMember& f)
{
    return f.step ? f.step->tv(TvConvention::Interior) : f.smooth->tv();
}

/// |chi_{I \ window} f|_TV: variation over the part of I outside `window`,
/// counting the jump created by the cut at the window's edge.
inline double tv_outside(const FamilyMember& f, const Interval& window)
{
    auto outside = [&](double x) { return !(x > window.lo && x < window.hi); };
    if (f.step) {
        const auto& s = *f.step;
        std::vector<double> pts;
        for (double t : s.breakpoints()) pts.push_back(t);
        pts.push_back(window.lo);
        pts.push_back(window.hi);
        std::sort(pts.begin(), pts.end());
        // sample the truncated function on every piece
        double tv = 0.0;
        double prev = 0.0;
        bool first = true;
        for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
            if (!(pts[k + 1] > pts[k])) continue;
            const double mid = 0.5 * (pts[k] + pts[k + 1]);
            if (mid < s.span().lo || mid > s.span().hi) continue;
            const double v = outside(mid) ? s(mid) : 0.0;
            if (!first) tv += std::abs(v - prev);
            prev = v;
            first = false;
        }
        return tv;
    }
    const auto& g = *f.smooth;
    double tv = 0.0;
    for (std::size_t k = 1; k < g.size(); ++k) {
        const double a = outside(g.nodes()[k - 1]) ? g.values()[k - 1] : 0.0;
        const double b = outside(g.nodes()[k]) ? g.values()[k] : 0.0;
        tv += std::abs(b - a);
    }
    return tv;
}

// ---------------------------------------------------------------------------
// Envelope certificate

struct BoundRow {
    std::string label;
    double param = 0.0;
    double lhs = 0.0;
    double regressor = 0.0;
    /// ||f_x||_{L^1} / ||f||, exploratory column for the L^1 variant
    double l1_regressor = 0.0;
};

struct Envelope {
    double c1 = 0.0;
    double c2 = 0.0;
};

/// c2 = steepest consecutive secant of (regressor, -ln lhs) taken over the
/// vertices of the lower convex hull of (regressor, ln lhs), c1 = min of
/// lhs exp(c2 regressor); every row then satisfies lhs >= c1 exp(-c2 regressor).
inline Envelope fit_envelope(const std::vector<BoundRow>& rows)
{
    if (rows.empty()) throw std::invalid_argument("fit_envelope: no rows");
    std::vector<std::pair<double, double>> pts;
    for (const auto& r : rows) {
        if (!(r.lhs > 0.0)) throw std::invalid_argument("fit_envelope: non-positive lhs");
        pts.emplace_back(r.regressor, std::log(r.lhs));
    }
    std::sort(pts.begin(), pts.end());
    // regressors closer than this count as one abscissa (keeping the lowest lhs)
    const double tie = 1e-6 * (pts.back().first - pts.front().first);
    std::vector<std::pair<double, double>> hull;
    for (const auto& p : pts) {
        if (!hull.empty() && p.first - hull.back().first <= tie) {
            if (p.second < hull.back().second) {
                hull.back().second = p.second;
                while (hull.size() >= 3) {
                    const auto& a = hull[hull.size() - 3];
                    const auto& b = hull[hull.size() - 2];
                    const auto& c = hull.back();
                    if ((b.first - a.first) * (c.second - a.second) - (b.second - a.second) * (c.first - a.first) > 0.0) break;
                    hull.erase(hull.end() - 2);
                }
            }
            continue;
        }
        while (hull.size() >= 2) {
            const auto& a = hull[hull.size() - 2];
            const auto& b = hull.back();
            const double cross = (b.first - a.first) * (p.second - a.second) - (b.second - a.second) * (p.first - a.first);
            if (cross > 0.0) break;
            hull.pop_back();
        }
        hull.push_back(p);
    }
    double c2 = 1e-12;
    for (std::size_t k = 1; k < hull.size(); ++k) {
        c2 = std::max(c2, -(hull[k].second - hull[k - 1].second) / (hull[k].first - hull[k - 1].first));
    }
    double log_c1 = std::numeric_limits<double>::infinity();
    for (const auto& r : rows) log_c1 = std::min(log_c1, std::log(r.lhs) + c2 * r.regressor);
    if (!(log_c1 < std::log(std::numeric_limits<double>::max()))) {
        throw std::runtime_error("fit_envelope: c1 overflows; regressors too close for the fitted slope");
    }
    return {std::exp(log_c1), c2};
}

inline int count_violations(const std::vector<BoundRow>& rows, const Envelope& env, double factor = 1.0)
{
    int v = 0;
    for (const auto& r : rows) {
        // relative slack for the rounding in c1 itself
        if (std::log(r.lhs) < std::log(factor * env.c1) - env.c2 * r.regressor + std::log1p(-1e-12)) ++v;
    }
    return v;
}

struct BoundReport {
    TheoremId theorem_id = TheoremId::Thm2;
    std::string family_label;
    int m_power = 0;
    std::uint64_t seed = 0;
    std::vector<BoundRow> rows;
    Envelope envelope;
    int violation_count = 0;

    /// Rows of another family checked against this envelope at the given factor.
    int validate(const std::vector<BoundRow>& other, double factor = 0.9) const
    {
        return count_violations(other, envelope, factor);
    }
};

namespace detail {

template <class Regressor>
std::vector<BoundRow> make_rows(const BoundsContext& ctx, const Family& family, Regressor&& reg)
{
    std::vector<BoundRow> rows;
    for (const auto& f : family) {
        BoundRow r;
        r.label = f.label;
        r.param = f.param;
        r.lhs = ctx.ratio(f);
        r.regressor = reg(f);
        r.l1_regressor = member_tv(f) / f.l2();
        rows.push_back(r);
    }
    std::stable_sort(rows.begin(), rows.end(), [](const BoundRow& a, const BoundRow& b) { return a.param < b.param; });
    return rows;
}

inline BoundReport finish(TheoremId id, std::string label, int m, std::vector<BoundRow> rows)
{
    BoundReport rep;
    rep.theorem_id = id;
    rep.family_label = std::move(label);
    rep.m_power = m;
    rep.rows = std::move(rows);
    rep.envelope = fit_envelope(rep.rows);
    rep.violation_count = count_violations(rep.rows, rep.envelope);
    return rep;
}

inline const GridFunction& smooth_of(const FamilyMember& f, const char* who)
{
    if (!f.smooth) throw std::invalid_argument(std::string(who) + ": smooth family member required");
    return *f.smooth;
}

}  // namespace detail

/// Regressor ||f_x|| / ||f||.
inline double thm2_regressor(const FamilyMember& f)
{
    const auto& g = detail::smooth_of(f, "thm2");
    return derivative_l2(g) / g.l2();
}

/// Regressor (||(L_I^M f)_x|| / ||f||)^(1/(2M+1)).
inline double thm2a_regressor(const BoundsContext& ctx, const FamilyMember& f, int m)
{
    const auto& g = detail::smooth_of(f, "thm2a");
    const auto lm = apply_li_power(ctx.sturm_liouville(), g, m, std::max(m, 1));
    return std::pow(derivative_l2(lm) / g.l2(), 1.0 / (2.0 * m + 1.0));
}

/// Regressor |f|_TV^2 / ||f||^2.
inline double thm3_regressor(const FamilyMember& f)
{
    const double r = member_tv(f) / f.l2();
    return r * r;
}

/// Regressor (|L_I^M f|_TV / ||f||)^(2/(4M+1)).
inline double thm3a_regressor(const BoundsContext& ctx, const FamilyMember& f, int m)
{
    if (m == 0) return thm3_regressor(f);
    const auto& g = detail::smooth_of(f, "thm3a");
    const auto lm = apply_li_power(ctx.sturm_liouville(), g, m, m);
    return std::pow(lm.tv() / g.l2(), 2.0 / (4.0 * m + 1.0));
}

inline double thm4_regressor(const BoundsContext& ctx, const FamilyMember& f, double mu)
{
    const double r = tv_outside(f, j_star(ctx.config(), mu)) / f.l2();
    return r * r;
}

inline BoundReport verify_thm2(const BoundsContext& ctx, const Family& family, const std::string& label = "")
{
    return detail::finish(TheoremId::Thm2, label, 0, detail::make_rows(ctx, family, thm2_regressor));
}

inline BoundReport verify_thm2a(const BoundsContext& ctx, const Family& family, int m, const std::string& label = "")
{
    if (m < 0 || m > 3) throw std::invalid_argument("verify_thm2a: M must be in 0..3");
    if (m == 0) return verify_thm2(ctx, family, label);
    return detail::finish(TheoremId::Thm2a, label, m,
                          detail::make_rows(ctx, family, [&](const FamilyMember& f) { return thm2a_regressor(ctx, f, m); }));
}

inline BoundReport verify_thm3(const BoundsContext& ctx, const Family& family, const std::string& label = "")
{
    return detail::finish(TheoremId::Thm3, label, 0, detail::make_rows(ctx, family, thm3_regressor));
}

inline BoundReport verify_thm3a(const BoundsContext& ctx, const Family& family, int m, const std::string& label = "")
{
    if (m < 0 || m > 3) throw std::invalid_argument("verify_thm3a: M must be in 0..3");
    if (m == 0) return verify_thm3(ctx, family, label);
    return detail::finish(TheoremId::Thm3a, label, m,
                          detail::make_rows(ctx, family, [&](const FamilyMember& f) { return thm3a_regressor(ctx, f, m); }));
}

/// Overlap case. Every member must vanish somewhere on I \ J*.
inline BoundReport verify_thm4(const BoundsContext& ctx, double mu, const Family& family, const std::string& label = "")
{
    if (ctx.config().case_id != Case::Overlap) throw std::invalid_argument("verify_thm4: Overlap configuration required");
    const Interval js = j_star(ctx.config(), mu);
    for (const auto& f : family) {
        bool vanishes = false;
        if (f.step) {
            const auto& s = *f.step;
            const Interval sp = s.span();
            // zero outside the span, or a zero level on a piece reaching outside J*
            vanishes = sp.lo > ctx.config().interval_i.lo || sp.hi < ctx.config().interval_i.hi;
            for (std::size_t k = 0; k < s.pieces() && !vanishes; ++k) {
                const double a = s.breakpoints()[k], b = s.breakpoints()[k + 1];
                vanishes = s.levels()[k] == 0.0 && (a < js.lo || b > js.hi);
            }
        } else {
            const auto& g = *f.smooth;
            for (std::size_t k = 0; k < g.size() && !vanishes; ++k) {
                vanishes = !js.contains(g.nodes()[k]) && g.values()[k] == 0.0;
            }
        }
        if (!vanishes) throw std::invalid_argument("verify_thm4: member does not vanish on I \\ J*");
    }
    return detail::finish(TheoremId::Thm4, label, 0,
                          detail::make_rows(ctx, family, [&](const FamilyMember& f) { return thm4_regressor(ctx, f, mu); }));
}

/// Rows for any theorem with the same regressor as the report, e.g. for validation families.
inline std::vector<BoundRow> rows_for(const BoundsContext& ctx, TheoremId id, const Family& family, int m = 0,
                                      double mu = 0.5)
{
    switch (id) {
    case TheoremId::Thm2: return detail::make_rows(ctx, family, thm2_regressor);
    case TheoremId::Thm2a:
        return detail::make_rows(ctx, family, [&](const FamilyMember& f) {
            return m == 0 ? thm2_regressor(f) : thm2a_regressor(ctx, f, m);
        });
    case TheoremId::Thm3: return detail::make_rows(ctx, family, thm3_regressor);
    case TheoremId::Thm3a:
        return detail::make_rows(ctx, family, [&](const FamilyMember& f) { return thm3a_regressor(ctx, f, m); });
    case TheoremId::Thm4:
        return detail::make_rows(ctx, family, [&](const FamilyMember& f) { return thm4_regressor(ctx, f, mu); });
    default: throw std::invalid_argument("rows_for: unsupported theorem id");
    }
}

// ---------------------------------------------------------------------------
// Qualitative existence check and the positive-function bound

struct Theorem1Check {
    double kappa = 0.0;
    double min_ratio_coarse = 0.0;
    double min_ratio_fine = 0.0;
    int members = 0;
    bool holds = false;
};

/// Random step functions with tv/||f|| <= kappa, breakpoints on a coarse mesh,
/// evaluated with Galerkin matrices on that mesh and on its refinement.
inline Theorem1Check theorem1_check(const CaseConfig& config, double kappa, std::uint64_t seed, int cells = 64,
                                    int members = 40, KernelScale scale = KernelScale::Unitary)
{
    if (!(kappa > 0.0)) throw std::invalid_argument("theorem1_check: kappa must be positive");
    const auto coarse = assemble(config, cells, cells, scale);
    const auto fine = assemble(config, 2 * cells, 2 * cells, scale);
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> pieces(2, 8);
    std::uniform_real_distribution<double> level(-1.0, 1.0);
    Theorem1Check out;
    out.kappa = kappa;
    out.min_ratio_coarse = std::numeric_limits<double>::infinity();
    out.min_ratio_fine = std::numeric_limits<double>::infinity();
    const Interval I = config.interval_i;
    int attempts = 0;
    while (out.members < members && attempts < 100 * members) {
        ++attempts;
        const int m = pieces(rng);
        std::uniform_int_distribution<int> cut(1, cells - 1);
        std::vector<int> idx;
        for (int k = 0; k < m - 1; ++k) idx.push_back(cut(rng));
        std::sort(idx.begin(), idx.end());
        idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
        std::vector<double> bp{I.lo};
        for (int k : idx) bp.push_back(I.lo + I.length() * k / cells);
        bp.push_back(I.hi);
        std::vector<double> lv(bp.size() - 1);
        for (auto& v : lv) v = level(rng);
        const StepFunction f(bp, lv);
        if (f.tv(TvConvention::Interior) / f.l2() > kappa) continue;
        ++out.members;
        const auto cc = cell_coefficients(coarse, f);
        const auto cf = cell_coefficients(fine, f);
        out.min_ratio_coarse = std::min(out.min_ratio_coarse, (coarse.entries * cc).norm() / cc.norm());
        out.min_ratio_fine = std::min(out.min_ratio_fine, (fine.entries * cf).norm() / cf.norm());
    }
    if (out.members == 0) throw std::runtime_error("theorem1_check: no member within the kappa budget");
    out.holds = out.min_ratio_coarse > 0.0 && out.min_ratio_fine > 0.0 &&
                out.min_ratio_fine >= 0.9 * out.min_ratio_coarse;
    return out;
}

struct PolydecayResult {
    double lhs = 0.0;
    double rhs = 0.0;
    bool holds = false;
    /// true when the Overlap variant with the |J \ I| factor was used
    bool overlap_variant = false;
};

/// ||H_T f||_{L^2(J)} >= kernel prefactor * F / sup|x - y| * (tv^2/||f||^2 + 4/|I|)^(-1/2) ||f||
/// for f > 0 on I, with F = |J|^(1/2) when I and J are separated and
/// F = |J \ I|^(1/2) / 2 when they overlap.
inline PolydecayResult polydecay_bound(const CaseConfig& config, const StepFunction& f,
                                       KernelScale scale = KernelScale::Unitary)
{
    const Interval I = config.interval_i;
    const Interval J = config.interval_j;
    if (config.case_id != Case::Gap && config.case_id != Case::Overlap) {
        throw std::invalid_argument("polydecay_bound: Gap or Overlap configuration required");
    }
    if (!(f.span() == I)) throw std::invalid_argument("polydecay_bound: f must cover I");
    for (double v : f.levels()) {
        if (!(v > 0.0)) throw std::invalid_argument("polydecay_bound: f must be positive on I");
    }
    PolydecayResult r;
    const double sup = std::max(std::abs(J.hi - I.lo), std::abs(I.hi - J.lo));
    double factor;
    if (config.case_id == Case::Gap) {
        factor = std::sqrt(J.length());
    } else {
        const auto both = intersect(I, J);
        factor = 0.5 * std::sqrt(J.length() - (both ? both->length() : 0.0));
        r.overlap_variant = true;
    }
    const double nrm = f.l2();
    const double tv = f.tv(TvConvention::Interior);
    r.rhs = kernel_prefactor<double>(scale) * factor / sup * std::pow(tv * tv / (nrm * nrm) + 4.0 / I.length(), -0.5) * nrm;
    r.lhs = hilbert_step_norm_l2(f, J, scale);
    r.holds = r.lhs >= r.rhs * (1.0 - 1e-6);
    return r;
}

// ---------------------------------------------------------------------------
// Standard generation and validation families

struct EnvelopeExperiment {
    BoundReport generation;
    std::vector<BoundRow> validation;
    int validation_violations = 0;
    /// R^2 of ln lhs against N over the pure sine members of the generation family
    double sine_r2 = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

inline std::vector<double> arithmetic(double from, double to, double step)
{
    std::vector<double> v;
    for (double x = from; x <= to + 1e-9; x += step) v.push_back(x);
    return v;
}

inline std::vector<int> int_range(int from, int to)
{
    std::vector<int> v;
    for (int k = from; k <= to; ++k) v.push_back(k);
    return v;
}

inline Interval shrink(const Interval& iv, double frac)
{
    return Interval(iv.lo + frac * iv.length(), iv.hi - frac * iv.length());
}

inline void append(Family& into, Family from)
{
    for (auto& m : from) into.push_back(std::move(m));
}

inline Family standard_family(const BoundsContext& ctx, TheoremId id, double mu, std::uint64_t seed, bool validation)
{
    const Interval I = ctx.config().interval_i;
    const Grid& grid = ctx.grid_i();
    const double len = I.length();
    const std::uint64_t s = validation ? seed + 1000 : seed;
    Family fam;
    if (id == TheoremId::Thm4) {
        const Interval js = j_star(ctx.config(), mu);
        const auto inside = intersect(I, js);
        if (!inside) throw std::invalid_argument("standard_family: I and J* do not overlap");
        const Interval outside = js.lo > I.lo ? Interval(I.lo, js.lo) : Interval(js.hi, I.hi);
        const auto ns = validation ? arithmetic(1.5, 6.5, 1.0) : arithmetic(1.0, 6.0, 1.0);
        const double w_in = 0.2 * inside->length() / 12.0;
        const double w_out = 0.2 * outside.length() / 12.0;
        append(fam, family_localized_sine(I, *inside, ns, w_in, grid, "sine_inside"));
        append(fam, family_localized_sine(I, outside, ns, w_out, grid, "sine_outside"));
        append(fam, family_random_steps(outside, int_range(2, 12), s, 4));
        return fam;
    }
    const auto sine_n = validation ? arithmetic(2.5, 11.5, 1.0) : arithmetic(2.0, 12.0, 1.0);
    const double sine_width = 0.2 * len / 12.0;
    const Interval inner = shrink(I, 0.05);
    const double step_width = 0.02 * len;
    for (double n : sine_n) fam.push_back(mollified_sine(I, I, n, sine_width, grid));
    if ((id == TheoremId::Thm2 || id == TheoremId::Thm3) && ctx.config().case_id == Case::Gap) {
        append(fam, validation ? family_sine_span_minimizers(ctx, 2, int_range(3, 7))
                               : family_sine_span_minimizers(ctx, 1, int_range(2, 6)));
    }
    if (id == TheoremId::Thm3) {
        append(fam, family_random_steps(I, int_range(2, 20), s, 4));
        if (validation) {
            FamilyMember ind;
            ind.label = "indicator";
            ind.param = 0.2;
            ind.step = StepFunction({I.lo, I.lo + 0.4 * len, I.lo + 0.6 * len, I.hi}, {0.0, 1.0, 0.0});
            fam.push_back(std::move(ind));
        }
    }
    append(fam, family_mollified_steps(I, family_random_steps(inner, int_range(2, 10), s + 1, 4), step_width, grid));
    return fam;
}

}  // namespace detail

/// Envelope fitted on a generation family and checked at `factor` times its
/// value on a disjoint validation family (shifted parameters, other seed).
inline EnvelopeExperiment envelope_experiment(const BoundsContext& ctx, TheoremId id, int m = 0, double mu = 0.5,
                                              std::uint64_t seed = 1, double factor = 0.9)
{
    const Family gen = detail::standard_family(ctx, id, mu, seed, false);
    const Family val = detail::standard_family(ctx, id, mu, seed, true);
    EnvelopeExperiment out;
    switch (id) {
    case TheoremId::Thm2: out.generation = verify_thm2(ctx, gen, "standard"); break;
    case TheoremId::Thm2a: out.generation = verify_thm2a(ctx, gen, m, "standard"); break;
    case TheoremId::Thm3: out.generation = verify_thm3(ctx, gen, "standard"); break;
    case TheoremId::Thm3a: out.generation = verify_thm3a(ctx, gen, m, "standard"); break;
    case TheoremId::Thm4: out.generation = verify_thm4(ctx, mu, gen, "standard"); break;
    default: throw std::invalid_argument("envelope_experiment: unsupported theorem id");
    }
    out.generation.seed = seed;
    out.validation = rows_for(ctx, id == TheoremId::Thm2a && m == 0 ? TheoremId::Thm2 : id, val, m, mu);
    out.validation_violations = out.generation.validate(out.validation, factor);
    std::vector<double> ns, ls;
    for (const auto& r : out.generation.rows) {
        if (r.label == "sine") {
            ns.push_back(r.param);
            ls.push_back(std::log(r.lhs));
        }
    }
    if (ns.size() >= 3) out.sine_r2 = linear_fit(ns, ls).r2;
    return out;
}

}  // namespace thilbert
