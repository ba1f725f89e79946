#pragma once

// Intervals, interval-pair classification, quadrature grids and the
// function-space functionals (L1, L2, Linf, total variation) shared by every
// other header in the library.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace thilbert {

/// Finite open interval (lo, hi). Endpoint membership is irrelevant for every
/// L^p quantity in the library, so the type does not track it.
struct Interval {
    double lo = 0.0;
    double hi = 1.0;

    Interval() = default;
    Interval(double lo_, double hi_) : lo(lo_), hi(hi_)
    {
        if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi)) {
            throw std::invalid_argument("Interval: need finite lo < hi, got (" +
                                        std::to_string(lo) + ", " + std::to_string(hi) + ")");
        }
    }

    double length() const { return hi - lo; }
    double midpoint() const { return 0.5 * (lo + hi); }
    bool contains(double x) const { return lo <= x && x <= hi; }
    bool contains(const Interval& other) const { return lo <= other.lo && other.hi <= hi; }

    friend bool operator==(const Interval&, const Interval&) = default;
};

/// Intersection of two intervals, empty when they share at most one point.
inline std::optional<Interval> intersect(const Interval& a, const Interval& b)
{
    const double lo = std::max(a.lo, b.lo);
    const double hi = std::min(a.hi, b.hi);
    if (!(lo < hi)) return std::nullopt;
    return Interval(lo, hi);
}

/// Relative position of the support interval I and the measurement window J.
enum class Case { Covered, Interior, Gap, Overlap };

inline std::string_view to_string(Case c)
{
    switch (c) {
    case Case::Covered: return "Covered";
    case Case::Interior: return "Interior";
    case Case::Gap: return "Gap";
    case Case::Overlap: return "Overlap";
    }
    return "?";
}

/// A classified (I, J) pair.
///
/// For Gap and Overlap the pair is also stored in canonical coordinates, where
/// J extends to the left of I:
///   Gap:     J = (a1, a2), I = (a3, a4), a1 < a2 <= a3 < a4
///   Overlap: J = (a1, a3), I = (a2, a4), a1 < a2 < a3 < a4
/// If J extends to the right of I in the original coordinates, the canonical
/// frame is the mirror image x -> -x and `reflected` is set. The mirror map
/// changes the sign of the Hilbert transform only, so every norm, singular
/// value and ratio computed in either frame agrees.
struct CaseConfig {
    Interval interval_i;
    Interval interval_j;
    Case case_id = Case::Gap;
    bool reflected = false;
    std::optional<std::array<double, 4>> endpoints;

    // 0.0 - x rather than -x keeps reflected zeros unsigned
    double to_canonical(double x) const { return reflected ? 0.0 - x : x; }
    double to_original(double x) const { return reflected ? 0.0 - x : x; }

    Interval map_to_canonical(const Interval& iv) const
    {
        return reflected ? Interval(0.0 - iv.hi, 0.0 - iv.lo) : iv;
    }
    Interval map_to_original(const Interval& iv) const { return map_to_canonical(iv); }

    Interval canonical_i() const { return map_to_canonical(interval_i); }
    Interval canonical_j() const { return map_to_canonical(interval_j); }

    const std::array<double, 4>& a() const
    {
        if (!endpoints) throw std::logic_error("CaseConfig: no canonical endpoints for this case");
        return *endpoints;
    }
};

inline CaseConfig classify(const Interval& i, const Interval& j)
{
    CaseConfig cfg;
    cfg.interval_i = i;
    cfg.interval_j = j;

    if (j.contains(i)) {
        cfg.case_id = Case::Covered;
        return cfg;
    }
    if (i.contains(j)) {
        cfg.case_id = Case::Interior;
        return cfg;
    }
    if (j.hi <= i.lo || i.hi <= j.lo) {
        cfg.case_id = Case::Gap;
        cfg.reflected = j.lo >= i.hi;
    } else {
        cfg.case_id = Case::Overlap;
        // neither contains the other, so exactly one of J's ends sticks out
        cfg.reflected = j.hi > i.hi;
    }
    const Interval ci = cfg.canonical_i();
    const Interval cj = cfg.canonical_j();
    if (cfg.case_id == Case::Gap) {
        cfg.endpoints = std::array<double, 4>{cj.lo, cj.hi, ci.lo, ci.hi};
    } else {
        cfg.endpoints = std::array<double, 4>{cj.lo, ci.lo, cj.hi, ci.hi};
    }
    return cfg;
}

// ---------------------------------------------------------------------------
// Quadrature

template <class Real>
struct QuadratureRule {
    std::vector<Real> nodes;
    std::vector<Real> weights;
};

/// n-point Gauss-Legendre rule on [-1, 1], nodes ascending. Works for any
/// floating type with the usual cmath overloads (double, long double,
/// boost::multiprecision numbers).
template <class Real = double>
QuadratureRule<Real> gauss_legendre(int n)
{
    using std::abs;
    using std::acos;
    using std::cos;
    if (n < 1) throw std::invalid_argument("gauss_legendre: n must be positive");

    QuadratureRule<Real> rule;
    rule.nodes.resize(static_cast<std::size_t>(n));
    rule.weights.resize(static_cast<std::size_t>(n));
    const Real pi = acos(Real(-1));
    const Real tol = 4 * std::numeric_limits<Real>::epsilon();

    for (int i = 0; i < (n + 1) / 2; ++i) {
        Real z = cos(pi * (Real(i) + Real(0.75)) / (Real(n) + Real(0.5)));
        Real dp = 1;
        for (int it = 0; it < 200; ++it) {
            Real p0 = 1;
            Real p1 = z;
            for (int k = 2; k <= n; ++k) {
                Real p2 = (Real(2 * k - 1) * z * p1 - Real(k - 1) * p0) / Real(k);
                p0 = p1;
                p1 = p2;
            }
            if (n == 1) p0 = 1;
            dp = Real(n) * (z * p1 - p0) / (z * z - 1);
            const Real dz = p1 / dp;
            z -= dz;
            if (abs(dz) <= tol) break;
        }
        // one more evaluation at the converged node for the weight
        Real p0 = 1;
        Real p1 = z;
        for (int k = 2; k <= n; ++k) {
            Real p2 = (Real(2 * k - 1) * z * p1 - Real(k - 1) * p0) / Real(k);
            p0 = p1;
            p1 = p2;
        }
        dp = (n == 1) ? Real(1) : Real(n) * (z * p1 - p0) / (z * z - 1);
        const Real w = Real(2) / ((1 - z * z) * dp * dp);
        const auto lo = static_cast<std::size_t>(i);
        const auto hi = static_cast<std::size_t>(n - 1 - i);
        rule.nodes[lo] = -z;
        rule.nodes[hi] = z;
        rule.weights[lo] = w;
        rule.weights[hi] = w;
    }
    if (n % 2 == 1) rule.nodes[static_cast<std::size_t>(n / 2)] = 0;
    return rule;
}

/// Composite Gauss-Legendre rule over [lo, hi] split into equal cells.
template <class Real = double>
QuadratureRule<Real> composite_gauss(const Real& lo, const Real& hi, int cells, int points_per_cell)
{
    if (cells < 1 || points_per_cell < 1) {
        throw std::invalid_argument("composite_gauss: cells and points_per_cell must be positive");
    }
    const auto base = gauss_legendre<Real>(points_per_cell);
    QuadratureRule<Real> out;
    out.nodes.reserve(static_cast<std::size_t>(cells * points_per_cell));
    out.weights.reserve(out.nodes.capacity());
    const Real h = (hi - lo) / Real(cells);
    for (int c = 0; c < cells; ++c) {
        const Real a = lo + Real(c) * h;
        const Real mid = a + h / 2;
        for (int k = 0; k < points_per_cell; ++k) {
            out.nodes.push_back(mid + h / 2 * base.nodes[static_cast<std::size_t>(k)]);
            out.weights.push_back(h / 2 * base.weights[static_cast<std::size_t>(k)]);
        }
    }
    return out;
}

/// Quadrature grid over an interval (nodes ascending, positive weights).
struct Grid {
    std::vector<double> nodes;
    std::vector<double> weights;

    std::size_t size() const { return nodes.size(); }
};

/// Composite Gauss-Legendre grid; exact for polynomials of degree
/// 2*points_per_cell - 1 on every cell.
inline Grid gauss_grid(const Interval& interval, int cells, int points_per_cell)
{
    if (cells < 1) throw std::invalid_argument("gauss_grid: cells must be >= 1");
    if (points_per_cell < 2 || points_per_cell > 12) {
        throw std::invalid_argument("gauss_grid: points_per_cell must be in 2..12");
    }
    auto rule = composite_gauss<double>(interval.lo, interval.hi, cells, points_per_cell);
    return Grid{std::move(rule.nodes), std::move(rule.weights)};
}

/// Midpoint grid: cell centres of a uniform mesh, weights equal to the cell width.
inline Grid midpoint_grid(const Interval& interval, int cells)
{
    if (cells < 1) throw std::invalid_argument("midpoint_grid: cells must be >= 1");
    Grid g;
    const double h = interval.length() / cells;
    g.nodes.resize(static_cast<std::size_t>(cells));
    g.weights.assign(static_cast<std::size_t>(cells), h);
    for (int k = 0; k < cells; ++k) g.nodes[static_cast<std::size_t>(k)] = interval.lo + (k + 0.5) * h;
    return g;
}

// ---------------------------------------------------------------------------
// Functions and functionals

struct Functionals {
    double l1 = 0.0;
    double l2 = 0.0;
    double linf = 0.0;
    double tv = 0.0;
};

/// Samples of a real function on a quadrature grid over `interval`.
class GridFunction {
public:
    GridFunction() = default;

    GridFunction(Interval interval, std::vector<double> nodes, std::vector<double> weights,
                 std::vector<double> values)
        : interval_(interval), nodes_(std::move(nodes)), weights_(std::move(weights)),
          values_(std::move(values))
    {
        if (nodes_.empty()) throw std::invalid_argument("GridFunction: empty grid");
        if (weights_.size() != nodes_.size() || values_.size() != nodes_.size()) {
            throw std::invalid_argument("GridFunction: nodes, weights and values differ in length");
        }
        double wsum = 0.0;
        for (std::size_t k = 0; k < nodes_.size(); ++k) {
            if (!(weights_[k] > 0.0)) throw std::invalid_argument("GridFunction: non-positive weight");
            if (k > 0 && !(nodes_[k] > nodes_[k - 1])) {
                throw std::invalid_argument("GridFunction: nodes must be strictly ascending");
            }
            wsum += weights_[k];
        }
        if (nodes_.front() < interval_.lo || nodes_.back() > interval_.hi) {
            throw std::invalid_argument("GridFunction: nodes outside the interval");
        }
        if (std::abs(wsum - interval_.length()) > 1e-12 * interval_.length()) {
            throw std::invalid_argument("GridFunction: weights do not sum to the interval length");
        }
    }

    GridFunction(Interval interval, const Grid& grid, std::vector<double> values)
        : GridFunction(interval, grid.nodes, grid.weights, std::move(values))
    {}

    template <class F>
    static GridFunction sample(Interval interval, const Grid& grid, F&& f)
    {
        std::vector<double> v(grid.size());
        for (std::size_t k = 0; k < grid.size(); ++k) v[k] = f(grid.nodes[k]);
        return GridFunction(interval, grid, std::move(v));
    }

    const Interval& interval() const { return interval_; }
    const std::vector<double>& nodes() const { return nodes_; }
    const std::vector<double>& weights() const { return weights_; }
    const std::vector<double>& values() const { return values_; }
    std::size_t size() const { return nodes_.size(); }

    Grid grid() const { return Grid{nodes_, weights_}; }

    bool same_grid(const GridFunction& other) const
    {
        return interval_ == other.interval_ && nodes_ == other.nodes_ && weights_ == other.weights_;
    }

    GridFunction with_values(std::vector<double> values) const
    {
        return GridFunction(interval_, nodes_, weights_, std::move(values));
    }

    GridFunction scaled(double c) const
    {
        auto v = values_;
        for (auto& x : v) x *= c;
        return with_values(std::move(v));
    }

    double l1() const
    {
        double s = 0.0;
        for (std::size_t k = 0; k < size(); ++k) s += weights_[k] * std::abs(values_[k]);
        return s;
    }

    double l2() const
    {
        double s = 0.0;
        for (std::size_t k = 0; k < size(); ++k) s += weights_[k] * values_[k] * values_[k];
        return std::sqrt(s);
    }

    double linf() const
    {
        double m = 0.0;
        for (double v : values_) m = std::max(m, std::abs(v));
        return m;
    }

    /// Variation of the sample sequence; no boundary terms.
    double tv() const
    {
        double s = 0.0;
        for (std::size_t k = 1; k < size(); ++k) s += std::abs(values_[k] - values_[k - 1]);
        return s;
    }

    double dot(const GridFunction& other) const
    {
        if (!same_grid(other)) throw std::invalid_argument("GridFunction::dot: grid mismatch");
        double s = 0.0;
        for (std::size_t k = 0; k < size(); ++k) s += weights_[k] * values_[k] * other.values_[k];
        return s;
    }

    Functionals functionals() const { return {l1(), l2(), linf(), tv()}; }

    /// Piecewise-linear interpolation of the samples; constant extension
    /// beyond the first and last node.
    double interpolate(double x) const
    {
        if (x <= nodes_.front()) return values_.front();
        if (x >= nodes_.back()) return values_.back();
        const auto it = std::upper_bound(nodes_.begin(), nodes_.end(), x);
        const auto k = static_cast<std::size_t>(it - nodes_.begin());
        const double t = (x - nodes_[k - 1]) / (nodes_[k] - nodes_[k - 1]);
        return (1.0 - t) * values_[k - 1] + t * values_[k];
    }

private:
    Interval interval_;
    std::vector<double> nodes_;
    std::vector<double> weights_;
    std::vector<double> values_;
};

inline Functionals functionals(const GridFunction& f) { return f.functionals(); }

enum class TvConvention {
    Interior,        ///< sum of interior jumps only
    CompactSupport,  ///< also counts the jumps to zero at both ends
};

/// Piecewise-constant function: levels[k] on [breakpoints[k], breakpoints[k+1]),
/// zero outside [breakpoints.front(), breakpoints.back()).
class StepFunction {
public:
    StepFunction() = default;

    StepFunction(std::vector<double> breakpoints, std::vector<double> levels)
        : breakpoints_(std::move(breakpoints)), levels_(std::move(levels))
    {
        if (levels_.empty() || breakpoints_.size() != levels_.size() + 1) {
            throw std::invalid_argument("StepFunction: need m >= 1 levels and m+1 breakpoints");
        }
        for (std::size_t k = 1; k < breakpoints_.size(); ++k) {
            if (!(breakpoints_[k] > breakpoints_[k - 1])) {
                throw std::invalid_argument("StepFunction: breakpoints must be strictly ascending");
            }
        }
        for (double v : levels_) {
            if (!std::isfinite(v)) throw std::invalid_argument("StepFunction: non-finite level");
        }
    }

    /// Equal cells over `interval` carrying the given levels.
    static StepFunction uniform(const Interval& interval, std::vector<double> levels)
    {
        if (levels.empty()) throw std::invalid_argument("StepFunction::uniform: no levels");
        const std::size_t m = levels.size();
        std::vector<double> bp(m + 1);
        for (std::size_t k = 0; k <= m; ++k) {
            bp[k] = interval.lo + interval.length() * static_cast<double>(k) / static_cast<double>(m);
        }
        bp.back() = interval.hi;
        return StepFunction(std::move(bp), std::move(levels));
    }

    const std::vector<double>& breakpoints() const { return breakpoints_; }
    const std::vector<double>& levels() const { return levels_; }
    std::size_t pieces() const { return levels_.size(); }
    Interval span() const { return Interval(breakpoints_.front(), breakpoints_.back()); }

    double operator()(double x) const
    {
        if (x < breakpoints_.front() || x >= breakpoints_.back()) return 0.0;
        const auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), x);
        return levels_[static_cast<std::size_t>(it - breakpoints_.begin()) - 1];
    }

    double tv(TvConvention conv = TvConvention::Interior) const
    {
        double s = 0.0;
        for (std::size_t k = 1; k < levels_.size(); ++k) s += std::abs(levels_[k] - levels_[k - 1]);
        if (conv == TvConvention::CompactSupport) s += std::abs(levels_.front()) + std::abs(levels_.back());
        return s;
    }

    double l2() const
    {
        double s = 0.0;
        for (std::size_t k = 0; k < levels_.size(); ++k) {
            s += levels_[k] * levels_[k] * (breakpoints_[k + 1] - breakpoints_[k]);
        }
        return std::sqrt(s);
    }

    double l1() const
    {
        double s = 0.0;
        for (std::size_t k = 0; k < levels_.size(); ++k) {
            s += std::abs(levels_[k]) * (breakpoints_[k + 1] - breakpoints_[k]);
        }
        return s;
    }

    double linf() const
    {
        double m = 0.0;
        for (double v : levels_) m = std::max(m, std::abs(v));
        return m;
    }

    double integral() const
    {
        double s = 0.0;
        for (std::size_t k = 0; k < levels_.size(); ++k) {
            s += levels_[k] * (breakpoints_[k + 1] - breakpoints_[k]);
        }
        return s;
    }

    StepFunction scaled(double c) const
    {
        auto lv = levels_;
        for (auto& v : lv) v *= c;
        return StepFunction(breakpoints_, std::move(lv));
    }

    /// Mirror image x -> -x.
    StepFunction reflected() const
    {
        std::vector<double> bp(breakpoints_.rbegin(), breakpoints_.rend());
        for (auto& b : bp) b = -b;
        return StepFunction(std::move(bp), std::vector<double>(levels_.rbegin(), levels_.rend()));
    }

    GridFunction sample(const Interval& interval, const Grid& grid) const
    {
        return GridFunction::sample(interval, grid, [this](double x) { return (*this)(x); });
    }

private:
    std::vector<double> breakpoints_;
    std::vector<double> levels_;
};

// ---------------------------------------------------------------------------
// Mollification

namespace detail {

inline double bump_raw(double t)
{
    if (!(std::abs(t) < 1.0)) return 0.0;
    return std::exp(-1.0 / (1.0 - t * t));
}

inline const QuadratureRule<double>& bump_rule()
{
    static const auto rule = gauss_legendre<double>(12);
    return rule;
}

/// \int_{-1}^{s} bump_raw, composite 12-point Gauss on 32 cells.
inline double bump_raw_integral(double s)
{
    if (s <= -1.0) return 0.0;
    s = std::min(s, 1.0);
    const auto& r = bump_rule();
    constexpr int cells = 32;
    const double h = (s + 1.0) / cells;
    double acc = 0.0;
    for (int c = 0; c < cells; ++c) {
        const double mid = -1.0 + (c + 0.5) * h;
        for (std::size_t k = 0; k < r.nodes.size(); ++k) {
            acc += 0.5 * h * r.weights[k] * bump_raw(mid + 0.5 * h * r.nodes[k]);
        }
    }
    return acc;
}

}  // namespace detail

/// Unit-mass C-infinity bump supported on [-1, 1].
inline double bump(double t)
{
    static const double mass = detail::bump_raw_integral(1.0);
    return detail::bump_raw(t) / mass;
}

/// Cumulative distribution of `bump`: 0 at -1, 1 at +1.
inline double bump_cdf(double s)
{
    static const double mass = detail::bump_raw_integral(1.0);
    if (s <= -1.0) return 0.0;
    if (s >= 1.0) return 1.0;
    return detail::bump_raw_integral(s) / mass;
}

/// Smooth compactly supported approximation of a step function.
///
/// The step function is first contracted about the midpoint of `support` by
/// the factor 1 - width/|support| and then convolved with the bump of
/// half-width `width`. With strict = true the input must vanish somewhere on
/// the support, which is what keeps the result's variation within 3 |f|_TV.
inline GridFunction mollify(const StepFunction& f, const Interval& support, double width,
                            const Grid& grid, bool strict = true)
{
    if (!(width > 0.0)) throw std::invalid_argument("mollify: width must be positive");
    const Interval span = f.span();
    if (!support.contains(span)) throw std::invalid_argument("mollify: step function exceeds the support");
    const double margin = std::min(span.lo - support.lo, support.hi - span.hi);
    if (!(width < margin)) {
        throw std::invalid_argument("mollify: width too large for the support margin");
    }
    if (strict) {
        const bool has_zero_level =
            std::any_of(f.levels().begin(), f.levels().end(), [](double v) { return v == 0.0; });
        // margin > 0 here, so f is zero on the part of the support outside its span
        if (!has_zero_level && !(margin > 0.0)) {
            throw std::invalid_argument("mollify: function has no zero on the support");
        }
    }

    const double c = support.midpoint();
    const double s = 1.0 - width / support.length();
    std::vector<double> bp = f.breakpoints();
    for (auto& b : bp) b = c + s * (b - c);

    std::vector<double> values(grid.size());
    for (std::size_t n = 0; n < grid.size(); ++n) {
        const double x = grid.nodes[n];
        double acc = 0.0;
        for (std::size_t k = 0; k < f.pieces(); ++k) {
            if (f.levels()[k] == 0.0) continue;
            // \int_{bp_k}^{bp_{k+1}} bump_w(x - y) dy
            const double hi = bump_cdf((x - bp[k]) / width);
            const double lo = bump_cdf((x - bp[k + 1]) / width);
            acc += f.levels()[k] * (hi - lo);
        }
        values[n] = acc;
    }
    return GridFunction(support, grid, std::move(values));
}

/// Convolution of a function g, restricted to `g_support`, with the unit-mass
/// bump of half-width `width`, evaluated on `grid`. g must be smooth on
/// g_support; the quadrature splits at the ends of g_support.
template <class F>
GridFunction convolve_with_bump(F&& g, const Interval& g_support, double width,
                                const Interval& domain, const Grid& grid, int panels = 6)
{
    if (!(width > 0.0)) throw std::invalid_argument("convolve_with_bump: width must be positive");
    const auto& r = detail::bump_rule();
    std::vector<double> values(grid.size());
    for (std::size_t n = 0; n < grid.size(); ++n) {
        const double x = grid.nodes[n];
        const double a = std::max(x - width, g_support.lo);
        const double b = std::min(x + width, g_support.hi);
        double acc = 0.0;
        if (a < b) {
            const double h = (b - a) / panels;
            for (int p = 0; p < panels; ++p) {
                const double mid = a + (p + 0.5) * h;
                for (std::size_t k = 0; k < r.nodes.size(); ++k) {
                    const double y = mid + 0.5 * h * r.nodes[k];
                    acc += 0.5 * h * r.weights[k] * g(y) * bump((x - y) / width) / width;
                }
            }
        }
        values[n] = acc;
    }
    return GridFunction(domain, grid, std::move(values));
}

}  // namespace thilbert
