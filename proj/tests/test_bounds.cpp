#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include <thilbert/bounds.hpp>
#include <thilbert/gram.hpp>
#include <thilbert/spectral.hpp>

using namespace thilbert;
using boost::math::quadrature::gauss_kronrod;

namespace {

double step_norm_by_quadrature(const StepFunction& f, const Interval& w, KernelScale scale)
{
    std::vector<double> cuts{w.lo, w.hi};
    for (double t : f.breakpoints())
        if (t > w.lo && t < w.hi) cuts.push_back(t);
    std::sort(cuts.begin(), cuts.end());
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        total += gauss_kronrod<double, 61>::integrate(
            [&](double x) {
                const double h = hilbert_of_step(f, x, scale);
                return h * h;
            },
            cuts[k], cuts[k + 1], 25, 1e-13);
    }
    return std::sqrt(total);
}

BoundsOptions small_gap()
{
    BoundsOptions o;
    o.cells_i = 512;
    return o;
}

}  // namespace

TEST(StepNorm, MatchesAdaptiveQuadrature)
{
    const StepFunction f({0.0, 0.3, 0.55, 1.0}, {1.0, -0.4, 2.0});
    EXPECT_NEAR(hilbert_step_norm_l2(f, Interval(2, 3)), step_norm_by_quadrature(f, Interval(2, 3), KernelScale::Unitary),
                1e-12);
    // window through the breakpoints: log singularities inside
    const StepFunction g({0.0, 2.0, 4.0, 6.0}, {0.5, 1.0, -1.0});
    const double a = hilbert_step_norm_l2(g, Interval(3, 12), KernelScale::Plain);
    EXPECT_NEAR(a, step_norm_by_quadrature(g, Interval(3, 12), KernelScale::Plain), 1e-7 * a);
}

TEST(Envelope, FittedEnvelopeHasNoViolationsOnRandomRows)
{
    std::mt19937_64 rng(12);
    // regressors on a jittered lattice, as produced by families indexed by a frequency or a piece count
    std::uniform_real_distribution<double> jitter(-0.3, 0.3), noise(-3.0, 3.0);
    std::uniform_int_distribution<int> repeats(1, 4);
    for (int t = 0; t < 200; ++t) {
        std::vector<BoundRow> rows;
        const int n = 2 + t % 30;
        for (int k = 0; k < n; ++k) {
            for (int m = repeats(rng); m > 0; --m) {
                BoundRow r;
                r.regressor = 2.0 * k + jitter(rng);
                r.lhs = std::exp(-0.3 * r.regressor + noise(rng));
                rows.push_back(r);
            }
        }
        const auto env = fit_envelope(rows);
        EXPECT_GT(env.c2, 0.0);
        EXPECT_EQ(count_violations(rows, env), 0);
        // tight: some row sits on the envelope
        double best = INFINITY;
        for (const auto& r : rows) best = std::min(best, std::log(r.lhs) - std::log(env.c1) + env.c2 * r.regressor);
        EXPECT_NEAR(best, 0.0, 1e-12);
    }
}

TEST(Envelope, TiedRegressorsKeepTheLowestRow)
{
    std::vector<BoundRow> rows(3);
    rows[0].regressor = 1.0;
    rows[0].lhs = 1.0;
    rows[1].regressor = 1.0 + 1e-9;
    rows[1].lhs = 0.5;
    rows[2].regressor = 3.0;
    rows[2].lhs = 0.05;
    const auto env = fit_envelope(rows);
    EXPECT_NEAR(env.c2, std::log(10.0) / 2.0, 1e-6);
    EXPECT_EQ(count_violations(rows, env), 0);
}

TEST(Envelope, RejectsNonPositiveLhs)
{
    std::vector<BoundRow> rows(2);
    rows[0].lhs = 1.0;
    rows[1].lhs = 0.0;
    EXPECT_THROW(fit_envelope(rows), std::invalid_argument);
    EXPECT_THROW(fit_envelope({}), std::invalid_argument);
}

TEST(Polydecay, ConstantFunctionGivesOneSixth)
{
    const auto cfg = classify(Interval(0, 1), Interval(2, 3));
    const auto r = polydecay_bound(cfg, StepFunction({0, 1}, {1.0}), KernelScale::Plain);
    EXPECT_NEAR(r.rhs, 1.0 / 6.0, 1e-15);
    EXPECT_NEAR(r.lhs, std::sqrt(gauss_kronrod<double, 61>::integrate(
                           [](double x) { return std::pow(std::log(x / (x - 1.0)), 2); }, 2.0, 3.0)),
                1e-12);
    EXPECT_TRUE(r.holds);
}

TEST(Polydecay, HoldsForRandomPositiveSteps)
{
    const auto gap = classify(Interval(0, 1), Interval(2, 3));
    const auto ovl = classify(Interval(0, 2), Interval(1, 4));
    for (const auto& f : random_positive_steps(gap.interval_i, 20, 3)) EXPECT_TRUE(polydecay_bound(gap, f).holds);
    for (const auto& f : random_positive_steps(ovl.interval_i, 20, 4)) {
        const auto r = polydecay_bound(ovl, f);
        EXPECT_TRUE(r.overlap_variant);
        EXPECT_TRUE(r.holds) << r.lhs << " < " << r.rhs;
    }
    EXPECT_THROW(polydecay_bound(gap, StepFunction({0, 0.5, 1}, {1.0, -1.0})), std::invalid_argument);
    EXPECT_THROW(polydecay_bound(gap, StepFunction({0, 0.5}, {1.0})), std::invalid_argument);
}

TEST(Polydecay, OverlapFactorUsesTheUncoveredPartOfJ)
{
    const auto ovl = classify(Interval(0, 2), Interval(1, 4));
    const auto r = polydecay_bound(ovl, StepFunction({0, 2}, {1.0}), KernelScale::Plain);
    // 1/2 |J \ I|^(1/2) / sup|x - y| (4/|I|)^(-1/2) ||f||
    EXPECT_NEAR(r.rhs, 0.5 * std::sqrt(2.0) / 4.0 / std::sqrt(2.0) * std::sqrt(2.0), 1e-15);
}

TEST(Ratios, ScaleInvariantAndBoundedByOne)
{
    const auto cfg = classify(Interval(0, 1), Interval(2, 3));
    const BoundsContext ctx(cfg, small_gap());
    const auto fam = family_mollified_sine(cfg.interval_i, {2.0, 5.0}, 0.01, ctx.grid_i());
    for (const auto& f : fam) {
        FamilyMember g = f;
        g.smooth = f.smooth->scaled(-7.5);
        EXPECT_NEAR(ctx.ratio(g), ctx.ratio(f), 1e-13);
        EXPECT_NEAR(thm2_regressor(g), thm2_regressor(f), 1e-12 * thm2_regressor(f));
        EXPECT_NEAR(thm3_regressor(g), thm3_regressor(f), 1e-12 * thm3_regressor(f));
        EXPECT_LT(ctx.ratio(f), 1.0);
    }
}

TEST(Regressors, SineDerivativeGrowsLinearly)
{
    const auto cfg = classify(Interval(0, 1), Interval(2, 3));
    const BoundsContext ctx(cfg);
    std::vector<double> ns{4, 6, 8, 12, 16}, d;
    const auto fam = family_mollified_sine(cfg.interval_i, ns, 0.2 / 16, ctx.grid_i());
    for (const auto& f : fam) d.push_back(thm2_regressor(f));
    EXPECT_NEAR(loglog_fit(ns, d).slope, 1.0, 0.05);
}

TEST(Regressors, PowerZeroReducesToBaseTheorems)
{
    const auto cfg = classify(Interval(0, 1), Interval(2, 3));
    const BoundsContext ctx(cfg, small_gap());
    const auto fam = family_mollified_sine(cfg.interval_i, {2.0, 3.0, 4.0}, 0.01, ctx.grid_i());
    const auto a = verify_thm2a(ctx, fam, 0);
    const auto b = verify_thm2(ctx, fam);
    ASSERT_EQ(a.rows.size(), b.rows.size());
    for (std::size_t k = 0; k < a.rows.size(); ++k) EXPECT_EQ(a.rows[k].regressor, b.rows[k].regressor);
    const auto c = verify_thm3a(ctx, fam, 0);
    const auto d = verify_thm3(ctx, fam);
    for (std::size_t k = 0; k < c.rows.size(); ++k) EXPECT_EQ(c.rows[k].regressor, d.rows[k].regressor);
    EXPECT_THROW(verify_thm2a(ctx, fam, 4), std::invalid_argument);
}

TEST(Regressors, OutsideVariationGrowsAsJStarShrinks)
{
    const auto cfg = classify(Interval(0, 6), Interval(3, 12));
    const auto fam = family_random_steps(cfg.interval_i, {3, 6, 9}, 21, 3);
    for (const auto& f : fam) {
        double prev = -1.0;
        for (double mu : {0.25, 0.5, 1.0, 2.0, 2.9}) {
            const double tv = tv_outside(f, j_star(cfg, mu));
            EXPECT_GE(tv, prev - 1e-12);
            prev = tv;
        }
    }
}

TEST(Thm4, RejectsMembersThatDoNotVanishOutsideJStar)
{
    const auto cfg = classify(Interval(0, 6), Interval(3, 12));
    BoundsOptions o;
    o.galerkin_cells_i = 64;
    const BoundsContext ctx(cfg, o);
    FamilyMember m;
    m.label = "positive";
    m.step = StepFunction({0, 6}, {1.0});
    EXPECT_THROW(verify_thm4(ctx, 0.5, {m}), std::invalid_argument);
    m.step = StepFunction({0, 1, 6}, {0.0, 1.0});
    EXPECT_NO_THROW(verify_thm4(ctx, 0.5, {m}));
}

TEST(Theorem1, PositiveLowerBoundStableUnderRefinement)
{
    const auto r = theorem1_check(classify(Interval(0, 1), Interval(2, 3)), 20.0, 4, 32, 20);
    EXPECT_EQ(r.members, 20);
    EXPECT_TRUE(r.holds);
    EXPECT_THROW(theorem1_check(classify(Interval(0, 1), Interval(2, 3)), 0.0, 1), std::invalid_argument);
}

TEST(EnvelopeExperiment, GapSeedOneHasNoViolations)
{
    const BoundsContext ctx(classify(Interval(0, 1), Interval(2, 3)));
    const auto e = envelope_experiment(ctx, TheoremId::Thm3, 0, 0.5, 1);
    EXPECT_EQ(e.generation.violation_count, 0);
    EXPECT_EQ(e.validation_violations, 0);
    EXPECT_FALSE(std::isnan(e.sine_r2));
}

TEST(Regressors, PowerOneRegressorsTrackTheFrequency)
{
    const auto cfg = classify(Interval(0, 1), Interval(2, 3));
    const BoundsContext ctx(cfg);
    std::vector<double> ns{4, 6, 8, 12, 16}, a, b;
    for (const auto& f : family_mollified_sine(cfg.interval_i, ns, 0.2 / 16, ctx.grid_i())) {
        a.push_back(thm2a_regressor(ctx, f, 1));
        b.push_back(thm3a_regressor(ctx, f, 1));
    }
    EXPECT_NEAR(loglog_fit(ns, a).slope, 1.0, 0.1);
    // (2 pi N)^3 under the exponent 2/5
    EXPECT_NEAR(loglog_fit(ns, b).slope, 6.0 / 5.0, 0.1);
}

TEST(Ratios, LowFrequencyBumpLoadsTheTopSingularValue)
{
    const auto cfg = classify(Interval(0, 1), Interval(2, 3));
    const BoundsContext ctx(cfg);
    FamilyMember box;
    box.label = "box";
    box.step = StepFunction({0.05, 0.95}, {1.0});
    const auto bump = family_mollified_steps(cfg.interval_i, {box}, 0.02, ctx.grid_i()).front();
    const auto op = assemble(cfg, 256, 256);
    const auto d = svd_of_operator(op, 1);
    const Eigen::VectorXd cf = cell_coefficients(op, *bump.smooth);
    const Eigen::VectorXd cu = cell_coefficients(op, d.u_funcs[0]);
    const double predicted = d.sigmas[0] * std::abs(cf.dot(cu)) / (cf.norm() * cu.norm());
    const double lhs = ctx.ratio(bump);
    EXPECT_GT(lhs, predicted / 10.0);
    EXPECT_LT(lhs, predicted * 10.0);
}

TEST(SpanMinimizers, BeatRandomMembersOfTheirSpan)
{
    const auto cfg = classify(Interval(0, 1), Interval(2, 3));
    const BoundsContext ctx(cfg, small_gap());
    const auto fam = family_sine_span_minimizers(ctx, 2, {3, 4, 5});
    std::mt19937_64 rng(21);
    std::normal_distribution<double> g;
    double prev = INFINITY;
    for (const auto& f : fam) {
        const double best = ctx.ratio(f);
        EXPECT_LT(best, prev);
        prev = best;
        const int top = static_cast<int>(f.param);
        for (int t = 0; t < 20; ++t) {
            std::vector<double> c;
            for (int k = 2; k <= top; ++k) c.push_back(g(rng));
            FamilyMember r;
            r.label = "random";
            r.smooth = GridFunction::sample(cfg.interval_i, ctx.grid_i(), [&](double x) {
                double v = 0.0;
                for (int k = 2; k <= top; ++k) v += c[static_cast<std::size_t>(k - 2)] * std::sin(k * std::numbers::pi * x);
                return v;
            });
            EXPECT_GE(ctx.ratio(r), best * (1.0 - 1e-6));
        }
    }
    EXPECT_THROW(family_sine_span_minimizers(ctx, 3, {3}), std::invalid_argument);
    EXPECT_THROW(family_sine_span_minimizers(BoundsContext(classify(Interval(0, 6), Interval(3, 12))), 1, {3}),
                 std::invalid_argument);
}

TEST(EnvelopeExperiment, NearNullFunctionsSitAboveTheFittedEnvelopes)
{
    const auto cfg = classify(Interval(0, 1), Interval(2, 3));
    const BoundsContext ctx(cfg);
    // a four-term sine combination with ||H_T f|| / ||f|| near 1e-7
    const double c[4] = {-0.15269, -0.48308, 0.30844, 0.80509};
    FamilyMember near_null;
    near_null.label = "near_null";
    near_null.smooth = GridFunction::sample(cfg.interval_i, ctx.grid_i(), [&](double x) {
        double v = 0.0;
        for (int k = 0; k < 4; ++k) v += c[k] * std::sin((k + 2) * std::numbers::pi * x);
        return v;
    });
    const double r = ctx.ratio(near_null);
    EXPECT_LT(r, 1e-6);
    const auto e2 = envelope_experiment(ctx, TheoremId::Thm2, 0, 0.5, 1).generation.envelope;
    EXPECT_GE(r, e2.c1 * std::exp(-e2.c2 * thm2_regressor(near_null)));

    GramOptions o;
    o.scale = KernelScale::Plain;
    FamilyMember worst;
    worst.label = "gram_worst";
    worst.step = gram_for_cells(cfg, 3, o).worst_function;
    const auto e3 = envelope_experiment(ctx, TheoremId::Thm3, 0, 0.5, 1).generation.envelope;
    EXPECT_GE(ctx.ratio(worst), e3.c1 * std::exp(-e3.c2 * thm3_regressor(worst)));
}
