#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include <thilbert/operator.hpp>

using namespace thilbert;
using boost::math::quadrature::gauss_kronrod;

namespace {

// \int_e^f (1/pi) \int_c^d dy / (x - y) dx for separated cells, by nested adaptive quadrature
double entry_by_quadrature(double c, double d, double e, double f)
{
    return gauss_kronrod<double, 31>::integrate(
        [&](double x) {
            return gauss_kronrod<double, 31>::integrate([&](double y) { return 1.0 / (x - y); }, c, d, 10, 1e-14);
        },
        e, f, 10, 1e-14) / std::numbers::pi;
}

}  // namespace

TEST(HIndicator, MatchesQuadratureOutsideTheCell)
{
    for (double x : {-1.5, -0.01, 1.3, 4.0}) {
        const double ref =
            gauss_kronrod<double, 61>::integrate([&](double y) { return 1.0 / (x - y); }, 0.0, 1.0, 15, 1e-15) /
            std::numbers::pi;
        EXPECT_NEAR(h_indicator(0.0, 1.0, x), ref, 1e-12 * std::max(1.0, std::abs(ref)));
        EXPECT_NEAR(h_indicator(0.0, 1.0, x, KernelScale::Plain), std::numbers::pi * ref, 1e-11);
    }
}

TEST(HIndicator, PoleAndOrdering)
{
    EXPECT_THROW(h_indicator(0.0, 1.0, 1.0), std::domain_error);
    EXPECT_THROW(h_indicator(0.0, 1.0, 0.0), std::domain_error);
    EXPECT_THROW(h_indicator(1.0, 0.0, 0.5), std::invalid_argument);
    // principal value inside the cell: (1/pi) ln(x / (1 - x))
    EXPECT_NEAR(h_indicator(0.0, 1.0, 0.25), std::log(1.0 / 3.0) / std::numbers::pi, 1e-15);
}

TEST(Entry, SeparatedCellsMatchNestedQuadrature)
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 20; ++t) {
        const double c = u(rng), d = c + 0.05 + u(rng);
        const double e = d + 0.01 + u(rng), f = e + 0.05 + u(rng);
        EXPECT_NEAR(entry(c, d, e, f), entry_by_quadrature(c, d, e, f), 1e-11);
    }
}

TEST(Entry, TouchingAndOverlappingCellsMatchLogIntegral)
{
    // inner integral in closed form, outer by adaptive quadrature that handles the log singularities
    auto ref = [](double c, double d, double e, double f) {
        return gauss_kronrod<double, 61>::integrate(
            [&](double x) { return x == c || x == d ? 0.0 : h_indicator(c, d, x); }, e, f, 20, 1e-13);
    };
    EXPECT_NEAR(entry(0, 1, 1, 2), ref(0, 1, 1, 2), 1e-9);
    EXPECT_NEAR(entry(0, 1, 0.5, 1.5), ref(0, 1, 0.5, 1.5), 1e-9);
    EXPECT_NEAR(entry(0, 1, 0, 1), 0.0, 1e-15);
}

TEST(Entry, Antisymmetric)
{
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int t = 0; t < 200; ++t) {
        double c = u(rng), d = u(rng), e = u(rng), f = u(rng);
        if (c > d) std::swap(c, d);
        if (e > f) std::swap(e, f);
        if (d - c < 1e-3 || f - e < 1e-3) continue;
        EXPECT_NEAR(entry(c, d, e, f), -entry(e, f, c, d), 1e-13);
    }
}

TEST(Assemble, UnitaryOperatorIsAContraction)
{
    for (const auto& cfg : {classify(Interval(0, 1), Interval(2, 3)), classify(Interval(0, 6), Interval(3, 12)),
                            classify(Interval(0, 3), Interval(1, 2))}) {
        const auto op = assemble(cfg, 48, 40);
        EXPECT_LE(op.norm(), 1.0 + 1e-10);
        const auto plain = assemble(cfg, 48, 40, KernelScale::Plain);
        EXPECT_NEAR(plain.norm(), std::numbers::pi * op.norm(), 1e-10);
    }
}

TEST(Assemble, FullLineOperatorIsNearlyUnitary)
{
    // J much larger than I: H_T on step functions of I loses little norm
    const auto op = assemble(classify(Interval(0, 1), Interval(-200, 200)), 8, 40000);
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(op.entries);
    EXPECT_GT(svd.singularValues()(7), 0.9);
}

TEST(Apply, StepImageIsCellAverageOfPointwiseTransform)
{
    const auto cfg = classify(Interval(0, 1), Interval(2, 3));
    const auto op = assemble(cfg, 16, 12);
    const StepFunction f({0.0, 0.25, 0.5, 1.0}, {1.0, -2.0, 0.5});
    const auto g = apply(op, f);
    for (int m = 0; m < op.cells_j; ++m) {
        const double lo = op.mesh_j[m], hi = op.mesh_j[m + 1];
        const double avg =
            gauss_kronrod<double, 31>::integrate([&](double x) { return hilbert_of_step(f, x); }, lo, hi, 10, 1e-14) /
            (hi - lo);
        EXPECT_NEAR(g.values()[m], avg, 1e-12);
    }
}

TEST(Apply, SeparatedQuadratureMatchesGalerkinForSmoothInput)
{
    const auto cfg = classify(Interval(0, 1), Interval(2, 3));
    const Interval I = cfg.interval_i;
    const auto f = GridFunction::sample(I, gauss_grid(I, 64, 8), [](double x) { return std::cos(3 * x) + x * x; });
    const Grid gj = gauss_grid(cfg.interval_j, 8, 8);
    const auto g = apply_separated(cfg, f, gj);
    for (std::size_t m = 0; m < gj.size(); m += 7) {
        const double x = gj.nodes[m];
        const double ref = gauss_kronrod<double, 61>::integrate(
                               [&](double y) { return (std::cos(3 * y) + y * y) / (x - y); }, 0.0, 1.0, 15, 1e-15) /
                           std::numbers::pi;
        EXPECT_NEAR(g.values()[m], ref, 1e-13);
    }
    EXPECT_THROW(apply_separated(classify(Interval(0, 6), Interval(3, 12)), f, gj), std::invalid_argument);
}

TEST(Apply, CellCoefficientsPreserveNorm)
{
    const auto cfg = classify(Interval(0, 1), Interval(2, 3));
    const auto op = assemble(cfg, 20, 10);
    const StepFunction f = StepFunction::uniform(cfg.interval_i, {1.0, -1.0, 2.0, 0.5});
    EXPECT_NEAR(cell_coefficients(op, f).norm(), f.l2(), 1e-14);
    EXPECT_THROW(cell_coefficients(op, StepFunction({-0.5, 0.5}, {1.0})), std::invalid_argument);
}

TEST(ExportCsv, WritesRoundTrippableNumbers)
{
    const auto op = assemble(classify(Interval(0, 1), Interval(2, 3)), 3, 2);
    const auto path = std::filesystem::temp_directory_path() / "thilbert_op.csv";
    export_csv(op, path.string());
    std::ifstream is(path);
    for (int m = 0; m < 2; ++m) {
        for (int n = 0; n < 3; ++n) {
            double v;
            char sep;
            is >> v;
            if (n < 2) is >> sep;
            EXPECT_EQ(v, op.entries(m, n));
        }
    }
    std::filesystem::remove(path);
}
