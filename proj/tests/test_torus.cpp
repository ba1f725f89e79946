#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <thilbert/torus.hpp>

using namespace thilbert;

namespace {

PeriodicKernel random_kernel(std::mt19937_64& rng, int band, int grid)
{
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<cplx> c(static_cast<std::size_t>(2 * band + 1));
    c[static_cast<std::size_t>(band)] = u(rng);
    for (int n = 1; n <= band; ++n) {
        const cplx v(u(rng), u(rng));
        c[static_cast<std::size_t>(band + n)] = v;
        c[static_cast<std::size_t>(band - n)] = std::conj(v);
    }
    return PeriodicKernel(std::move(c), grid);
}

GridFunction random_grid_function(std::mt19937_64& rng, int n)
{
    std::normal_distribution<double> g;
    std::vector<double> v(static_cast<std::size_t>(n));
    for (auto& x : v) x = g(rng);
    return GridFunction(Interval(0.0, 1.0), periodic_grid(n), std::move(v));
}

StepFunction random_step(std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> u(0.0, 1.0), lv(-2.0, 2.0);
    std::uniform_int_distribution<int> pieces(1, 9);
    const int m = pieces(rng);
    std::vector<double> b{0.0};
    for (int k = 0; k < m - 1; ++k) b.push_back(u(rng));
    b.push_back(1.0);
    std::sort(b.begin(), b.end());
    b.erase(std::unique(b.begin(), b.end()), b.end());
    std::vector<double> l(b.size() - 1);
    for (auto& v : l) v = lv(rng);
    return StepFunction(std::move(b), std::move(l));
}

}  // namespace

TEST(Convolve, MatchesDirectModeSum)
{
    std::mt19937_64 rng(1);
    for (int grid : {32, 45}) {
        const auto k = random_kernel(rng, 6, grid);
        const auto f = random_grid_function(rng, grid);
        const auto tf = convolve(k, f);
        for (int j = 0; j < grid; ++j) {
            cplx acc = 0.0;
            for (int n = -6; n <= 6; ++n) {
                cplx fh = 0.0;
                for (int i = 0; i < grid; ++i) {
                    fh += f.values()[i] * std::exp(cplx(0.0, -2.0 * std::numbers::pi * n * i / grid));
                }
                acc += k.coeff(n) * fh / static_cast<double>(grid) *
                       std::exp(cplx(0.0, 2.0 * std::numbers::pi * n * j / grid));
            }
            EXPECT_NEAR(tf.values()[j], acc.real(), 1e-12);
            EXPECT_NEAR(acc.imag(), 0.0, 1e-12);
        }
    }
}

TEST(Convolve, ParsevalAndLinearity)
{
    std::mt19937_64 rng(2);
    const auto k = random_kernel(rng, 10, 64);
    const auto f = random_grid_function(rng, 64);
    const auto g = random_grid_function(rng, 64);
    const auto tf = convolve(k, f);
    const auto c = dft_coefficients(f.values());
    double energy = std::norm(k.coeff(0) * c[0]);
    for (int n = 1; n <= 10; ++n) energy += 2.0 * std::norm(k.coeff(n) * c[static_cast<std::size_t>(n)]);
    EXPECT_NEAR(tf.l2() * tf.l2(), energy, 1e-12 * energy);
    std::vector<double> s(64);
    for (int j = 0; j < 64; ++j) s[j] = 2.0 * f.values()[j] - 3.0 * g.values()[j];
    const auto ts = convolve(k, f.with_values(s));
    const auto tg = convolve(k, g);
    for (int j = 0; j < 64; ++j) EXPECT_NEAR(ts.values()[j], 2.0 * tf.values()[j] - 3.0 * tg.values()[j], 1e-12);
}

TEST(Convolve, RejectsMismatchedGridsAndComplexKernels)
{
    std::mt19937_64 rng(3);
    const auto k = random_kernel(rng, 3, 16);
    EXPECT_THROW(convolve(k, random_grid_function(rng, 17)), std::invalid_argument);
    std::vector<cplx> c(7, cplx(1.0, 0.0));
    c[4] = cplx(0.0, 1.0);
    EXPECT_THROW(convolve(PeriodicKernel(c, 16), random_grid_function(rng, 16)), std::invalid_argument);
    EXPECT_THROW(PeriodicKernel(std::vector<cplx>(4), 16), std::invalid_argument);
    EXPECT_THROW(PeriodicKernel(std::vector<cplx>(9), 8), std::invalid_argument);
}

TEST(FourierCoefficient, MatchesFineQuadrature)
{
    std::mt19937_64 rng(4);
    const int grid = 1 << 16;
    for (int t = 0; t < 5; ++t) {
        const auto f = random_step(rng);
        for (int n : {0, 1, -3, 7}) {
            cplx acc = 0.0;
            for (int j = 0; j < grid; ++j) {
                const double x = (j + 0.5) / grid;
                acc += f(x) * std::exp(cplx(0.0, -2.0 * std::numbers::pi * n * x));
            }
            acc /= static_cast<double>(grid);
            EXPECT_NEAR(std::abs(fourier_coefficient(f, n) - acc), 0.0, 1e-3);
        }
    }
}

TEST(Taibleson, BoundHoldsForRandomSteps)
{
    std::mt19937_64 rng(5);
    for (int t = 0; t < 50; ++t) {
        const auto f = random_step(rng);
        EXPECT_LE(taibleson_check(f, 256), 1.0 / (2.0 * std::numbers::pi) + 1e-12);
    }
}

TEST(Taibleson, SquareWaveIsExtremal)
{
    EXPECT_NEAR(taibleson_check(StepFunction({0.0, 0.5, 1.0}, {1.0, -1.0})), 1.0 / (2.0 * std::numbers::pi), 1e-14);
    EXPECT_EQ(taibleson_check(StepFunction({0.0, 1.0}, {3.0})), 0.0);
    EXPECT_THROW(taibleson_check(StepFunction({0.0, 1.0}, {0.0})), std::invalid_argument);
    EXPECT_DOUBLE_EQ(periodic_tv(StepFunction({0.2, 0.6}, {1.5})), 3.0);
}

TEST(Nullspace, ZeroedCoefficientGivesAnnihilatedMode)
{
    for (int n0 : {0, 1, 5}) {
        const auto k = PeriodicKernel::from_rate([](int n) { return std::exp(-0.3 * n); }, 12, 64).with_coeff(n0, 0.0);
        const auto f = nullspace_vector(k, n0);
        EXPECT_NEAR(f.l2(), 1.0, 1e-14);
        EXPECT_LE(convolve(k, f).l2(), 1e-12);
    }
    const auto k = PeriodicKernel::from_rate([](int) { return 1.0; }, 4, 16);
    EXPECT_THROW(nullspace_vector(k, 2), std::invalid_argument);
}

TEST(BandLimited, MinSingularValueEqualsMinCoefficient)
{
    std::mt19937_64 rng(6);
    for (int t = 0; t < 10; ++t) {
        const auto k = random_kernel(rng, 12, 64);
        for (int band : {3, 8, 12}) {
            EXPECT_NEAR(band_limited_min_singular(k, band), min_abs_coeff(k, band), 1e-12);
        }
    }
    EXPECT_THROW(trig_basis(10, 20), std::invalid_argument);
}

TEST(DecayDemo, ExponentialKernelYieldsExponentialEnvelope)
{
    const auto [kernel, rep] = designed_decay_demo([](int n) { return std::exp(-0.5 * n); }, 24);
    EXPECT_EQ(rep.preferred_model(), "exponential");
    EXPECT_NEAR(-rep.exponential.slope, 0.5, 0.3 * 0.5);
    EXPECT_EQ(kernel.bandwidth(), 72);
    for (const auto& r : rep.rows) EXPECT_LE(r.envelope, r.kernel_abs * (1.0 + 1e-12));
}

TEST(DecayDemo, PolynomialKernelYieldsPolynomialEnvelope)
{
    const auto [kernel, rep] = designed_decay_demo([](int n) { return 1.0 / (double(n) * n * n); }, 24);
    EXPECT_EQ(rep.preferred_model(), "polynomial");
    EXPECT_NEAR(rep.polynomial.slope, -3.0, 0.3 * 3.0);
    EXPECT_THROW(designed_decay_demo([](int) { return 0.0; }, 8), std::invalid_argument);
}

TEST(SquareWave, UnitNormAndVariation)
{
    for (int n : {1, 3, 8}) {
        EXPECT_NEAR(square_wave(n).l2(), 1.0, 1e-14);
        EXPECT_NEAR(periodic_tv(square_wave(n)), 4.0 * n, 1e-12);
        EXPECT_NEAR(square_wave_cos(n).l2(), 1.0, 1e-14);
        EXPECT_NEAR(periodic_tv(square_wave_cos(n)), 4.0 * n, 1e-12);
    }
}
