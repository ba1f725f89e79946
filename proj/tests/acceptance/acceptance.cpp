// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <thilbert/asymptotics.hpp>
#include <thilbert/bounds.hpp>
#include <thilbert/gram.hpp>
#include <thilbert/reconstruct.hpp>
#include <thilbert/spectral.hpp>
#include <thilbert/torus.hpp>

using namespace thilbert;

namespace {

int failures = 0;

void report(const char* id, bool ok, const std::string& detail)
{
    std::printf("%s %-4s %s\n", ok ? "PASS" : "FAIL", id, detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

std::string fmt(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

class Timer {
public:
    double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count(); }

private:
    std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

const CaseConfig gap = classify(Interval(0, 1), Interval(2, 3));
const CaseConfig overlap = classify(Interval(0, 6), Interval(3, 12));

void criterion1()
{
    const Timer t;
    GramOptions o;
    o.scale = KernelScale::Plain;
    const auto r = gram_for_cells(gap, 3, o);
    const double expect[3] = {2.2e-8, 1.3e-4, 0.28};
    const double tol[3] = {0.25, 0.15, 0.05};
    bool ok = true;
    for (int k = 0; k < 3; ++k) ok = ok && std::abs(r.eigenvalues[k] / expect[k] - 1.0) <= tol[k];
    const double s = t.seconds();
    report("C1", ok && s < 5.0,
           fmt("gram n=3 eigenvalues %.4g %.4g %.4g vs 2.2e-8 1.3e-4 0.28 (tol 25/15/5%%), %.2fs", r.eigenvalues[0],
               r.eigenvalues[1], r.eigenvalues[2], s));
}

void criterion2()
{
    const Timer t;
    GramOptions o;
    o.scale = KernelScale::Plain;
    const auto r = gram_for_cells(gap, 5, o);
    const double s = t.seconds();
    report("C2", r.lambda_min() <= 1e-14 && s < 10.0,
           fmt("gram n=5 lambda_min = sigma_min^2 = %.4g (<= 1e-14), %.2fs", r.lambda_min(), s));
}

// ||H_T f||_{L^2(J)} / ||f||_{L^2(I)} for f = sum c_k sin(k pi x), k = 2..5, plain kernel
double sine_ratio(const std::array<double, 4>& c)
{
    const Interval I = gap.interval_i;
    const Grid gi = gauss_grid(I, 64, 10);
    const Grid gj = gauss_grid(gap.interval_j, 32, 10);
    auto f = GridFunction::sample(I, gi, [&](double x) {
        double v = 0.0;
        for (int k = 0; k < 4; ++k) v += c[k] * std::sin((k + 2) * std::numbers::pi * x);
        return v;
    });
    return apply_separated(gap, f, gj, KernelScale::Plain).l2() / f.l2();
}

// minimizer of the ratio over span{sin(k pi x)}, k = 2..5, scaled to match the largest printed coefficient
std::array<double, 4> sine_minimizer()
{
    const Grid gi = gauss_grid(gap.interval_i, 64, 10);
    const Grid gj = gauss_grid(gap.interval_j, 32, 10);
    Eigen::MatrixXd b(static_cast<Eigen::Index>(gj.size()), 4), m = Eigen::MatrixXd::Zero(4, 4);
    for (int k = 0; k < 4; ++k) {
        auto fk = GridFunction::sample(gap.interval_i, gi, [&](double x) { return std::sin((k + 2) * std::numbers::pi * x); });
        const auto img = apply_separated(gap, fk, gj, KernelScale::Plain);
        for (std::size_t i = 0; i < gj.size(); ++i) b(static_cast<Eigen::Index>(i), k) = std::sqrt(gj.weights[i]) * img.values()[i];
        for (int l = 0; l < 4; ++l) {
            auto fl = GridFunction::sample(gap.interval_i, gi, [&](double x) { return std::sin((l + 2) * std::numbers::pi * x); });
            m(k, l) = fk.dot(fl);
        }
    }
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    const Eigen::MatrixXd mih = es.operatorInverseSqrt();
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(b * mih, Eigen::ComputeThinV);
    Eigen::VectorXd c = mih * svd.matrixV().col(3);
    c *= 0.80509 / c(3);
    return {c(0), c(1), c(2), c(3)};
}

void criterion3()
{
    const std::array<double, 4> listed{-0.15269, 0.4830, 0.3084, 0.80509};
    const std::array<double, 4> flipped{-0.15269, -0.4830, 0.3084, 0.80509};
    const auto mn = sine_minimizer();
    const double r = sine_ratio(listed);
    report("C3", r >= 1e-8 && r <= 1e-6,
           fmt("listed sine combination ratio %.3g (need [1e-8,1e-6]); [info] with the sin(3 pi x) sign flipped %.3g; "
               "span minimizer (%.5f, %.5f, %.5f, %.5f) ratio %.3g",
               r, sine_ratio(flipped), mn[0], mn[1], mn[2], mn[3], sine_ratio(mn)));
}

struct GapSpectra {
    NystromSvd<mp_real> nystrom;
    SturmLiouvilleSpec sl;
    SturmLiouvilleEigs eigs;
};

void criterion4(const GapSpectra& g)
{
    const auto d = g.nystrom.decomposition(g.sl.grid, midpoint_grid(gap.interval_j, 256), 10);
    std::vector<GridFunction> first(g.eigs.eigenfunctions.begin(), g.eigs.eigenfunctions.begin() + 10);
    const auto corr = cross_validate(d.u_funcs, first);
    double worst = 1.0;
    for (double c : corr) worst = std::min(worst, c);
    const auto c = constants(gap);
    double lo = INFINITY, hi = -INFINITY;
    for (int n = 10; n <= 30; ++n) {
        const double q = g.eigs.lambdas[static_cast<std::size_t>(n)] / (c.lambda_coeff * n * n);
        lo = std::min(lo, q);
        hi = std::max(hi, q);
    }
    // diagnostic only: the Weyl integral of 1/sqrt|P| over I equals K- as defined by the constants module
    double wlo = INFINITY, whi = -INFINITY;
    for (int n = 10; n <= 30; ++n) {
        const double w = g.eigs.lambdas[static_cast<std::size_t>(n)] * c.k_minus * c.k_minus /
                         (std::numbers::pi * std::numbers::pi * (n + 0.5) * (n + 0.5));
        wlo = std::min(wlo, w);
        whi = std::max(whi, w);
    }
    const bool corr_ok = d.size() == 10 && worst >= 0.99;
    const bool lam_ok = lo >= 0.95 && hi <= 1.05;
    report("C4", corr_ok && lam_ok,
           fmt("first 10 singular functions vs L_I eigenfunctions on %d cells: min correlation %.6f (>= 0.99) %s; "
               "lambda_n/(pi^2 n^2/K+^2) over n=10..30 in [%.4f, %.4f] (need [0.95,1.05]) %s; "
               "[info] lambda_n/(pi^2 (n+1/2)^2/K-^2) in [%.4f, %.4f]",
               g.sl.cells, worst, corr_ok ? "ok" : "FAILED", lo, hi, lam_ok ? "ok" : "FAILED", wlo, whi));
}

void criterion5(const GapSpectra& g)
{
    const auto c = constants(gap);
    const auto fit = sigma_decay_fit(g.nystrom.sigmas(), 5, 25, g.nystrom.resolution_floor());
    const double rel = std::abs(fit.rate / c.sigma_rate - 1.0);
    const auto df = decay_fit(gap, 10);
    const double rel_b = std::abs(df.beta / (2.0 * c.sigma_rate) - 1.0);
    report("C5", rel <= 0.05 && rel_b <= 0.20,
           fmt("sigma_n rate over n=5..25 %.5f vs pi K+/K- = %.5f (%.2f%%, <= 5%%); gram beta %.4f vs %.4f (%.2f%%, <= 20%%)",
               fit.rate, c.sigma_rate, 100 * rel, df.beta, 2 * c.sigma_rate, 100 * rel_b));
}

void criterion6(const GapSpectra& g)
{
    const auto pc = primitive_check(as_decomposition(g.sl, g.eigs), 5, 30);
    const bool gap_ok = std::abs(pc.fit.slope + 1.0) <= 0.15;
    const auto od = svd_of_operator(overlap_operator(overlap, 256), 256, 1e-16);
    const auto loc = overlap_localization(od, 0.5);
    const bool ov_ok = loc.fit.r2 >= 0.95 && loc.fit.slope < 0.0;
    report("C6", gap_ok && ov_ok,
           fmt("gap: max|primitive of u_n| log-log slope %.4f over n=5..30 (-1 +- 0.15); overlap mu=0.5: "
               "ln||u_n||_{I n J*} fit R^2 %.4f slope %.4f over %zu modes",
               pc.fit.slope, loc.fit.r2, loc.fit.slope, loc.modes.size()));
}

Envelope criterion7()
{
    const Timer t;
    const BoundsContext gctx(gap);
    const BoundsContext octx(overlap);
    struct Item {
        const char* name;
        const BoundsContext* ctx;
        TheoremId id;
        int m;
    };
    const Item items[] = {{"thm2", &gctx, TheoremId::Thm2, 0},   {"thm2a M=1", &gctx, TheoremId::Thm2a, 1},
                          {"thm2a M=2", &gctx, TheoremId::Thm2a, 2}, {"thm3", &gctx, TheoremId::Thm3, 0},
                          {"thm3a M=1", &gctx, TheoremId::Thm3a, 1}, {"thm4", &octx, TheoremId::Thm4, 0}};
    bool env_ok = true;
    double sine_r2 = 1.0;
    Envelope thm3{};
    LinearFit sine_loglog{};
    std::string detail;
    for (const auto& it : items) {
        const auto e = envelope_experiment(*it.ctx, it.id, it.m, 0.5, 1, 0.9);
        env_ok = env_ok && e.generation.violation_count == 0 && e.validation_violations == 0;
        if (!std::isnan(e.sine_r2)) sine_r2 = std::min(sine_r2, e.sine_r2);
        if (it.id == TheoremId::Thm3) {
            thm3 = e.generation.envelope;
            std::vector<double> ns, lhs;
            for (const auto& r : e.generation.rows) {
                if (r.label == "sine") {
                    ns.push_back(r.param);
                    lhs.push_back(r.lhs);
                }
            }
            sine_loglog = loglog_fit(ns, lhs);
        }
        detail += fmt("%s %d/%zu+%d/%zu; ", it.name, e.generation.violation_count, e.generation.rows.size(),
                      e.validation_violations, e.validation.size());
    }
    report("C7", env_ok && sine_r2 >= 0.98,
           fmt("envelope violations gen+val(0.9x): %ssine ln-lhs R^2 %.4f (>= 0.98) %s; "
               "[info] log-log sine fit slope %.3f R^2 %.4f, %.1fs",
               detail.c_str(), sine_r2, sine_r2 >= 0.98 ? "ok" : "FAILED", sine_loglog.slope, sine_loglog.r2,
               t.seconds()));
    return thm3;
}

void criterion8()
{
    const auto ovl = classify(Interval(0, 2), Interval(1, 4));
    int ok_gap = 0, ok_ovl = 0;
    double worst_gap = INFINITY, worst_ovl = INFINITY;
    for (const auto& f : random_positive_steps(gap.interval_i, 20, 11)) {
        const auto r = polydecay_bound(gap, f);
        ok_gap += r.holds ? 1 : 0;
        worst_gap = std::min(worst_gap, r.lhs / r.rhs);
    }
    for (const auto& f : random_positive_steps(ovl.interval_i, 20, 12)) {
        const auto r = polydecay_bound(ovl, f);
        ok_ovl += r.holds && r.overlap_variant ? 1 : 0;
        worst_ovl = std::min(worst_ovl, r.lhs / r.rhs);
    }
    report("C8", ok_gap == 20 && ok_ovl == 20,
           fmt("positive steps: gap %d/20 (min lhs/rhs %.3f), overlap variant on (0,2),(1,4) %d/20 (min lhs/rhs %.3f)",
               ok_gap, worst_gap, ok_ovl, worst_ovl));
}

void criterion9(const Envelope& env)
{
    const Timer t;
    const auto f = box_target(gap.interval_i);
    const auto rep = diameter_rate(gap, f, {1e-2, 1e-3, 1e-4, 1e-5, 1e-6}, {1, 2, 3, 4, 5}, env.c1, env.c2, 64);
    const double s = t.seconds();
    std::string med, bnd;
    int nonconv = 0;
    for (const auto& r : rep.rows) {
        med += fmt(" %.4f", r.median_error);
        bnd += fmt(" %.3f", r.bound);
        nonconv += r.nonconverged;
    }
    report("C9", rep.strictly_decreasing && rep.pearson >= 0.8 && rep.below_bound && s < 300.0,
           fmt("median errors%s (strictly decreasing %s), pearson %.3f (>= 0.8), bounds%s with c1=%.4g c2=%.4g "
               "(all below %s), %d unconverged runs, %.1fs",
               med.c_str(), rep.strictly_decreasing ? "yes" : "no", rep.pearson, bnd.c_str(), env.c1, env.c2,
               rep.below_bound ? "yes" : "no", nonconv, s));
}

void criterion10()
{
    const auto k = PeriodicKernel::from_rate([](int n) { return std::exp(-0.3 * n); }, 16, 64).with_coeff(3, 0.0);
    const auto f = nullspace_vector(k, 3);
    const double tf = convolve(k, f).l2();
    const bool null_ok = tf <= 1e-12 && std::abs(f.l2() - 1.0) < 1e-14;

    std::mt19937_64 rng(10);
    std::uniform_real_distribution<double> u(0.0, 1.0), lv(-2.0, 2.0);
    std::uniform_int_distribution<int> pieces(1, 12);
    double taib = 0.0;
    for (int t = 0; t < 50; ++t) {
        std::vector<double> b{0.0};
        const int m = pieces(rng);
        for (int j = 0; j < m - 1; ++j) b.push_back(u(rng));
        b.push_back(1.0);
        std::sort(b.begin(), b.end());
        std::vector<double> l(b.size() - 1);
        for (auto& v : l) v = lv(rng);
        taib = std::max(taib, taibleson_check(StepFunction(b, l)));
    }
    const bool taib_ok = taib <= 2.0 * std::numbers::pi;

    double gap_sv = 0.0;
    std::normal_distribution<double> g;
    for (int t = 0; t < 10; ++t) {
        std::vector<cplx> c(25);
        c[12] = g(rng);
        for (int n = 1; n <= 12; ++n) {
            c[static_cast<std::size_t>(12 + n)] = cplx(g(rng), g(rng));
            c[static_cast<std::size_t>(12 - n)] = std::conj(c[static_cast<std::size_t>(12 + n)]);
        }
        const PeriodicKernel kk(c, 64);
        for (int band : {4, 8, 12}) gap_sv = std::max(gap_sv, std::abs(band_limited_min_singular(kk, band) - min_abs_coeff(kk, band)));
    }
    const bool sv_ok = gap_sv <= 1e-12;
    report("C10", null_ok && taib_ok && sv_ok,
           fmt("nullspace ||Tf|| = %.2e (<= 1e-12); Taibleson constant max %.5f over 50 steps (<= 2 pi); "
               "|min sv - min|K^(n)|| max %.2e (<= 1e-12)",
               tf, taib, gap_sv));
}

}  // namespace

int main()
{
    const Timer total;
    criterion1();
    criterion2();
    criterion3();
    {
        const Timer t;
        GapSpectra g{NystromSvd<mp_real>(gap), make_sturm_liouville(gap, 1024), {}};
        g.eigs = sturm_liouville_eigs(g.sl, 31);
        std::printf("info spectra: Nystrom resolved %zu singular values (floor %.2e), %.1fs\n", g.nystrom.resolved(),
                    g.nystrom.resolution_floor(), t.seconds());
        criterion4(g);
        criterion5(g);
        criterion6(g);
    }
    const Envelope thm3 = criterion7();
    criterion8();
    criterion9(thm3);
    criterion10();
    std::printf("%d of 10 criteria failed, %.1fs total\n", failures, total.seconds());
    return failures == 0 ? 0 : 1;
}
