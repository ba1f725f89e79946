#pragma once

// Least-squares fits and rank/linear correlation used by the diagnostics.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace thilbert {

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
    double rss = 0.0;
    std::size_t points = 0;
};

inline LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y)
{
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("linear_fit: need >= 2 paired points");
    const auto n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        mx += x[k];
        my += y[k];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        sxx += (x[k] - mx) * (x[k] - mx);
        sxy += (x[k] - mx) * (y[k] - my);
        syy += (y[k] - my) * (y[k] - my);
    }
    if (sxx == 0.0) throw std::invalid_argument("linear_fit: degenerate abscissae");
    LinearFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.points = x.size();
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double r = y[k] - (f.intercept + f.slope * x[k]);
        f.rss += r * r;
    }
    f.r2 = syy > 0.0 ? 1.0 - f.rss / syy : 1.0;
    return f;
}

/// Fit of ln y against ln x.
inline LinearFit loglog_fit(const std::vector<double>& x, const std::vector<double>& y)
{
    std::vector<double> lx(x.size()), ly(y.size());
    for (std::size_t k = 0; k < x.size(); ++k) lx[k] = std::log(x[k]);
    for (std::size_t k = 0; k < y.size(); ++k) ly[k] = std::log(y[k]);
    return linear_fit(lx, ly);
}

/// Fit of ln y against x.
inline LinearFit semilog_fit(const std::vector<double>& x, const std::vector<double>& y)
{
    std::vector<double> ly(y.size());
    for (std::size_t k = 0; k < y.size(); ++k) ly[k] = std::log(y[k]);
    return linear_fit(x, ly);
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y)
{
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("pearson: need >= 2 paired points");
    const auto n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        mx += x[k];
        my += y[k];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        sxx += (x[k] - mx) * (x[k] - mx);
        sxy += (x[k] - mx) * (y[k] - my);
        syy += (y[k] - my) * (y[k] - my);
    }
    if (sxx == 0.0 || syy == 0.0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

/// Kendall tau-b.
inline double kendall_tau(const std::vector<double>& x, const std::vector<double>& y)
{
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("kendall_tau: need >= 2 paired points");
    double concordant = 0.0, discordant = 0.0, ties_x = 0.0, ties_y = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        for (std::size_t j = i + 1; j < x.size(); ++j) {
            const double dx = x[i] - x[j];
            const double dy = y[i] - y[j];
            if (dx == 0.0 && dy == 0.0) continue;
            if (dx == 0.0) {
                ties_x += 1.0;
            } else if (dy == 0.0) {
                ties_y += 1.0;
            } else if ((dx > 0.0) == (dy > 0.0)) {
                concordant += 1.0;
            } else {
                discordant += 1.0;
            }
        }
    }
    const double denom = std::sqrt((concordant + discordant + ties_x) * (concordant + discordant + ties_y));
    return denom > 0.0 ? (concordant - discordant) / denom : 0.0;
}

inline double median(std::vector<double> v)
{
    if (v.empty()) throw std::invalid_argument("median: empty input");
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Akaike information criterion of a least-squares fit with k parameters.
inline double aic(const LinearFit& fit, int k = 2)
{
    const auto n = static_cast<double>(fit.points);
    const double rss = std::max(fit.rss, 1e-300);
    return n * std::log(rss / n) + 2.0 * k;
}

}  // namespace thilbert
