#pragma once

// Elliptic-type constants K+ and K- of a Gap configuration and the spectral
// rates they predict.

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "core.hpp"

namespace thilbert {

/// 2F1(1/2, 1/2; 1; z) = 1 / AGM(1, sqrt(1 - z)) for 0 <= z < 1.
inline double gauss_2f1_half(double z)
{
    if (!(z >= 0.0) || !(z < 1.0)) throw std::domain_error("gauss_2f1_half: need 0 <= z < 1");
    double a = 1.0;
    double g = std::sqrt(1.0 - z);
    for (int it = 0; it < 64 && std::abs(a - g) > 1e-16 * a; ++it) {
        const double an = 0.5 * (a + g);
        g = std::sqrt(a * g);
        a = an;
    }
    return 1.0 / a;
}

struct AsymptoticConstants {
    std::array<double, 4> a{};
    double z_plus = 0.0;
    double z_minus = 0.0;
    double k_plus = 0.0;
    double k_minus = 0.0;
    /// pi^2 / K+^2, the predicted coefficient of n^2 in the eigenvalues of L_I
    double lambda_coeff = 0.0;
    /// pi K+ / K-, the predicted exponential decay rate of sigma_n
    double sigma_rate = 0.0;
    /// pi^2 / K-^2; the discrete eigenvalues of L_I follow lambda_coeff_minus (n + 1/2)^2
    double lambda_coeff_minus = 0.0;
};

inline AsymptoticConstants constants_from_endpoints(const std::array<double, 4>& a)
{
    const double a1 = a[0], a2 = a[1], a3 = a[2], a4 = a[3];
    if (!(a1 < a2 && a2 <= a3 && a3 < a4)) {
        throw std::invalid_argument("constants: need a1 < a2 <= a3 < a4");
    }
    AsymptoticConstants c;
    c.a = a;
    const double d42 = a4 - a2, d31 = a3 - a1;
    c.z_plus = (a3 - a2) * (a4 - a1) / (d42 * d31);
    c.z_minus = (a2 - a1) * (a4 - a3) / (d31 * d42);
    if (!(c.z_minus < 1.0)) throw std::domain_error("constants: modulus z- reached 1");
    const double pre = std::numbers::pi / std::sqrt(d42 * d31);
    c.k_plus = pre * gauss_2f1_half(c.z_plus);
    c.k_minus = pre * gauss_2f1_half(c.z_minus);
    c.lambda_coeff = std::numbers::pi * std::numbers::pi / (c.k_plus * c.k_plus);
    c.sigma_rate = std::numbers::pi * c.k_plus / c.k_minus;
    c.lambda_coeff_minus = std::numbers::pi * std::numbers::pi / (c.k_minus * c.k_minus);
    return c;
}

inline AsymptoticConstants constants(const CaseConfig& config)
{
    if (config.case_id != Case::Gap) throw std::invalid_argument("constants: Gap configuration required");
    return constants_from_endpoints(config.a());
}

}  // namespace thilbert
