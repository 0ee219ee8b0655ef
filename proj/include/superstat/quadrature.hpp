#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

namespace superstat {

inline double normal_pdf(double x)
{
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

/// Standard normal CDF.
inline double normal_cdf(double x)
{
    return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

/// Upper tail 1 - CDF, accurate for large positive x.
inline double normal_tail(double x)
{
    return 0.5 * std::erfc(x / std::numbers::sqrt2);
}

/// Nodes and weights integrating against the standard normal density,
/// i.e. E[F(Z)] ~ sum_i weights[i] * F(nodes[i]) for Z ~ N(0,1).
struct GaussHermiteRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Probabilists' Gauss-Hermite rule via Golub-Welsch.
GaussHermiteRule gauss_hermite(std::size_t n);

} // namespace superstat
