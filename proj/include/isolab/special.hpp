#pragma once

#include <cmath>
#include <stdexcept>

namespace isolab {

// All Gamma-function ratios are kept in log space; dimensions up to a few
// hundred would overflow double through the naive route.

/// log of the volume of the unit euclidean ball in dimension n.
inline double log_unit_ball_volume(int n) {
    if (n < 0) throw std::invalid_argument("log_unit_ball_volume: negative dimension");
    if (n == 0) return 0.0;
    double half = 0.5 * n;
    return half * std::log(M_PI) - std::lgamma(half + 1.0);
}

/// log of the surface area of the unit sphere S^{m-1} (boundary of the ball in R^m).
inline double log_sphere_area(int m) {
    if (m < 1) throw std::invalid_argument("log_sphere_area: dimension must be >= 1");
    double half = 0.5 * m;
    return std::log(2.0) + half * std::log(M_PI) - std::lgamma(half);
}

/// Normalization constant relating a k-codimensional section average to a
/// negative euclidean moment: ((n-k) w_{n-k} / (n w_n))^{1/k}, where w_m is
/// the unit-ball volume in R^m.  Grows like sqrt(n); evaluated in log space.
inline double section_moment_constant(int n, int k) {
    if (n < 2 || k < 1 || k > n - 1)
        throw std::invalid_argument("section_moment_constant: need n >= 2 and 1 <= k <= n-1");
    double logNum = std::log(static_cast<double>(n - k)) + log_unit_ball_volume(n - k);
    double logDen = std::log(static_cast<double>(n)) + log_unit_ball_volume(n);
    return std::exp((logNum - logDen) / k);
}

/// q-th moment of the euclidean norm of a standard gaussian vector in R^n,
/// i.e. (E |g|^q)^{1/q} = sqrt(2) (Gamma((n+q)/2)/Gamma(n/2))^{1/q}.
/// Defined for q > -n, q != 0.
inline double gaussian_norm_moment(int n, double q) {
    if (n < 1) throw std::invalid_argument("gaussian_norm_moment: dimension must be >= 1");
    if (q == 0.0 || q <= -static_cast<double>(n))
        throw std::invalid_argument("gaussian_norm_moment: order must be in (-n, 0) or (0, inf)");
    double lg = std::lgamma(0.5 * (n + q)) - std::lgamma(0.5 * n);
    return std::sqrt(2.0) * std::exp(lg / q);
}

/// Support radius of the p-th moment body of the standard gaussian: the
/// one-dimensional moment (E |g|^p)^{1/p} = sqrt(2) (Gamma((p+1)/2)/Gamma(1/2))^{1/p}.
inline double gaussian_direction_moment(double p) {
    if (p < 1.0) throw std::invalid_argument("gaussian_direction_moment: order must be >= 1");
    double lg = std::lgamma(0.5 * (p + 1.0)) - 0.5 * std::log(M_PI);
    return std::sqrt(2.0) * std::exp(lg / p);
}

/// (E |<x,theta>|^p)^{1/p} for x uniform in the ball of radius R in R^n.
inline double ball_direction_moment(int n, double p, double R) {
    if (n < 1 || p < 1.0) throw std::invalid_argument("ball_direction_moment: bad arguments");
    double lg = std::lgamma(0.5 * (p + 1.0)) + std::lgamma(0.5 * n + 1.0)
              - 0.5 * std::log(M_PI) - std::lgamma(0.5 * (n + p) + 1.0);
    return R * std::exp(lg / p);
}

/// (E |x|^q)^{1/q} for x uniform in the ball of radius R in R^n; q > -n, q != 0.
inline double ball_norm_moment(int n, double q, double R) {
    if (q == 0.0 || q <= -static_cast<double>(n))
        throw std::invalid_argument("ball_norm_moment: order must be in (-n, 0) or (0, inf)");
    return R * std::exp(std::log(n / (n + q)) / q);
}

}  // namespace isolab
