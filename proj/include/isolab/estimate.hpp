#pragma once

#include <cmath>
#include <cstdint>
#include <string>

namespace isolab {

/// Point estimate with a one-sigma standard error.  Exact quantities carry
/// stderr 0.  `method` records the estimator route and any quality flags
/// (e.g. "radial-sections", "moment-mc|high-variance-p").
struct EstimateCI {
    double value = 0.0;
    double stderr_ = 0.0;
    std::uint64_t sampleCount = 0;
    std::string method;

    double lo3() const { return value - 3.0 * stderr_; }
    double hi3() const { return value + 3.0 * stderr_; }

    static EstimateCI exact(double v, std::string how = "exact") {
        return EstimateCI{v, 0.0, 0, std::move(how)};
    }
};

/// |a - b| within 3 combined standard errors (plus a floating-point guard for
/// the exact/exact case).
inline bool agree3(const EstimateCI& a, const EstimateCI& b) {
    double tol = 3.0 * std::sqrt(a.stderr_ * a.stderr_ + b.stderr_ * b.stderr_);
    double guard = 1e-9 * (std::fabs(a.value) + std::fabs(b.value) + 1.0);
    return std::fabs(a.value - b.value) <= tol + guard;
}

/// Mean and delta-method helpers for plain sample means.
struct RunningMoments {
    double sum = 0.0;
    double sumSq = 0.0;
    std::uint64_t n = 0;

    void add(double x) {
        sum += x;
        sumSq += x * x;
        n += 1;
    }
    void merge(const RunningMoments& o) {
        sum += o.sum;
        sumSq += o.sumSq;
        n += o.n;
    }
    double mean() const { return n ? sum / static_cast<double>(n) : 0.0; }
    double variance() const {
        if (n < 2) return 0.0;
        double m = mean();
        double v = (sumSq - static_cast<double>(n) * m * m) / static_cast<double>(n - 1);
        return v > 0.0 ? v : 0.0;
    }
    double stderrOfMean() const { return n ? std::sqrt(variance() / static_cast<double>(n)) : 0.0; }
};

/// stderr of m^{1/q} given the stderr of the plain mean m.
inline double power_mean_stderr(double mean, double q, double meanStderr) {
    if (mean <= 0.0) return INFINITY;
    return std::fabs(1.0 / q) * std::pow(mean, 1.0 / q - 1.0) * meanStderr;
}

}  // namespace isolab
