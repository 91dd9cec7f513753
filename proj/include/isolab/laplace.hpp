#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>

#include "isolab/estimate.hpp"
#include "isolab/measures.hpp"
#include "isolab/sampler.hpp"

namespace isolab {

/// True when the exponential moment E e^<x,xi> is finite.  Bounded supports
/// and gaussians are finite everywhere; the product-exponential family needs
/// every coordinate strictly inside its rate.
bool laplace_domain_finite(const Measure& m, const Eigen::VectorXd& xi);

/// log E e^<x,xi>.  Closed form when the family has one; otherwise
/// log-mean-exp over the batch with a block-jackknife stderr, flagged
/// `unstable` when the top 0.1% of samples carry more than half the mass.
EstimateCI log_laplace(const Measure& m, const Eigen::VectorXd& xi,
                       const SampleBatch& batch);

/// Bundles a measure with a retained batch so the transform can be evaluated
/// at many points on common random numbers (finite differences rely on this).
struct LogLaplaceOracle {
    std::shared_ptr<const Measure> measure;
    std::shared_ptr<const SampleBatch> batch;  // null when closed form exists

    EstimateCI evaluate(const Eigen::VectorXd& xi) const;
};
LogLaplaceOracle make_log_laplace_oracle(const Measure& m, std::uint64_t sampleCount,
                                         Seed seed);

/// Largest t with max(Lambda(t theta), Lambda(-t theta)) <= p, found by
/// bracketed bisection (valid: Lambda is convex, 0 at 0, minimized at 0, so
/// it is non-decreasing along rays).  domainLimited marks the defensive case
/// where the transform stays below p on its whole finiteness ray.
struct GaugeResult {
    double t = 0.0;
    bool domainLimited = false;
};
GaugeResult lambda_p_gauge(const LogLaplaceOracle& oracle, double p,
                           const Eigen::VectorXd& theta);

/// Membership test for the half level-set: |x| <= t*(x/|x|) / 2.
bool in_half_lambda_p(const LogLaplaceOracle& oracle, double p, const Eigen::VectorXd& x);

/// The exponentially tilted measure, recentered at its barycentre.  The
/// barycentre estimate is the mean of a dedicated tilted draw; centered
/// draws subtract it.
struct TiltedMeasure {
    Measure base;
    Eigen::VectorXd tiltPoint;
    Eigen::VectorXd recenter;       // estimated barycentre of the raw tilt
    double recenterStderr = 0.0;    // max per-coordinate stderr of the estimate

    /// samples of the raw tilted measure (barycentre at `recenter`)
    SampleBatch draw_raw(std::uint64_t count, Seed seed) const;
    /// samples recentered to barycentre zero
    SampleBatch draw_centered(std::uint64_t count, Seed seed) const;
};
TiltedMeasure tilt(const Measure& m, const Eigen::VectorXd& x,
                   std::uint64_t recenterSamples, Seed seed);

/// Finite-difference check of the derivative identities: the gradient of the
/// transform at x against the tilted mean, its Hessian against the tilted
/// covariance.  Gaps are Frobenius distances relative to quantity scale.
struct TiltDerivativeReport {
    double gradGap = 0.0;
    double hessGap = 0.0;
};
TiltDerivativeReport tilt_derivative_check(const Measure& m, const Eigen::VectorXd& x,
                                           double h, std::uint64_t sampleCount,
                                           Seed seed);

}  // namespace isolab
