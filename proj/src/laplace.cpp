#include "isolab/laplace.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "isolab/errors.hpp"

namespace isolab {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Marginal transforms lift through the frame: the transform of the view at
// xi equals the transform of the base at viewFrame * xi.
Eigen::VectorXd lift_to_base(const Measure& m, const Eigen::VectorXd& xi) {
    if (!m.isView()) return xi;
    return m.viewFrame * xi;
}

bool has_closed_form(const Measure& m) {
    return static_cast<bool>(m.baseMeasure().profile.logLaplace);
}

// Largest t >= 0 with all of t*xi inside the finiteness region (symmetric in
// t by the per-axis |.| bound); +inf when the region is all of space.
double domain_radius_along(const Measure& m, const Eigen::VectorXd& xi) {
    const Measure& base = m.baseMeasure();
    double perAxis = base.profile.laplaceDomainRadiusPerAxis;
    if (perAxis <= 0.0) return kInf;
    Eigen::VectorXd lifted = lift_to_base(m, xi);
    double mx = lifted.cwiseAbs().maxCoeff();
    if (mx <= 0.0) return kInf;
    return perAxis / mx;
}

EstimateCI log_mean_exp(const SampleBatch& batch, const Eigen::VectorXd& xi) {
    if (batch.count() == 0) throw UsageError("log_laplace: empty sample batch");
    if (batch.points.cols() != xi.size())
        throw UsageError("log_laplace: direction dimension mismatch");

    Eigen::VectorXd s = batch.points * xi;
    const std::int64_t n = s.size();
    double m = s.maxCoeff();
    Eigen::VectorXd w = (s.array() - m).exp();
    double total = w.sum();
    double value = m + std::log(total / static_cast<double>(n));

    // Block jackknife over contiguous blocks: variance of the log-mean is
    // read off the spread of leave-one-block-out values.
    std::int64_t blocks = std::min<std::int64_t>(64, n);
    std::vector<double> loo(static_cast<std::size_t>(blocks));
    double sumLoo = 0.0;
    for (std::int64_t b = 0; b < blocks; ++b) {
        std::int64_t begin = b * n / blocks;
        std::int64_t end = (b + 1) * n / blocks;
        double blockSum = w.segment(begin, end - begin).sum();
        double rest = total - blockSum;
        std::int64_t restCount = n - (end - begin);
        double v = rest > 0.0 && restCount > 0
                       ? m + std::log(rest / static_cast<double>(restCount))
                       : value;
        loo[static_cast<std::size_t>(b)] = v;
        sumLoo += v;
    }
    double looMean = sumLoo / static_cast<double>(blocks);
    double var = 0.0;
    for (double v : loo) var += (v - looMean) * (v - looMean);
    var *= static_cast<double>(blocks - 1) / static_cast<double>(blocks);
    double se = std::sqrt(std::max(var, 0.0));

    // Heavy-tail alarm: when the top 0.1% of samples carry most of the
    // exponential mass, the estimate (and its jackknife) is untrustworthy.
    std::int64_t topCount = std::max<std::int64_t>(1, n / 1000);
    std::vector<double> tops(w.data(), w.data() + n);
    std::nth_element(tops.begin(), tops.begin() + (n - topCount), tops.end());
    double topMass = std::accumulate(tops.begin() + (n - topCount), tops.end(), 0.0);
    bool unstable = topMass > 0.5 * total;

    EstimateCI out;
    out.value = value;
    out.stderr_ = se;
    out.sampleCount = static_cast<std::uint64_t>(n);
    out.method = unstable ? "log-mean-exp|unstable" : "log-mean-exp";
    return out;
}

}  // namespace

bool laplace_domain_finite(const Measure& m, const Eigen::VectorXd& xi) {
    double perAxis = m.baseMeasure().profile.laplaceDomainRadiusPerAxis;
    if (perAxis <= 0.0) return true;
    return lift_to_base(m, xi).cwiseAbs().maxCoeff() < perAxis;
}

EstimateCI log_laplace(const Measure& m, const Eigen::VectorXd& xi,
                       const SampleBatch& batch) {
    if (has_closed_form(m)) {
        Eigen::VectorXd lifted = lift_to_base(m, xi);
        return EstimateCI::exact(m.baseMeasure().profile.logLaplace(lifted),
                                 "closed-form");
    }
    return log_mean_exp(batch, xi);
}

EstimateCI LogLaplaceOracle::evaluate(const Eigen::VectorXd& xi) const {
    if (!measure) throw UsageError("log-laplace oracle: no measure attached");
    if (has_closed_form(*measure)) {
        Eigen::VectorXd lifted = lift_to_base(*measure, xi);
        return EstimateCI::exact(measure->baseMeasure().profile.logLaplace(lifted),
                                 "closed-form");
    }
    if (!batch) throw UsageError("log-laplace oracle: no batch attached");
    return log_mean_exp(*batch, xi);
}

LogLaplaceOracle make_log_laplace_oracle(const Measure& m, std::uint64_t sampleCount,
                                         Seed seed) {
    LogLaplaceOracle oracle;
    oracle.measure = std::make_shared<Measure>(m);
    if (!has_closed_form(m)) {
        oracle.batch = std::make_shared<SampleBatch>(
            draw(m, sampleCount, seed.child("laplace-batch")));
    }
    return oracle;
}

GaugeResult lambda_p_gauge(const LogLaplaceOracle& oracle, double p,
                           const Eigen::VectorXd& theta) {
    if (!(p >= 1.0)) throw DomainError("lambda_p_gauge: p must be at least 1");
    double norm = theta.norm();
    if (!(norm > 0.0)) throw UsageError("lambda_p_gauge: zero direction");
    Eigen::VectorXd dir = theta / norm;

    // max over both ray directions; +inf past the finiteness radius
    double tMax = domain_radius_along(*oracle.measure, dir);
    double lastSe = 0.0;
    auto g = [&](double t) {
        if (t >= tMax) return kInf;
        EstimateCI plus = oracle.evaluate(t * dir);
        EstimateCI minus = oracle.evaluate(-t * dir);
        lastSe = std::max(plus.stderr_, minus.stderr_);
        return std::max(plus.value, minus.value);
    };

    double lo = 0.0;
    double hi = std::isfinite(tMax) ? 0.5 * tMax : 1.0;
    bool bracketed = false;
    for (int iter = 0; iter < 200 && !bracketed; ++iter) {
        if (g(hi) > p) {
            bracketed = true;
            break;
        }
        lo = hi;
        double next = 2.0 * hi;
        if (next >= tMax) {
            double probe = tMax * (1.0 - 1e-12);
            if (probe <= hi || g(probe) <= p) {
                return GaugeResult{tMax, true};
            }
            hi = probe;
            bracketed = true;
        } else {
            hi = next;
        }
    }
    if (!bracketed) {
        // transform stayed below p over an astronomically long ray
        return GaugeResult{hi, true};
    }

    for (int iter = 0; iter < 200; ++iter) {
        double mid = 0.5 * (lo + hi);
        double v = g(mid);
        if (std::isfinite(v) && std::fabs(v - p) <= std::max(0.01 * p, 3.0 * lastSe))
            return GaugeResult{mid, false};
        if (v <= p)
            lo = mid;
        else
            hi = mid;
        if (hi - lo <= 1e-12 * std::max(1.0, hi)) break;
    }
    return GaugeResult{lo, false};
}

bool in_half_lambda_p(const LogLaplaceOracle& oracle, double p, const Eigen::VectorXd& x) {
    double norm = x.norm();
    if (norm == 0.0) return true;
    GaugeResult gauge = lambda_p_gauge(oracle, p, x / norm);
    return norm <= 0.5 * gauge.t;
}

SampleBatch TiltedMeasure::draw_raw(std::uint64_t count, Seed seed) const {
    return tilted_draw(base, tiltPoint, count, seed);
}

SampleBatch TiltedMeasure::draw_centered(std::uint64_t count, Seed seed) const {
    SampleBatch batch = tilted_draw(base, tiltPoint, count, seed);
    batch.points.rowwise() -= recenter.transpose();
    return batch;
}

TiltedMeasure tilt(const Measure& m, const Eigen::VectorXd& x,
                   std::uint64_t recenterSamples, Seed seed) {
    if (m.isView())
        throw UnsupportedMeasureError("tilt: marginal views are not supported");
    if (!laplace_domain_finite(m, x))
        throw LaplaceDomainError("tilt: point outside the finiteness region");
    if (recenterSamples < 2) throw UsageError("tilt: need at least 2 samples");

    SampleBatch batch = tilted_draw(m, x, recenterSamples, seed.child("tilt-recenter"));
    Eigen::VectorXd mean = batch.points.colwise().mean();
    Eigen::RowVectorXd sq =
        (batch.points.rowwise() - mean.transpose()).array().square().colwise().sum();
    double n = static_cast<double>(batch.count());
    double maxVar = sq.maxCoeff() / (n - 1.0);

    TiltedMeasure out;
    out.base = m;
    out.tiltPoint = x;
    out.recenter = mean;
    out.recenterStderr = std::sqrt(maxVar / n);
    return out;
}

TiltDerivativeReport tilt_derivative_check(const Measure& m, const Eigen::VectorXd& x,
                                           double h, std::uint64_t sampleCount,
                                           Seed seed) {
    if (!(h > 0.0)) throw UsageError("tilt_derivative_check: step must be positive");
    if (m.isView())
        throw UnsupportedMeasureError("tilt_derivative_check: views not supported");
    const auto n = x.size();

    // One retained batch serves every stencil evaluation, so Monte Carlo
    // noise cancels to first order in the differences.
    LogLaplaceOracle oracle = make_log_laplace_oracle(m, sampleCount, seed.child("fd"));
    auto f = [&](const Eigen::VectorXd& xi) { return oracle.evaluate(xi).value; };

    double center = f(x);
    Eigen::VectorXd grad(n);
    Eigen::MatrixXd hess(n, n);
    std::vector<double> plus(static_cast<std::size_t>(n)), minus(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
        e[i] = h;
        plus[static_cast<std::size_t>(i)] = f(x + e);
        minus[static_cast<std::size_t>(i)] = f(x - e);
        grad[i] = (plus[static_cast<std::size_t>(i)] - minus[static_cast<std::size_t>(i)]) /
                  (2.0 * h);
        hess(i, i) = (plus[static_cast<std::size_t>(i)] - 2.0 * center +
                      minus[static_cast<std::size_t>(i)]) /
                     (h * h);
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            Eigen::VectorXd ei = Eigen::VectorXd::Zero(n);
            Eigen::VectorXd ej = Eigen::VectorXd::Zero(n);
            ei[i] = h;
            ej[j] = h;
            double v = (f(x + ei + ej) - f(x + ei - ej) - f(x - ei + ej) +
                        f(x - ei - ej)) /
                       (4.0 * h * h);
            hess(i, j) = v;
            hess(j, i) = v;
        }
    }

    SampleBatch tilted = tilted_draw(m, x, sampleCount, seed.child("fd-tilted"));
    Eigen::VectorXd mean = tilted.points.colwise().mean();
    Eigen::MatrixXd centered = tilted.points.rowwise() - mean.transpose();
    Eigen::MatrixXd cov = centered.transpose() * centered /
                          (static_cast<double>(tilted.count()) - 1.0);

    TiltDerivativeReport report;
    report.gradGap = (grad - mean).norm() / std::max(1.0, grad.norm());
    report.hessGap = (hess - cov).norm() / std::max(1.0, hess.norm());
    return report;
}

}  // namespace isolab
