#include "isolab/functionals.hpp"

#include <algorithm>
#include <cmath>

#include "isolab/errors.hpp"
#include "isolab/hull.hpp"
#include "isolab/parallel.hpp"
#include "isolab/special.hpp"

namespace isolab {

namespace {

/// Deterministic chunked Monte Carlo mean of fn(rng): fixed chunk layout,
/// per-chunk streams, reduction in chunk order.
RunningMoments mc_mean(std::uint64_t count, Seed seed, std::string_view tag,
                       const std::function<double(Rng&)>& fn) {
    ChunkPlan plan(count);
    std::vector<RunningMoments> slots(plan.count());
    parallel_for_slots(plan.count(), [&](std::size_t c) {
        Rng rng(seed.child(tag, c));
        RunningMoments acc;
        std::size_t reps = plan.size(c);
        for (std::size_t i = 0; i < reps; ++i) acc.add(fn(rng));
        slots[c] = acc;
    });
    RunningMoments total;
    for (const auto& s : slots) total.merge(s);
    return total;
}

Eigen::VectorXd sphere_point(Rng& rng, int n) {
    Eigen::VectorXd v(n);
    rng.fill_normal(std::span<double>(v.data(), static_cast<std::size_t>(n)));
    double s = v.norm();
    while (s < 1e-12) {
        rng.fill_normal(std::span<double>(v.data(), static_cast<std::size_t>(n)));
        s = v.norm();
    }
    return v / s;
}

void require_unit(const Eigen::VectorXd& theta) {
    if (std::fabs(theta.norm() - 1.0) > 1e-9)
        throw UsageError("direction must be a unit vector");
}

}  // namespace

DirectionGrid DirectionGrid::uniform(int dim, int count, Seed seed) {
    if (dim < 1 || count < 1) throw UsageError("direction grid: bad shape");
    DirectionGrid g;
    g.dim = dim;
    g.directions.reserve(count);
    Rng rng(seed.child("direction-grid"));
    for (int i = 0; i < count; ++i) g.directions.push_back(sphere_point(rng, dim));
    g.weights = Eigen::VectorXd::Constant(count, 1.0 / count);
    return g;
}

EstimateCI moment_Iq(const Measure& m, double q, const SampleBatch& batch) {
    int n = m.dim;
    if (q == 0.0) throw DomainError("norm moment: order must be nonzero");
    if (q <= -static_cast<double>(n))
        throw DomainError("norm moment: order must exceed -dim");
    if (q <= -0.5 * n)
        throw VarianceRefusalError(
            "norm moment: direct estimator refused for order <= -dim/2 "
            "(infinite-variance risk); use I_negk_via_sections");
    if (batch.points.cols() != n) throw UsageError("norm moment: batch dimension mismatch");

    RunningMoments acc;
    for (Eigen::Index r = 0; r < batch.points.rows(); ++r)
        acc.add(std::pow(batch.points.row(r).norm(), q));
    EstimateCI out;
    out.value = std::pow(acc.mean(), 1.0 / q);
    out.stderr_ = power_mean_stderr(acc.mean(), q, acc.stderrOfMean());
    out.sampleCount = acc.n;
    out.method = "norm-moment-mc";
    return out;
}

double cnk(int n, int k) { return section_moment_constant(n, k); }

EstimateCI support_Zp(const Measure& m, double p, const Eigen::VectorXd& theta,
                      const SampleBatch& batch) {
    if (p < 1.0) throw DomainError("moment-body support: order must be >= 1");
    if (theta.size() != m.dim || batch.points.cols() != m.dim)
        throw UsageError("moment-body support: dimension mismatch");
    require_unit(theta);

    Eigen::VectorXd dots = batch.points * theta;
    RunningMoments acc;
    for (Eigen::Index r = 0; r < dots.size(); ++r)
        acc.add(std::pow(std::fabs(dots[r]), p));
    EstimateCI out;
    out.value = std::pow(acc.mean(), 1.0 / p);
    out.stderr_ = power_mean_stderr(acc.mean(), p, acc.stderrOfMean());
    out.sampleCount = acc.n;
    out.method = p > 40.0 ? "support-mc|high-variance-p" : "support-mc";
    return out;
}

Eigen::VectorXd boundary_point_Zp(const Measure& m, double p, const Eigen::VectorXd& theta,
                                  const SampleBatch& batch) {
    if (p < 1.0) throw DomainError("moment-body boundary: order must be >= 1");
    if (theta.size() != m.dim || batch.points.cols() != m.dim)
        throw UsageError("moment-body boundary: dimension mismatch");
    require_unit(theta);

    Eigen::VectorXd dots = batch.points * theta;
    double meanP = 0.0;
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(m.dim);
    for (Eigen::Index r = 0; r < dots.size(); ++r) {
        double a = std::fabs(dots[r]);
        meanP += std::pow(a, p);
        if (a > 0.0)
            grad += std::pow(a, p - 1.0) * (dots[r] > 0 ? 1.0 : -1.0) *
                    batch.points.row(r).transpose();
    }
    double count = static_cast<double>(dots.size());
    meanP /= count;
    grad /= count;
    double h = std::pow(meanP, 1.0 / p);
    return std::pow(h, 1.0 - p) * grad;
}

BodyOracle zp_body(const Measure& m, double p, std::shared_ptr<const SampleBatch> batch) {
    if (p < 1.0) throw DomainError("moment body: order must be >= 1");
    BodyOracle body;
    body.dim = m.dim;
    // absolute moments are even in theta, so the body is symmetric even when
    // the measure is not
    body.symmetric = true;

    if (m.profile.zpRadius) {
        double r = m.profile.zpRadius(p);
        body.radiusBound = r;
        body.supportFn = [r](const Eigen::VectorXd& theta) {
            require_unit(theta);
            return EstimateCI::exact(r, "moment-body-radius");
        };
        body.touchFn = [r](const Eigen::VectorXd& theta) -> Eigen::VectorXd {
            require_unit(theta);
            return r * theta;
        };
        return body;
    }

    if (!batch || batch->points.cols() != m.dim)
        throw UsageError("moment body: batch missing or mismatched");
    Measure mCopy = m;  // functors may outlive the caller's Measure
    body.supportFn = [mCopy, p, batch](const Eigen::VectorXd& theta) {
        return support_Zp(mCopy, p, theta, *batch);
    };
    body.touchFn = [mCopy, p, batch](const Eigen::VectorXd& theta) {
        return boundary_point_Zp(mCopy, p, theta, *batch);
    };
    // |<x,theta>| <= |x| pointwise, so on a fixed batch every support value
    // is bounded by the batch norm moment of the same order
    RunningMoments acc;
    for (Eigen::Index r = 0; r < batch->points.rows(); ++r)
        acc.add(std::pow(batch->points.row(r).norm(), p));
    body.radiusBound = std::pow(acc.mean(), 1.0 / p) * (1.0 + 1e-12);
    return body;
}

BodyOracle ball_body(int dim, double radius) {
    if (dim < 1 || radius <= 0.0) throw UsageError("ball body: bad shape");
    BodyOracle body;
    body.dim = dim;
    body.symmetric = true;
    body.radiusBound = radius;
    body.supportFn = [radius](const Eigen::VectorXd& theta) {
        require_unit(theta);
        return EstimateCI::exact(radius, "ball-radius");
    };
    body.touchFn = [radius](const Eigen::VectorXd& theta) -> Eigen::VectorXd {
        require_unit(theta);
        return radius * theta;
    };
    return body;
}

VolumeBracket volume_bracket(const BodyOracle& body, int resolution, Seed seed) {
    int n = body.dim;
    if (n > 6)
        throw ScaleRefusalError("volume bracket: capped at dimension 6");
    if (resolution < 100) throw UsageError("volume bracket: need at least 100 directions");

    Rng rng(seed.child("bracket-directions"));
    Eigen::MatrixXd dirs(n, resolution);       // columns are directions
    Eigen::VectorXd offsets(resolution);       // support values
    // a symmetric body owns -x along with every boundary point x, so each
    // direction contributes two hull points and a two-sided slab constraint
    bool mirror = body.symmetric;
    RowMatrixXd touches(mirror ? 2 * resolution : resolution, n);
    for (int i = 0; i < resolution; ++i) {
        Eigen::VectorXd theta = sphere_point(rng, n);
        dirs.col(i) = theta;
        offsets[i] = body.supportFn(theta).value;
        touches.row(i) = body.touchFn(theta).transpose();
        if (mirror) touches.row(resolution + i) = -touches.row(i);
    }

    VolumeBracket out;
    double hullVol = convex_hull_volume(touches);
    out.lowerPerDim = EstimateCI::exact(std::pow(hullVol, 1.0 / n), "hull-of-touching-points");

    // rejection MC on {x in R B_2 : dirs^T x <= offsets} (slabs when mirrored)
    std::uint64_t trials = 1u << 17;
    double R = body.radiusBound;
    RunningMoments hits = mc_mean(trials, seed, "bracket-rejection", [&](Rng& r) {
        Eigen::VectorXd x = sphere_point(r, n) * (R * std::pow(r.uniform_pos(), 1.0 / n));
        double worst = mirror ? ((dirs.transpose() * x).cwiseAbs() - offsets).maxCoeff()
                              : (dirs.transpose() * x - offsets).maxCoeff();
        return worst <= 0.0 ? 1.0 : 0.0;
    });
    double ballVol = std::exp(log_unit_ball_volume(n)) * std::pow(R, n);
    double vol = ballVol * hits.mean();
    EstimateCI upper;
    upper.value = std::pow(vol, 1.0 / n);
    upper.stderr_ = power_mean_stderr(vol, n, ballVol * hits.stderrOfMean());
    upper.sampleCount = hits.n;
    upper.method = "halfspace-rejection-mc";
    if (upper.value < out.lowerPerDim.value) upper.value = out.lowerPerDim.value;
    out.upperPerDim = upper;
    return out;
}

EstimateCI q_mean_width(const BodyOracle& body, double q, const DirectionGrid& grid) {
    if (q == 0.0) throw DomainError("mean width: order must be nonzero");
    if (q < -static_cast<double>(body.dim))
        throw DomainError("mean width: order below -dim");
    if (grid.dim != body.dim) throw UsageError("mean width: grid dimension mismatch");
    std::size_t count = grid.directions.size();
    if (count == 0 || grid.weights.size() != static_cast<Eigen::Index>(count))
        throw UsageError("mean width: malformed grid");

    // two error sources: grid Monte Carlo spread and the per-direction
    // support stderr; both propagate by the delta method.  The spread is
    // computed in two passes so constant support functions come out exact.
    std::vector<double> hq(count);
    double mean = 0.0, supportVar = 0.0;
    double minH = INFINITY, maxH = -INFINITY;
    for (std::size_t i = 0; i < count; ++i) {
        EstimateCI h = body.supportFn(grid.directions[i]);
        double w = grid.weights[static_cast<Eigen::Index>(i)];
        hq[i] = std::pow(h.value, q);
        mean += w * hq[i];
        minH = std::min(minH, h.value);
        maxH = std::max(maxH, h.value);
        double dh = q * std::pow(h.value, q - 1.0) * h.stderr_;
        supportVar += w * w * dh * dh;
    }
    if (minH == maxH) {
        // constant support: every power mean equals it, with no roundoff
        // from weight summation (balls must come out bit-exact)
        EstimateCI out;
        out.value = minH;
        out.stderr_ = power_mean_stderr(std::pow(minH, q), q, std::sqrt(supportVar));
        out.sampleCount = count;
        out.method = "width-grid-mc";
        return out;
    }
    double gridVar = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        double w = grid.weights[static_cast<Eigen::Index>(i)];
        gridVar += w * w * (hq[i] - mean) * (hq[i] - mean);
    }
    if (gridVar < 1e-28 * mean * mean) gridVar = 0.0;
    EstimateCI out;
    out.value = std::pow(mean, 1.0 / q);
    out.stderr_ = power_mean_stderr(mean, q, std::sqrt(gridVar + supportVar));
    out.sampleCount = count;
    out.method = "width-grid-mc";
    return out;
}

EstimateCI marginal_density_at_zero(const Measure& m, const Subspace& E,
                                    std::uint64_t rays, Seed seed) {
    if (E.ambientDim() != m.dim)
        throw UsageError("marginal density: subspace lives in the wrong space");
    int k = E.dim();
    if (k >= m.dim)
        throw UsageError("marginal density: need a proper subspace (no orthocomplement)");

    const Measure& base = m.baseMeasure();
    if (base.family == Family::Gaussian)
        return EstimateCI::exact(std::exp(-0.5 * k * std::log(2.0 * M_PI)),
                                 "gaussian-marginal");

    Eigen::MatrixXd composed =
        m.isView() ? Eigen::MatrixXd(m.viewFrame * E.frame) : E.frame;
    Subspace inBase = subspace_from_columns(composed);
    int codim = base.dim - k;
    double logArea = log_sphere_area(codim);

    RunningMoments acc = mc_mean(rays, seed, "marginal-density", [&](Rng& rng) {
        Eigen::VectorXd w = inBase.complement * sphere_point(rng, codim);
        return std::exp(log_ray_moment(base, w, codim) + logArea);
    });
    EstimateCI out;
    out.value = acc.mean();
    out.stderr_ = acc.stderrOfMean();
    out.sampleCount = acc.n;
    out.method = "radial-sections";
    return out;
}

EstimateCI I_negk_via_sections(const Measure& m, int k, int subspaceCount,
                               std::uint64_t raysPerSubspace, Seed seed) {
    int n = m.dim;
    if (k < 1 || k > n - 1)
        throw UsageError("section moment: need 1 <= k <= dim-1");
    if (subspaceCount < 2) throw UsageError("section moment: need at least 2 subspaces");

    // gaussian marginals are exact, so the Haar average collapses
    if (m.baseMeasure().family == Family::Gaussian) {
        double f = std::exp(-0.5 * k * std::log(2.0 * M_PI));
        return EstimateCI::exact(cnk(n, k) * std::pow(f, -1.0 / k), "sections-exact");
    }

    // the outer spread over independent per-subspace estimates carries both
    // the Haar variation and the inner ray noise, so its stderr is the total
    RunningMoments acc = mc_mean(
        static_cast<std::uint64_t>(subspaceCount), seed, "section-subspaces",
        [&](Rng& rng) {
            Subspace E = haar_subspace(n, k, rng);
            Eigen::MatrixXd composed =
                m.isView() ? Eigen::MatrixXd(m.viewFrame * E.frame) : E.frame;
            Subspace inBase = subspace_from_columns(composed);
            int codim = m.baseDim() - k;
            double logArea = log_sphere_area(codim);
            RunningMoments inner;
            for (std::uint64_t r = 0; r < raysPerSubspace; ++r) {
                Eigen::VectorXd w = inBase.complement * sphere_point(rng, codim);
                inner.add(std::exp(log_ray_moment(m.baseMeasure(), w, codim) + logArea));
            }
            return inner.mean();
        });

    double avg = acc.mean();
    if (!(avg > 0.0))
        throw DegenerateMeasureError("section moment: zero marginal density average");
    double c = cnk(n, k);
    EstimateCI out;
    out.value = c * std::pow(avg, -1.0 / k);
    out.stderr_ = c * (1.0 / k) * std::pow(avg, -1.0 / k - 1.0) * acc.stderrOfMean();
    out.sampleCount = acc.n;
    out.method = "sections-mc";
    return out;
}

IsotropicConstantBracket marginal_L_surrogate(const Measure& m, const Subspace& E,
                                              std::uint64_t rays, Seed seed) {
    if (!m.isotropic)
        throw UnsupportedMeasureError("marginal bracket: measure must be isotropic");
    int k = E.dim();
    EstimateCI f = marginal_density_at_zero(m, E, rays, seed);
    if (!(f.value > 0.0))
        throw DegenerateMeasureError("marginal bracket: vanishing density at zero");

    IsotropicConstantBracket out;
    EstimateCI lo;
    lo.value = std::pow(f.value, 1.0 / k);
    lo.stderr_ = power_mean_stderr(f.value, k, f.stderr_);
    lo.sampleCount = f.sampleCount;
    lo.method = f.method;
    out.lo = lo;
    out.hi = EstimateCI{M_E * lo.value, M_E * lo.stderr_, lo.sampleCount, lo.method};
    if (m.baseMeasure().family == Family::Gaussian)
        out.exact = 1.0 / std::sqrt(2.0 * M_PI);
    return out;
}

}  // namespace isolab
