#include "isolab/measures.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "isolab/errors.hpp"
#include "isolab/parallel.hpp"
#include "isolab/quadrature.hpp"
#include "isolab/sampler.hpp"
#include "isolab/special.hpp"

namespace isolab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLaplaceRate = 1.4142135623730950488;  // variance-1 two-sided exponential
constexpr double kCubeHalfSide = 1.7320508075688772935; // variance-1 uniform interval

double l1_scale(int n) {
    // coordinate variance of uniform on B_1^n is 2/((n+1)(n+2))
    return std::sqrt(0.5 * (n + 1.0) * (n + 2.0));
}

/// log(sinh(z)/z), stable for small and large z.
double log_sinhc(double z) {
    double a = std::fabs(z);
    if (a < 1e-4) return a * a / 6.0;
    if (a > 30.0) return a - std::log(2.0 * a);
    return std::log(std::sinh(a) / a);
}

const GaussLegendre& ball_rule() {
    static const GaussLegendre rule(512);
    return rule;
}

/// log E exp(z s) for s the 1-d marginal of the uniform unit ball in R^n;
/// the marginal density is proportional to (1-s^2)^{(n-1)/2} on [-1,1].
double ball_log_mgf(int n, double z) {
    z = std::fabs(z);
    if (z == 0.0) return 0.0;
    double a = 0.5 * (n - 1);
    const auto& rule = ball_rule();
    // factor e^z out so the integrand stays in [0,1]
    double num = rule.integrate(-1.0, 1.0, [&](double s) {
        return std::pow(1.0 - s * s, a) * std::exp(z * (s - 1.0));
    });
    double den = rule.integrate(-1.0, 1.0, [&](double s) { return std::pow(1.0 - s * s, a); });
    return z + std::log(num / den);
}

Measure base_skeleton(Family f, int n) {
    if (n < 1) throw UsageError("measure dimension must be >= 1");
    Measure m;
    m.family = f;
    m.dim = n;
    m.isotropic = true;
    return m;
}

double polytope_exit_radius(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                            const Eigen::VectorXd& w) {
    double r = kInf;
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
        double s = A.row(i).dot(w);
        if (s > 1e-14) r = std::min(r, b[i] / s);
    }
    if (!(r < kInf))
        throw UnsupportedMeasureError("polytope is unbounded along a sampled ray");
    return r;
}

}  // namespace

const char* family_name(Family f) {
    switch (f) {
        case Family::Gaussian: return "gaussian";
        case Family::Cube: return "cube";
        case Family::EuclideanBall: return "euclidean-ball";
        case Family::L1Ball: return "l1-ball";
        case Family::ProductExponential: return "product-exponential";
        case Family::Simplex: return "simplex";
        case Family::HPolyBody: return "hpoly";
    }
    return "?";
}

Measure make_gaussian(int n) {
    Measure m = base_skeleton(Family::Gaussian, n);
    m.symmetricDensity = true;
    m.profile.logDensityAtZero = -0.5 * n * std::log(2.0 * M_PI);
    m.profile.supNormPerDim = 1.0 / std::sqrt(2.0 * M_PI);
    m.profile.momentIq = [n](double q) { return gaussian_norm_moment(n, q); };
    m.profile.zpRadius = [](double p) { return gaussian_direction_moment(p); };
    m.profile.logLaplace = [](const Eigen::VectorXd& xi) { return 0.5 * xi.squaredNorm(); };
    return m;
}

Measure make_cube(int n) {
    Measure m = base_skeleton(Family::Cube, n);
    m.symmetricDensity = true;
    m.logUniformDensity = -n * std::log(2.0 * kCubeHalfSide);
    m.profile.logDensityAtZero = m.logUniformDensity;
    m.profile.supNormPerDim = std::exp(m.logUniformDensity / n);
    m.profile.logLaplace = [](const Eigen::VectorXd& xi) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < xi.size(); ++i) s += log_sinhc(kCubeHalfSide * xi[i]);
        return s;
    };
    return m;
}

Measure make_euclidean_ball(int n) {
    Measure m = base_skeleton(Family::EuclideanBall, n);
    m.symmetricDensity = true;
    m.ballRadius = std::sqrt(n + 2.0);
    m.logUniformDensity = -(log_unit_ball_volume(n) + n * std::log(m.ballRadius));
    m.profile.logDensityAtZero = m.logUniformDensity;
    m.profile.supNormPerDim = std::exp(m.logUniformDensity / n);
    double R = m.ballRadius;
    m.profile.momentIq = [n, R](double q) { return ball_norm_moment(n, q, R); };
    m.profile.zpRadius = [n, R](double p) { return ball_direction_moment(n, p, R); };
    m.profile.logLaplace = [n, R](const Eigen::VectorXd& xi) {
        return ball_log_mgf(n, R * xi.norm());
    };
    return m;
}

Measure make_l1_ball(int n) {
    Measure m = base_skeleton(Family::L1Ball, n);
    m.symmetricDensity = true;
    m.crossScale = l1_scale(n);
    m.logUniformDensity = std::lgamma(n + 1.0) - n * std::log(2.0 * m.crossScale);
    m.profile.logDensityAtZero = m.logUniformDensity;
    m.profile.supNormPerDim = std::exp(m.logUniformDensity / n);
    return m;
}

Measure make_product_exponential(int n) {
    Measure m = base_skeleton(Family::ProductExponential, n);
    m.symmetricDensity = true;
    m.profile.logDensityAtZero = -0.5 * n * std::log(2.0);
    m.profile.supNormPerDim = 1.0 / std::sqrt(2.0);
    m.profile.logLaplace = [](const Eigen::VectorXd& xi) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < xi.size(); ++i) {
            double u = xi[i] / kLaplaceRate;
            if (std::fabs(u) >= 1.0)
                throw LaplaceDomainError("exponential-moment transform diverges");
            s -= std::log1p(-u * u);
        }
        return s;
    };
    m.profile.laplaceDomainRadiusPerAxis = kLaplaceRate;
    return m;
}

Measure make_simplex(int n) {
    Measure m = base_skeleton(Family::Simplex, n);
    m.symmetricDensity = false;

    // Corner simplex {x >= 0, sum x <= 1} has mean (1/(n+1)) 1 and covariance
    // with eigenvalue 1/((n+1)^2(n+2)) along 1 and 1/((n+1)(n+2)) on its
    // complement, so the inverse square root is analytic.
    double c1 = (n + 1.0) * std::sqrt(n + 2.0);
    double c2 = std::sqrt((n + 1.0) * (n + 2.0));
    Eigen::MatrixXd P1 = Eigen::MatrixXd::Constant(n, n, 1.0 / n);
    Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
    Eigen::MatrixXd T = c1 * P1 + c2 * (I - P1);
    Eigen::MatrixXd Tinv = (1.0 / c1) * P1 + (1.0 / c2) * (I - P1);
    Eigen::VectorXd mean = Eigen::VectorXd::Constant(n, 1.0 / (n + 1.0));
    double logDetT = std::log(c1) + (n - 1.0) * std::log(c2);

    m.logUniformDensity = std::lgamma(n + 1.0) - logDetT;
    m.profile.logDensityAtZero = m.logUniformDensity;
    m.profile.supNormPerDim = std::exp(m.logUniformDensity / n);

    m.vertices.resize(n, n + 1);
    m.vertices.col(0) = T * (-mean);
    for (int j = 0; j < n; ++j)
        m.vertices.col(j + 1) = T * (Eigen::VectorXd::Unit(n, j) - mean);

    m.faceNormals.resize(n + 1, n);
    m.faceOffsets.resize(n + 1);
    for (int i = 0; i < n; ++i) {
        Eigen::VectorXd a = -Tinv.col(i);
        double b = 1.0 / (n + 1.0);
        double s = a.norm();
        m.faceNormals.row(i) = (a / s).transpose();
        m.faceOffsets[i] = b / s;
    }
    {
        Eigen::VectorXd a = Tinv * Eigen::VectorXd::Ones(n);
        double b = 1.0 / (n + 1.0);
        double s = a.norm();
        m.faceNormals.row(n) = (a / s).transpose();
        m.faceOffsets[n] = b / s;
    }
    return m;
}

Measure marginal_view(const Measure& m, const Eigen::MatrixXd& frame) {
    if (frame.rows() != m.dim)
        throw UsageError("marginal_view: frame rows must equal measure dimension");
    int k = static_cast<int>(frame.cols());
    if (k < 1 || k > m.dim) throw UsageError("marginal_view: bad view dimension");
    double defect = (frame.transpose() * frame - Eigen::MatrixXd::Identity(k, k))
                        .cwiseAbs()
                        .maxCoeff();
    if (defect > 1e-8) throw UsageError("marginal_view: frame is not orthonormal");

    const Measure& base = m.baseMeasure();
    Eigen::MatrixXd composed = m.isView() ? Eigen::MatrixXd(m.viewFrame * frame) : frame;

    // marginals of a standard gaussian are standard gaussians
    if (base.family == Family::Gaussian) return make_gaussian(k);
    if (k == base.dim) return base;  // full-dimensional view is the measure itself

    Measure v;
    v.family = base.family;
    v.dim = k;
    v.params = base.params;
    v.isotropic = base.isotropic;
    v.symmetricDensity = base.symmetricDensity;
    v.viewBase = m.isView() ? m.viewBase : std::make_shared<Measure>(base);
    v.viewFrame = composed;
    return v;
}

double log_density_at(const Measure& m, const Eigen::VectorXd& x) {
    if (m.isView())
        throw UnsupportedMeasureError(
            "marginal views have no pointwise density formula; "
            "use the marginal density estimator");
    if (x.size() != m.dim) throw UsageError("density: dimension mismatch");
    switch (m.family) {
        case Family::Gaussian:
            return -0.5 * m.dim * std::log(2.0 * M_PI) - 0.5 * x.squaredNorm();
        case Family::Cube:
            return x.cwiseAbs().maxCoeff() <= kCubeHalfSide + 1e-12 ? m.logUniformDensity
                                                                    : -kInf;
        case Family::EuclideanBall:
            return x.norm() <= m.ballRadius + 1e-12 ? m.logUniformDensity : -kInf;
        case Family::L1Ball:
            return x.lpNorm<1>() <= m.crossScale + 1e-12 ? m.logUniformDensity : -kInf;
        case Family::ProductExponential:
            return -0.5 * m.dim * std::log(2.0) - kLaplaceRate * x.lpNorm<1>();
        case Family::Simplex:
        case Family::HPolyBody: {
            double slack = (m.faceOffsets - m.faceNormals * x).minCoeff();
            return slack >= -1e-12 ? m.logUniformDensity : -kInf;
        }
    }
    throw UsageError("density: unknown family");
}

double density_at(const Measure& m, const Eigen::VectorXd& x) {
    double l = log_density_at(m, x);
    return l == -kInf ? 0.0 : std::exp(l);
}

double support_exit_radius(const Measure& m, const Eigen::VectorXd& w) {
    const Measure& base = m.baseMeasure();
    switch (base.family) {
        case Family::Gaussian:
        case Family::ProductExponential:
            return kInf;
        case Family::Cube:
            return kCubeHalfSide / w.cwiseAbs().maxCoeff();
        case Family::EuclideanBall:
            return base.ballRadius;
        case Family::L1Ball:
            return base.crossScale / w.lpNorm<1>();
        case Family::Simplex:
        case Family::HPolyBody:
            return polytope_exit_radius(base.faceNormals, base.faceOffsets, w);
    }
    throw UsageError("exit radius: unknown family");
}

double log_ray_moment(const Measure& m, const Eigen::VectorXd& w, int mom) {
    const Measure& base = m.baseMeasure();
    if (w.size() != base.dim) throw UsageError("ray moment: direction dimension mismatch");
    if (mom < 1) throw UsageError("ray moment: power must be >= 1");
    int n = base.dim;
    switch (base.family) {
        case Family::Gaussian:
            return -0.5 * n * std::log(2.0 * M_PI) + (0.5 * mom - 1.0) * std::log(2.0) +
                   std::lgamma(0.5 * mom);
        case Family::ProductExponential:
            return -0.5 * n * std::log(2.0) + std::lgamma(static_cast<double>(mom)) -
                   mom * std::log(kLaplaceRate * w.lpNorm<1>());
        default: {
            double rho = support_exit_radius(base, w);
            return base.logUniformDensity + mom * std::log(rho) -
                   std::log(static_cast<double>(mom));
        }
    }
}

LinearImage isotropize(const RowMatrixXd& samples) {
    Eigen::Index count = samples.rows();
    Eigen::Index n = samples.cols();
    if (n < 1) throw UsageError("isotropize: empty sample matrix");
    if (count < 10 * n * n)
        throw DegenerateMeasureError("isotropize: need at least 10 dim^2 samples");

    Eigen::VectorXd mean = samples.colwise().mean();
    Eigen::MatrixXd centered = samples.rowwise() - mean.transpose();
    Eigen::MatrixXd cov =
        (centered.transpose() * centered) / static_cast<double>(count - 1);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    if (eig.info() != Eigen::Success)
        throw DegenerateMeasureError("isotropize: eigendecomposition failed");
    Eigen::VectorXd lam = eig.eigenvalues();
    double lamMax = lam.maxCoeff();
    if (!(lamMax > 0.0) || lam.minCoeff() <= 1e-10 * lamMax)
        throw DegenerateMeasureError("isotropize: sample covariance is singular");

    LinearImage image;
    image.shift = mean;
    Eigen::VectorXd invSqrt = lam.cwiseSqrt().cwiseInverse();
    image.map = eig.eigenvectors() * invSqrt.asDiagonal() * eig.eigenvectors().transpose();
    image.logDet = -0.5 * lam.array().log().sum();
    return image;
}

IsotropicConstantBracket isotropic_constant_bracket(const Measure& m,
                                                    std::uint64_t sampleBudget,
                                                    Seed seed) {
    if (m.isView())
        throw UnsupportedMeasureError(
            "bracket applies to family measures; use the marginal surrogate for views");

    double logF0, logF0sd = 0.0;
    if (m.profile.logDensityAtZero) {
        logF0 = *m.profile.logDensityAtZero;
    } else if (std::isfinite(m.logUniformDensity)) {
        logF0 = m.logUniformDensity;
        logF0sd = m.logUniformDensityStderr;
    } else {
        throw UnsupportedMeasureError("no density value at the origin");
    }
    if (density_at(m, Eigen::VectorXd::Zero(m.dim)) <= 0.0)
        throw UnsupportedMeasureError("origin lies outside the support");

    int n = m.dim;
    double logDetHalf = 0.0;  // log det(Cov)^{1/2}; exactly 0 for isotropic instances
    if (!m.isotropic) {
        SampleBatch batch = draw(m, std::max<std::uint64_t>(sampleBudget, 10u * n * n),
                                 seed.child("bracket-cov"));
        // isotropize returns the map Cov^{-1/2}, so log det(Cov)^{1/2} = -logDet
        logDetHalf = -isotropize(batch.points).logDet;
    }

    IsotropicConstantBracket out;
    double lo = std::exp((logF0 + logDetHalf) / n);
    out.lo = EstimateCI{lo, lo * logF0sd / n, 0,
                        logF0sd > 0 ? "density-at-zero-mc" : "density-at-zero-exact"};
    out.hi = EstimateCI{M_E * lo, M_E * out.lo.stderr_, 0, out.lo.method};
    if (m.profile.supNormPerDim && m.isotropic) out.exact = *m.profile.supNormPerDim;
    return out;
}

namespace {

Eigen::VectorXd random_unit_vector(Rng& rng, int n) {
    Eigen::VectorXd v(n);
    rng.fill_normal(std::span<double>(v.data(), static_cast<std::size_t>(n)));
    double s = v.norm();
    while (s < 1e-12) {  // astronomically unlikely; regenerate rather than divide by ~0
        rng.fill_normal(std::span<double>(v.data(), static_cast<std::size_t>(n)));
        s = v.norm();
    }
    return v / s;
}

void check_total_mass(const Measure& m, std::uint64_t rays, Seed seed) {
    int n = m.dim;
    double logArea = log_sphere_area(n);
    Rng rng(seed.child("mass-check"));
    RunningMoments acc;
    for (std::uint64_t i = 0; i < rays; ++i) {
        Eigen::VectorXd w = random_unit_vector(rng, n);
        acc.add(std::exp(log_ray_moment(m, w, n) + logArea));
    }
    double err = std::fabs(acc.mean() - 1.0);
    double tol = 3.0 * (acc.stderrOfMean() + acc.mean() * m.logUniformDensityStderr) + 1e-9;
    if (err > tol)
        throw DegenerateMeasureError("density mass check failed: " + std::to_string(acc.mean()));
}

void check_log_concavity(const Measure& m, std::uint64_t pairs, Seed seed) {
    Rng rng(seed.child("logconcavity-check"));
    int n = m.dim;
    for (std::uint64_t i = 0; i < pairs; ++i) {
        // support points along random rays; radius capped for full-support families
        auto point = [&](void) -> Eigen::VectorXd {
            Eigen::VectorXd w = random_unit_vector(rng, n);
            double r = std::min(support_exit_radius(m, w), 3.0 * std::sqrt(n));
            return (rng.uniform() * r) * w;
        };
        Eigen::VectorXd x = point(), y = point();
        double lx = log_density_at(m, x), ly = log_density_at(m, y);
        if (!std::isfinite(lx) || !std::isfinite(ly)) continue;
        double lm = log_density_at(m, 0.5 * (x + y));
        if (lm < 0.5 * (lx + ly) - 1e-9)
            throw DegenerateMeasureError("log-concavity violated on a sampled segment");
    }
}

void check_isotropy(const Measure& m, std::uint64_t count, Seed seed) {
    SampleBatch batch = draw(m, count, seed.child("isotropy-check"));
    int n = m.dim;
    double N = static_cast<double>(batch.points.rows());
    double floor = m.baseMeasure().isotropyTolerance + 1e-6;
    Eigen::VectorXd mean = batch.points.colwise().mean();
    for (int i = 0; i < n; ++i) {
        RunningMoments col;
        for (Eigen::Index r = 0; r < batch.points.rows(); ++r) col.add(batch.points(r, i));
        if (std::fabs(mean[i]) > 3.0 * col.stderrOfMean() + floor)
            throw DegenerateMeasureError("isotropy check: barycentre off zero");
    }
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            RunningMoments prod;
            for (Eigen::Index r = 0; r < batch.points.rows(); ++r)
                prod.add((batch.points(r, i) - mean[i]) * (batch.points(r, j) - mean[j]));
            double target = i == j ? 1.0 : 0.0;
            double se = prod.stderrOfMean() + 1e-12;
            double centered = prod.mean() * N / (N - 1.0);
            if (std::fabs(centered - target) > 3.0 * se + floor)
                throw DegenerateMeasureError("isotropy check: covariance entry off identity");
        }
    }
}

}  // namespace

void validate_measure(const Measure& m, std::uint64_t budget, Seed seed) {
    const Measure& base = m.baseMeasure();
    check_total_mass(base, std::max<std::uint64_t>(budget / 4, 1024), seed);
    check_log_concavity(base, std::max<std::uint64_t>(budget / 8, 512), seed);
    if (m.isotropic) check_isotropy(m, std::max<std::uint64_t>(budget, 4096), seed);
}

Measure make_hpoly_body(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, Seed seed) {
    if (A.rows() != b.size() || A.rows() < 1) throw UsageError("hpoly: shape mismatch");
    int n = static_cast<int>(A.cols());
    if (n < 1) throw UsageError("hpoly: dimension must be >= 1");
    if (b.minCoeff() <= 0.0)
        throw UnsupportedMeasureError("hpoly: origin must be strictly interior (all b > 0)");

    Eigen::MatrixXd An(A.rows(), n);
    Eigen::VectorXd bn(b.size());
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
        double s = A.row(i).norm();
        if (s < 1e-14) throw UsageError("hpoly: zero halfspace normal");
        An.row(i) = A.row(i) / s;
        bn[i] = b[i] / s;
    }

    {   // bounded iff the unit normals positively span R^n, i.e. the sphere
        // minimum of g(w) = max_i a_i . w is positive; certify by subgradient
        // descent on g from the axes and a few random starts
        auto recession_gap = [&](Eigen::VectorXd w) {
            double best = (An * w).maxCoeff();
            for (int t = 0; t < 200 && best > 1e-9; ++t) {
                Eigen::Index arg = 0;
                (An * w).maxCoeff(&arg);
                w -= (0.5 / std::sqrt(t + 1.0)) * An.row(arg).transpose();
                double s = w.norm();
                if (s < 1e-12) break;  // subgradients cancel: no descent direction
                w /= s;
                best = std::min(best, (An * w).maxCoeff());
            }
            return best;
        };
        Rng rng(seed.child("hpoly-bounded"));
        for (int j = 0; j < n; ++j) {
            if (recession_gap(Eigen::VectorXd::Unit(n, j)) <= 1e-9 ||
                recession_gap(-Eigen::VectorXd::Unit(n, j)) <= 1e-9)
                throw UnsupportedMeasureError("hpoly: polytope is unbounded");
        }
        for (int t = 0; t < 8; ++t)
            if (recession_gap(random_unit_vector(rng, n)) <= 1e-9)
                throw UnsupportedMeasureError("hpoly: polytope is unbounded");
    }

    Measure raw;
    raw.family = Family::HPolyBody;
    raw.dim = n;
    raw.faceNormals = An;
    raw.faceOffsets = bn;
    raw.logUniformDensity = 0.0;  // placeholder; chain below only needs the support
    raw.chainBurnIn = 100 * n;
    raw.chainThin = n;

    std::uint64_t chainCount = std::max<std::uint64_t>(10u * n * n, 1u << 15);
    SampleBatch chain = draw(raw, chainCount, seed.child("hpoly-chain"));
    LinearImage img = isotropize(chain.points);

    // transform the halfspaces through y = M (x - s):  (A M^{-1}) y <= b - A s
    Eigen::MatrixXd Minv = img.map.inverse();
    Eigen::MatrixXd A2 = An * Minv;
    Eigen::VectorXd b2 = bn - An * img.shift;
    if (b2.minCoeff() <= 0.0)
        throw DegenerateMeasureError("hpoly: isotropization moved the origin outside");
    for (Eigen::Index i = 0; i < A2.rows(); ++i) {
        double s = A2.row(i).norm();
        A2.row(i) /= s;
        b2[i] /= s;
    }

    Measure m;
    m.family = Family::HPolyBody;
    m.dim = n;
    m.isotropic = true;
    m.symmetricDensity = false;
    m.faceNormals = A2;
    m.faceOffsets = b2;
    m.chainBurnIn = raw.chainBurnIn;
    m.chainThin = raw.chainThin;
    // moments are matched only to the precision of the normalization chain
    m.isotropyTolerance = 8.0 / std::sqrt(static_cast<double>(chainCount));

    // volume of the transformed body by spherical MC with exact ray integrals
    {
        Rng rng(seed.child("hpoly-volume"));
        RunningMoments acc;
        std::uint64_t rays = 1u << 15;
        double logArea = log_sphere_area(n);
        for (std::uint64_t i = 0; i < rays; ++i) {
            double rho = polytope_exit_radius(A2, b2, random_unit_vector(rng, n));
            acc.add(std::exp(n * std::log(rho) - std::log(static_cast<double>(n)) + logArea));
        }
        m.logUniformDensity = -std::log(acc.mean());
        m.logUniformDensityStderr = acc.stderrOfMean() / acc.mean();
    }
    return m;
}

Measure parse_measure_spec(const std::string& spec, Seed seed) {
    std::string head = spec;
    std::map<std::string, std::string> kv;
    if (auto comma = spec.find(','); comma != std::string::npos) {
        head = spec.substr(0, comma);
        std::stringstream rest(spec.substr(comma + 1));
        std::string item;
        while (std::getline(rest, item, ',')) {
            auto eq = item.find('=');
            if (eq == std::string::npos) throw UsageError("measure spec: expected key=value, got '" + item + "'");
            kv[item.substr(0, eq)] = item.substr(eq + 1);
        }
    }
    auto colon = head.find(':');
    if (colon == std::string::npos)
        throw UsageError("measure spec: expected family:dim, got '" + spec + "'");
    std::string fam = head.substr(0, colon);
    int n = 0;
    try {
        n = std::stoi(head.substr(colon + 1));
    } catch (const std::exception&) {
        throw UsageError("measure spec: bad dimension in '" + spec + "'");
    }

    Measure m;
    if (fam == "gaussian") m = make_gaussian(n);
    else if (fam == "cube") m = make_cube(n);
    else if (fam == "euclidean-ball" || fam == "ball") m = make_euclidean_ball(n);
    else if (fam == "l1-ball" || fam == "l1") m = make_l1_ball(n);
    else if (fam == "product-exponential" || fam == "exponential") m = make_product_exponential(n);
    else if (fam == "simplex") m = make_simplex(n);
    else if (fam == "hpoly") {
        auto it = kv.find("file");
        if (it == kv.end()) throw UsageError("hpoly spec requires file=<path>");
        std::ifstream in(it->second);
        if (!in) throw UsageError("hpoly: cannot open '" + it->second + "'");
        std::vector<double> entries;
        Eigen::Index rows = 0;
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty() || line[0] == '#') continue;
            std::stringstream ls(line);
            double v;
            int got = 0;
            while (ls >> v) {
                entries.push_back(v);
                ++got;
            }
            if (got == 0) continue;
            if (got != n + 1)
                throw UsageError("hpoly: each line needs dim+1 numbers (a1..an b)");
            ++rows;
        }
        if (rows == 0) throw UsageError("hpoly: no halfspaces in file");
        Eigen::MatrixXd A(rows, n);
        Eigen::VectorXd b(rows);
        for (Eigen::Index r = 0; r < rows; ++r) {
            for (int c = 0; c < n; ++c) A(r, c) = entries[static_cast<std::size_t>(r) * (n + 1) + c];
            b[r] = entries[static_cast<std::size_t>(r) * (n + 1) + n];
        }
        m = make_hpoly_body(A, b, seed);
    } else {
        throw UsageError("unknown measure family '" + fam + "'");
    }
    for (auto& [k, v] : kv) {
        if (k == "burnin") m.chainBurnIn = std::stoi(v);
        else if (k == "thin") m.chainThin = std::stoi(v);
        else if (k != "file") throw UsageError("unknown measure option '" + k + "'");
    }
    m.params = kv;
    return m;
}

}  // namespace isolab
