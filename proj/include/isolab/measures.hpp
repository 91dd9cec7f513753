#pragma once

#include <Eigen/Dense>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include "isolab/estimate.hpp"
#include "isolab/rng.hpp"

namespace isolab {

/// Sample batches store one point per row.
using RowMatrixXd = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class Family {
    Gaussian,
    Cube,
    EuclideanBall,
    L1Ball,
    ProductExponential,
    Simplex,
    HPolyBody,
};

const char* family_name(Family f);

/// Optional closed forms attached to a measure.  Every evaluator present here
/// must agree with the corresponding Monte Carlo estimator; the test suite
/// spot-checks that.  Absent evaluators are default-constructed (empty).
struct AnalyticProfile {
    std::optional<double> logDensityAtZero;
    std::optional<double> supNormPerDim;  // sup-norm of the density, per dimension
    std::function<double(double)> momentIq;   // q-th norm moment, q in (-n,0)u(0,inf)
    std::function<double(double)> zpRadius;   // support radius of the p-th moment body
                                              // when that body is a euclidean ball
    std::function<double(const Eigen::VectorXd&)> logLaplace;
    double laplaceDomainRadiusPerAxis = std::numeric_limits<double>::infinity();
};

/// Affine map y = map * (x - shift) produced by isotropize.
struct LinearImage {
    Eigen::VectorXd shift;
    Eigen::MatrixXd map;
    double logDet = 0.0;

    Eigen::VectorXd apply(const Eigen::VectorXd& x) const { return map * (x - shift); }
};

/// A log-concave probability measure.  Either one of the shipped families in
/// its analytic isotropic normalization, or a marginal view: the pushforward
/// of a family measure under x -> frame^T x for an orthonormal frame.  Views
/// always point at a family measure, never at another view.
struct Measure {
    Family family = Family::Gaussian;
    int dim = 0;
    std::map<std::string, std::string> params;
    AnalyticProfile profile;
    bool isotropic = false;
    bool symmetricDensity = false;  // f(-x) = f(x); makes marginal sup-norms exact

    std::shared_ptr<const Measure> viewBase;
    Eigen::MatrixXd viewFrame;  // baseDim x dim, orthonormal columns

    // support data for the uniform-on-body families, in base coordinates
    Eigen::MatrixXd faceNormals;    // unit rows a_i of { a_i . x <= b_i }
    Eigen::VectorXd faceOffsets;    // b_i > 0: origin strictly interior
    Eigen::MatrixXd vertices;       // simplex only, one column per vertex
    double ballRadius = 0.0;        // euclidean-ball
    double crossScale = 0.0;        // l1-ball support is crossScale * B_1
    double logUniformDensity = std::numeric_limits<double>::quiet_NaN();
    double logUniformDensityStderr = 0.0;  // nonzero only for hpoly (volume is estimated)
    double isotropyTolerance = 0.0;  // residual moment error of an empirical normalization

    int chainBurnIn = 0;   // hpoly hit-and-run
    int chainThin = 1;

    bool isView() const { return viewBase != nullptr; }
    const Measure& baseMeasure() const { return isView() ? *viewBase : *this; }
    int baseDim() const { return baseMeasure().dim; }
    bool uniformOnBody() const {
        Family f = baseMeasure().family;
        return f == Family::Cube || f == Family::EuclideanBall || f == Family::L1Ball ||
               f == Family::Simplex || f == Family::HPolyBody;
    }
};

Measure make_gaussian(int n);
Measure make_cube(int n);
Measure make_euclidean_ball(int n);
Measure make_l1_ball(int n);
Measure make_product_exponential(int n);
Measure make_simplex(int n);

/// Uniform measure on { A x <= b }, put into isotropic position empirically:
/// a hit-and-run chain estimates mean and covariance, the body is mapped
/// through the resulting affine image, and the density constant 1/|K| is
/// estimated by spherical Monte Carlo with exact ray integrals.
/// Requires the origin strictly interior (all b_i > 0) and a bounded body.
Measure make_hpoly_body(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, Seed seed);

/// `family:dim[,key=value...]`, e.g. "gaussian:8", "hpoly:3,file=body.hpoly".
Measure parse_measure_spec(const std::string& spec, Seed seed);

/// Pushforward under x -> frame^T x.  Gaussian views collapse to a gaussian
/// of the view dimension; views of views compose their frames.
Measure marginal_view(const Measure& m, const Eigen::MatrixXd& frame);

/// Density of a family measure at a point (views have no pointwise density
/// formula; their density at zero is an estimator, see functionals).
double density_at(const Measure& m, const Eigen::VectorXd& x);
double log_density_at(const Measure& m, const Eigen::VectorXd& x);  // -inf outside support

/// Exit radius of the support along the unit ray {r w : r >= 0}; +inf for
/// full-support families.
double support_exit_radius(const Measure& m, const Eigen::VectorXd& w);

/// log of the radial moment integral along a ray through the origin,
///   log INT_0^inf f(r w) r^{mom-1} dr,   w a unit vector, mom >= 1.
/// Closed form for every family; this is the primitive behind all marginal
/// density and section estimators.
double log_ray_moment(const Measure& m, const Eigen::VectorXd& w, int mom);

/// Sample-covariance isotropization.  Needs >= 10 dim^2 rows and a
/// nonsingular covariance; returns the map x -> Cov^{-1/2} (x - mean).
LinearImage isotropize(const RowMatrixXd& samples);

/// Two-sided bracket for the per-dimension isotropic constant:
/// lo = f(0)^{1/n} det(Cov)^{1/2n}, hi = e * lo; the true value always lies
/// inside.  `exact` is filled when the density's sup-norm has a closed form.
struct IsotropicConstantBracket {
    EstimateCI lo;
    EstimateCI hi;
    std::optional<double> exact;
};
IsotropicConstantBracket isotropic_constant_bracket(const Measure& m,
                                                    std::uint64_t sampleBudget,
                                                    Seed seed);

/// MC checks of the construction invariants: total mass 1 (spherical MC with
/// exact ray integrals), segment log-concavity, and, when flagged isotropic,
/// moment isotropy.  Throws on violation; used by the test suite on every
/// family and by the hpoly factory.
void validate_measure(const Measure& m, std::uint64_t budget, Seed seed);

}  // namespace isolab
