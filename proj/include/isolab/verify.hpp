#pragma once

#include <optional>
#include <string>
#include <vector>

#include "isolab/estimate.hpp"
#include "isolab/measures.hpp"
#include "isolab/rng.hpp"

namespace isolab {

/// Named executable re-checks.  Each tag is one moment/width/Laplace relation
/// that the library can evaluate from both ends; run_check measures the
/// constant that makes the two ends meet and judges it against a band fixed
/// here, in code, rather than tuned per run.
enum class RelationId {
    SectionFormula,      // negative moment via marginal densities vs direct moment
    ProjectionIdentity,  // projecting the moment body commutes with the marginal
    IkWidth,             // I_{-k} against sqrt(n/k) times the -k width of Z_k
    LZnIdentity,         // isotropic constant times |Z_n|^{1/n} is order one
    Fradelizi,           // sup-norm of the density within e^n of the center value
    ReverseInclusion,    // Z_q inside c (q/p) Z_p
    LambdaPolar,         // log-Laplace level set vs p times the polar of Z_p
    TiltDerivatives,     // gradient/Hessian of the log-Laplace = tilted mean/cov
    TiltStability,       // Z_q stable under tilting inside half the gauge level
    Theorem1Chain,       // hereditary r-sharp bounded by hereditary q_{-c}
    Corollary34,         // I_{-p} at p = hereditary r-sharp stays sqrt(n)-sized
    VolumeLower,         // |Z_p|^{1/n} at least order sqrt(p/n)
    GoodMarginals,       // Haar mass of marginals with small isotropic constant
    ZpSqrtpMonotone,     // |Z_p|^{1/n}/sqrt(p) decreasing in p
    SantaloWidth,        // -n width equals the polar-volume ratio
    I2Normalization,     // I_2 = sqrt(n) in isotropic position
    NegMomentViaL,       // I_{-k} via the Haar average of marginal constants^k
};

const char* relation_tag(RelationId id);
RelationId parse_relation(const std::string& tag);
const std::vector<RelationId>& all_relations();

enum class Verdict { Pass, Fail, Indeterminate };
const char* verdict_name(Verdict v);

/// Parameters of one check instance.  A zero field means "use the relation's
/// default for this measure"; n is always taken from the measure itself.
struct GridPoint {
    int n = 0;
    int k = 0;
    double p = 0.0;
    double q = 0.0;
    double delta = 0.0;
    double A = 0.0;
};

/// Outcome of one check.  Identity-type relations pass when |lhs - rhs| is
/// within 3 combined standard errors; band-type relations pass when the
/// fitted constant lies inside the band declared for the relation.
/// Indeterminate is reserved for estimates that straddle the decision
/// boundary at the full budget.
struct RelationReport {
    RelationId relation = RelationId::SectionFormula;
    std::string measureSpec;
    GridPoint gridPoint;
    EstimateCI lhs;
    EstimateCI rhs;
    std::optional<double> fittedConstant;
    Verdict verdict = Verdict::Indeterminate;
    Seed seed;
    std::string note;
};

RelationReport run_check(RelationId relation, const Measure& m, const GridPoint& gridPoint,
                         Seed seed);

/// Default sub-grid of (k, p, q, delta, A) combinations exercised by run_grid
/// for a measure of dimension n.  Always non-empty.
std::vector<GridPoint> default_grid_points(RelationId relation, int n);

struct GridFailure {
    std::string measureSpec;
    GridPoint gridPoint;
    std::string message;
};

/// run_grid output.  maxFittedConstant is the binding constant over all
/// reports (orientation-normalized so larger means closer to violation);
/// trendSlope is the least-squares slope of log(binding constant) against
/// log n, the boundedness proxy: dimension-free relations should stay below
/// 0.1.  Grid points that throw are collected in failures, not rethrown.
struct GridSummary {
    std::vector<RelationReport> reports;
    std::vector<GridFailure> failures;
    double maxFittedConstant = 0.0;
    double trendSlope = 0.0;
    int indeterminateCount = 0;
};

/// Runs the relation over measureSpecs x nRange x default_grid_points.
/// measureSpecs are family prefixes ("gaussian", "cube", ...); the dimension
/// from nRange is appended to form the full spec.  Grid points execute
/// concurrently and are merged in grid order.
GridSummary run_grid(RelationId relation, const std::vector<std::string>& measureSpecs,
                     const std::vector<int>& nRange, Seed seed);

/// Smallest constant making the relation hold on every report: the max of
/// per-report ratios in the relation's own orientation (upper-type bands),
/// the min for lower-type bands, and max(ratio, 1/ratio) maximized for
/// two-sided bands.  Reports without a fitted constant or with an
/// indeterminate verdict are excluded; their count lands in
/// excludedCount when given.
double fit_constant(RelationId relation, const std::vector<RelationReport>& reports,
                    int* excludedCount = nullptr);

}  // namespace isolab
