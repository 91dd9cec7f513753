#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "isolab/estimate.hpp"
#include "isolab/functionals.hpp"
#include "isolab/measures.hpp"
#include "isolab/sampler.hpp"

namespace isolab {

/// Epistemic status of a reported parameter value.
///  - Exact: decided by closed forms or CI-gated comparisons.
///  - LowerCertificate: a stored witness subspace re-establishes the
///    qualifying inequality; the true value can only be larger.
///  - UpperEstimate: a sampled infimum; more search can only lower it.
enum class BoundKind { Exact, LowerCertificate, UpperEstimate };

const char* bound_kind_name(BoundKind kind);

struct ParamEstimate {
    std::string name;
    double value = 0.0;
    BoundKind boundKind = BoundKind::Exact;
    std::optional<Subspace> witness;
    std::vector<std::string> flags;
    std::string config;  // echo of the knobs that produced the value

    bool hasFlag(const std::string& f) const;
};

/// Knobs for subspace searches: random restarts, Givens-rotation local moves
/// with a cooling angle scale, and the Haar sample count for hereditary
/// enumeration.
struct GrassmannSearchConfig {
    int restarts = 6;
    int localSteps = 40;
    double moveScale = 0.5;    // initial rotation angle, radians
    double coolingRate = 0.9;  // per-step decay of the angle scale
    int haarSamples = 256;

    void validate() const;
};

/// Largest integer p in {1,...,n-1} whose -p-th norm moment stays above
/// sqrt(n)/delta, located by a descending scan with a 3-sigma decision gate
/// and sample doubling (up to 8x) on straddles.  Empty qualifying set
/// reports 0 with flag "empty-set"; 1-dimensional input is 1 by convention.
ParamEstimate q_minus_c(const Measure& m, double delta, Seed seed,
                        int subspaceCount = 48, std::uint64_t raysPerSubspace = 32);

/// Critical dimension of a symmetric body: n * (w1 / R)^2 with w1 the mean
/// width over the grid and R the largest support value seen on it.
EstimateCI k_star(const BodyOracle& body, const DirectionGrid& grid);

/// Largest p (integer resolution) with k_star(Z_p) >= p, found on a
/// geometric grid refined by bisection.
ParamEstimate q_star(const Measure& m, Seed seed, std::uint64_t sampleBudget = 40000,
                     int gridCount = 200);

/// Largest k admitting a k-dimensional marginal whose isotropic-constant
/// surrogate qualifies under A.  Qualification uses the conservative upper
/// bracket endpoint (closed-form marginal constants bypass the bracket), so
/// results are sound lower certificates with stored witnesses.
ParamEstimate r_sharp(const Measure& m, double A, const GrassmannSearchConfig& cfg,
                      Seed seed, std::uint64_t rays = 2048);

enum class HereditaryParam { QMinusC, RSharp };

/// n times the sampled infimum over k and over k-dimensional marginals of
/// param(marginal)/k; Haar enumeration plus adversarial local search.  The
/// reported value is an upper estimate of the true infimum expression.
ParamEstimate hereditary(HereditaryParam which, const Measure& m, double arg,
                         const GrassmannSearchConfig& cfg, Seed seed);

}  // namespace isolab
