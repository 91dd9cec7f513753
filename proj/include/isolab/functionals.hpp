#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "isolab/estimate.hpp"
#include "isolab/measures.hpp"
#include "isolab/sampler.hpp"

namespace isolab {

/// Support-function view of a convex body.  supportFn evaluates h_K on unit
/// directions (h_K(theta) <= radiusBound always); touchFn returns a boundary
/// point of K lying on the supporting hyperplane of theta, which is what the
/// inner volume bound is built from.
struct BodyOracle {
    int dim = 0;
    bool symmetric = false;
    double radiusBound = 0.0;
    std::function<EstimateCI(const Eigen::VectorXd&)> supportFn;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> touchFn;
};

/// Finite direction set with probability weights; the i.i.d. uniform grid is
/// the only construction shipped, so quoted errors are Monte Carlo errors.
struct DirectionGrid {
    int dim = 0;
    std::vector<Eigen::VectorXd> directions;
    Eigen::VectorXd weights;

    static DirectionGrid uniform(int dim, int count, Seed seed);
};

/// q-th moment of the euclidean norm over the batch, (mean |x|^q)^{1/q}.
/// Deep negative orders are refused: for q <= -dim/2 the plain estimator has
/// an infinite-variance risk and the section route (I_negk_via_sections) is
/// the supported path; q <= -dim is outside the domain entirely.
EstimateCI moment_Iq(const Measure& m, double q, const SampleBatch& batch);

/// ((n-k) w_{n-k} / (n w_n))^{1/k}, the constant tying k-codimensional
/// section densities to the -k norm moment; exact, log-space.
double cnk(int n, int k);

/// Support function of the p-th moment body in direction theta,
/// (mean |<x,theta>|^p)^{1/p} over the batch.  p > 40 is allowed but the
/// estimate is flagged high-variance.
EstimateCI support_Zp(const Measure& m, double p, const Eigen::VectorXd& theta,
                      const SampleBatch& batch);

/// Boundary point of the p-th moment body on the supporting hyperplane of
/// theta: h^{1-p} * mean(|<x,theta>|^{p-1} sign<x,theta> x).
Eigen::VectorXd boundary_point_Zp(const Measure& m, double p, const Eigen::VectorXd& theta,
                                  const SampleBatch& batch);

/// Moment body Z_p(m) as a BodyOracle over a retained batch.  Families whose
/// moment bodies are balls with closed-form radii (gaussian, euclidean ball)
/// get exact support functions; everything else evaluates on the batch.
BodyOracle zp_body(const Measure& m, double p, std::shared_ptr<const SampleBatch> batch);

/// The euclidean ball of the given radius as a BodyOracle.
BodyOracle ball_body(int dim, double radius);

/// Two-sided per-dimension volume bounds: |K|^{1/n} lies in
/// [lowerPerDim, upperPerDim].  lower is the exact hull volume of touching
/// points at `resolution` random directions; upper is rejection MC on the
/// intersection of the supporting halfspaces inside the radiusBound ball.
/// Symmetric bodies contribute mirrored touch points and two-sided slabs.
struct VolumeBracket {
    EstimateCI lowerPerDim;
    EstimateCI upperPerDim;
};
VolumeBracket volume_bracket(const BodyOracle& body, int resolution, Seed seed);

/// Weighted q-power mean of the support function over the grid.  q = -dim is
/// admissible (finite grids keep it finite); q < -dim or q = 0 are not.
EstimateCI q_mean_width(const BodyOracle& body, double q, const DirectionGrid& grid);

/// Density of the pushforward onto E at the origin: the integral of the
/// density over the orthocomplement of E, estimated by spherical Monte Carlo
/// over unit directions of E-perp with exact radial integrals per ray.
/// Exact for gaussians.  E must be a proper subspace of the measure's space.
EstimateCI marginal_density_at_zero(const Measure& m, const Subspace& E,
                                    std::uint64_t rays, Seed seed);

/// -k-th norm moment through the section formula: cnk(n,k) times the
/// Haar average of marginal densities at zero to the power -1/k.  The
/// supported route for deep negative moments.
EstimateCI I_negk_via_sections(const Measure& m, int k, int subspaceCount,
                               std::uint64_t raysPerSubspace, Seed seed);

/// Bracket for the isotropic constant of the pushforward onto E:
/// [f(0)^{1/k}, e f(0)^{1/k}] contains it; `exact` is set when the marginal
/// constant has a closed form (gaussian).  Requires an isotropic measure.
IsotropicConstantBracket marginal_L_surrogate(const Measure& m, const Subspace& E,
                                              std::uint64_t rays, Seed seed);

}  // namespace isolab
