#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "isolab/measures.hpp"
#include "isolab/rng.hpp"

namespace isolab {

/// An orthonormal frame spanning a k-dimensional subspace of R^n,
/// stored column-wise together with a basis for its orthogonal complement.
struct Subspace {
    Eigen::MatrixXd frame;       // n x k, orthonormal columns
    Eigen::MatrixXd complement;  // n x (n-k), orthonormal columns

    int ambientDim() const { return static_cast<int>(frame.rows()); }
    int dim() const { return static_cast<int>(frame.cols()); }
};

/// Rows are sample points; logWeights are all zero unless a reweighted
/// scheme produced the batch.
struct SampleBatch {
    RowMatrixXd points;
    Eigen::VectorXd logWeights;

    std::uint64_t count() const { return static_cast<std::uint64_t>(points.rows()); }
};

/// Draw `count` points from the measure. Direct per-family generators where
/// they exist; hit-and-run chains for H-polytopes. Views are sampled by
/// drawing from the base and projecting. Deterministic in (seed, count):
/// the batch is produced in fixed-size chunks whose streams depend only on
/// the chunk index, so thread count cannot change the result.
SampleBatch draw(const Measure& m, std::uint64_t count, Seed seed);

/// Haar-distributed k-dimensional subspace via QR of a gaussian matrix,
/// with the R-diagonal sign fix that makes the distribution exact.
Subspace haar_subspace(int n, int k, Rng& rng);

/// Deterministic frame from explicit columns (orthonormalised, validated).
Subspace subspace_from_columns(const Eigen::MatrixXd& cols);

/// Coordinates of batch points in the frame of E (an n x k orthonormal basis).
SampleBatch project(const SampleBatch& batch, const Eigen::MatrixXd& frame);

/// Draw from the exponentially tilted measure d mu'_x ~ e^<x,y> d mu(y).
/// Exact per family: gaussians shift, product factors invert the tilted CDF,
/// bounded supports use rejection with an exact envelope, H-polytopes run an
/// independence Metropolis chain driven by plain draws.
SampleBatch tilted_draw(const Measure& m, const Eigen::VectorXd& tilt,
                        std::uint64_t count, Seed seed);

/// One hit-and-run step inside {y : A y <= b} from interior point x.
Eigen::VectorXd hit_and_run_step(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                                 const Eigen::VectorXd& x, Rng& rng);

}  // namespace isolab
