#include "isolab/sampler.hpp"

#include <cmath>

#include "isolab/errors.hpp"
#include "isolab/parallel.hpp"

namespace isolab {

namespace {

constexpr double kLaplaceRate = 1.4142135623730950488;
constexpr double kCubeHalfSide = 1.7320508075688772935;

void fill_gaussian_row(Rng& rng, double* row, int n) {
    rng.fill_normal(std::span<double>(row, static_cast<std::size_t>(n)));
}

Eigen::VectorXd unit_sphere_point(Rng& rng, int n) {
    Eigen::VectorXd v(n);
    rng.fill_normal(std::span<double>(v.data(), static_cast<std::size_t>(n)));
    double s = v.norm();
    while (s < 1e-12) {
        rng.fill_normal(std::span<double>(v.data(), static_cast<std::size_t>(n)));
        s = v.norm();
    }
    return v / s;
}

void draw_family_row(const Measure& m, Rng& rng, double* out) {
    int n = m.dim;
    switch (m.family) {
        case Family::Gaussian:
            fill_gaussian_row(rng, out, n);
            return;
        case Family::Cube:
            for (int i = 0; i < n; ++i) out[i] = rng.uniform_in(-kCubeHalfSide, kCubeHalfSide);
            return;
        case Family::EuclideanBall: {
            Eigen::VectorXd w = unit_sphere_point(rng, n);
            double r = m.ballRadius * std::pow(rng.uniform_pos(), 1.0 / n);
            for (int i = 0; i < n; ++i) out[i] = r * w[i];
            return;
        }
        case Family::L1Ball: {
            double total = 0.0;
            for (int i = 0; i < n; ++i) {
                out[i] = rng.exponential();
                total += out[i];
            }
            total += rng.exponential();
            for (int i = 0; i < n; ++i) out[i] *= rng.sign() * m.crossScale / total;
            return;
        }
        case Family::ProductExponential:
            for (int i = 0; i < n; ++i) out[i] = rng.sign() * rng.exponential() / kLaplaceRate;
            return;
        case Family::Simplex: {
            Eigen::VectorXd w(n + 1);
            double total = 0.0;
            for (int j = 0; j <= n; ++j) {
                w[j] = rng.exponential();
                total += w[j];
            }
            Eigen::VectorXd x = m.vertices * (w / total);
            for (int i = 0; i < n; ++i) out[i] = x[i];
            return;
        }
        case Family::HPolyBody:
            throw UsageError("draw_family_row: polytope chains handled separately");
    }
}

void draw_hpoly_chunk(const Measure& m, Rng& rng, RowMatrixXd& points,
                      Eigen::Index begin, Eigen::Index end) {
    int n = m.dim;
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);  // b > 0, so the origin is interior
    for (int t = 0; t < m.chainBurnIn; ++t)
        x = hit_and_run_step(m.faceNormals, m.faceOffsets, x, rng);
    for (Eigen::Index r = begin; r < end; ++r) {
        for (int t = 0; t < m.chainThin; ++t)
            x = hit_and_run_step(m.faceNormals, m.faceOffsets, x, rng);
        points.row(r) = x.transpose();
    }
}

}  // namespace

Eigen::VectorXd hit_and_run_step(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                                 const Eigen::VectorXd& x, Rng& rng) {
    int n = static_cast<int>(x.size());
    Eigen::VectorXd w = unit_sphere_point(rng, n);
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
        double s = A.row(i).dot(w);
        double slack = b[i] - A.row(i).dot(x);
        if (slack < 0.0) slack = 0.0;  // guard against accumulated roundoff
        if (s > 1e-14) hi = std::min(hi, slack / s);
        else if (s < -1e-14) lo = std::max(lo, slack / s);
    }
    if (!std::isfinite(lo) || !std::isfinite(hi))
        throw UnsupportedMeasureError("hit-and-run: chord is unbounded");
    if (hi < lo) hi = lo;
    return x + rng.uniform_in(lo, hi) * w;
}

SampleBatch draw(const Measure& m, std::uint64_t count, Seed seed) {
    if (count == 0) throw UsageError("draw: count must be positive");

    if (m.isView()) {
        SampleBatch base = draw(m.baseMeasure(), count, seed);
        return project(base, m.viewFrame);
    }

    SampleBatch batch;
    batch.points.resize(static_cast<Eigen::Index>(count), m.dim);
    batch.logWeights = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(count));

    ChunkPlan plan(count);
    parallel_for_slots(plan.count(), [&](std::uint64_t c) {
        Rng rng(seed.child("draw", c));
        auto begin = static_cast<Eigen::Index>(plan.begin(c));
        auto end = static_cast<Eigen::Index>(plan.end(c));
        if (m.family == Family::HPolyBody) {
            draw_hpoly_chunk(m, rng, batch.points, begin, end);
        } else {
            for (Eigen::Index r = begin; r < end; ++r)
                draw_family_row(m, rng, batch.points.row(r).data());
        }
    });
    return batch;
}

Subspace haar_subspace(int n, int k, Rng& rng) {
    if (k < 1 || k > n) throw UsageError("haar_subspace: need 1 <= k <= n");
    Eigen::MatrixXd G(n, k);
    for (int j = 0; j < k; ++j) {
        Eigen::VectorXd col(n);
        rng.fill_normal(std::span<double>(col.data(), static_cast<std::size_t>(n)));
        G.col(j) = col;
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(G);
    Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
    Eigen::MatrixXd R = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
    for (int j = 0; j < k; ++j)
        if (R(j, j) < 0.0) Q.col(j) = -Q.col(j);

    Subspace s;
    s.frame = Q.leftCols(k);
    s.complement = Q.rightCols(n - k);
    return s;
}

Subspace subspace_from_columns(const Eigen::MatrixXd& cols) {
    int n = static_cast<int>(cols.rows());
    int k = static_cast<int>(cols.cols());
    if (k < 1 || k > n) throw UsageError("subspace: need 1 <= k <= n columns");
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(cols);
    Eigen::MatrixXd R = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
    for (int j = 0; j < k; ++j)
        if (std::fabs(R(j, j)) < 1e-10)
            throw UsageError("subspace: columns are linearly dependent");
    Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
    for (int j = 0; j < k; ++j)
        if (R(j, j) < 0.0) Q.col(j) = -Q.col(j);

    Subspace s;
    s.frame = Q.leftCols(k);
    s.complement = Q.rightCols(n - k);
    return s;
}

SampleBatch project(const SampleBatch& batch, const Eigen::MatrixXd& frame) {
    if (batch.points.cols() != frame.rows())
        throw UsageError("project: frame rows must match point dimension");
    SampleBatch out;
    out.points = batch.points * frame;
    out.logWeights = batch.logWeights;
    return out;
}

namespace {

double tilt_envelope_exponent(const Measure& m, const Eigen::VectorXd& z) {
    switch (m.family) {
        case Family::Cube: return kCubeHalfSide * z.lpNorm<1>();
        case Family::EuclideanBall: return m.ballRadius * z.norm();
        case Family::L1Ball: return m.crossScale * z.cwiseAbs().maxCoeff();
        case Family::Simplex: return (m.vertices.transpose() * z).maxCoeff();
        default: throw UsageError("tilt envelope: not a bounded-support family");
    }
}

/// Inverse CDF of the tilted two-sided exponential factor, |t| < rate.
double tilted_laplace_quantile(double t, double u) {
    double pNeg = (kLaplaceRate - t) / (2.0 * kLaplaceRate);
    if (u < pNeg) return std::log(u / pNeg) / (kLaplaceRate + t);
    return -std::log((1.0 - u) / (1.0 - pNeg)) / (kLaplaceRate - t);
}

void tilted_row(const Measure& m, const Eigen::VectorXd& z, double envelope, Rng& rng,
                double* out) {
    int n = m.dim;
    switch (m.family) {
        case Family::Gaussian: {
            fill_gaussian_row(rng, out, n);
            for (int i = 0; i < n; ++i) out[i] += z[i];
            return;
        }
        case Family::ProductExponential: {
            for (int i = 0; i < n; ++i)
                out[i] = tilted_laplace_quantile(z[i], rng.uniform_pos());
            return;
        }
        case Family::Cube:
        case Family::EuclideanBall:
        case Family::L1Ball:
        case Family::Simplex: {
            Eigen::VectorXd y(n);
            while (true) {
                draw_family_row(m, rng, y.data());
                double logAccept = z.dot(y) - envelope;
                if (std::log(rng.uniform_pos()) < logAccept) break;
            }
            for (int i = 0; i < n; ++i) out[i] = y[i];
            return;
        }
        default:
            throw UsageError("tilted_row: family handled elsewhere");
    }
}

void tilted_hpoly_chunk(const Measure& m, const Eigen::VectorXd& z, Rng& rng,
                        RowMatrixXd& points, Eigen::Index begin, Eigen::Index end) {
    // independence Metropolis: propose plain hit-and-run states, accept by
    // the tilt ratio; the proposal equals the untilted target so the ratio
    // is exactly e^{<z, y'> - <z, y>}.
    int n = m.dim;
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    for (int t = 0; t < m.chainBurnIn; ++t)
        x = hit_and_run_step(m.faceNormals, m.faceOffsets, x, rng);
    double score = z.dot(x);
    auto advance = [&](void) {
        for (int t = 0; t < m.chainThin; ++t)
            x = hit_and_run_step(m.faceNormals, m.faceOffsets, x, rng);
    };
    for (int t = 0; t < m.chainBurnIn; ++t) {
        Eigen::VectorXd keep = x;
        double keepScore = score;
        advance();
        score = z.dot(x);
        if (std::log(rng.uniform_pos()) >= score - keepScore) {
            x = keep;
            score = keepScore;
        }
    }
    for (Eigen::Index r = begin; r < end; ++r) {
        Eigen::VectorXd keep = x;
        double keepScore = score;
        advance();
        score = z.dot(x);
        if (std::log(rng.uniform_pos()) >= score - keepScore) {
            x = keep;
            score = keepScore;
        }
        points.row(r) = x.transpose();
    }
}

}  // namespace

SampleBatch tilted_draw(const Measure& m, const Eigen::VectorXd& tilt,
                        std::uint64_t count, Seed seed) {
    if (m.isView())
        throw UnsupportedMeasureError("tilted sampling applies to family measures only");
    if (tilt.size() != m.dim) throw UsageError("tilted_draw: tilt dimension mismatch");
    if (count == 0) throw UsageError("tilted_draw: count must be positive");
    if (m.family == Family::ProductExponential &&
        tilt.cwiseAbs().maxCoeff() >= kLaplaceRate)
        throw LaplaceDomainError("tilt lies outside the exponential-moment domain");

    double envelope = 0.0;
    switch (m.family) {
        case Family::Cube:
        case Family::EuclideanBall:
        case Family::L1Ball:
        case Family::Simplex:
            envelope = tilt_envelope_exponent(m, tilt);
            break;
        default:
            break;
    }

    SampleBatch batch;
    batch.points.resize(static_cast<Eigen::Index>(count), m.dim);
    batch.logWeights = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(count));

    ChunkPlan plan(count);
    parallel_for_slots(plan.count(), [&](std::uint64_t c) {
        Rng rng(seed.child("tilted-draw", c));
        auto begin = static_cast<Eigen::Index>(plan.begin(c));
        auto end = static_cast<Eigen::Index>(plan.end(c));
        if (m.family == Family::HPolyBody) {
            tilted_hpoly_chunk(m, tilt, rng, batch.points, begin, end);
        } else {
            for (Eigen::Index r = begin; r < end; ++r)
                tilted_row(m, tilt, envelope, rng, batch.points.row(r).data());
        }
    });
    return batch;
}

}  // namespace isolab
