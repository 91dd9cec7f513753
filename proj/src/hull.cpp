#include "isolab/hull.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <vector>

#include "isolab/errors.hpp"

namespace isolab {

namespace {

// facets kept one per row so the visibility scan is a single matrix-vector
// product over contiguous storage instead of a pointer chase
struct FacetStore {
    int n;
    RowMatrixXd normals;      // row f = outward unit normal of facet f
    Eigen::VectorXd offsets;  // normal . x = offset on the facet plane
    std::vector<int> verts;   // flat, n vertex ids per facet
    std::vector<char> alive;
    int size = 0;
    int live = 0;

    explicit FacetStore(int dim) : n(dim), normals(64, dim), offsets(64) {}

    void push(const std::vector<int>& vs, const Eigen::VectorXd& normal, double offset) {
        if (size == static_cast<int>(normals.rows())) {
            normals.conservativeResize(2 * normals.rows(), Eigen::NoChange);
            offsets.conservativeResize(normals.rows());
        }
        normals.row(size) = normal.transpose();
        offsets[size] = offset;
        verts.insert(verts.end(), vs.begin(), vs.end());
        alive.push_back(1);
        ++size;
        ++live;
    }

    void kill(int fi) {
        alive[fi] = 0;
        --live;
    }

    // stable sweep dropping dead rows; nothing outside the insertion loop
    // holds facet indices, so renumbering between insertions is safe
    void compact() {
        int w = 0;
        for (int r = 0; r < size; ++r) {
            if (!alive[r]) continue;
            if (w != r) {
                normals.row(w) = normals.row(r);
                offsets[w] = offsets[r];
                std::copy_n(verts.begin() + static_cast<std::ptrdiff_t>(r) * n, n,
                            verts.begin() + static_cast<std::ptrdiff_t>(w) * n);
            }
            ++w;
        }
        size = w;
        verts.resize(static_cast<std::size_t>(w) * static_cast<std::size_t>(n));
        alive.assign(static_cast<std::size_t>(w), 1);
        live = w;
    }
};

// unit normal of the hyperplane through pts[ids...]: the orthogonal
// complement of the edge-difference span, read off a Householder QR
Eigen::VectorXd hyperplane_normal(const RowMatrixXd& pts, const std::vector<int>& ids) {
    int n = static_cast<int>(pts.cols());
    Eigen::MatrixXd edges(n, n - 1);
    for (int i = 1; i < n; ++i)
        edges.col(i - 1) = (pts.row(ids[i]) - pts.row(ids[0])).transpose();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(edges);
    Eigen::VectorXd normal = qr.householderQ() * Eigen::VectorXd::Unit(n, n - 1);
    double s = normal.norm();
    if (s < 1e-14) throw DegenerateMeasureError("hull: degenerate facet");
    return normal / s;
}

// greedy affinely independent subset of size n+1; empty if the cloud is flat
std::vector<int> initial_simplex(const RowMatrixXd& pts, double scale) {
    int n = static_cast<int>(pts.cols());
    Eigen::Index count = pts.rows();
    std::vector<int> verts{0};
    Eigen::MatrixXd basis(n, 0);  // orthonormal directions already spanned
    for (int round = 0; round < n; ++round) {
        double bestDist = 0.0;
        int best = -1;
        Eigen::VectorXd bestResid;
        for (Eigen::Index i = 0; i < count; ++i) {
            Eigen::VectorXd d = (pts.row(i) - pts.row(verts[0])).transpose();
            Eigen::VectorXd resid = d - basis * (basis.transpose() * d);
            double dist = resid.norm();
            if (dist > bestDist) {
                bestDist = dist;
                best = static_cast<int>(i);
                bestResid = resid;
            }
        }
        if (best < 0 || bestDist < 1e-9 * scale) return {};
        verts.push_back(best);
        basis.conservativeResize(Eigen::NoChange, basis.cols() + 1);
        basis.col(basis.cols() - 1) = bestResid / bestDist;
    }
    return verts;
}

}  // namespace

double convex_hull_volume(const RowMatrixXd& points) {
    int n = static_cast<int>(points.cols());
    Eigen::Index count = points.rows();
    if (n < 1) throw UsageError("hull: empty dimension");
    if (count < n + 1) return 0.0;

    if (n == 1) {
        return points.col(0).maxCoeff() - points.col(0).minCoeff();
    }

    double scale = points.cwiseAbs().maxCoeff();
    if (scale == 0.0) return 0.0;
    double eps = 1e-9 * scale;

    std::vector<int> simplex = initial_simplex(points, scale);
    if (simplex.empty()) return 0.0;

    Eigen::VectorXd origin = Eigen::VectorXd::Zero(n);
    for (int v : simplex) origin += points.row(v).transpose();
    origin /= static_cast<double>(n + 1);

    FacetStore store(n);
    std::vector<int> fverts;
    fverts.reserve(n);
    for (int skip = 0; skip <= n; ++skip) {
        fverts.clear();
        for (int i = 0; i <= n; ++i)
            if (i != skip) fverts.push_back(simplex[i]);
        Eigen::VectorXd normal = hyperplane_normal(points, fverts);
        double offset = normal.dot(points.row(fverts[0]).transpose());
        if (normal.dot(origin) > offset) {  // orient away from the interior
            normal = -normal;
            offset = -offset;
        }
        store.push(fverts, normal, offset);
    }

    Eigen::VectorXd vals(store.normals.rows());
    std::vector<int> visible;
    for (Eigen::Index pi = 0; pi < count; ++pi) {
        if (store.size > 512 && 2 * store.live < store.size) store.compact();

        Eigen::VectorXd p = points.row(pi).transpose();
        if (vals.size() < store.normals.rows()) vals.resize(store.normals.rows());
        vals.head(store.size).noalias() = store.normals.topRows(store.size) * p;
        visible.clear();
        for (int fi = 0; fi < store.size; ++fi)
            if (store.alive[fi] && vals[fi] - store.offsets[fi] > eps) visible.push_back(fi);
        if (visible.empty()) continue;

        // horizon ridges appear in exactly one visible facet
        std::map<std::vector<int>, int> ridgeCount;
        for (int fi : visible) {
            const int* vs = store.verts.data() + static_cast<std::ptrdiff_t>(fi) * n;
            for (int drop = 0; drop < n; ++drop) {
                std::vector<int> ridge;
                ridge.reserve(n - 1);
                for (int i = 0; i < n; ++i)
                    if (i != drop) ridge.push_back(vs[i]);
                std::sort(ridge.begin(), ridge.end());
                ridgeCount[std::move(ridge)] += 1;
            }
        }
        for (int fi : visible) store.kill(fi);

        for (const auto& [ridge, times] : ridgeCount) {
            if (times != 1) continue;
            fverts = ridge;
            fverts.push_back(static_cast<int>(pi));
            Eigen::VectorXd normal = hyperplane_normal(points, fverts);
            double offset = normal.dot(p);
            if (normal.dot(origin) > offset) {
                normal = -normal;
                offset = -offset;
            }
            store.push(fverts, normal, offset);
        }
    }

    // cone decomposition from the reference point
    double logFact = std::lgamma(n + 1.0);
    double volume = 0.0;
    Eigen::MatrixXd edges(n, n);
    for (int fi = 0; fi < store.size; ++fi) {
        if (!store.alive[fi]) continue;
        const int* vs = store.verts.data() + static_cast<std::ptrdiff_t>(fi) * n;
        for (int i = 0; i < n; ++i)
            edges.col(i) = points.row(vs[i]).transpose() - origin;
        volume += std::fabs(edges.determinant());
    }
    return volume / std::exp(logFact);
}

}  // namespace isolab
