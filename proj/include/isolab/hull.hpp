#pragma once

#include <Eigen/Dense>

#include "isolab/measures.hpp"

namespace isolab {

/// Exact volume of the convex hull of a point cloud, one point per row.
/// Incremental facet-based construction; intended for small dimensions
/// (volume work is capped at 6 elsewhere).  Affinely degenerate clouds have
/// hull volume 0.
double convex_hull_volume(const RowMatrixXd& points);

}  // namespace isolab
