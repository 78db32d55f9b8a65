#pragma once

#include <cstddef>

#include "repscope/matrix.hpp"
#include "repscope/rng.hpp"

namespace repscope {

/// i.i.d. standard normal entries.
Matrix gaussian_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols);

/// Haar-distributed orthogonal n x n matrix (QR of a Gaussian matrix with the
/// sign of R's diagonal folded into Q).
Matrix random_orthogonal(Rng& rng, Eigen::Index n);

/// Rows are independent uniform points on the unit sphere in R^dim.
Matrix random_unit_rows(Rng& rng, Eigen::Index count, Eigen::Index dim);

}  // namespace repscope
