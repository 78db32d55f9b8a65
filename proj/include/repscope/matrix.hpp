#pragma once

#include <Eigen/Dense>

namespace repscope {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// L x D token embeddings of a single prompt at one layer.
using TokenMatrix = Matrix;
/// N x D per-prompt mean embeddings at one layer.
using PooledMatrix = Matrix;

/// Throws ValidationError when any entry is NaN or infinite.
void require_finite(const Matrix& m, const char* what);

/// Row-wise mean of a token matrix.
Vector mean_pool(const TokenMatrix& tokens);

}  // namespace repscope
