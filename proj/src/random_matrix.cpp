#include "repscope/random_matrix.hpp"

#include <Eigen/QR>

namespace repscope {

Matrix gaussian_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  Matrix m(rows, cols);
  // Fill row-major so the draw order does not depend on Eigen's storage order.
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.normal();
  return m;
}

Matrix random_orthogonal(Rng& rng, Eigen::Index n) {
  const Matrix g = gaussian_matrix(rng, n, n);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < n; ++j)
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  return q;
}

Matrix random_unit_rows(Rng& rng, Eigen::Index count, Eigen::Index dim) {
  Matrix m = gaussian_matrix(rng, count, dim);
  for (Eigen::Index i = 0; i < count; ++i) {
    double norm = m.row(i).norm();
    while (norm == 0.0) {
      for (Eigen::Index j = 0; j < dim; ++j) m(i, j) = rng.normal();
      norm = m.row(i).norm();
    }
    m.row(i) /= norm;
  }
  return m;
}

}  // namespace repscope
