#include "repscope/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace repscope {

double curvature(const TokenMatrix& tokens) {
  require_finite(tokens, "token matrix");
  const auto length = tokens.rows();
  if (length < 3) {
    throw ValidationError("curvature needs at least 3 tokens, got " + std::to_string(length));
  }
  const Matrix steps = tokens.bottomRows(length - 1) - tokens.topRows(length - 1);
  Vector norms(steps.rows());
  for (Eigen::Index k = 0; k < steps.rows(); ++k) {
    norms[k] = steps.row(k).norm();
    if (norms[k] == 0.0) throw DegenerateStepError(static_cast<std::size_t>(k));
  }
  double total = 0.0;
  for (Eigen::Index k = 0; k + 1 < steps.rows(); ++k) {
    const double cosine = steps.row(k + 1).dot(steps.row(k)) / (norms[k + 1] * norms[k]);
    total += std::acos(std::clamp(cosine, -1.0, 1.0));
  }
  return total / static_cast<double>(length - 2);
}

}  // namespace repscope
