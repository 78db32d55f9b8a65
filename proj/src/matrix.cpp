#include "repscope/matrix.hpp"

#include <string>

#include "repscope/error.hpp"

namespace repscope {

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) throw ValidationError(std::string(what) + " contains NaN or infinite entries");
}

Vector mean_pool(const TokenMatrix& tokens) {
  if (tokens.rows() == 0) throw ValidationError("cannot mean-pool an empty token matrix");
  return tokens.colwise().mean().transpose();
}

}  // namespace repscope
