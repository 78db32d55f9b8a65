#pragma once

#include <cstddef>
#include <string>

#include "repscope/error.hpp"
#include "repscope/matrix.hpp"

namespace repscope {

/// Raised when two consecutive tokens coincide, leaving a zero step vector.
class DegenerateStepError : public ValidationError {
 public:
  DegenerateStepError(std::size_t step_index)
      : ValidationError("zero difference vector at step " + std::to_string(step_index) +
                        " (tokens " + std::to_string(step_index) + " and " + std::to_string(step_index + 1) +
                        " coincide)"),
        step_index_(step_index) {}
  std::size_t step_index() const { return step_index_; }

 private:
  std::size_t step_index_;
};

/// Mean turning angle, in [0, pi], between consecutive difference vectors
/// v_k = z_{k+1} - z_k of a token trajectory. Needs at least 3 tokens.
double curvature(const TokenMatrix& tokens);

}  // namespace repscope
