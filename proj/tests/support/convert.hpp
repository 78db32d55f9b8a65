#pragma once

#include "oracle.hpp"
#include "repscope/matrix.hpp"

inline oracle::Dense to_dense(const repscope::Matrix& m) {
  return oracle::from_rows(static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()),
                           [&](std::size_t i, std::size_t j) { return m(i, j); });
}
