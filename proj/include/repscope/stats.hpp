#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "repscope/matrix.hpp"

namespace repscope {

/// Tie-aware Spearman rank correlation. Throws ValidationError on constant input.
double spearman(std::span<const double> x, std::span<const double> y);

/// Kendall tau-b. Throws ValidationError on constant input.
double kendall(std::span<const double> x, std::span<const double> y);

/// Sample distance correlation of paired observations (rows of x and y).
/// Returns 0 when either variable is constant.
double distance_correlation(const Matrix& x, const Matrix& y);
double distance_correlation(std::span<const double> x, std::span<const double> y);

/// Average (1-based) ranks with ties sharing the mean rank.
std::vector<double> average_ranks(std::span<const double> values);

bool is_constant(std::span<const double> values);

enum class Direction { lower_is_better, higher_is_better };

Direction parse_direction(const std::string& s);

/// A per-layer metric series, layers 0..num_layers.
struct LayerCurve {
  std::string metric;
  std::vector<double> values;
  Direction direction = Direction::lower_is_better;

  void validate() const;
};

/// argmin (or argmax) of the curve; ties go to the deeper layer.
std::size_t select_layer(const LayerCurve& curve);

}  // namespace repscope
