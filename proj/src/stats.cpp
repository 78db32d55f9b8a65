#include "repscope/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "repscope/error.hpp"

namespace repscope {

namespace {

void check_pair(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ValidationError("correlation inputs differ in length");
  if (x.size() < 2) throw ValidationError("correlation needs at least 2 observations");
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) throw ValidationError("correlation inputs must be finite");
  }
}

double pearson(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

int sign(double v) { return (v > 0) - (v < 0); }

Matrix double_centered_distances(const Matrix& x) {
  const auto n = x.rows();
  Matrix d(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) d(i, j) = (x.row(i) - x.row(j)).norm();
  const Vector row_mean = d.rowwise().mean();
  const Eigen::RowVectorXd col_mean = d.colwise().mean();
  const double grand = d.mean();
  d.colwise() -= row_mean;
  d.rowwise() -= col_mean;
  d.array() += grand;
  return d;
}

}  // namespace

bool is_constant(std::span<const double> v) {
  return std::adjacent_find(v.begin(), v.end(), std::not_equal_to<>()) == v.end();
}

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y);
  if (is_constant(x) || is_constant(y)) throw ValidationError("Spearman correlation is undefined for constant input");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson(rx, ry);
}

double kendall(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y);
  if (is_constant(x) || is_constant(y)) throw ValidationError("Kendall correlation is undefined for constant input");
  long long concordant_minus_discordant = 0;
  long long untied_x = 0, untied_y = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      const int sx = sign(x[i] - x[j]);
      const int sy = sign(y[i] - y[j]);
      concordant_minus_discordant += sx * sy;
      untied_x += sx != 0;
      untied_y += sy != 0;
    }
  }
  return std::clamp(static_cast<double>(concordant_minus_discordant) /
                        std::sqrt(static_cast<double>(untied_x) * static_cast<double>(untied_y)),
                    -1.0, 1.0);
}

double distance_correlation(const Matrix& x, const Matrix& y) {
  if (x.rows() != y.rows()) throw ValidationError("distance correlation inputs differ in sample count");
  if (x.rows() < 2) throw ValidationError("distance correlation needs at least 2 observations");
  require_finite(x, "first variable");
  require_finite(y, "second variable");
  const Matrix a = double_centered_distances(x);
  const Matrix b = double_centered_distances(y);
  const double dcov2 = (a.array() * b.array()).mean();
  const double dvar_x = a.array().square().mean();
  const double dvar_y = b.array().square().mean();
  if (dvar_x <= 0.0 || dvar_y <= 0.0) return 0.0;
  return std::sqrt(std::clamp(dcov2 / std::sqrt(dvar_x * dvar_y), 0.0, 1.0));
}

double distance_correlation(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y);
  const Matrix mx = Eigen::Map<const Vector>(x.data(), static_cast<Eigen::Index>(x.size()));
  const Matrix my = Eigen::Map<const Vector>(y.data(), static_cast<Eigen::Index>(y.size()));
  return distance_correlation(mx, my);
}

Direction parse_direction(const std::string& s) {
  if (s == "min" || s == "lower" || s == "lower-is-better") return Direction::lower_is_better;
  if (s == "max" || s == "higher" || s == "higher-is-better") return Direction::higher_is_better;
  throw ValidationError("unknown direction '" + s + "' (expected min|max)");
}

void LayerCurve::validate() const {
  if (values.empty()) throw ValidationError("layer curve for '" + metric + "' is empty");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (std::isnan(values[i])) throw ValidationError("layer curve for '" + metric + "' has NaN at layer " + std::to_string(i));
  }
}

std::size_t select_layer(const LayerCurve& curve) {
  curve.validate();
  std::size_t best = 0;
  for (std::size_t i = 1; i < curve.values.size(); ++i) {
    const double v = curve.values[i];
    const double b = curve.values[best];
    const bool better = curve.direction == Direction::lower_is_better ? v <= b : v >= b;
    if (better) best = i;
  }
  return best;
}

}  // namespace repscope
