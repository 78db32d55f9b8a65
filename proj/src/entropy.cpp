#include "repscope/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "repscope/error.hpp"

namespace repscope {

void EntropyConfig::validate() const {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw ValidationError("entropy order alpha must be a positive finite number, got " + std::to_string(alpha));
  }
}

double entropy_from_spectrum(const ProbSpectrum& p, double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw ValidationError("entropy order alpha must be a positive finite number, got " + std::to_string(alpha));
  }
  if (p.rank() <= 1) return 0.0;
  double s = 0.0;
  if (alpha == 1.0) {
    for (double q : p.probs()) s -= q * std::log(q);
  } else {
    double power_sum = 0.0;
    for (double q : p.probs()) power_sum += std::pow(q, alpha);
    s = std::log(power_sum) / (1.0 - alpha);
  }
  // Rounding can push a flat spectrum a hair outside [0, log r].
  return std::clamp(s, 0.0, std::log(static_cast<double>(p.rank())));
}

double matrix_entropy(const Matrix& z, double alpha) {
  return entropy_from_spectrum(gram_spectrum(z), alpha);
}

double collision_entropy_fast(const Matrix& z) {
  require_finite(z, "embedding matrix");
  if (z.rows() == 0 || z.cols() == 0) throw ValidationError("embedding matrix must be non-empty");
  const double trace = z.squaredNorm();
  if (!(trace > kDegenerateTrace)) return 0.0;
  const Matrix k = z.cols() < z.rows() ? Matrix(z.transpose() * z) : Matrix(z * z.transpose());
  const double ratio = k.squaredNorm() / (trace * trace);
  return std::max(0.0, -std::log(ratio));
}

namespace {

double normalize_by_size(double s, const Matrix& z) {
  const auto n = std::min(z.rows(), z.cols());
  if (n <= 1) return 0.0;
  return s / std::log(static_cast<double>(n));
}

}  // namespace

double prompt_entropy(const TokenMatrix& tokens, const EntropyConfig& cfg) {
  cfg.validate();
  if (tokens.rows() < 1) throw ValidationError("prompt must contain at least one token");
  const double s = matrix_entropy(tokens, cfg.alpha);
  return cfg.normalized ? normalize_by_size(s, tokens) : s;
}

double dataset_entropy(const PooledMatrix& pooled, const EntropyConfig& cfg) {
  cfg.validate();
  if (pooled.rows() < 1) throw ValidationError("dataset must contain at least one prompt");
  const double s = matrix_entropy(pooled, cfg.alpha);
  return cfg.normalized ? normalize_by_size(s, pooled) : s;
}

double effective_rank(const Matrix& z) {
  const ProbSpectrum q = singular_spectrum(z);
  if (q.degenerate()) return 0.0;
  return std::exp(entropy_from_spectrum(q, 1.0));
}

double logdet_entropy(const Matrix& z, double ridge) {
  if (!(ridge >= 0.0)) throw ValidationError("ridge must be nonnegative");
  const auto eig = gram_eigenvalues(z);
  const double trace = z.squaredNorm();
  const auto n = z.rows();
  double logdet = 0.0;
  std::size_t counted = 0;
  if (trace > kDegenerateTrace) {
    for (double lambda : eig) {
      logdet += std::log(std::max(lambda, 0.0) / trace + ridge);
      ++counted;
    }
  }
  // K is N x N; eigenvalues beyond min(N, D) are exactly zero.
  const auto zeros = n - static_cast<Eigen::Index>(counted);
  if (zeros > 0) logdet += static_cast<double>(zeros) * std::log(ridge);
  return logdet - std::numbers::ln2;
}

LogDetComparison compare_logdet(const Matrix& z, double ridge) {
  LogDetComparison c;
  c.logdet = logdet_entropy(z, ridge);
  c.von_neumann = matrix_entropy(z, 1.0);
  c.bound_holds = c.logdet <= c.von_neumann;
  return c;
}

}  // namespace repscope
