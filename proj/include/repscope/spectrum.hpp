#pragma once

#include <cstddef>
#include <vector>

#include "repscope/matrix.hpp"

namespace repscope {

/// Relative threshold below which eigenvalues count as zero.
inline constexpr double kClipRelative = 1e-12;
/// Traces at or below this are treated as the all-zero matrix.
inline constexpr double kDegenerateTrace = 1e-300;

/// Trace-normalized spectrum of a PSD operator: strictly positive entries in
/// descending order. An empty spectrum (rank 0) stands for the zero matrix.
class ProbSpectrum {
 public:
  ProbSpectrum() = default;
  ProbSpectrum(std::vector<double> probs, double source_trace);

  const std::vector<double>& probs() const { return probs_; }
  std::size_t rank() const { return probs_.size(); }
  double source_trace() const { return source_trace_; }
  bool degenerate() const { return probs_.empty(); }

  /// Builds a spectrum from arbitrary nonnegative weights (sorted, clipped, normalized).
  static ProbSpectrum from_weights(std::vector<double> weights);

 private:
  std::vector<double> probs_;
  double source_trace_ = 0.0;
};

/// Descending eigenvalues of a symmetric matrix.
std::vector<double> symmetric_eigenvalues(const Matrix& symmetric);

/// Raw descending eigenvalues of ZZ^T (equivalently the nonzero ones of Z^T Z),
/// formed on whichever side is smaller. Length min(N, D), not clipped.
std::vector<double> gram_eigenvalues(const Matrix& z);

/// Clips eigenvalues at kClipRelative * trace and divides by trace.
ProbSpectrum normalize_eigenvalues(std::vector<double> eigenvalues, double trace);

/// Spectrum of a symmetric PSD kernel matrix.
ProbSpectrum kernel_spectrum(const Matrix& kernel);

/// Trace-normalized eigenvalues of the Gram matrix ZZ^T.
ProbSpectrum gram_spectrum(const Matrix& z);

/// Singular values of Z divided by their sum, computed by SVD (not via the
/// Gram eigenvalues). Clipped where sigma^2 <= kClipRelative * sum(sigma^2).
ProbSpectrum singular_spectrum(const Matrix& z);

}  // namespace repscope
