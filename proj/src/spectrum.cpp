#include "repscope/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "repscope/error.hpp"

namespace repscope {

ProbSpectrum::ProbSpectrum(std::vector<double> probs, double source_trace)
    : probs_(std::move(probs)), source_trace_(source_trace) {}

ProbSpectrum ProbSpectrum::from_weights(std::vector<double> weights) {
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw ValidationError("spectrum weights must be finite and nonnegative");
  }
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  return normalize_eigenvalues(std::move(weights), total);
}

std::vector<double> symmetric_eigenvalues(const Matrix& symmetric) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(symmetric, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw Error("symmetric eigensolver failed to converge");
  const Vector& ev = solver.eigenvalues();
  std::vector<double> out(ev.data(), ev.data() + ev.size());
  std::sort(out.begin(), out.end(), std::greater<>());
  return out;
}

std::vector<double> gram_eigenvalues(const Matrix& z) {
  require_finite(z, "embedding matrix");
  if (z.rows() == 0 || z.cols() == 0) throw ValidationError("embedding matrix must be non-empty");
  if (z.cols() < z.rows()) {
    Matrix cov = Matrix::Zero(z.cols(), z.cols());
    cov.selfadjointView<Eigen::Lower>().rankUpdate(z.transpose());
    return symmetric_eigenvalues(cov.selfadjointView<Eigen::Lower>());
  }
  Matrix gram = Matrix::Zero(z.rows(), z.rows());
  gram.selfadjointView<Eigen::Lower>().rankUpdate(z);
  return symmetric_eigenvalues(gram.selfadjointView<Eigen::Lower>());
}

ProbSpectrum normalize_eigenvalues(std::vector<double> eigenvalues, double trace) {
  if (!(trace > kDegenerateTrace)) return ProbSpectrum({}, 0.0);
  const double clip = kClipRelative * trace;
  std::sort(eigenvalues.begin(), eigenvalues.end(), std::greater<>());
  std::vector<double> probs;
  probs.reserve(eigenvalues.size());
  for (double lambda : eigenvalues) {
    if (lambda <= clip) break;
    probs.push_back(lambda / trace);
  }
  return ProbSpectrum(std::move(probs), trace);
}

ProbSpectrum kernel_spectrum(const Matrix& kernel) {
  require_finite(kernel, "kernel matrix");
  if (kernel.rows() != kernel.cols()) throw ValidationError("kernel matrix must be square");
  return normalize_eigenvalues(symmetric_eigenvalues(kernel), kernel.trace());
}

ProbSpectrum gram_spectrum(const Matrix& z) {
  auto eig = gram_eigenvalues(z);
  return normalize_eigenvalues(std::move(eig), z.squaredNorm());
}

ProbSpectrum singular_spectrum(const Matrix& z) {
  require_finite(z, "embedding matrix");
  if (z.rows() == 0 || z.cols() == 0) throw ValidationError("embedding matrix must be non-empty");
  Eigen::BDCSVD<Matrix> svd(z);
  const Vector& s = svd.singularValues();
  const double energy = s.squaredNorm();
  if (!(energy > kDegenerateTrace)) return ProbSpectrum({}, 0.0);
  std::vector<double> kept;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s[i] * s[i] > kClipRelative * energy) kept.push_back(s[i]);
  }
  std::sort(kept.begin(), kept.end(), std::greater<>());
  const double total = std::accumulate(kept.begin(), kept.end(), 0.0);
  for (double& v : kept) v /= total;
  return ProbSpectrum(std::move(kept), total);
}

}  // namespace repscope
