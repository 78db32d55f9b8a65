#pragma once

#include "repscope/matrix.hpp"
#include "repscope/spectrum.hpp"

namespace repscope {

/// Order and normalization of the matrix-based entropy. Logs are natural.
struct EntropyConfig {
  double alpha = 1.0;
  /// Divide by log(min(L, D)) so the maximum-entropy case maps to 1.
  bool normalized = false;

  void validate() const;
};

/// Renyi entropy of order alpha of a probability spectrum; the Shannon form
/// is used at alpha == 1. Zero for spectra of rank <= 1.
double entropy_from_spectrum(const ProbSpectrum& p, double alpha);

/// Entropy of the trace-normalized Gram eigenvalues of Z.
double matrix_entropy(const Matrix& z, double alpha = 1.0);

/// Order-2 entropy -log(||K||_F^2 / tr(K)^2) with no eigendecomposition.
/// ||ZZ^T||_F equals ||Z^T Z||_F, so the smaller side is formed.
double collision_entropy_fast(const Matrix& z);

double prompt_entropy(const TokenMatrix& tokens, const EntropyConfig& cfg = {});
double dataset_entropy(const PooledMatrix& pooled, const EntropyConfig& cfg = {});

/// exp of the Shannon entropy of the normalized singular values; 0 for Z = 0.
double effective_rank(const Matrix& z);

/// log det(K/tr(K) + ridge*I) - log 2 for the N x N Gram matrix K.
double logdet_entropy(const Matrix& z, double ridge = 1e-8);

struct LogDetComparison {
  double logdet = 0.0;
  double von_neumann = 0.0;
  /// logdet <= von_neumann
  bool bound_holds = false;
};

LogDetComparison compare_logdet(const Matrix& z, double ridge = 1e-8);

}  // namespace repscope
