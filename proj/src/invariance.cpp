#include "repscope/invariance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <Eigen/Eigenvalues>

#include "repscope/entropy.hpp"
#include "repscope/error.hpp"
#include "repscope/rng.hpp"
#include "repscope/spectrum.hpp"

namespace repscope {

PairedEmbeddings::PairedEmbeddings(Matrix z1, Matrix z2) : z1_(std::move(z1)), z2_(std::move(z2)) {
  if (z1_.rows() != z2_.rows() || z1_.cols() != z2_.cols()) {
    throw ValidationError("paired views must have equal shapes");
  }
  if (z1_.rows() < 2) throw ValidationError("paired views need at least 2 rows");
  require_finite(z1_, "first view");
  require_finite(z2_, "second view");
}

ClassBundle::ClassBundle(Matrix embeddings, std::size_t num_classes, std::size_t samples_per_class)
    : embeddings_(std::move(embeddings)), num_classes_(num_classes), samples_per_class_(samples_per_class) {
  if (samples_per_class_ < 2) throw ValidationError("LiDAR needs at least 2 samples per class");
  if (num_classes_ < 2) throw ValidationError("LiDAR needs at least 2 classes");
  if (static_cast<std::size_t>(embeddings_.rows()) != num_classes_ * samples_per_class_) {
    throw ValidationError("class bundle has " + std::to_string(embeddings_.rows()) + " rows, expected " +
                          std::to_string(num_classes_ * samples_per_class_));
  }
  require_finite(embeddings_, "class bundle");
}

ClassBundle ClassBundle::from_views(const std::vector<Matrix>& views) {
  if (views.size() < 2) throw ValidationError("LiDAR needs at least 2 augmented views");
  const auto n = views.front().rows();
  const auto d = views.front().cols();
  for (const auto& v : views) {
    if (v.rows() != n || v.cols() != d) throw ValidationError("augmented views must have equal shapes");
  }
  const auto j = static_cast<Eigen::Index>(views.size());
  Matrix out(n * j, d);
  for (Eigen::Index c = 0; c < n; ++c)
    for (Eigen::Index s = 0; s < j; ++s) out.row(c * j + s) = views[static_cast<std::size_t>(s)].row(c);
  return ClassBundle(std::move(out), static_cast<std::size_t>(n), views.size());
}

namespace {

Matrix unit_rows(const Matrix& z, const char* which) {
  Matrix out = z;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const double norm = z.row(i).norm();
    if (norm == 0.0) {
      throw ValidationError(std::string(which) + " row " + std::to_string(i) + " is zero; cosine undefined");
    }
    out.row(i) /= norm;
  }
  return out;
}

double directional_loss(const Matrix& q_unit, const Matrix& k_unit, double temperature) {
  const Matrix logits = (q_unit * k_unit.transpose()) / temperature;
  double total = 0.0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double peak = logits.row(i).maxCoeff();
    const double lse = peak + std::log((logits.row(i).array() - peak).exp().sum());
    total += lse - logits(i, i);
  }
  return total / static_cast<double>(logits.rows());
}

void check_temperature(double temperature) {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) throw ValidationError("temperature must be positive");
}

}  // namespace

double infonce_directional(const Matrix& queries, const Matrix& keys, double temperature) {
  check_temperature(temperature);
  if (queries.rows() != keys.rows() || queries.cols() != keys.cols()) {
    throw ValidationError("query and key views must have equal shapes");
  }
  return directional_loss(unit_rows(queries, "query"), unit_rows(keys, "key"), temperature);
}

double infonce(const PairedEmbeddings& pairs, double temperature) {
  check_temperature(temperature);
  const Matrix a = unit_rows(pairs.first(), "first view");
  const Matrix b = unit_rows(pairs.second(), "second view");
  return 0.5 * (directional_loss(a, b, temperature) + directional_loss(b, a, temperature));
}

double lidar(const ClassBundle& bundle, double delta) {
  if (!(delta > 0.0)) throw ValidationError("LiDAR regularizer delta must be positive");
  const Matrix& x = bundle.embeddings();
  const auto n = static_cast<Eigen::Index>(bundle.num_classes());
  const auto j = static_cast<Eigen::Index>(bundle.samples_per_class());
  const auto d = x.cols();

  Matrix class_means(n, d);
  for (Eigen::Index c = 0; c < n; ++c) class_means.row(c) = x.middleRows(c * j, j).colwise().mean();
  const Eigen::RowVectorXd grand_mean = class_means.colwise().mean();

  const Matrix centered_means = class_means.rowwise() - grand_mean;
  const Matrix between = centered_means.transpose() * centered_means / static_cast<double>(n);

  Matrix residuals(n * j, d);
  for (Eigen::Index c = 0; c < n; ++c)
    residuals.middleRows(c * j, j) = x.middleRows(c * j, j).rowwise() - class_means.row(c);
  Matrix within = residuals.transpose() * residuals / static_cast<double>(n * j);
  within.diagonal().array() += delta;

  Eigen::SelfAdjointEigenSolver<Matrix> wsolve(within);
  if (wsolve.info() != Eigen::Success) throw Error("within-class eigensolver failed");
  const Vector inv_sqrt = wsolve.eigenvalues().array().max(delta).rsqrt();
  const Matrix whitener = wsolve.eigenvectors() * inv_sqrt.asDiagonal() * wsolve.eigenvectors().transpose();
  Matrix lambda = whitener * between * whitener;
  lambda = 0.5 * (lambda + lambda.transpose());

  if (lambda.trace() <= 1e-12) return 1.0;
  const ProbSpectrum spectrum = kernel_spectrum(lambda);
  if (spectrum.degenerate()) return 1.0;
  return std::exp(entropy_from_spectrum(spectrum, 1.0));
}

Matrix normalized_linear_kernel(const Matrix& z) {
  const double trace = z.squaredNorm();
  Matrix k = z * z.transpose();
  if (trace > kDegenerateTrace) k /= trace;
  return k;
}

double joint_kernel_entropy(const Matrix& k1, const Matrix& k2, const std::vector<std::size_t>& perm,
                            double alpha) {
  const auto n = k1.rows();
  Matrix joint(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto pr = static_cast<Eigen::Index>(perm[static_cast<std::size_t>(r)]);
    for (Eigen::Index c = 0; c < n; ++c) {
      joint(r, c) = k1(r, c) * k2(pr, static_cast<Eigen::Index>(perm[static_cast<std::size_t>(c)]));
    }
  }
  const double trace = joint.trace();
  if (!(trace > kDegenerateTrace)) return 0.0;
  return entropy_from_spectrum(normalize_eigenvalues(symmetric_eigenvalues(joint), trace), alpha);
}

double dime(const PairedEmbeddings& pairs, double alpha, std::size_t num_permutations, std::uint64_t seed) {
  if (pairs.size() < 3) throw ValidationError("DiME needs at least 3 pairs");
  if (!(alpha > 0.0)) throw ValidationError("DiME entropy order alpha must be positive");
  if (num_permutations < 1) throw ValidationError("DiME needs at least one permutation");
  const Matrix k1 = normalized_linear_kernel(pairs.first());
  const Matrix k2 = normalized_linear_kernel(pairs.second());
  const auto n = static_cast<std::size_t>(pairs.size());

  std::vector<std::size_t> identity(n);
  std::iota(identity.begin(), identity.end(), 0);
  const double matched = joint_kernel_entropy(k1, k2, identity, alpha);

  // Differences are accumulated so a permutation-invariant K2 gives exactly 0.
  double excess = 0.0;
  for (std::size_t m = 0; m < num_permutations; ++m) {
    Rng rng(derive_seed(seed, m));
    std::vector<std::size_t> perm = identity;
    for (std::size_t i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
    excess += joint_kernel_entropy(k1, k2, perm, alpha) - matched;
  }
  return excess / static_cast<double>(num_permutations);
}

}  // namespace repscope
