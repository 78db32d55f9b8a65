#pragma once

#include <cstddef>
#include <cstdint>

#include "repscope/matrix.hpp"

namespace repscope {

/// Two augmented views of the same N prompts; row i of z1 and z2 share a source.
class PairedEmbeddings {
 public:
  PairedEmbeddings(Matrix z1, Matrix z2);

  const Matrix& first() const { return z1_; }
  const Matrix& second() const { return z2_; }
  Eigen::Index size() const { return z1_.rows(); }

 private:
  Matrix z1_;
  Matrix z2_;
};

/// J augmented samples for each of N classes, stored class-major:
/// rows [c*J, (c+1)*J) belong to class c.
class ClassBundle {
 public:
  ClassBundle(Matrix embeddings, std::size_t num_classes, std::size_t samples_per_class);

  const Matrix& embeddings() const { return embeddings_; }
  std::size_t num_classes() const { return num_classes_; }
  std::size_t samples_per_class() const { return samples_per_class_; }

  /// Interleaves J same-shaped views (view j, row c) into a class-major bundle.
  static ClassBundle from_views(const std::vector<Matrix>& views);

 private:
  Matrix embeddings_;
  std::size_t num_classes_;
  std::size_t samples_per_class_;
};

inline constexpr double kDefaultTemperature = 0.07;
inline constexpr double kDefaultLidarDelta = 1e-4;
inline constexpr std::size_t kDefaultDimePermutations = 8;

/// Symmetric cosine-similarity InfoNCE: the mean of the z1->z2 and z2->z1
/// cross-entropies of matching row i against all rows of the other view.
double infonce(const PairedEmbeddings& pairs, double temperature = kDefaultTemperature);

/// One direction of the loss (queries = rows of `queries`, keys = rows of `keys`).
double infonce_directional(const Matrix& queries, const Matrix& keys, double temperature);

/// Effective rank of the whitened between-class scatter
/// Sw^{-1/2} Sb Sw^{-1/2}, with Sw regularized by delta*I.
double lidar(const ClassBundle& bundle, double delta = kDefaultLidarDelta);

/// Hadamard-product joint entropy S_alpha((K1 o K2) / tr) with K1, K2 the
/// trace-normalized linear kernels; `permutation` re-pairs the rows of K2.
double joint_kernel_entropy(const Matrix& k1, const Matrix& k2, const std::vector<std::size_t>& permutation,
                            double alpha);

/// Trace-normalized linear kernel Z Z^T / ||Z||_F^2.
Matrix normalized_linear_kernel(const Matrix& z);

/// Mean joint entropy under seeded random re-pairings minus the joint
/// entropy of the true pairing.
double dime(const PairedEmbeddings& pairs, double alpha = 1.0,
            std::size_t num_permutations = kDefaultDimePermutations, std::uint64_t seed = 0);

}  // namespace repscope
