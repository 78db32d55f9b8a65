#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace repscope::theory {

/// Outcome of one numerical check. `details` holds named scalar diagnostics in
/// insertion order so serialized reports are byte-stable.
struct CheckReport {
  std::string name;
  std::size_t trials = 0;
  std::size_t violations = 0;
  double max_gap = 0.0;
  double tolerance = 0.0;
  std::uint64_t seed = 0;
  bool passed = false;
  std::vector<std::pair<std::string, double>> details;
  std::vector<std::string> notes;

  double detail(const std::string& key) const;
  nlohmann::ordered_json to_json() const;
};

struct EffRankConfig {
  std::size_t trials = 1000;
  long min_rows = 1, max_rows = 64;
  long min_cols = 1, max_cols = 32;
  double tolerance = 1e-8;
  /// Equality tolerance on flat-spectrum (orthonormal-row) matrices.
  double flat_tolerance = 1e-6;
  std::uint64_t seed = 0;
  std::size_t threads = 0;
};

/// Tests effective_rank(Z) <= exp(S_1(Z)) on random Gaussian, low-rank and
/// anisotropic matrices, plus equality on flat-spectrum matrices. The converse
/// inequality is measured on the same trials and reported in the details.
CheckReport check_effrank_bound(const EffRankConfig& cfg);

struct SchurConfig {
  std::size_t trials = 1000;
  std::size_t n = 16;
  std::vector<double> alphas = {0.5, 1.0, 2.0, 4.0};
  double tolerance = 1e-10;
  std::uint64_t seed = 0;
};

/// Builds p from q by Robin-Hood transfers (so p is majorized by q) and
/// asserts S_alpha(p) >= S_alpha(q) - tolerance for every alpha.
CheckReport check_schur_concavity(const SchurConfig& cfg);

struct OrthogonalityConfig {
  std::size_t m = 10;
  long dim = 2000;
  double epsilon = 0.3;
  std::size_t trials = 1000;
  std::uint64_t seed = 0;
  std::size_t threads = 0;
};

/// Union bound m^2 sqrt(2 pi) exp(-D eps^2 / 2) on the chance that any pair of
/// m random unit vectors has |cos| > eps, capped at 1.
double orthogonality_bound(std::size_t m, long dim, double epsilon);

CheckReport orthogonality_probe(const OrthogonalityConfig& cfg);

struct MaxEntropyConfig {
  std::size_t prompts = 8;
  /// Sequence length, equal to the embedding width.
  long length = 64;
  std::size_t trials = 200;
  /// Median-gap tolerance; <= 0 selects 10 * N / L^2.
  double tolerance = 0.0;
  std::uint64_t seed = 0;
  std::size_t threads = 0;
};

/// Orthonormal-row prompts (maximal prompt entropy), mean-pooled. The pooled
/// collision mass ||Zbar Zbar^T||_F^2 is compared with N / L^2.
CheckReport simulate_max_entropy_scaling(const MaxEntropyConfig& cfg);

enum class MinEntropyConstant {
  /// 1/N, what the rank-one construction actually produces.
  inverse_prompts,
  /// N^3 / L^2 as stated in the theorem.
  stated,
};

struct MinEntropyConfig {
  std::size_t prompts = 8;
  long length = 32;
  long dim = 64;
  std::size_t trials = 200;
  MinEntropyConstant constant = MinEntropyConstant::inverse_prompts;
  /// Median-gap tolerance; <= 0 selects 3 * (N - 1) / (N * D).
  double tolerance = 0.0;
  std::uint64_t seed = 0;
  std::size_t threads = 0;
};

/// Rank-one prompts with identical unit rows (zero prompt entropy), mean-pooled.
/// Reports e^{-S_2} gaps against both candidate constants.
CheckReport simulate_min_entropy_scaling(const MinEntropyConfig& cfg);

/// Discrete channel over `symbols` equiprobable inputs: Z = X with probability
/// 1 - flip, otherwise a uniform symbol.
struct ToyChannel {
  std::size_t symbols = 8;
  double flip = 0.0;

  double entropy_z() const;
  double mutual_information() const;
};

struct InfoNceBoundConfig {
  ToyChannel channel;
  std::vector<std::size_t> sample_sizes = {8, 32, 64};
  double temperature = 0.07;
  std::size_t trials = 200;
  std::uint64_t seed = 0;
  std::size_t threads = 0;
};

/// log N - E[InfoNCE] <= I(X;Z) + 3 SE and I(X;Z) <= H(Z), with one-hot
/// embeddings of X and Z as the paired views.
CheckReport check_infonce_entropy_bound(const InfoNceBoundConfig& cfg);

/// Every check of the "theorems" suite with default sizes, one derived seed each.
std::vector<CheckReport> run_theorem_suite(std::uint64_t seed, std::size_t threads = 0);

}  // namespace repscope::theory
