#include <doctest.h>

#include <cmath>

#include "convert.hpp"
#include "repscope/error.hpp"
#include "repscope//entropy.hpp"
#include "repscope/random_matrix.hpp"
#include "repscope/spectrum.hpp"

using namespace repscope;

namespace {

/// Matrix whose Gram spectrum is exactly (0.75, 0.25).
Matrix three_to_one() {
  Matrix z(2, 2);
  z << std::sqrt(3.0), 0, 0, 1;
  return z;
}

}  // namespace

TEST_CASE("entropy of explicit spectra") {
  const auto uniform = ProbSpectrum::from_weights({1, 1, 1, 1});
  for (double a : {0.5, 1.0, 2.0, 4.0}) CHECK(entropy_from_spectrum(uniform, a) == doctest::Approx(std::log(4.0)));
  CHECK(entropy_from_spectrum(ProbSpectrum::from_weights({1.0}), 1.0) == 0.0);
  CHECK(entropy_from_spectrum(ProbSpectrum::from_weights({0.75, 0.25}), 2.0) ==
        doctest::Approx(-std::log(0.625)).epsilon(1e-12));
  CHECK(-std::log(0.625) == doctest::Approx(0.4700).epsilon(1e-4));
}

TEST_CASE("matrix entropy basics") {
  CHECK(matrix_entropy(Matrix::Identity(2, 2), 1.0) == doctest::Approx(std::log(2.0)));
  Rng rng(1);
  const Matrix r1 = gaussian_matrix(rng, 5, 1) * gaussian_matrix(rng, 1, 3);
  for (double a : {0.5, 1.0, 2.0, 4.0}) CHECK(matrix_entropy(r1, a) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(matrix_entropy(Matrix::Zero(3, 3), 1.0) == 0.0);
  CHECK_THROWS_AS(matrix_entropy(Matrix::Identity(2, 2), 0.0), ValidationError);
  CHECK_THROWS_AS(matrix_entropy(Matrix::Identity(2, 2), -1.0), ValidationError);
}

TEST_CASE("matrix entropy matches the independent oracle") {
  Rng rng(2024);
  const Matrix z = gaussian_matrix(rng, 6, 4);
  for (double a : {0.5, 1.0, 2.0, 4.0}) {
    CHECK(std::abs(matrix_entropy(z, a) - oracle::matrix_entropy(to_dense(z), a)) <= 1e-8);
  }
}

TEST_CASE("collision shortcut") {
  CHECK(collision_entropy_fast(Matrix::Identity(2, 2)) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(std::abs(collision_entropy_fast(three_to_one()) - 0.47000362924573558) <= 1e-8);
  Rng rng(9);
  for (int t = 0; t < 100; ++t) {
    const Matrix z = gaussian_matrix(rng, 1 + static_cast<long>(rng.below(30)), 1 + static_cast<long>(rng.below(30)));
    CHECK(std::abs(collision_entropy_fast(z) - matrix_entropy(z, 2.0)) <= 1e-8);
  }
}

TEST_CASE("prompt entropy") {
  const Matrix same = Matrix::Ones(6, 4);
  CHECK(prompt_entropy(same) == doctest::Approx(0.0));
  Rng rng(4);
  const Matrix q = random_orthogonal(rng, 8);
  CHECK(prompt_entropy(q, EntropyConfig{1.0, true}) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(prompt_entropy(q) == doctest::Approx(std::log(8.0)).epsilon(1e-10));
}

TEST_CASE("unnormalized prompt entropy grows with prompt length") {
  const int seeds = 20;
  std::vector<double> mean_by_length;
  for (long len : {8L, 16L, 32L, 64L}) {
    double sum = 0.0;
    for (int s = 0; s < seeds; ++s) {
      Rng rng(derive_seed(77, static_cast<std::uint64_t>(len * 1000 + s)));
      sum += prompt_entropy(gaussian_matrix(rng, len, 128));
    }
    mean_by_length.push_back(sum / seeds);
  }
  for (std::size_t i = 1; i < mean_by_length.size(); ++i) CHECK(mean_by_length[i] > mean_by_length[i - 1]);
}

TEST_CASE("dataset entropy") {
  CHECK(dataset_entropy(Matrix::Constant(5, 3, 2.0)) == doctest::Approx(0.0));
  Rng rng(6);
  const Matrix q = random_orthogonal(rng, 6);
  CHECK(dataset_entropy(q) == doctest::Approx(std::log(6.0)).epsilon(1e-10));
}

TEST_CASE("normalization edge cases") {
  const EntropyConfig norm{1.0, true};
  CHECK(prompt_entropy(Matrix::Ones(1, 5), norm) == 0.0);
  CHECK(dataset_entropy(Matrix::Ones(5, 1), norm) == 0.0);
}

TEST_CASE("effective rank") {
  CHECK(effective_rank(Matrix::Identity(3, 3)) == doctest::Approx(3.0));
  Rng rng(8);
  CHECK(effective_rank(gaussian_matrix(rng, 4, 1) * gaussian_matrix(rng, 1, 6)) == doctest::Approx(1.0));
  Matrix z(2, 2);
  z << 3, 0, 0, 1;
  const double h = -(0.75 * std::log(0.75) + 0.25 * std::log(0.25));
  CHECK(effective_rank(z) == doctest::Approx(std::exp(h)).epsilon(1e-12));
  CHECK(effective_rank(z) == doctest::Approx(1.7547).epsilon(1e-4));
  CHECK(effective_rank(Matrix::Zero(2, 2)) == 0.0);
}

TEST_CASE("exp of the Shannon entropy never exceeds the effective rank") {
  Rng rng(99);
  for (int t = 0; t < 200; ++t) {
    const Matrix z = gaussian_matrix(rng, 2 + static_cast<long>(rng.below(30)), 2 + static_cast<long>(rng.below(20)));
    CHECK(std::exp(matrix_entropy(z, 1.0)) <= effective_rank(z) + 1e-8);
  }
}

TEST_CASE("logdet entropy") {
  CHECK(logdet_entropy(Matrix::Identity(2, 2), 0.0) == doctest::Approx(std::log(0.25) - std::log(2.0)));
  Matrix rank_def(3, 3);
  rank_def << 1, 0, 0, 0, 1, 0, 0, 0, 0;
  const double ld = logdet_entropy(rank_def, 1e-8);
  CHECK(ld < -10.0);
  CHECK(ld <= matrix_entropy(rank_def, 1.0));
  Rng rng(12);
  for (int t = 0; t < 100; ++t) {
    const auto cmp = compare_logdet(gaussian_matrix(rng, 2 + static_cast<long>(rng.below(10)), 1 + static_cast<long>(rng.below(12))));
    CHECK(cmp.bound_holds);
    CHECK(cmp.logdet <= cmp.von_neumann);
  }
}

TEST_CASE("entropy is invariant to orthogonal transforms and scale") {
  Rng rng(21);
  const Matrix z = gaussian_matrix(rng, 10, 6);
  const Matrix o = random_orthogonal(rng, 6);
  for (double a : {0.5, 1.0, 2.0, 4.0}) {
    CHECK(matrix_entropy(z * o, a) == doctest::Approx(matrix_entropy(z, a)).epsilon(1e-10));
    CHECK(matrix_entropy(3.7 * z, a) == doctest::Approx(matrix_entropy(z, a)).epsilon(1e-10));
  }
}

TEST_CASE("entropy is non-increasing in alpha on power-law spectra") {
  for (double decay : {0.5, 1.0, 2.0}) {
    std::vector<double> w;
    for (int i = 1; i <= 50; ++i) w.push_back(std::pow(i, -decay));
    const auto p = ProbSpectrum::from_weights(w);
    double prev = std::log(50.0) + 1e-12;
    for (double a : {0.25, 0.5, 1.0, 2.0, 4.0, 8.0}) {
      const double s = entropy_from_spectrum(p, a);
      CHECK(s <= prev + 1e-12);
      prev = s;
    }
  }
}
