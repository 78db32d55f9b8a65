#include <doctest.h>

#include <numeric>

#include "convert.hpp"
#include "repscope/random_matrix.hpp"
#include "repscope/spectrum.hpp"

using namespace repscope;

TEST_CASE("gram spectrum of small matrices") {
  SUBCASE("identity has two equal masses") {
    const auto p = gram_spectrum(Matrix::Identity(2, 2));
    REQUIRE(p.rank() == 2);
    CHECK(p.probs()[0] == doctest::Approx(0.5));
    CHECK(p.probs()[1] == doctest::Approx(0.5));
  }
  SUBCASE("two identical unit rows collapse to rank one") {
    Matrix z(2, 3);
    z << 0, 1, 0, 0, 1, 0;
    const auto p = gram_spectrum(z);
    REQUIRE(p.rank() == 1);
    CHECK(p.probs()[0] == doctest::Approx(1.0));
  }
  SUBCASE("diag(1, 2) gives eigenvalues 4 and 1") {
    Matrix z(2, 2);
    z << 1, 0, 0, 2;
    const auto p = gram_spectrum(z);
    REQUIRE(p.rank() == 2);
    CHECK(p.probs()[0] == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(p.probs()[1] == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(p.source_trace() == doctest::Approx(5.0));
  }
}

TEST_CASE("singular spectrum of small matrices") {
  const auto eye = singular_spectrum(Matrix::Identity(3, 3));
  REQUIRE(eye.rank() == 3);
  for (double q : eye.probs()) CHECK(q == doctest::Approx(1.0 / 3.0));

  Rng rng(3);
  const Matrix u = gaussian_matrix(rng, 5, 1), v = gaussian_matrix(rng, 1, 4);
  const auto r1 = singular_spectrum(u * v);
  REQUIRE(r1.rank() == 1);
  CHECK(r1.probs()[0] == doctest::Approx(1.0));

  Matrix z(2, 2);
  z << 1, 0, 0, 2;
  const auto p = singular_spectrum(z);
  CHECK(p.probs()[0] == doctest::Approx(2.0 / 3.0));
  CHECK(p.probs()[1] == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("spectrum invariants on random matrices") {
  Rng rng(11);
  for (int t = 0; t < 50; ++t) {
    const long n = 1 + static_cast<long>(rng.below(20)), d = 1 + static_cast<long>(rng.below(20));
    const Matrix z = gaussian_matrix(rng, n, d);
    for (const auto& p : {gram_spectrum(z), singular_spectrum(z)}) {
      CHECK(std::accumulate(p.probs().begin(), p.probs().end(), 0.0) == doctest::Approx(1.0).epsilon(1e-9));
      CHECK(p.rank() <= static_cast<std::size_t>(std::min(n, d)));
      CHECK(std::is_sorted(p.probs().rbegin(), p.probs().rend()));
      for (double q : p.probs()) CHECK(q >= 0.0);
    }
  }
}

TEST_CASE("gram eigenvalues agree with the Jacobi oracle whichever side is formed") {
  Rng rng(5);
  for (auto [n, d] : {std::pair{6L, 4L}, std::pair{4L, 6L}, std::pair{7L, 7L}}) {
    const Matrix z = gaussian_matrix(rng, n, d);
    const auto ev = gram_eigenvalues(z);
    const auto ref = oracle::jacobi_eigenvalues(oracle::outer_gram(to_dense(z)));
    for (std::size_t i = 0; i < ev.size(); ++i) CHECK(ev[i] == doctest::Approx(ref[i]).epsilon(1e-10));
  }
}

TEST_CASE("zero matrix is degenerate") {
  CHECK(gram_spectrum(Matrix::Zero(3, 2)).degenerate());
  CHECK(singular_spectrum(Matrix::Zero(3, 2)).degenerate());
}

TEST_CASE("1000 x 1000 symmetric eigendecomposition has small residual") {
  Rng rng(17);
  const Matrix g = gaussian_matrix(rng, 1000, 1000);
  const Matrix a = (g + g.transpose()) / 2.0;
  const auto ev = symmetric_eigenvalues(a);
  REQUIRE(ev.size() == 1000);
  CHECK(std::accumulate(ev.begin(), ev.end(), 0.0) == doctest::Approx(a.trace()).epsilon(1e-9));
  double sq = 0.0;
  for (double e : ev) sq += e * e;
  CHECK(sq == doctest::Approx(a.squaredNorm()).epsilon(1e-9));
}
