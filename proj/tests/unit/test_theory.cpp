#include <doctest.h>

#include <cmath>

#include "repscope/error.hpp"
#include "repscope//entropy.hpp"
#include "repscope/theory.hpp"

using namespace repscope;
using namespace repscope::theory;

TEST_CASE("flat spectra give equality in the effective-rank bound") {
  EffRankConfig cfg;
  cfg.trials = 40;
  cfg.seed = 3;
  const auto r = check_effrank_bound(cfg);
  CHECK(r.detail("flat_spectrum_max_abs_gap") <= 1e-6);
}

TEST_CASE("rank-one matrices give one on both sides") {
  EffRankConfig cfg;
  cfg.trials = 4;
  cfg.min_cols = cfg.max_cols = 1;
  cfg.seed = 5;
  const auto r = check_effrank_bound(cfg);
  CHECK(std::abs(r.max_gap) <= 1e-12);
  CHECK(r.violations == 0);
}

TEST_CASE("effective-rank report carries the converse direction") {
  EffRankConfig cfg;
  cfg.trials = 200;
  cfg.seed = 7;
  const auto r = check_effrank_bound(cfg);
  CHECK(r.detail("reverse_violations") == 0.0);
  CHECK(r.detail("reverse_max_gap") <= 1e-8);
}

TEST_CASE("Schur concavity") {
  SchurConfig cfg;
  cfg.trials = 300;
  cfg.seed = 11;
  const auto r = check_schur_concavity(cfg);
  CHECK(r.violations == 0);
  CHECK(r.passed);
  CHECK(r.detail("construction_failures") == 0.0);

  std::vector<double> uniform(6, 1.0 / 6.0), point(6, 0.0);
  point[0] = 1.0;
  for (double a : {0.5, 1.0, 2.0}) {
    CHECK(entropy_from_spectrum(ProbSpectrum::from_weights(uniform), a) == doctest::Approx(std::log(6.0)));
    CHECK(entropy_from_spectrum(ProbSpectrum::from_weights(point), a) == 0.0);
  }
}

TEST_CASE("orthogonality bound and probe") {
  CHECK(orthogonality_bound(10, 2000, 0.3) == doctest::Approx(100.0 * std::sqrt(2.0 * M_PI) * std::exp(-90.0)));
  CHECK(orthogonality_bound(2, 2, 0.999) == 1.0);

  OrthogonalityConfig cfg;
  cfg.trials = 200;
  cfg.seed = 13;
  CHECK(orthogonality_probe(cfg).violations == 0);

  OrthogonalityConfig tiny{2, 2, 0.999, 2000, 17, 0};
  const auto r = orthogonality_probe(tiny);
  CHECK(r.violations < 100);
  CHECK(r.passed);

  OrthogonalityConfig one{10, 3, 1.0, 200, 19, 0};
  CHECK(orthogonality_probe(one).violations == 0);
}

TEST_CASE("max-entropy construction") {
  MaxEntropyConfig cfg;
  cfg.trials = 40;
  cfg.seed = 23;
  const auto r = simulate_max_entropy_scaling(cfg);
  CHECK(r.passed);
  CHECK(r.tolerance == doctest::Approx(10.0 * 8.0 / 4096.0));
  CHECK(r.detail("max_prompt_entropy_deviation") <= 1e-8);
  CHECK(r.detail("max_orthonormality_deviation") <= 1e-10);
  CHECK(r.detail("median_gap") < r.tolerance);

  MaxEntropyConfig one = cfg;
  one.prompts = 1;
  CHECK_THROWS_AS(simulate_max_entropy_scaling(one), ValidationError);
}

TEST_CASE("min-entropy construction reports both constants") {
  MinEntropyConfig cfg;
  cfg.trials = 40;
  cfg.seed = 29;
  const auto r = simulate_min_entropy_scaling(cfg);
  CHECK(r.passed);
  CHECK(r.detail("max_prompt_entropy") == 0.0);
  CHECK(r.detail("constant_inverse_n") == doctest::Approx(0.125));
  CHECK(r.detail("constant_stated_n3_over_l2") == doctest::Approx(0.5));
  CHECK(std::abs(r.detail("median_exp_neg_s2") - 0.125) < 0.05);
  CHECK(r.detail("median_gap_stated") > r.detail("median_gap_inverse_n"));

  MinEntropyConfig stated = cfg;
  stated.constant = MinEntropyConstant::stated;
  CHECK_FALSE(simulate_min_entropy_scaling(stated).passed);
}

TEST_CASE("toy channel information quantities") {
  ToyChannel clean{8, 0.0};
  CHECK(clean.entropy_z() == doctest::Approx(std::log(8.0)));
  CHECK(clean.mutual_information() == doctest::Approx(std::log(8.0)));
  ToyChannel noise{8, 1.0};
  CHECK(noise.mutual_information() == doctest::Approx(0.0).epsilon(1e-12));
  ToyChannel half{4, 0.5};
  // P(z = x) = 0.625, others 0.125 each.
  const double h_cond = -(0.625 * std::log(0.625) + 3 * 0.125 * std::log(0.125));
  CHECK(half.mutual_information() == doctest::Approx(std::log(4.0) - h_cond));
}

TEST_CASE("InfoNCE bound on the toy channel") {
  InfoNceBoundConfig cfg;
  cfg.trials = 60;
  cfg.seed = 31;
  const auto r = check_infonce_entropy_bound(cfg);
  CHECK(r.passed);
  CHECK(r.violations == 0);

  InfoNceBoundConfig indep = cfg;
  indep.channel.flip = 1.0;
  const auto ri = check_infonce_entropy_bound(indep);
  CHECK(ri.passed);
  CHECK(ri.detail("n8_lower_bound_mean") <= 3.0 * ri.detail("n8_standard_error"));

  InfoNceBoundConfig single = cfg;
  single.sample_sizes = {1};
  const auto rs = check_infonce_entropy_bound(single);
  CHECK(rs.detail("n1_lower_bound_mean") == 0.0);
}

TEST_CASE("checks are reproducible and thread-count independent") {
  const auto serial = run_theorem_suite(7, 1);
  const auto parallel = run_theorem_suite(7, 4);
  REQUIRE(serial.size() == parallel.size());
  for (std::size_t i = 0; i < serial.size(); ++i) CHECK(serial[i].to_json().dump() == parallel[i].to_json().dump());
}
