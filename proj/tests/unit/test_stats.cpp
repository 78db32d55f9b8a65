#include <doctest.h>

#include <cmath>

#include "repscope/error.hpp"
#include "repscope/rng.hpp"
#include "repscope/stats.hpp"

using namespace repscope;

TEST_CASE("spearman") {
  const std::vector<double> x = {1, 2, 3, 4};
  CHECK(spearman(x, x) == doctest::Approx(1.0));
  CHECK(spearman(x, std::vector<double>{-1, -2, -3, -4}) == doctest::Approx(-1.0));
  CHECK(spearman(x, std::vector<double>{1, 3, 2, 4}) == doctest::Approx(0.8));
  CHECK(spearman(std::vector<double>{1, 2, 2, 3}, std::vector<double>{1, 2, 3, 4}) ==
        doctest::Approx(0.9486832980505138));
  CHECK_THROWS_AS(spearman(x, std::vector<double>{1, 1, 1, 1}), ValidationError);
  CHECK_THROWS_AS(spearman(x, std::vector<double>{1, 2}), ValidationError);
}

TEST_CASE("kendall") {
  CHECK(kendall(std::vector<double>{1, 2, 3}, std::vector<double>{2, 4, 9}) == doctest::Approx(1.0));
  CHECK(kendall(std::vector<double>{1, 2, 3}, std::vector<double>{3, 2, 1}) == doctest::Approx(-1.0));
  CHECK(kendall(std::vector<double>{1, 2, 3, 4}, std::vector<double>{1, 3, 2, 4}) == doctest::Approx(2.0 / 3.0));
  // tau-b with one tie in y: (n_c - n_d) / sqrt((n0 - n1)(n0 - n2)) = 5 / sqrt(6 * 5).
  CHECK(kendall(std::vector<double>{1, 2, 3, 4}, std::vector<double>{1, 2, 2, 4}) ==
        doctest::Approx(5.0 / std::sqrt(30.0)));
  CHECK_THROWS_AS(kendall(std::vector<double>{2, 2}, std::vector<double>{1, 2}), ValidationError);
}

TEST_CASE("distance correlation") {
  std::vector<double> x, y, sq;
  for (int i = -10; i <= 10; ++i) {
    x.push_back(i);
    y.push_back(3.0 * i + 1.0);
    sq.push_back(static_cast<double>(i) * i);
  }
  CHECK(distance_correlation(x, y) == doctest::Approx(1.0));
  CHECK(distance_correlation(x, sq) > 0.3);
  CHECK(distance_correlation(x, std::vector<double>(x.size(), 2.0)) == 0.0);

  Rng rng(3);
  std::vector<double> u(200), v(200);
  for (auto& e : u) e = rng.uniform();
  for (auto& e : v) e = rng.uniform();
  CHECK(distance_correlation(u, v) < 0.15);
}

TEST_CASE("multivariate distance correlation") {
  Matrix a(5, 2), b(5, 1);
  a << 0, 0, 1, 0, 0, 1, 1, 1, 2, 2;
  b << 0, 1, 1, 2, 4;
  const double d = distance_correlation(a, b);
  CHECK(d > 0.0);
  CHECK(d <= 1.0);
  CHECK(distance_correlation(a, a) == doctest::Approx(1.0));
}

TEST_CASE("average ranks share ties") {
  const auto r = average_ranks(std::vector<double>{10, 20, 20, 5});
  CHECK(r == std::vector<double>{2.0, 3.5, 3.5, 1.0});
}

TEST_CASE("layer selection") {
  LayerCurve c{"dime", std::vector<double>(25, 1.0), Direction::lower_is_better};
  c.values[17] = 0.1;
  CHECK(select_layer(c) == 17);

  LayerCurve tie{"dime", std::vector<double>(25, 1.0), Direction::lower_is_better};
  tie.values[10] = tie.values[20] = 0.2;
  CHECK(select_layer(tie) == 20);

  LayerCurve hi{"lidar", {1, 5, 5, 2}, Direction::higher_is_better};
  CHECK(select_layer(hi) == 2);

  LayerCurve bad{"x", {1, std::nan(""), 2}, Direction::lower_is_better};
  CHECK_THROWS_AS(select_layer(bad), ValidationError);
  CHECK(parse_direction("max") == Direction::higher_is_better);
  CHECK_THROWS_AS(parse_direction("sideways"), ValidationError);
}
