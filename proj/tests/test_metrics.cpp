#include "doctest.h"
#include "fineehr/error.hpp"
#include "fineehr/metrics.hpp"
#include "fineehr/random.hpp"
#include "oracles.hpp"

#include <cmath>
#include <vector>

using namespace fineehr;

TEST_CASE("roc_auc fixtures") {
  std::vector<double> s{0.9, 0.8, 0.2, 0.1};
  std::vector<int> y{1, 1, 0, 0};
  CHECK(roc_auc(s, y) == 1.0);
  std::vector<int> flipped{0, 0, 1, 1};
  CHECK(roc_auc(s, flipped) == 0.0);

  std::vector<double> s2{0.9, 0.4, 0.6, 0.1};
  std::vector<int> y2{1, 0, 0, 1};
  CHECK(oracle::pairwise_auc(s2, y2) == 0.5);
  CHECK(roc_auc(s2, y2) == 0.5);
}

TEST_CASE("roc_auc counts ties as half") {
  std::vector<double> s{0.5, 0.5, 0.5, 0.5};
  std::vector<int> y{1, 0, 1, 0};
  CHECK(roc_auc(s, y) == 0.5);
  std::vector<double> s2{0.7, 0.5, 0.5, 0.1};
  std::vector<int> y2{1, 1, 0, 0};
  CHECK(roc_auc(s2, y2) == doctest::Approx(oracle::pairwise_auc(s2, y2)).epsilon(1e-15));
}

TEST_CASE("roc_auc rejects single class and NaN") {
  std::vector<double> s{0.1, 0.2};
  std::vector<int> y{1, 1};
  CHECK_THROWS_AS(roc_auc(s, y), DataError);
  std::vector<double> nan{NAN, 0.2};
  std::vector<int> y2{1, 0};
  CHECK_THROWS_AS(roc_auc(nan, y2), DataError);
  std::vector<double> short_scores{0.1};
  CHECK_THROWS_AS(roc_auc(short_scores, y2), DataError);
}

TEST_CASE("roc_auc agrees with pairwise and trapezoid oracles on random sets") {
  Rng rng(42);
  for (int trial = 0; trial < 300; ++trial) {
    const auto n = static_cast<std::size_t>(rng.between(2, 50));
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      // Coarse grid forces frequent ties.
      s[i] = static_cast<double>(rng.between(0, 10)) / 10.0;
      y[i] = rng.bernoulli(0.5) ? 1 : 0;
    }
    y[0] = 1;
    y[1] = 0;
    const double auc = roc_auc(s, y);
    CHECK(std::abs(auc - oracle::pairwise_auc(s, y)) < 1e-9);
    CHECK(std::abs(auc - oracle::trapezoid_auc(s, y)) < 1e-9);
  }
}

TEST_CASE("roc_auc is invariant under strictly increasing transforms") {
  Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const auto n = static_cast<std::size_t>(rng.between(2, 40));
    std::vector<double> s(n), t(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = rng.uniform(-3, 3);
      t[i] = std::exp(2.0 * s[i]) + 5.0;
      y[i] = rng.bernoulli(0.4) ? 1 : 0;
    }
    y[0] = 1;
    y[1] = 0;
    CHECK(roc_auc(s, y) == roc_auc(t, y));

    std::vector<int> flipped(n);
    for (std::size_t i = 0; i < n; ++i) flipped[i] = 1 - y[i];
    CHECK(roc_auc(s, y) + roc_auc(s, flipped) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("pr_auc fixtures") {
  std::vector<double> s{0.9, 0.8, 0.2, 0.1};
  std::vector<int> perfect{1, 1, 0, 0};
  CHECK(pr_auc(s, perfect) == 1.0);
  std::vector<int> alternating{1, 0, 1, 0};
  CHECK(pr_auc(s, alternating) == doctest::Approx(5.0 / 6.0).epsilon(1e-15));
  std::vector<int> all_pos{1, 1, 1, 1};
  std::vector<double> any{0.1, 0.9, 0.3, 0.3};
  CHECK(pr_auc(any, all_pos) == 1.0);
  std::vector<int> none{0, 0, 0, 0};
  CHECK_THROWS_AS(pr_auc(s, none), DataError);
}

TEST_CASE("pr_auc breaks ties by input order") {
  std::vector<double> s{0.5, 0.5};
  std::vector<int> neg_first{0, 1};
  std::vector<int> pos_first{1, 0};
  CHECK(pr_auc(s, neg_first) == 0.5);
  CHECK(pr_auc(s, pos_first) == 1.0);
}

TEST_CASE("metric report json") {
  std::vector<double> s{0.9, 0.8, 0.2, 0.1};
  std::vector<int> y{1, 0, 1, 0};
  nlohmann::json j = evaluate_scores(s, y);
  CHECK(j.at("n_pos") == 2);
  CHECK(j.at("n_neg") == 2);
  CHECK(j.at("pr_definition") == "average_precision");
  CHECK(j.at("auc").get<double>() == 0.75);
}
