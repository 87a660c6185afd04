#include "doctest.h"
#include "fineehr/classify.hpp"
#include "fineehr/error.hpp"
#include "fixtures.hpp"

#include <cmath>

using namespace fineehr;

namespace {
Vector vec(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}
struct Dataset {
  std::vector<Vector> X;
  std::vector<int> y;
};
Dataset separable() {
  Dataset d;
  Rng rng(4);
  for (int i = 0; i < 20; ++i) {
    const int label = i % 2;
    const double x1 = rng.uniform(0.1, 2.0) * (label == 1 ? 1.0 : -1.0);
    d.X.push_back(vec(x1, rng.uniform(-2.0, 2.0)));
    d.y.push_back(label);
  }
  return d;
}
Dataset xor_points() {
  return {{vec(0, 0), vec(0, 1), vec(1, 0), vec(1, 1)}, {0, 1, 1, 0}};
}
double accuracy(const Classifier& model, const Dataset& d) {
  int hit = 0;
  for (std::size_t i = 0; i < d.X.size(); ++i)
    hit += (model.predict_proba(d.X[i]) >= 0.5) == (d.y[i] == 1);
  return static_cast<double>(hit) / static_cast<double>(d.X.size());
}
}  // namespace

TEST_CASE("logreg fits separable data") {
  auto d = separable();
  auto model = train_logreg(d.X, d.y, {});
  CHECK(model.trained());
  CHECK(accuracy(model, d) == 1.0);
}

TEST_CASE("mlp fits xor") {
  auto d = xor_points();
  MlpParams p;
  p.hidden = 8;
  p.epochs = 2000;
  auto model = train_mlp(d.X, d.y, p);
  CHECK(accuracy(model, d) == 1.0);
}

TEST_CASE("trainers reject bad input") {
  auto d = separable();
  std::vector<int> ones(d.y.size(), 1);
  CHECK_THROWS_AS(train_logreg(d.X, ones, {}), DataError);
  CHECK_THROWS_AS(train_mlp(d.X, ones, {}), DataError);
  LogRegParams lp;
  lp.l2 = 0.0;
  lp.epochs = 0;
  CHECK_THROWS_AS(train_logreg(d.X, d.y, lp), ConfigError);
  MlpParams mp;
  mp.hidden = 0;
  CHECK_THROWS_AS(train_mlp(d.X, d.y, mp), ConfigError);
  std::vector<int> short_y(d.y.begin(), d.y.begin() + 3);
  CHECK_THROWS_AS(train_logreg(d.X, short_y, {}), DataError);
}

TEST_CASE("predict_proba examples") {
  LogRegModel zero(Vector::Zero(3), 0.0);
  CHECK(zero.predict_proba(Vector::Constant(3, 9.0)) == 0.5);
  LogRegModel axis(vec(1, 0), 0.0);
  CHECK(axis.predict_proba(vec(0, 5)) == 0.5);
  LogRegModel one(Vector::Ones(1), 0.0);
  CHECK(one.predict_proba(Vector::Constant(1, std::log(3.0))) == doctest::Approx(0.75).epsilon(1e-15));
  CHECK_THROWS_AS(axis.predict_proba(Vector::Zero(3)), DataError);
}

TEST_CASE("probabilities stay strictly inside the unit interval") {
  for (double z : {-1e4, -800.0, -40.0, 0.0, 40.0, 800.0, 1e4}) {
    const double p = sigmoid_open(z);
    CHECK(p > 0.0);
    CHECK(p < 1.0);
  }
}

TEST_CASE("negating a logreg model complements its probability") {
  Rng rng(12);
  for (int i = 0; i < 500; ++i) {
    const Vector w = fixtures::random_vector(rng, 3, 3.0);
    const double b = rng.uniform(-3.0, 3.0);
    const Vector x = fixtures::random_vector(rng, 3, 3.0);
    const double sum = LogRegModel(w, b).predict_proba(x) + LogRegModel(-w, -b).predict_proba(x);
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-15));
  }
}

TEST_CASE("logreg loss trace is non-increasing") {
  Dataset d;
  Rng rng(7);
  for (int i = 0; i < 60; ++i) {
    d.X.push_back(fixtures::random_vector(rng, 4));
    d.y.push_back(d.X.back().sum() + rng.uniform(-0.5, 0.5) > 0 ? 1 : 0);
  }
  LogRegParams p;
  p.learning_rate = 0.05;
  p.epochs = 300;
  auto model = train_logreg(d.X, d.y, p);
  const auto& trace = model.loss_trace();
  REQUIRE(trace.size() == 301);
  for (std::size_t i = 1; i < trace.size(); ++i) CHECK(trace[i] <= trace[i - 1]);
  CHECK(trace.back() == doctest::Approx(logreg_objective(model, d.X, d.y)));
}

TEST_CASE("trainers are pure functions of data and params") {
  auto d = separable();
  CHECK(train_logreg(d.X, d.y, {}).to_json() == train_logreg(d.X, d.y, {}).to_json());
  MlpParams p;
  p.epochs = 50;
  CHECK(train_mlp(d.X, d.y, p).to_json() == train_mlp(d.X, d.y, p).to_json());
  auto q = p;
  q.seed = 2;
  CHECK_FALSE(train_mlp(d.X, d.y, q).to_json() == train_mlp(d.X, d.y, p).to_json());
}

TEST_CASE("classifier json round trip") {
  auto d = separable();
  MlpParams p;
  p.epochs = 20;
  const LogRegModel lr = train_logreg(d.X, d.y, {});
  const MlpClassifier mlp = train_mlp(d.X, d.y, p);
  for (const Classifier* model : {static_cast<const Classifier*>(&lr),
                                  static_cast<const Classifier*>(&mlp)}) {
    auto j = model->to_json();
    CHECK(j.at("kind") == model->kind());
    auto back = classifier_from_json(j);
    CHECK(back->kind() == model->kind());
    for (const auto& x : d.X) CHECK(back->predict_proba(x) == model->predict_proba(x));
  }
  CHECK_THROWS_AS(classifier_from_json({{"kind", "forest"}}), DataError);
}
