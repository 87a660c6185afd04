#include "doctest.h"
#include "fineehr/error.hpp"
#include "fineehr/harness.hpp"
#include "fineehr/weighting.hpp"
#include "fixtures.hpp"

using namespace fineehr;

namespace {
Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}
CategoryEmbeddingSet set_of(std::map<std::string, Vector> vectors) {
  const int dim = static_cast<int>(vectors.begin()->second.size());
  return {"1", std::move(vectors), dim};
}
}  // namespace

TEST_CASE("build_category_embeddings averages per category") {
  std::vector<NoteEmbedding> notes{{"9", "Nursing", vec({2, 0}), 1},
                                   {"9", "Nursing", vec({0, 2}), 1},
                                   {"9", "Echo", vec({1, 1}), 1}};
  auto set = build_category_embeddings(notes);
  CHECK(set.admission_id == "9");
  CHECK(set.dim == 2);
  REQUIRE(set.vectors.size() == 2);
  CHECK(set.vectors.at("Nursing") == vec({1, 1}));
  CHECK(set.vectors.at("Echo") == vec({1, 1}));

  auto one = build_category_embeddings(std::vector<NoteEmbedding>{{"9", "Echo", vec({3, 4}), 1}});
  CHECK(one.vectors.at("Echo") == vec({3, 4}));

  notes.push_back({"10", "Echo", vec({0, 0}), 1});
  CHECK_THROWS_AS(build_category_embeddings(notes), DataError);
  CHECK_THROWS_AS(build_category_embeddings(std::vector<NoteEmbedding>{}), DataError);
}

TEST_CASE("weighted_pool examples") {
  CategoryWeights half({"A", "B"}, vec({0.5, 0.5}));
  CHECK(weighted_pool(set_of({{"A", vec({2, 0})}, {"B", vec({0, 2})}}), half) == vec({1, 1}));

  CategoryWeights selector({"A", "B"}, vec({1, 0}));
  CHECK(weighted_pool(set_of({{"A", vec({2, 3})}, {"B", vec({9, 9})}}), selector) == vec({2, 3}));

  CategoryWeights heavy_b({"A", "B"}, vec({1, 7}));
  CHECK(weighted_pool(set_of({{"A", vec({2, 3})}}), heavy_b) == vec({2, 3}));
  CHECK(admission_embedding(set_of({{"A", vec({2, 3})}}), heavy_b) == vec({2, 3}));

  CHECK_THROWS_AS(weighted_pool(set_of({{"C", vec({1, 1})}}), half), DataError);
}

TEST_CASE("renormalized pooling rescales by universe over present") {
  CategoryWeights w({"A", "B"}, vec({1, 1}));
  CHECK(weighted_pool(set_of({{"A", vec({2, 3})}}), w, {true}) == vec({4, 6}));
}

TEST_CASE("weighted_pool is linear in the weights") {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const std::vector<std::string> universe{"A", "B", "C"};
    std::map<std::string, Vector> vs;
    for (const auto& c : universe)
      if (rng.bernoulli(0.7)) vs[c] = fixtures::random_vector(rng, 3);
    if (vs.empty()) vs["A"] = fixtures::random_vector(rng, 3);
    const auto set = set_of(vs);
    const Vector w1 = fixtures::random_vector(rng, 3);
    const Vector w2 = fixtures::random_vector(rng, 3);
    const Vector lhs = weighted_pool(set, CategoryWeights(universe, w1 + w2));
    const Vector rhs = weighted_pool(set, CategoryWeights(universe, w1)) +
                       weighted_pool(set, CategoryWeights(universe, w2));
    CHECK(lhs.isApprox(rhs, 1e-12));
  }
}

TEST_CASE("uniform weights on a full admission give the category mean") {
  auto set = set_of({{"A", vec({1, 2})}, {"B", vec({3, 4})}, {"C", vec({5, 9})}});
  const auto w = CategoryWeights::uniform({"A", "B", "C"});
  CHECK(weighted_pool(set, w).isApprox(vec({3, 5})));
  CHECK(CategoryWeights::uniform({"A", "B"}).weights() == vec({0.5, 0.5}));
}

TEST_CASE("an absent category in the universe never changes the pool") {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    auto set = set_of({{"A", fixtures::random_vector(rng, 2)}, {"C", fixtures::random_vector(rng, 2)}});
    const Vector w = fixtures::random_vector(rng, 3);
    const Vector small = weighted_pool(set, CategoryWeights({"A", "C"}, vec({w[0], w[2]})));
    const Vector big = weighted_pool(set, CategoryWeights({"A", "B", "C"}, w));
    CHECK(small == big);
  }
}

TEST_CASE("category weights require a sorted unique universe") {
  CHECK_THROWS_AS(CategoryWeights({"B", "A"}, vec({1, 1})), DataError);
  CHECK_THROWS_AS(CategoryWeights({"A", "A"}, vec({1, 1})), DataError);
  CHECK_THROWS_AS(CategoryWeights({"A"}, vec({1, 1})), DataError);
}

TEST_CASE("joint objective gradient matches central differences") {
  Rng rng(29);
  for (int i = 0; i < 100; ++i) CHECK(fixtures::weighting_gradient_error(rng) < 1e-4);
}

namespace {
std::vector<LabeledCategorySet> toy_training() {
  std::vector<LabeledCategorySet> out;
  Rng rng(1);
  for (int i = 0; i < 40; ++i) {
    const int label = i % 2;
    const double sign = label == 1 ? 1.0 : -1.0;
    out.push_back({{std::to_string(i),
                    {{"A", Vector::Constant(2, sign) + fixtures::random_vector(rng, 2, 0.2)},
                     {"B", fixtures::random_vector(rng, 2, 1.0)}},
                    2},
                   label});
  }
  return out;
}
}  // namespace

TEST_CASE("train_weights is deterministic and validates input") {
  auto data = toy_training();
  WeightTrainParams p;
  p.epochs = 20;
  auto a = train_weights(data, p);
  auto b = train_weights(data, p);
  CHECK(a.model.weights.weights() == b.model.weights.weights());
  CHECK(a.epoch_loss == b.epoch_loss);
  CHECK(a.model.weights.categories() == std::vector<std::string>{"A", "B"});
  CHECK(a.epoch_loss.back() < a.epoch_loss.front());

  std::vector<LabeledCategorySet> one_class(data.begin(), data.end());
  for (auto& e : one_class) e.label = 1;
  CHECK_THROWS_AS(train_weights(one_class, p), DataError);
  p.epochs = 0;
  CHECK_THROWS_AS(train_weights(data, p), ConfigError);
}

TEST_CASE("weight model json round trip") {
  auto data = toy_training();
  WeightTrainParams p;
  p.epochs = 5;
  auto r = train_weights(data, p);
  nlohmann::json j = r.model;
  CHECK(j.at("categories") == std::vector<std::string>{"A", "B"});
  CHECK(j.at("weights").size() == 2);
  CHECK(j.contains("head"));
  auto back = weight_model_from_json(j);
  CHECK(flatten(back) == flatten(r.model));
}

TEST_CASE("learned weights favour the informative category") {
  nlohmann::json tree = {
      {"seed", 1},
      {"data",
       {{"synthetic",
         {{"n_admissions", 300},
          {"categories",
           {{{"name", "A"}, {"presence_probability", 1.0}, {"signal_strength", 0.2},
             {"notes_per_category", {1, 1}}, {"tokens_per_note", {20, 40}}},
            {{"name", "B"}, {"presence_probability", 1.0}, {"signal_strength", 0.0},
             {"notes_per_category", {4, 8}}, {"tokens_per_note", {10, 20}}}}}}}}},
      {"word2vec", {{"dim", 32}, {"epochs", 5}}}};
  const auto up = prepare_upstream(resolve_config(tree));
  const auto mean_pool = run_setting(up, Setting::Baseline);
  const auto weighted = run_setting(up, Setting::Weight);
  auto mean_auc = [](const SettingResult& r) {
    double s = 0.0;
    for (const auto& c : r.results) s += c.metrics.auc;
    return s / static_cast<double>(r.results.size());
  };
  REQUIRE(weighted.weights.has_value());
  const auto& w = weighted.weights->model.weights;
  CHECK(std::abs(w.weight("A")) > std::abs(w.weight("B")));
  CHECK(mean_auc(weighted) - mean_auc(mean_pool) >= 0.05);
}
