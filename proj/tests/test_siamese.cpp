#include "doctest.h"
#include "fineehr/error.hpp"
#include "fineehr/siamese.hpp"
#include "fixtures.hpp"

#include <cmath>
#include <set>

using namespace fineehr;

TEST_CASE("forward with an identity layer is the identity") {
  SiameseNetwork net({3, 3});
  net.layers()[0].weights = Matrix::Identity(3, 3);
  Vector x(3);
  x << 0.5, -2.0, 7.0;
  CHECK(net.forward(x) == x);
}

TEST_CASE("forward with zero parameters is zero") {
  SiameseNetwork net({3, 6, 3});
  CHECK(net.forward(Vector::Constant(3, 4.0)).isZero());
}

TEST_CASE("forward on a hand-evaluated 2-4-2 network") {
  SiameseNetwork net({2, 4, 2});
  auto& l = net.layers();
  l[0].weights << 0.1, 0.2, -0.3, 0.4, 0.5, -0.6, 0.7, 0.8;
  l[0].bias << 0.01, -0.02, 0.03, -0.04;
  l[1].weights << 0.1, -0.2, 0.3, -0.4, 0.5, 0.6, -0.7, 0.8;
  l[1].bias << 0.05, -0.05;
  Vector x(2);
  x << 1.0, -1.0;
  const Vector out = net.forward(x);
  CHECK(out[0] == doctest::Approx(0.4633488398819847).epsilon(1e-12));
  CHECK(out[1] == doctest::Approx(-1.1440119158723625).epsilon(1e-12));
}

TEST_CASE("forward rejects a width mismatch") {
  SiameseNetwork net({2, 4, 2});
  CHECK_THROWS_AS(net.forward(Vector::Zero(3)), DataError);
}

TEST_CASE("refiner dims validation") {
  CHECK_NOTHROW(validate_refiner_dims({4, 8, 4}));
  CHECK_NOTHROW(validate_refiner_dims({4, 8, 8, 4}));
  CHECK_THROWS_AS(validate_refiner_dims({4, 8, 5}), ConfigError);
  CHECK_THROWS_AS(validate_refiner_dims({4, 2, 8, 4}), ConfigError);
  CHECK_THROWS_AS(validate_refiner_dims({4}), ConfigError);
  CHECK(refiner_dims(8, 2.0) == std::vector<int>{8, 16, 8});
}

TEST_CASE("contrastive_loss examples") {
  CHECK(contrastive_loss(1, 0.0, 1.0) == 0.0);
  CHECK(contrastive_loss(0, 2.0, 1.0) == 0.0);
  CHECK(contrastive_loss(1, 0.5, 1.0) == doctest::Approx(0.25));
  CHECK(contrastive_loss(0, 0.4, 1.0) == doctest::Approx(0.36));
}

TEST_CASE("contrastive_loss is nonnegative and zero exactly on the flat set") {
  Rng rng(13);
  for (int i = 0; i < 2000; ++i) {
    const int y = rng.bernoulli(0.5) ? 1 : 0;
    const double d = rng.bernoulli(0.1) ? 0.0 : rng.uniform(0.0, 3.0);
    const double m = rng.uniform(0.1, 2.0);
    const double loss = contrastive_loss(y, d, m);
    CHECK(loss >= 0.0);
    const bool flat = (y == 1 && d == 0.0) || (y == 0 && d >= m);
    CHECK((loss == 0.0) == flat);
  }
}

TEST_CASE("pair_loss_grad flat regions") {
  Rng rng(2);
  auto net = SiameseNetwork::initialized({3, 6, 3}, rng);
  const Vector x = fixtures::random_vector(rng, 3);

  auto same = pair_loss_grad(net, x, x, 1, 1.0);
  CHECK(same.loss == 0.0);
  CHECK(same.distance == 0.0);
  CHECK(flatten(same.grads).isZero());

  const Vector far = x + Vector::Constant(3, 50.0);
  auto beyond = pair_loss_grad(net, x, far, 0, 1e-3);
  REQUIRE(beyond.distance >= 1e-3);
  CHECK(beyond.loss == 0.0);
  CHECK(flatten(beyond.grads).isZero());
}

TEST_CASE("pair_loss_grad matches central differences") {
  Rng rng(17);
  for (int i = 0; i < 100; ++i) CHECK(fixtures::siamese_gradient_error(rng) < 1e-4);
}

TEST_CASE("shared weights make the distance symmetric") {
  Rng rng(4);
  for (int i = 0; i < 200; ++i) {
    auto net = SiameseNetwork::initialized({3, 5, 3}, rng);
    const Vector a = fixtures::random_vector(rng, 3);
    const Vector c = fixtures::random_vector(rng, 3);
    CHECK(pair_loss_grad(net, a, c, 1, 1.0).distance == pair_loss_grad(net, c, a, 1, 1.0).distance);
  }
}

TEST_CASE("SGD on a fixed pair never increases the loss") {
  Rng rng(6);
  for (int y : {0, 1}) {
    auto net = SiameseNetwork::initialized({2, 4, 2}, rng);
    const Vector a = fixtures::random_vector(rng, 2, 0.3);
    const Vector c = fixtures::random_vector(rng, 2, 0.3);
    double prev = pair_loss_grad(net, a, c, y, 2.0).loss;
    for (int step = 0; step < 500 && prev > 1e-12; ++step) {
      auto g = pair_loss_grad(net, a, c, y, 2.0);
      for (std::size_t k = 0; k < net.layers().size(); ++k) {
        net.layers()[k].weights -= 1e-3 * g.grads[k].weights;
        net.layers()[k].bias -= 1e-3 * g.grads[k].bias;
      }
      const double now = pair_loss_grad(net, a, c, y, 2.0).loss;
      CHECK(now <= prev);
      prev = now;
    }
  }
}

namespace {
std::vector<LabeledEmbedding> labeled(std::vector<int> labels) {
  std::vector<LabeledEmbedding> out;
  for (int l : labels) out.push_back({Vector::Constant(2, l), l});
  return out;
}
}  // namespace

TEST_CASE("pairs come from the enumerated set") {
  const auto notes = labeled({1, 1, 0});
  Rng rng(1);
  auto pairs = select_category_pairs("Echo", notes, 60, rng);
  const std::set<std::pair<std::size_t, std::size_t>> same{{0, 1}};
  const std::set<std::pair<std::size_t, std::size_t>> diff{{0, 2}, {1, 2}};
  for (const auto& p : pairs) {
    const auto key = std::minmax(p.anchor_index, p.contrast_index);
    if (p.y == 1) CHECK(same.contains(key));
    else CHECK(diff.contains(key));
  }
}

TEST_CASE("select_category_pairs balances labels") {
  const auto notes = labeled({1, 1, 1, 0, 0, 0, 0, 1, 0, 1});
  Rng rng(3);
  auto pairs = select_category_pairs("Echo", notes, 100, rng);
  REQUIRE(pairs.size() == 100);
  CHECK(std::count_if(pairs.begin(), pairs.end(), [](const auto& p) { return p.y == 1; }) == 50);
}

TEST_CASE("pair hygiene over random corpora") {
  Rng rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    CategoryNotes notes;
    const auto n_cat = rng.between(1, 4);
    for (int c = 0; c < n_cat; ++c) {
      std::vector<int> labels;
      const auto n = rng.between(0, 12);
      for (int i = 0; i < n; ++i) labels.push_back(rng.bernoulli(0.5) ? 1 : 0);
      notes["cat" + std::to_string(c)] = labeled(labels);
    }
    const bool any = std::any_of(notes.begin(), notes.end(),
                                 [](const auto& kv) { return pair_eligible(kv.second); });
    if (!any) {
      CHECK_THROWS_AS(select_pairs(notes, 20, rng.next()), DataError);
      continue;
    }
    const auto count = static_cast<std::size_t>(rng.between(1, 40));
    auto sel = select_pairs(notes, count, rng.next());
    std::map<std::string, int> per_cat, positives;
    for (const auto& p : sel.pairs) {
      const auto& cat = notes.at(p.category);
      REQUIRE(p.anchor_index < cat.size());
      REQUIRE(p.contrast_index < cat.size());
      CHECK(p.anchor_index != p.contrast_index);
      CHECK(p.y == (cat[p.anchor_index].label == cat[p.contrast_index].label ? 1 : 0));
      ++per_cat[p.category];
      positives[p.category] += p.y;
    }
    for (const auto& [name, list] : notes) {
      const bool skipped =
          std::find(sel.skipped.begin(), sel.skipped.end(), name) != sel.skipped.end();
      CHECK(skipped == !pair_eligible(list));
      if (skipped) continue;
      CHECK(per_cat[name] == static_cast<int>(count));
      const bool has_same = std::count_if(list.begin(), list.end(), [](auto& e) { return e.label == 1; }) >= 2 ||
                            std::count_if(list.begin(), list.end(), [](auto& e) { return e.label == 0; }) >= 2;
      if (has_same) CHECK(std::abs(2 * positives[name] - static_cast<int>(count)) <= 1);
    }
  }
}

TEST_CASE("select_pairs is deterministic") {
  CategoryNotes notes{{"A", labeled({1, 0, 1, 0})}, {"B", labeled({0, 0, 1})}};
  auto a = select_pairs(notes, 10, 5);
  auto b = select_pairs(notes, 10, 5);
  REQUIRE(a.pairs.size() == b.pairs.size());
  for (std::size_t i = 0; i < a.pairs.size(); ++i) {
    CHECK(a.pairs[i].category == b.pairs[i].category);
    CHECK(a.pairs[i].anchor_index == b.pairs[i].anchor_index);
    CHECK(a.pairs[i].contrast_index == b.pairs[i].contrast_index);
  }
}

TEST_CASE("refiners separate two clusters") {
  const auto g = fixtures::two_cluster_geometry(1);
  CHECK(g.refined_intra < g.raw_intra);
  CHECK(g.negatives_beyond_margin >= 0.9);
}

TEST_CASE("single-label categories are skipped and pass through") {
  CategoryNotes notes{{"A", labeled({1, 0, 1, 0})}, {"B", labeled({1, 1, 1})}};
  SiameseTrainParams p;
  p.epochs = 2;
  auto bundle = train_refiners(notes, p);
  CHECK(bundle.networks.contains("A"));
  CHECK_FALSE(bundle.networks.contains("B"));
  CHECK(bundle.skipped == std::vector<std::string>{"B"});
  NoteEmbedding note{"1", "B", Vector::Constant(2, 3.0), 1};
  auto refined = refine(bundle, note);
  CHECK(refined.vector == note.vector);
  CHECK(refined.admission_id == "1");

  CategoryNotes none{{"B", labeled({1, 1})}};
  CHECK_THROWS_AS(train_refiners(none, p), DataError);
}

TEST_CASE("refine keeps width and a zero network yields zero") {
  RefinerBundle bundle;
  bundle.networks.emplace("Echo", SiameseNetwork({3, 6, 3}));
  auto out = refine(bundle, {"1", "Echo", Vector::Constant(3, 2.0), 2});
  CHECK(out.vector.size() == 3);
  CHECK(out.vector.isZero());
  CHECK(out.category == "Echo");
}

TEST_CASE("train_refiners is deterministic and serializes") {
  CategoryNotes notes{{"A", labeled({1, 0, 1, 0, 1})}, {"B", labeled({0, 1, 1, 0})}};
  SiameseTrainParams p;
  p.epochs = 3;
  p.seed = 9;
  auto a = train_refiners(notes, p);
  auto b = train_refiners(notes, p);
  CHECK(nlohmann::json(a).dump() == nlohmann::json(b).dump());
  CHECK(a.epoch_loss == b.epoch_loss);

  nlohmann::json j = a;
  CHECK(j.at("margin") == 1.0);
  CHECK(j.at("categories").at("A").at("dims") == std::vector<int>{2, 4, 2});
  auto back = refiners_from_json(j);
  Vector x(2);
  x << 0.3, -0.7;
  CHECK(back.refine_vector("A", x).isApprox(a.refine_vector("A", x), 1e-15));

  p.epochs = 0;
  CHECK_THROWS_AS(train_refiners(notes, p), ConfigError);
}
