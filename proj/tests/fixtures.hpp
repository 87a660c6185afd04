#pragma once

#include <algorithm>
#include <cmath>

#include "fineehr/embed.hpp"
#include "fineehr/random.hpp"
#include "fineehr/siamese.hpp"
#include "fineehr/weighting.hpp"
#include "oracles.hpp"

namespace fixtures {

/// One sentence of "a b" repeated, plus a separate sentence of "c" only.
inline std::vector<fineehr::TokenizedNote> adjacency_corpus() {
  fineehr::Sentence repeated;
  for (int i = 0; i < 50; ++i) {
    repeated.push_back("a");
    repeated.push_back("b");
  }
  return {{"1", "x", {repeated, fineehr::Sentence(50, "c")}}};
}

inline fineehr::Word2VecParams adjacency_params(std::uint64_t seed) {
  fineehr::Word2VecParams p;
  p.dim = 8;
  p.epochs = 50;
  p.window = 5;
  p.subsample_threshold = 0.0;
  p.seed = seed;
  return p;
}

struct AdjacencyCosines {
  double ab;
  double ac;
};

inline AdjacencyCosines adjacency_cosines(std::uint64_t seed) {
  using namespace fineehr;
  const auto notes = adjacency_corpus();
  const auto vocab = build_vocabulary(notes, 1);
  const auto emb = train_word2vec(notes, vocab, adjacency_params(seed));
  auto row = [&](const char* t) -> Vector {
    return emb.input.row(static_cast<Eigen::Index>(vocab.index_of(t))).transpose();
  };
  return {cosine_similarity(row("a"), row("b")), cosine_similarity(row("a"), row("c"))};
}

inline fineehr::Vector random_vector(fineehr::Rng& rng, int n, double scale = 1.0) {
  fineehr::Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = rng.uniform(-scale, scale);
  return v;
}

/// Analytic vs central-difference gradient of one random siamese pair.
inline double siamese_gradient_error(fineehr::Rng& rng) {
  using namespace fineehr;
  const int d = static_cast<int>(rng.between(1, 4));
  const int h = static_cast<int>(rng.between(d, 2 * d + 1));
  auto net = SiameseNetwork::initialized({d, h, d}, rng);
  const Vector xa = random_vector(rng, d);
  const Vector xc = random_vector(rng, d);
  const int y = rng.bernoulli(0.5) ? 1 : 0;
  const double margin = rng.uniform(0.5, 3.0);
  const auto analytic = flatten(pair_loss_grad(net, xa, xc, y, margin).grads);
  auto loss_at = [&](const Vector& theta) {
    SiameseNetwork probe = net;
    unflatten(theta, probe.layers());
    return contrastive_loss(y, (probe.forward(xa) - probe.forward(xc)).norm(), margin);
  };
  return oracle::max_relative_error(analytic,
                                    oracle::central_difference(loss_at, flatten(net.layers())));
}

/// Analytic vs central-difference gradient of the joint weighting
/// objective on one random model and example.
inline double weighting_gradient_error(fineehr::Rng& rng) {
  using namespace fineehr;
  const int n_cat = static_cast<int>(rng.between(1, 4));
  const int dim = static_cast<int>(rng.between(1, 4));
  const int hidden = static_cast<int>(rng.between(1, 5));
  std::vector<std::string> universe;
  for (int c = 0; c < n_cat; ++c) universe.push_back("c" + std::to_string(c));
  WeightModel model{CategoryWeights(universe, random_vector(rng, n_cat)), {}};
  model.head.hidden_weights = Matrix(hidden, dim);
  for (Eigen::Index i = 0; i < model.head.hidden_weights.size(); ++i)
    model.head.hidden_weights.data()[i] = rng.uniform(-1.0, 1.0);
  model.head.hidden_bias = random_vector(rng, hidden, 0.5);
  model.head.output_weights = random_vector(rng, hidden);
  model.head.output_bias = rng.uniform(-0.5, 0.5);

  LabeledCategorySet example{{"a", {}, dim}, rng.bernoulli(0.5) ? 1 : 0};
  for (const auto& c : universe) {
    if (rng.bernoulli(0.7)) example.set.vectors[c] = random_vector(rng, dim);
  }
  if (example.set.vectors.empty()) example.set.vectors[universe[0]] = random_vector(rng, dim);
  const PoolOptions options{rng.bernoulli(0.5)};

  WeightModel grad = model;
  joint_loss_grad(model, example, &grad, options);
  auto loss_at = [&](const Vector& theta) {
    WeightModel probe = model;
    unflatten(theta, probe);
    return joint_loss_grad(probe, example, nullptr, options);
  };
  return oracle::max_relative_error(flatten(grad),
                                    oracle::central_difference(loss_at, flatten(model)));
}

struct ClusterGeometry {
  double raw_intra = 0.0;
  double refined_intra = 0.0;
  double negatives_beyond_margin = 0.0;
  double raw_negatives_beyond_margin = 0.0;
  double margin = 1.0;
};

/// Trains a refiner on one category whose positives sit near +u and
/// negatives near -u, then measures distances on fresh held-out notes.
inline ClusterGeometry two_cluster_geometry(std::uint64_t seed) {
  using namespace fineehr;
  constexpr int dim = 4;
  Rng rng(seed);
  const Vector u = Vector::Constant(dim, 0.2);
  auto draw = [&](int label) {
    return LabeledEmbedding{(label == 1 ? u : Vector(-u)) + random_vector(rng, dim, 0.1), label};
  };
  CategoryNotes train;
  for (int i = 0; i < 200; ++i) train["Echo"].push_back(draw(i % 2));
  std::vector<LabeledEmbedding> held_out;
  for (int i = 0; i < 40; ++i) held_out.push_back(draw(i % 2));

  SiameseTrainParams params;
  params.seed = seed;
  params.epochs = 200;
  params.learning_rate = 0.05;
  const auto bundle = train_refiners(train, params);

  ClusterGeometry g;
  g.margin = params.margin;
  double intra_pairs = 0.0, neg_pairs = 0.0, beyond = 0.0;
  for (std::size_t i = 0; i < held_out.size(); ++i) {
    const Vector ri = bundle.refine_vector("Echo", held_out[i].vector);
    for (std::size_t j = i + 1; j < held_out.size(); ++j) {
      const Vector rj = bundle.refine_vector("Echo", held_out[j].vector);
      if (held_out[i].label == held_out[j].label) {
        g.raw_intra += (held_out[i].vector - held_out[j].vector).norm();
        g.refined_intra += (ri - rj).norm();
        intra_pairs += 1.0;
      } else {
        neg_pairs += 1.0;
        if ((ri - rj).norm() >= params.margin) beyond += 1.0;
        if ((held_out[i].vector - held_out[j].vector).norm() >= params.margin)
          g.raw_negatives_beyond_margin += 1.0;
      }
    }
  }
  g.raw_intra /= intra_pairs;
  g.refined_intra /= intra_pairs;
  g.negatives_beyond_margin = beyond / neg_pairs;
  g.raw_negatives_beyond_margin /= neg_pairs;
  return g;
}

}  // namespace fixtures
