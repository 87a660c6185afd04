#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "fineehr/embed.hpp"
#include "fineehr/types.hpp"
#include "json.hpp"

namespace fineehr {

/// Per-category mean of one admission's note embeddings.
struct CategoryEmbeddingSet {
  std::string admission_id;
  std::map<std::string, Vector> vectors;
  int dim = 0;
};

class CategoryWeights {
 public:
  CategoryWeights() = default;
  CategoryWeights(std::vector<std::string> categories, Vector weights);
  /// 1/|universe| for every category.
  static CategoryWeights uniform(std::vector<std::string> categories);

  const std::vector<std::string>& categories() const { return categories_; }
  const Vector& weights() const { return weights_; }
  Vector& weights() { return weights_; }
  std::size_t size() const { return categories_.size(); }
  /// Throws DataError for a category outside the universe.
  std::size_t index_of(const std::string& category) const;
  double weight(const std::string& category) const { return weights_[index_of(category)]; }

 private:
  std::vector<std::string> categories_;
  Vector weights_;
};

struct PoolOptions {
  /// Scale by |universe| / |present| instead of letting missing categories
  /// contribute zero.
  bool renormalize = false;
};

CategoryEmbeddingSet build_category_embeddings(std::span<const NoteEmbedding> notes);

/// Sum over the universe of weight_c * vector_c; an absent category
/// contributes the zero vector.
Vector weighted_pool(const CategoryEmbeddingSet& set, const CategoryWeights& weights,
                     const PoolOptions& options = {});

/// Feature extractor for downstream classifiers; same contract as
/// weighted_pool.
inline Vector admission_embedding(const CategoryEmbeddingSet& set,
                                  const CategoryWeights& weights,
                                  const PoolOptions& options = {}) {
  return weighted_pool(set, weights, options);
}

/// tanh hidden layer followed by a scalar logistic output.
struct AdmissionHead {
  Matrix hidden_weights;  // hidden x dim
  Vector hidden_bias;
  Vector output_weights;  // hidden
  double output_bias = 0.0;

  Vector hidden(const Vector& pooled) const;
  double logit(const Vector& pooled) const;
};

struct WeightModel {
  CategoryWeights weights;
  AdmissionHead head;
};

struct LabeledCategorySet {
  CategoryEmbeddingSet set;
  int label = 0;
};

/// Binary cross-entropy of one example under the joint model, with the
/// gradient for every category weight and head parameter written into
/// `grad` (same shape as `model`) when non-null.
double joint_loss_grad(const WeightModel& model, const LabeledCategorySet& example,
                       WeightModel* grad, const PoolOptions& options = {});

Vector flatten(const WeightModel& model);
void unflatten(const Vector& flat, WeightModel& model);

struct WeightTrainParams {
  int epochs = 200;
  double learning_rate = 0.05;
  int hidden = 16;
  bool renormalize = false;
  std::uint64_t seed = 1;

  void validate() const;
};

struct WeightTrainResult {
  WeightModel model;
  std::vector<double> epoch_loss;
};

/// Jointly fits category weights (from 1/|universe|) and the head by
/// per-example SGD on cross-entropy. The universe is the sorted set of
/// categories seen in `train`.
WeightTrainResult train_weights(std::span<const LabeledCategorySet> train,
                                const WeightTrainParams& params);

void to_json(nlohmann::json& j, const WeightModel& model);
WeightModel weight_model_from_json(const nlohmann::json& j);
void to_json(nlohmann::json& j, const WeightTrainParams& p);
void from_json(const nlohmann::json& j, WeightTrainParams& p);

}  // namespace fineehr
