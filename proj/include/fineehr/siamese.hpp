#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "fineehr/embed.hpp"
#include "fineehr/random.hpp"
#include "fineehr/types.hpp"
#include "json.hpp"

namespace fineehr {

struct DenseLayer {
  Matrix weights;  // out x in
  Vector bias;
};

/// Symmetric MLP refiner: tanh on hidden layers, linear output layer.
/// Input and output widths are equal and widths never fall then rise.
class SiameseNetwork {
 public:
  SiameseNetwork() = default;
  /// All-zero parameters.
  explicit SiameseNetwork(std::vector<int> dims);
  /// Weights uniform in +-1/sqrt(fan_in), zero biases.
  static SiameseNetwork initialized(std::vector<int> dims, Rng& rng);

  const std::vector<int>& dims() const { return dims_; }
  int input_dim() const { return dims_.front(); }
  std::size_t layer_count() const { return layers_.size(); }
  std::vector<DenseLayer>& layers() { return layers_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }

  Vector forward(const Vector& x) const;

  /// Activations h_0 = x, ..., h_L = output.
  std::vector<Vector> forward_trace(const Vector& x) const;

  /// Accumulates d(loss)/d(params) into `grads` given d(loss)/d(output).
  void backward(const std::vector<Vector>& trace, const Vector& grad_output,
                std::vector<DenseLayer>& grads) const;

  std::vector<DenseLayer> zero_like() const;
  std::size_t parameter_count() const;
  bool all_finite() const;

 private:
  std::vector<int> dims_;
  std::vector<DenseLayer> layers_;
};

/// Widths must start and end at the same value, rise then fall.
void validate_refiner_dims(const std::vector<int>& dims);

Vector flatten(const std::vector<DenseLayer>& layers);
void unflatten(const Vector& flat, std::vector<DenseLayer>& layers);

/// y * d^2 + (1 - y) * max(margin - d, 0)^2
double contrastive_loss(int y, double d, double margin);

struct PairLoss {
  double loss = 0.0;
  double distance = 0.0;
  std::vector<DenseLayer> grads;
};

/// Loss and exact gradient for one pair pushed through the shared network
/// twice. The distance gradient is taken as zero at d == 0.
PairLoss pair_loss_grad(const SiameseNetwork& net, const Vector& anchor,
                        const Vector& contrast, int y, double margin);

struct LabeledEmbedding {
  Vector vector;
  int label = 0;
};

using CategoryNotes = std::map<std::string, std::vector<LabeledEmbedding>>;

struct SiamesePair {
  std::string category;
  std::size_t anchor_index = 0;
  std::size_t contrast_index = 0;
  int y = 0;  // 1 when both notes carry the same mortality label
};

struct PairSelection {
  std::vector<SiamesePair> pairs;
  std::vector<std::string> skipped;  // categories without both labels or < 2 notes
};

/// Whether a category can yield pairs: >= 2 notes and both labels.
bool pair_eligible(std::span<const LabeledEmbedding> notes);

/// Pairs for one category, drawn uniformly over unordered distinct index
/// pairs. With `balanced`, half are same-label and half differing-label;
/// when no same-label pair exists all are differing-label.
std::vector<SiamesePair> select_category_pairs(
    const std::string& category, std::span<const LabeledEmbedding> notes,
    std::size_t count, Rng& rng, bool balanced = true);

PairSelection select_pairs(const CategoryNotes& notes_by_category,
                           std::size_t count_per_category, std::uint64_t seed,
                           bool balanced = true);

struct SiameseTrainParams {
  double margin = 1.0;
  /// SGD pairs per epoch; 0 means four times the category's note count.
  std::size_t pairs_per_epoch = 0;
  int epochs = 20;
  double learning_rate = 0.01;
  double hidden_multiplier = 2.0;
  bool balanced = true;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Per-category refiners. Categories without a network pass through.
struct RefinerBundle {
  double margin = 1.0;
  std::map<std::string, SiameseNetwork> networks;
  // Training diagnostics, not serialized.
  std::vector<std::string> skipped;
  std::map<std::string, std::vector<double>> epoch_loss;

  Vector refine_vector(const std::string& category, const Vector& v) const;
};

std::vector<int> refiner_dims(int dim, double hidden_multiplier);

/// Trains one network per eligible category. Each category's stream is
/// seeded from (params.seed, category) so categories train independently.
RefinerBundle train_refiners(const CategoryNotes& notes_by_category,
                             const SiameseTrainParams& params);

NoteEmbedding refine(const RefinerBundle& bundle, const NoteEmbedding& note);

void to_json(nlohmann::json& j, const RefinerBundle& bundle);
RefinerBundle refiners_from_json(const nlohmann::json& j);
void to_json(nlohmann::json& j, const SiameseTrainParams& p);
void from_json(const nlohmann::json& j, SiameseTrainParams& p);

}  // namespace fineehr
