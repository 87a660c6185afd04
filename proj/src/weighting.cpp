#include "fineehr/weighting.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "fineehr/error.hpp"
#include "fineehr/random.hpp"

namespace fineehr {

CategoryWeights::CategoryWeights(std::vector<std::string> categories, Vector weights)
    : categories_(std::move(categories)), weights_(std::move(weights)) {
  if (static_cast<Eigen::Index>(categories_.size()) != weights_.size())
    throw DataError("category weights: one weight per category required");
  if (!std::is_sorted(categories_.begin(), categories_.end()) ||
      std::adjacent_find(categories_.begin(), categories_.end()) != categories_.end())
    throw DataError("category weights: categories must be sorted and unique");
}

CategoryWeights CategoryWeights::uniform(std::vector<std::string> categories) {
  const auto n = static_cast<Eigen::Index>(categories.size());
  if (n == 0) throw DataError("category weights: empty universe");
  return CategoryWeights(std::move(categories), Vector::Constant(n, 1.0 / n));
}

std::size_t CategoryWeights::index_of(const std::string& category) const {
  auto it = std::lower_bound(categories_.begin(), categories_.end(), category);
  if (it == categories_.end() || *it != category)
    throw DataError("unseen category '" + category + "' (not in the weight universe)");
  return static_cast<std::size_t>(it - categories_.begin());
}

CategoryEmbeddingSet build_category_embeddings(std::span<const NoteEmbedding> notes) {
  if (notes.empty()) throw DataError("category embeddings: no notes");
  CategoryEmbeddingSet out;
  out.admission_id = notes.front().admission_id;
  out.dim = static_cast<int>(notes.front().vector.size());
  std::map<std::string, std::pair<Vector, std::size_t>> sums;
  for (const auto& n : notes) {
    if (n.admission_id != out.admission_id)
      throw DataError("category embeddings: mixed admissions " + out.admission_id +
                      " and " + n.admission_id);
    if (n.vector.size() != out.dim)
      throw DataError("category embeddings: vector length mismatch");
    auto [it, inserted] = sums.try_emplace(n.category, Vector::Zero(out.dim), 0);
    it->second.first += n.vector;
    ++it->second.second;
  }
  for (auto& [cat, acc] : sums)
    out.vectors.emplace(cat, acc.first / static_cast<double>(acc.second));
  return out;
}

namespace {

double pool_scale(const CategoryEmbeddingSet& set, const CategoryWeights& weights,
                  const PoolOptions& options) {
  if (!options.renormalize || set.vectors.empty()) return 1.0;
  return static_cast<double>(weights.size()) / static_cast<double>(set.vectors.size());
}

}  // namespace

Vector weighted_pool(const CategoryEmbeddingSet& set, const CategoryWeights& weights,
                     const PoolOptions& options) {
  Vector out = Vector::Zero(set.dim);
  for (const auto& [cat, v] : set.vectors) {
    if (v.size() != set.dim) throw DataError("weighted_pool: vector length mismatch");
    out += weights.weights()[weights.index_of(cat)] * v;
  }
  return out * pool_scale(set, weights, options);
}

Vector AdmissionHead::hidden(const Vector& pooled) const {
  return (hidden_weights * pooled + hidden_bias).array().tanh();
}

double AdmissionHead::logit(const Vector& pooled) const {
  return output_weights.dot(hidden(pooled)) + output_bias;
}

double joint_loss_grad(const WeightModel& model, const LabeledCategorySet& example,
                       WeightModel* grad, const PoolOptions& options) {
  const auto& head = model.head;
  const Vector pooled = weighted_pool(example.set, model.weights, options);
  const Vector h = head.hidden(pooled);
  const double z = head.output_weights.dot(h) + head.output_bias;
  const double y = example.label != 0 ? 1.0 : 0.0;
  // log(1 + e^z) - y z, evaluated without overflow.
  const double loss = std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))) - y * z;
  if (grad == nullptr) return loss;

  const double p = 1.0 / (1.0 + std::exp(-z));
  const double dz = p - y;
  grad->head.output_weights = dz * h;
  grad->head.output_bias = dz;
  const Vector dpre = (dz * head.output_weights).array() * (1.0 - h.array().square());
  grad->head.hidden_weights = dpre * pooled.transpose();
  grad->head.hidden_bias = dpre;
  const Vector dpooled = head.hidden_weights.transpose() * dpre;

  const double scale = pool_scale(example.set, model.weights, options);
  Vector dw = Vector::Zero(static_cast<Eigen::Index>(model.weights.size()));
  for (const auto& [cat, v] : example.set.vectors)
    dw[model.weights.index_of(cat)] = scale * dpooled.dot(v);
  grad->weights = CategoryWeights(model.weights.categories(), std::move(dw));
  return loss;
}

Vector flatten(const WeightModel& m) {
  const auto& h = m.head;
  const Eigen::Index n = m.weights.weights().size() + h.hidden_weights.size() +
                         h.hidden_bias.size() + h.output_weights.size() + 1;
  Vector flat(n);
  Eigen::Index at = 0;
  auto put = [&](const auto& block) {
    flat.segment(at, block.size()) = block.reshaped();
    at += block.size();
  };
  put(m.weights.weights());
  put(h.hidden_weights);
  put(h.hidden_bias);
  put(h.output_weights);
  flat[at] = h.output_bias;
  return flat;
}

void unflatten(const Vector& flat, WeightModel& m) {
  auto& h = m.head;
  Eigen::Index at = 0;
  auto take = [&](auto& block) {
    block.reshaped() = flat.segment(at, block.size());
    at += block.size();
  };
  take(m.weights.weights());
  take(h.hidden_weights);
  take(h.hidden_bias);
  take(h.output_weights);
  h.output_bias = flat[at++];
  if (at != flat.size()) throw DataError("unflatten: parameter count mismatch");
}

void WeightTrainParams::validate() const {
  if (epochs < 1) throw ConfigError("weighting: epochs must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("weighting: learning_rate must be > 0");
  if (hidden < 1) throw ConfigError("weighting: hidden width must be >= 1");
}

WeightTrainResult train_weights(std::span<const LabeledCategorySet> train,
                                const WeightTrainParams& params) {
  params.validate();
  if (train.empty()) throw DataError("weighting: no training admissions");
  bool has[2] = {false, false};
  std::set<std::string> universe;
  const int dim = train.front().set.dim;
  for (const auto& ex : train) {
    has[ex.label != 0] = true;
    if (ex.set.dim != dim) throw DataError("weighting: embedding width mismatch");
    for (const auto& [cat, v] : ex.set.vectors) universe.insert(cat);
  }
  if (!has[0] || !has[1])
    throw DataError("weighting: training data must contain both labels");

  Rng rng(params.seed);
  WeightTrainResult result;
  auto& model = result.model;
  model.weights = CategoryWeights::uniform({universe.begin(), universe.end()});
  auto& head = model.head;
  head.hidden_weights.resize(params.hidden, dim);
  const double b1 = 1.0 / std::sqrt(static_cast<double>(dim));
  for (Eigen::Index c = 0; c < head.hidden_weights.cols(); ++c)
    for (Eigen::Index r = 0; r < head.hidden_weights.rows(); ++r)
      head.hidden_weights(r, c) = rng.uniform(-b1, b1);
  head.hidden_bias = Vector::Zero(params.hidden);
  head.output_weights.resize(params.hidden);
  const double b2 = 1.0 / std::sqrt(static_cast<double>(params.hidden));
  for (Eigen::Index r = 0; r < head.output_weights.size(); ++r)
    head.output_weights[r] = rng.uniform(-b2, b2);
  head.output_bias = 0.0;

  const PoolOptions options{params.renormalize};
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  WeightModel grad = model;
  for (int epoch = 0; epoch < params.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    double total = 0.0;
    for (std::size_t idx : order) {
      total += joint_loss_grad(model, train[idx], &grad, options);
      model.weights.weights() -= params.learning_rate * grad.weights.weights();
      head.hidden_weights -= params.learning_rate * grad.head.hidden_weights;
      head.hidden_bias -= params.learning_rate * grad.head.hidden_bias;
      head.output_weights -= params.learning_rate * grad.head.output_weights;
      head.output_bias -= params.learning_rate * grad.head.output_bias;
    }
    result.epoch_loss.push_back(total / static_cast<double>(train.size()));
  }
  if (!flatten(model).allFinite())
    throw TrainingError("weighting: non-finite parameters after training");
  return result;
}

// --- JSON ----------------------------------------------------------------

namespace {

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

Vector from_std(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

void to_json(nlohmann::json& j, const WeightModel& m) {
  const auto& h = m.head;
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < h.hidden_weights.rows(); ++r)
    rows.push_back(to_std(h.hidden_weights.row(r).transpose()));
  j = nlohmann::json{
      {"categories", m.weights.categories()},
      {"weights", to_std(m.weights.weights())},
      {"head",
       {{"hidden_weights", rows},
        {"hidden_bias", to_std(h.hidden_bias)},
        {"output_weights", to_std(h.output_weights)},
        {"output_bias", h.output_bias}}}};
}

WeightModel weight_model_from_json(const nlohmann::json& j) {
  WeightModel m;
  m.weights = CategoryWeights(j.at("categories").get<std::vector<std::string>>(),
                              from_std(j.at("weights").get<std::vector<double>>()));
  const auto& head = j.at("head");
  const auto rows = head.at("hidden_weights").get<std::vector<std::vector<double>>>();
  const std::size_t cols = rows.empty() ? 0 : rows.front().size();
  m.head.hidden_weights.resize(static_cast<Eigen::Index>(rows.size()),
                               static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != cols) throw DataError("weights: ragged head matrix");
    for (std::size_t c = 0; c < cols; ++c)
      m.head.hidden_weights(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          rows[r][c];
  }
  m.head.hidden_bias = from_std(head.at("hidden_bias").get<std::vector<double>>());
  m.head.output_weights = from_std(head.at("output_weights").get<std::vector<double>>());
  m.head.output_bias = head.at("output_bias").get<double>();
  return m;
}

void to_json(nlohmann::json& j, const WeightTrainParams& p) {
  j = nlohmann::json{{"epochs", p.epochs},
                     {"learning_rate", p.learning_rate},
                     {"hidden", p.hidden},
                     {"renormalize", p.renormalize},
                     {"seed", p.seed}};
}

void from_json(const nlohmann::json& j, WeightTrainParams& p) {
  p = WeightTrainParams{};
  p.epochs = j.value("epochs", p.epochs);
  p.learning_rate = j.value("learning_rate", p.learning_rate);
  p.hidden = j.value("hidden", p.hidden);
  p.renormalize = j.value("renormalize", p.renormalize);
  p.seed = j.value("seed", p.seed);
}

}  // namespace fineehr
