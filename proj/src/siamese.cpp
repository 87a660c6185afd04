#include "fineehr/siamese.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <optional>

#include "fineehr/error.hpp"

namespace fineehr {

void validate_refiner_dims(const std::vector<int>& dims) {
  if (dims.size() < 2) throw ConfigError("refiner: need at least two layer widths");
  if (dims.front() != dims.back())
    throw ConfigError("refiner: input and output widths must match");
  for (int d : dims)
    if (d < 1) throw ConfigError("refiner: layer widths must be >= 1");
  std::size_t i = 1;
  while (i < dims.size() && dims[i] >= dims[i - 1]) ++i;
  while (i < dims.size() && dims[i] <= dims[i - 1]) ++i;
  if (i != dims.size())
    throw ConfigError("refiner: widths must rise and then fall");
}

SiameseNetwork::SiameseNetwork(std::vector<int> dims) : dims_(std::move(dims)) {
  validate_refiner_dims(dims_);
  for (std::size_t k = 1; k < dims_.size(); ++k)
    layers_.push_back({Matrix::Zero(dims_[k], dims_[k - 1]), Vector::Zero(dims_[k])});
}

SiameseNetwork SiameseNetwork::initialized(std::vector<int> dims, Rng& rng) {
  SiameseNetwork net(std::move(dims));
  for (auto& layer : net.layers_) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer.weights.cols()));
    // Column-major fill order is part of the seeded contract.
    for (Eigen::Index c = 0; c < layer.weights.cols(); ++c)
      for (Eigen::Index r = 0; r < layer.weights.rows(); ++r)
        layer.weights(r, c) = rng.uniform(-bound, bound);
  }
  return net;
}

Vector SiameseNetwork::forward(const Vector& x) const {
  if (x.size() != input_dim())
    throw DataError("refiner: input length " + std::to_string(x.size()) +
                    " does not match network width " + std::to_string(input_dim()));
  Vector h = x;
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    Vector z = layers_[k].weights * h + layers_[k].bias;
    h = (k + 1 < layers_.size()) ? Vector(z.array().tanh()) : z;
  }
  return h;
}

std::vector<Vector> SiameseNetwork::forward_trace(const Vector& x) const {
  if (x.size() != input_dim())
    throw DataError("refiner: input length " + std::to_string(x.size()) +
                    " does not match network width " + std::to_string(input_dim()));
  std::vector<Vector> trace;
  trace.reserve(layers_.size() + 1);
  trace.push_back(x);
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    Vector z = layers_[k].weights * trace.back() + layers_[k].bias;
    trace.push_back((k + 1 < layers_.size()) ? Vector(z.array().tanh()) : z);
  }
  return trace;
}

void SiameseNetwork::backward(const std::vector<Vector>& trace,
                              const Vector& grad_output,
                              std::vector<DenseLayer>& grads) const {
  Vector g = grad_output;
  for (std::size_t k = layers_.size(); k-- > 0;) {
    Vector delta = g;
    if (k + 1 < layers_.size())
      delta.array() *= 1.0 - trace[k + 1].array().square();
    grads[k].weights.noalias() += delta * trace[k].transpose();
    grads[k].bias += delta;
    if (k > 0) g = layers_[k].weights.transpose() * delta;
  }
}

std::vector<DenseLayer> SiameseNetwork::zero_like() const {
  std::vector<DenseLayer> out;
  for (const auto& l : layers_)
    out.push_back({Matrix::Zero(l.weights.rows(), l.weights.cols()),
                   Vector::Zero(l.bias.size())});
  return out;
}

std::size_t SiameseNetwork::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_)
    n += static_cast<std::size_t>(l.weights.size() + l.bias.size());
  return n;
}

bool SiameseNetwork::all_finite() const {
  return std::all_of(layers_.begin(), layers_.end(), [](const DenseLayer& l) {
    return l.weights.allFinite() && l.bias.allFinite();
  });
}

Vector flatten(const std::vector<DenseLayer>& layers) {
  Eigen::Index n = 0;
  for (const auto& l : layers) n += l.weights.size() + l.bias.size();
  Vector flat(n);
  Eigen::Index at = 0;
  for (const auto& l : layers) {
    flat.segment(at, l.weights.size()) = l.weights.reshaped();
    at += l.weights.size();
    flat.segment(at, l.bias.size()) = l.bias;
    at += l.bias.size();
  }
  return flat;
}

void unflatten(const Vector& flat, std::vector<DenseLayer>& layers) {
  Eigen::Index at = 0;
  for (auto& l : layers) {
    l.weights.reshaped() = flat.segment(at, l.weights.size());
    at += l.weights.size();
    l.bias = flat.segment(at, l.bias.size());
    at += l.bias.size();
  }
  if (at != flat.size()) throw DataError("unflatten: parameter count mismatch");
}

double contrastive_loss(int y, double d, double margin) {
  const double yy = static_cast<double>(y);
  const double hinge = std::max(margin - d, 0.0);
  return yy * d * d + (1.0 - yy) * hinge * hinge;
}

PairLoss pair_loss_grad(const SiameseNetwork& net, const Vector& anchor,
                        const Vector& contrast, int y, double margin) {
  const auto trace_a = net.forward_trace(anchor);
  const auto trace_c = net.forward_trace(contrast);
  const Vector diff = trace_a.back() - trace_c.back();

  PairLoss out;
  out.distance = diff.norm();
  out.loss = contrastive_loss(y, out.distance, margin);
  out.grads = net.zero_like();

  // dL/d(out_a) = dL/dD * diff / D; the y-term reduces to 2 * diff.
  Vector grad_a;
  if (y == 1) {
    grad_a = 2.0 * diff;
  } else {
    const double hinge = std::max(margin - out.distance, 0.0);
    if (hinge == 0.0 || out.distance == 0.0) return out;
    grad_a = (-2.0 * hinge / out.distance) * diff;
  }
  if (grad_a.isZero(0.0)) return out;
  net.backward(trace_a, grad_a, out.grads);
  net.backward(trace_c, -grad_a, out.grads);
  return out;
}

// --- pair selection ------------------------------------------------------

bool pair_eligible(std::span<const LabeledEmbedding> notes) {
  if (notes.size() < 2) return false;
  bool has[2] = {false, false};
  for (const auto& n : notes) has[n.label != 0] = true;
  return has[0] && has[1];
}

std::vector<SiamesePair> select_category_pairs(
    const std::string& category, std::span<const LabeledEmbedding> notes,
    std::size_t count, Rng& rng, bool balanced) {
  if (!pair_eligible(notes))
    throw DataError("select_pairs: category " + category +
                    " needs >= 2 notes with both labels");
  std::vector<std::size_t> by_label[2];
  for (std::size_t i = 0; i < notes.size(); ++i)
    by_label[notes[i].label != 0].push_back(i);

  auto make = [&](std::size_t a, std::size_t c) {
    return SiamesePair{category, a, c,
                       (notes[a].label != 0) == (notes[c].label != 0) ? 1 : 0};
  };

  std::vector<SiamesePair> pairs;
  pairs.reserve(count);
  if (!balanced) {
    const std::size_t n = notes.size();
    for (std::size_t k = 0; k < count; ++k) {
      const std::size_t a = rng.below(n);
      std::size_t c = rng.below(n - 1);
      if (c >= a) ++c;
      pairs.push_back(make(a, c));
    }
    return pairs;
  }

  const double same[2] = {
      0.5 * by_label[0].size() * (by_label[0].size() - 1.0),
      0.5 * by_label[1].size() * (by_label[1].size() - 1.0)};
  const bool any_same = same[0] + same[1] > 0.0;
  const std::size_t n_same = any_same ? count / 2 : 0;

  for (std::size_t k = 0; k < n_same; ++k) {
    const int cls = rng.uniform() * (same[0] + same[1]) < same[0] ? 0 : 1;
    const auto& members = by_label[cls];
    const std::size_t i = rng.below(members.size());
    std::size_t j = rng.below(members.size() - 1);
    if (j >= i) ++j;
    pairs.push_back(make(members[i], members[j]));
  }
  for (std::size_t k = n_same; k < count; ++k) {
    std::size_t a = by_label[0][rng.below(by_label[0].size())];
    std::size_t c = by_label[1][rng.below(by_label[1].size())];
    if (rng.bernoulli(0.5)) std::swap(a, c);
    pairs.push_back(make(a, c));
  }
  rng.shuffle(std::span<SiamesePair>(pairs));
  return pairs;
}

PairSelection select_pairs(const CategoryNotes& notes_by_category,
                           std::size_t count_per_category, std::uint64_t seed,
                           bool balanced) {
  PairSelection out;
  for (const auto& [category, notes] : notes_by_category) {
    if (!pair_eligible(notes)) {
      out.skipped.push_back(category);
      continue;
    }
    Rng rng(derive_seed(seed, category));
    auto pairs = select_category_pairs(category, notes, count_per_category, rng, balanced);
    out.pairs.insert(out.pairs.end(), pairs.begin(), pairs.end());
  }
  if (out.pairs.empty() && out.skipped.size() == notes_by_category.size())
    throw DataError("select_pairs: no category has >= 2 notes with both labels");
  return out;
}

// --- training ------------------------------------------------------------

void SiameseTrainParams::validate() const {
  if (!(margin > 0.0)) throw ConfigError("siamese: margin must be > 0");
  if (epochs < 1) throw ConfigError("siamese: epochs must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("siamese: learning_rate must be > 0");
  if (!(hidden_multiplier >= 1.0))
    throw ConfigError("siamese: hidden_multiplier must be >= 1");
}

std::vector<int> refiner_dims(int dim, double hidden_multiplier) {
  const int hidden = static_cast<int>(std::lround(hidden_multiplier * dim));
  return {dim, std::max(hidden, dim), dim};
}

namespace {

struct CategoryResult {
  SiameseNetwork net;
  std::vector<double> epoch_loss;
};

CategoryResult train_category(const std::string& category,
                              const std::vector<LabeledEmbedding>& notes,
                              const SiameseTrainParams& params) {
  Rng rng(derive_seed(params.seed, category));
  const int dim = static_cast<int>(notes.front().vector.size());
  CategoryResult result{
      SiameseNetwork::initialized(refiner_dims(dim, params.hidden_multiplier), rng),
      {}};
  const std::size_t per_epoch =
      params.pairs_per_epoch > 0 ? params.pairs_per_epoch : 4 * notes.size();

  for (int epoch = 0; epoch < params.epochs; ++epoch) {
    const auto pairs =
        select_category_pairs(category, notes, per_epoch, rng, params.balanced);
    double total = 0.0;
    for (const auto& p : pairs) {
      auto step = pair_loss_grad(result.net, notes[p.anchor_index].vector,
                                 notes[p.contrast_index].vector, p.y, params.margin);
      total += step.loss;
      auto& layers = result.net.layers();
      for (std::size_t k = 0; k < layers.size(); ++k) {
        layers[k].weights -= params.learning_rate * step.grads[k].weights;
        layers[k].bias -= params.learning_rate * step.grads[k].bias;
      }
    }
    result.epoch_loss.push_back(total / static_cast<double>(pairs.size()));
  }
  if (!result.net.all_finite())
    throw TrainingError("siamese: non-finite parameters for category " + category);
  return result;
}

}  // namespace

RefinerBundle train_refiners(const CategoryNotes& notes_by_category,
                             const SiameseTrainParams& params) {
  params.validate();
  RefinerBundle bundle;
  bundle.margin = params.margin;

  std::vector<std::pair<std::string, std::future<CategoryResult>>> jobs;
  std::optional<Eigen::Index> dim;
  for (const auto& [category, notes] : notes_by_category) {
    if (!pair_eligible(notes)) {
      bundle.skipped.push_back(category);
      continue;
    }
    for (const auto& n : notes) {
      if (!dim) dim = n.vector.size();
      if (n.vector.size() != *dim)
        throw DataError("siamese: embedding length mismatch in category " + category);
    }
    jobs.emplace_back(category,
                      std::async(std::launch::async, train_category,
                                 std::cref(category), std::cref(notes),
                                 std::cref(params)));
  }
  for (auto& [category, job] : jobs) {
    auto result = job.get();
    bundle.networks.emplace(category, std::move(result.net));
    bundle.epoch_loss.emplace(category, std::move(result.epoch_loss));
  }
  if (bundle.networks.empty())
    throw DataError("siamese: no category has >= 2 training notes with both labels");
  return bundle;
}

Vector RefinerBundle::refine_vector(const std::string& category,
                                    const Vector& v) const {
  auto it = networks.find(category);
  return it == networks.end() ? v : it->second.forward(v);
}

NoteEmbedding refine(const RefinerBundle& bundle, const NoteEmbedding& note) {
  return NoteEmbedding{note.admission_id, note.category,
                       bundle.refine_vector(note.category, note.vector),
                       note.n_known_tokens};
}

// --- JSON ----------------------------------------------------------------

void to_json(nlohmann::json& j, const RefinerBundle& bundle) {
  nlohmann::json cats = nlohmann::json::object();
  for (const auto& [name, net] : bundle.networks) {
    nlohmann::json weights = nlohmann::json::array();
    nlohmann::json biases = nlohmann::json::array();
    for (const auto& l : net.layers()) {
      // Row-major (out x in) per layer.
      std::vector<double> w;
      w.reserve(static_cast<std::size_t>(l.weights.size()));
      for (Eigen::Index r = 0; r < l.weights.rows(); ++r)
        for (Eigen::Index c = 0; c < l.weights.cols(); ++c) w.push_back(l.weights(r, c));
      weights.push_back(std::move(w));
      biases.push_back(std::vector<double>(l.bias.data(), l.bias.data() + l.bias.size()));
    }
    cats[name] = {{"dims", net.dims()}, {"weights", weights}, {"biases", biases}};
  }
  j = nlohmann::json{{"margin", bundle.margin}, {"categories", cats}};
}

RefinerBundle refiners_from_json(const nlohmann::json& j) {
  RefinerBundle bundle;
  bundle.margin = j.at("margin").get<double>();
  for (const auto& [name, e] : j.at("categories").items()) {
    SiameseNetwork net(e.at("dims").get<std::vector<int>>());
    const auto& weights = e.at("weights");
    const auto& biases = e.at("biases");
    if (weights.size() != net.layer_count() || biases.size() != net.layer_count())
      throw DataError("refiners: layer count mismatch for " + name);
    for (std::size_t k = 0; k < net.layer_count(); ++k) {
      auto& l = net.layers()[k];
      const auto w = weights[k].get<std::vector<double>>();
      const auto b = biases[k].get<std::vector<double>>();
      if (w.size() != static_cast<std::size_t>(l.weights.size()) ||
          b.size() != static_cast<std::size_t>(l.bias.size()))
        throw DataError("refiners: parameter shape mismatch for " + name);
      std::size_t at = 0;
      for (Eigen::Index r = 0; r < l.weights.rows(); ++r)
        for (Eigen::Index c = 0; c < l.weights.cols(); ++c) l.weights(r, c) = w[at++];
      l.bias = Eigen::Map<const Vector>(b.data(), static_cast<Eigen::Index>(b.size()));
    }
    bundle.networks.emplace(name, std::move(net));
  }
  return bundle;
}

void to_json(nlohmann::json& j, const SiameseTrainParams& p) {
  j = nlohmann::json{{"margin", p.margin},
                     {"pairs_per_epoch", p.pairs_per_epoch},
                     {"epochs", p.epochs},
                     {"learning_rate", p.learning_rate},
                     {"hidden_multiplier", p.hidden_multiplier},
                     {"balanced", p.balanced},
                     {"seed", p.seed}};
}

void from_json(const nlohmann::json& j, SiameseTrainParams& p) {
  p = SiameseTrainParams{};
  p.margin = j.value("margin", p.margin);
  p.pairs_per_epoch = j.value("pairs_per_epoch", p.pairs_per_epoch);
  p.epochs = j.value("epochs", p.epochs);
  p.learning_rate = j.value("learning_rate", p.learning_rate);
  p.hidden_multiplier = j.value("hidden_multiplier", p.hidden_multiplier);
  p.balanced = j.value("balanced", p.balanced);
  p.seed = j.value("seed", p.seed);
}

}  // namespace fineehr
