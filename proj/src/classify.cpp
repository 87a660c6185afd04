#include "fineehr/classify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "fineehr/error.hpp"
#include "fineehr/random.hpp"

namespace fineehr {

double sigmoid_open(double z) {
  const double p = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z))
                            : std::exp(z) / (1.0 + std::exp(z));
  constexpr double lo = std::numeric_limits<double>::denorm_min();
  const double hi = std::nextafter(1.0, 0.0);
  return std::clamp(p, lo, hi);
}

namespace {

void check_training_data(std::span<const Vector> X, std::span<const int> y,
                         const char* who) {
  if (X.size() != y.size())
    throw DataError(std::string(who) + ": feature and label counts differ");
  if (X.size() < 2) throw DataError(std::string(who) + ": need at least two examples");
  bool has[2] = {false, false};
  for (std::size_t i = 0; i < X.size(); ++i) {
    if (y[i] != 0 && y[i] != 1) throw DataError(std::string(who) + ": labels must be 0/1");
    has[y[i]] = true;
    if (X[i].size() != X[0].size())
      throw DataError(std::string(who) + ": feature length mismatch");
  }
  if (!has[0] || !has[1])
    throw DataError(std::string(who) + ": training labels contain a single class");
}

double log1pexp(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

void check_dim(const Vector& x, int dim, const char* who) {
  if (x.size() != dim)
    throw DataError(std::string(who) + ": input length " + std::to_string(x.size()) +
                    " does not match model width " + std::to_string(dim));
}

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }
Vector from_std(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

// --- logistic regression ---------------------------------------------------

void LogRegParams::validate() const {
  if (!(l2 >= 0.0)) throw ConfigError("logreg: l2 must be >= 0");
  if (epochs < 1) throw ConfigError("logreg: epochs must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("logreg: learning_rate must be > 0");
}

LogRegModel::LogRegModel(Vector weights, double bias, double l2)
    : weights_(std::move(weights)), bias_(bias), l2_(l2), trained_(true) {}

double LogRegModel::logit(const Vector& x) const {
  check_dim(x, input_dim(), "logreg");
  return weights_.dot(x) + bias_;
}

double LogRegModel::predict_proba(const Vector& x) const { return sigmoid_open(logit(x)); }

double logreg_objective(const LogRegModel& model, std::span<const Vector> X,
                        std::span<const int> y) {
  double loss = 0.0;
  for (std::size_t i = 0; i < X.size(); ++i) {
    const double z = model.logit(X[i]);
    loss += log1pexp(z) - y[i] * z;
  }
  return loss / static_cast<double>(X.size()) +
         0.5 * model.l2() * model.weights().squaredNorm();
}

LogRegModel train_logreg(std::span<const Vector> X, std::span<const int> y,
                         const LogRegParams& params) {
  params.validate();
  check_training_data(X, y, "logreg");
  const auto dim = X[0].size();
  LogRegModel model(Vector::Zero(dim), 0.0, params.l2);
  const double n = static_cast<double>(X.size());

  for (int epoch = 0; epoch < params.epochs; ++epoch) {
    Vector gw = Vector::Zero(dim);
    double gb = 0.0;
    double loss = 0.0;
    for (std::size_t i = 0; i < X.size(); ++i) {
      const double z = model.weights_.dot(X[i]) + model.bias_;
      loss += log1pexp(z) - y[i] * z;
      const double r = 1.0 / (1.0 + std::exp(-z)) - y[i];
      gw += r * X[i];
      gb += r;
    }
    model.loss_trace_.push_back(loss / n + 0.5 * params.l2 * model.weights_.squaredNorm());
    gw = gw / n + params.l2 * model.weights_;
    model.weights_ -= params.learning_rate * gw;
    model.bias_ -= params.learning_rate * gb / n;
  }
  model.loss_trace_.push_back(logreg_objective(model, X, y));
  if (!model.weights_.allFinite() || !std::isfinite(model.bias_))
    throw TrainingError("logreg: non-finite parameters after training");
  return model;
}

nlohmann::json LogRegModel::to_json() const {
  return {{"kind", kind()}, {"weights", to_std(weights_)}, {"bias", bias_}, {"l2", l2_}};
}

// --- MLP -------------------------------------------------------------------

void MlpParams::validate() const {
  if (hidden < 1) throw ConfigError("mlp: hidden width must be >= 1");
  if (epochs < 1) throw ConfigError("mlp: epochs must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("mlp: learning_rate must be > 0");
}

MlpClassifier::MlpClassifier(Matrix hidden_weights, Vector hidden_bias,
                             Vector output_weights, double output_bias)
    : hidden_weights_(std::move(hidden_weights)),
      hidden_bias_(std::move(hidden_bias)),
      output_weights_(std::move(output_weights)),
      output_bias_(output_bias) {
  if (hidden_bias_.size() != hidden_weights_.rows() ||
      output_weights_.size() != hidden_weights_.rows())
    throw DataError("mlp: inconsistent parameter shapes");
}

double MlpClassifier::logit(const Vector& x) const {
  check_dim(x, input_dim(), "mlp");
  const Vector h = (hidden_weights_ * x + hidden_bias_).array().tanh();
  return output_weights_.dot(h) + output_bias_;
}

double MlpClassifier::predict_proba(const Vector& x) const { return sigmoid_open(logit(x)); }

MlpClassifier train_mlp(std::span<const Vector> X, std::span<const int> y,
                        const MlpParams& params) {
  params.validate();
  check_training_data(X, y, "mlp");
  const auto dim = X[0].size();
  Rng rng(params.seed);

  MlpClassifier m;
  m.hidden_weights_.resize(params.hidden, dim);
  const double b1 = 1.0 / std::sqrt(static_cast<double>(dim));
  for (Eigen::Index c = 0; c < m.hidden_weights_.cols(); ++c)
    for (Eigen::Index r = 0; r < m.hidden_weights_.rows(); ++r)
      m.hidden_weights_(r, c) = rng.uniform(-b1, b1);
  m.hidden_bias_ = Vector::Zero(params.hidden);
  m.output_weights_.resize(params.hidden);
  const double b2 = 1.0 / std::sqrt(static_cast<double>(params.hidden));
  for (Eigen::Index r = 0; r < m.output_weights_.size(); ++r)
    m.output_weights_[r] = rng.uniform(-b2, b2);

  std::vector<std::size_t> order(X.size());
  std::iota(order.begin(), order.end(), 0);
  const double lr = params.learning_rate;
  for (int epoch = 0; epoch < params.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t i : order) {
      const Vector h = (m.hidden_weights_ * X[i] + m.hidden_bias_).array().tanh();
      const double z = m.output_weights_.dot(h) + m.output_bias_;
      const double dz = 1.0 / (1.0 + std::exp(-z)) - y[i];
      const Vector dpre = (dz * m.output_weights_).array() * (1.0 - h.array().square());
      m.output_weights_ -= lr * dz * h;
      m.output_bias_ -= lr * dz;
      m.hidden_weights_.noalias() -= lr * dpre * X[i].transpose();
      m.hidden_bias_ -= lr * dpre;
    }
  }
  if (!m.hidden_weights_.allFinite() || !m.output_weights_.allFinite() ||
      !std::isfinite(m.output_bias_))
    throw TrainingError("mlp: non-finite parameters after training");
  return m;
}

nlohmann::json MlpClassifier::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < hidden_weights_.rows(); ++r)
    rows.push_back(to_std(hidden_weights_.row(r).transpose()));
  return {{"kind", kind()},
          {"hidden_weights", rows},
          {"hidden_bias", to_std(hidden_bias_)},
          {"output_weights", to_std(output_weights_)},
          {"output_bias", output_bias_}};
}

std::unique_ptr<Classifier> classifier_from_json(const nlohmann::json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "logreg") {
    return std::make_unique<LogRegModel>(from_std(j.at("weights").get<std::vector<double>>()),
                                         j.at("bias").get<double>(),
                                         j.value("l2", 0.0));
  }
  if (kind == "mlp") {
    const auto rows = j.at("hidden_weights").get<std::vector<std::vector<double>>>();
    const std::size_t cols = rows.empty() ? 0 : rows.front().size();
    Matrix w(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].size() != cols) throw DataError("mlp: ragged hidden matrix");
      for (std::size_t c = 0; c < cols; ++c)
        w(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
    return std::make_unique<MlpClassifier>(
        std::move(w), from_std(j.at("hidden_bias").get<std::vector<double>>()),
        from_std(j.at("output_weights").get<std::vector<double>>()),
        j.at("output_bias").get<double>());
  }
  throw DataError("unknown classifier kind '" + kind + "'");
}

void to_json(nlohmann::json& j, const LogRegParams& p) {
  j = nlohmann::json{{"l2", p.l2}, {"epochs", p.epochs}, {"learning_rate", p.learning_rate}};
}
void from_json(const nlohmann::json& j, LogRegParams& p) {
  p = LogRegParams{};
  p.l2 = j.value("l2", p.l2);
  p.epochs = j.value("epochs", p.epochs);
  p.learning_rate = j.value("learning_rate", p.learning_rate);
}
void to_json(nlohmann::json& j, const MlpParams& p) {
  j = nlohmann::json{{"hidden", p.hidden},
                     {"epochs", p.epochs},
                     {"learning_rate", p.learning_rate},
                     {"seed", p.seed}};
}
void from_json(const nlohmann::json& j, MlpParams& p) {
  p = MlpParams{};
  p.hidden = j.value("hidden", p.hidden);
  p.epochs = j.value("epochs", p.epochs);
  p.learning_rate = j.value("learning_rate", p.learning_rate);
  p.seed = j.value("seed", p.seed);
}

}  // namespace fineehr
