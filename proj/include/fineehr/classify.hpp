#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "fineehr/types.hpp"
#include "json.hpp"

namespace fineehr {

/// Minimal classifier contract: fit on labeled vectors, then score.
class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual std::string kind() const = 0;
  virtual int input_dim() const = 0;
  /// Probability of the positive class, strictly inside (0, 1).
  virtual double predict_proba(const Vector& x) const = 0;
  virtual nlohmann::json to_json() const = 0;
};

/// sigmoid(z) clamped away from 0 and 1 so the result is always a valid
/// open-interval probability.
double sigmoid_open(double z);

struct LogRegParams {
  double l2 = 1e-3;
  int epochs = 500;
  double learning_rate = 0.1;

  void validate() const;
};

class LogRegModel : public Classifier {
 public:
  LogRegModel() = default;
  LogRegModel(Vector weights, double bias, double l2 = 0.0);

  std::string kind() const override { return "logreg"; }
  int input_dim() const override { return static_cast<int>(weights_.size()); }
  double predict_proba(const Vector& x) const override;
  double logit(const Vector& x) const;
  nlohmann::json to_json() const override;

  const Vector& weights() const { return weights_; }
  double bias() const { return bias_; }
  double l2() const { return l2_; }
  bool trained() const { return trained_; }
  /// Mean regularized loss before each epoch's update, then after the last.
  const std::vector<double>& loss_trace() const { return loss_trace_; }

 private:
  friend LogRegModel train_logreg(std::span<const Vector>, std::span<const int>,
                                  const LogRegParams&);
  Vector weights_;
  double bias_ = 0.0;
  double l2_ = 0.0;
  bool trained_ = false;
  std::vector<double> loss_trace_;
};

/// Full-batch gradient descent on L2-regularized cross-entropy from zero
/// parameters. The bias is not regularized.
LogRegModel train_logreg(std::span<const Vector> X, std::span<const int> y,
                         const LogRegParams& params);

/// Mean cross-entropy plus (l2/2)|w|^2.
double logreg_objective(const LogRegModel& model, std::span<const Vector> X,
                        std::span<const int> y);

struct MlpParams {
  int hidden = 32;
  int epochs = 500;
  double learning_rate = 0.1;
  std::uint64_t seed = 1;

  void validate() const;
};

/// [dim, hidden, 1] network with tanh hidden layer and sigmoid output.
class MlpClassifier : public Classifier {
 public:
  MlpClassifier() = default;
  MlpClassifier(Matrix hidden_weights, Vector hidden_bias, Vector output_weights,
                double output_bias);

  std::string kind() const override { return "mlp"; }
  int input_dim() const override { return static_cast<int>(hidden_weights_.cols()); }
  double predict_proba(const Vector& x) const override;
  double logit(const Vector& x) const;
  nlohmann::json to_json() const override;

  const Matrix& hidden_weights() const { return hidden_weights_; }

 private:
  friend MlpClassifier train_mlp(std::span<const Vector>, std::span<const int>,
                                 const MlpParams&);
  Matrix hidden_weights_;
  Vector hidden_bias_;
  Vector output_weights_;
  double output_bias_ = 0.0;
};

/// Per-example SGD on cross-entropy, seeded uniform init, shuffled order.
MlpClassifier train_mlp(std::span<const Vector> X, std::span<const int> y,
                        const MlpParams& params);

std::unique_ptr<Classifier> classifier_from_json(const nlohmann::json& j);

void to_json(nlohmann::json& j, const LogRegParams& p);
void from_json(const nlohmann::json& j, LogRegParams& p);
void to_json(nlohmann::json& j, const MlpParams& p);
void from_json(const nlohmann::json& j, MlpParams& p);

}  // namespace fineehr
