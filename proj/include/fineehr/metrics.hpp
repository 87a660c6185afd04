#pragma once

#include <span>

#include "json.hpp"

namespace fineehr {

/// Mann-Whitney ROC-AUC: the fraction of (positive, negative) pairs ranked
/// correctly, ties counted as one half. Computed from average ranks in
/// O(n log n).
double roc_auc(std::span<const double> scores, std::span<const int> labels);

/// Average precision: rank by descending score (ties keep input order) and
/// average the precision at each positive hit.
double pr_auc(std::span<const double> scores, std::span<const int> labels);

struct MetricReport {
  double auc = 0.0;
  double auc_pr = 0.0;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
};

MetricReport evaluate_scores(std::span<const double> scores, std::span<const int> labels);

void to_json(nlohmann::json& j, const MetricReport& r);

}  // namespace fineehr
