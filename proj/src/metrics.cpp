#include "fineehr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "fineehr/error.hpp"

namespace fineehr {

namespace {

void check_scored_set(std::span<const double> scores, std::span<const int> labels,
                      const char* who) {
  if (scores.size() != labels.size())
    throw DataError(std::string(who) + ": scores and labels differ in length");
  if (scores.empty()) throw DataError(std::string(who) + ": empty scored set");
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (std::isnan(scores[i])) throw DataError(std::string(who) + ": NaN score");
    if (labels[i] != 0 && labels[i] != 1)
      throw DataError(std::string(who) + ": labels must be 0/1");
  }
}

}  // namespace

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  check_scored_set(scores, labels, "roc_auc");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  double pos_rank_sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    // Ranks i+1..j share their average.
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1) {
        pos_rank_sum += avg_rank;
        ++n_pos;
      }
    }
    i = j;
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0)
    throw DataError("roc_auc: both classes must be present");
  const double p = static_cast<double>(n_pos);
  const double u = pos_rank_sum - p * (p + 1.0) / 2.0;
  return u / (p * static_cast<double>(n_neg));
}

double pr_auc(std::span<const double> scores, std::span<const int> labels) {
  check_scored_set(scores, labels, "pr_auc");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    if (labels[order[rank]] == 1) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(rank + 1);
    }
  }
  if (hits == 0) throw DataError("pr_auc: no positive labels");
  return sum / static_cast<double>(hits);
}

MetricReport evaluate_scores(std::span<const double> scores, std::span<const int> labels) {
  MetricReport r;
  r.auc = roc_auc(scores, labels);
  r.auc_pr = pr_auc(scores, labels);
  for (int y : labels) (y == 1 ? r.n_pos : r.n_neg)++;
  return r;
}

void to_json(nlohmann::json& j, const MetricReport& r) {
  j = nlohmann::json{{"auc", r.auc},
                     {"auc_pr", r.auc_pr},
                     {"n_pos", r.n_pos},
                     {"n_neg", r.n_neg},
                     {"pr_definition", "average_precision"}};
}

}  // namespace fineehr
