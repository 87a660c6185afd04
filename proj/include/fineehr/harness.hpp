#pragma once

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fineehr/config.hpp"
#include "fineehr/corpus.hpp"
#include "fineehr/embed.hpp"
#include "fineehr/metrics.hpp"
#include "fineehr/siamese.hpp"
#include "fineehr/textprep.hpp"
#include "fineehr/weighting.hpp"
#include "json.hpp"

namespace fineehr {

/// Rejects any training input that carries a non-training admission id.
class LeakageGuard {
 public:
  explicit LeakageGuard(std::set<std::string> train_ids) : train_ids_(std::move(train_ids)) {}

  void check(std::string_view stage, const std::string& admission_id) const;
  template <typename Range, typename Proj>
  void check_all(std::string_view stage, const Range& items, Proj id_of) const {
    for (const auto& item : items) check(stage, id_of(item));
  }
  const std::set<std::string>& train_ids() const { return train_ids_; }

 private:
  std::set<std::string> train_ids_;
};

/// Vocabulary over `notes` after asserting every note is training-split.
Vocabulary guarded_vocabulary(const LeakageGuard& guard,
                              std::span<const TokenizedNote> notes, std::size_t min_count);

struct IngestStats {
  std::size_t notes_read = 0;
  std::size_t admissions_read = 0;
  std::size_t notes_excluded = 0;       // by exclude_categories
  std::size_t notes_orphaned = 0;       // admission id missing from admissions
  std::size_t admissions_without_notes = 0;
  std::size_t notes_used = 0;
  std::size_t vocab_size = 0;
};

/// Everything shared by the four ablation settings: split, vocabulary,
/// word vectors and raw note embeddings.
struct Upstream {
  PipelineConfig config;
  IngestStats stats;
  std::map<std::string, int> labels;  // balanced admissions only
  SplitAssignment split;
  Vocabulary vocab;
  EmbeddingMatrix embeddings;
  std::vector<NoteEmbedding> notes;  // raw note embeddings, both splits
};

struct ClassifierResult {
  std::string classifier;
  MetricReport metrics;
  nlohmann::json model;
};

struct SettingResult {
  Setting setting = Setting::Baseline;
  std::vector<ClassifierResult> results;
  std::vector<std::string> test_ids;
  /// Admission vectors fed to the classifiers, before standardization.
  std::map<std::string, Vector> admission_vectors;
  std::optional<RefinerBundle> refiners;
  std::optional<WeightTrainResult> weights;
};

/// Loads data, filters, balances, splits, tokenizes, fits the vocabulary
/// and word vectors on the training split, and embeds every note.
Upstream prepare_upstream(const PipelineConfig& config);

/// Runs one ablation cell on shared upstream artifacts. A bundle trained
/// earlier on the same upstream may be passed to skip refiner training.
SettingResult run_setting(const Upstream& up, Setting setting,
                          const RefinerBundle* refiners = nullptr);

struct PipelineOutput {
  Upstream upstream;
  nlohmann::json report;
  nlohmann::json timing;
  SettingResult result;
};

/// Single setting, taken from the config's enable flags.
PipelineOutput run_pipeline(const PipelineConfig& config);

struct AblationOutput {
  Upstream upstream;
  nlohmann::json report;
  nlohmann::json timing;
  std::vector<SettingResult> settings;
  std::string csv;  // setting,classifier,auc,auc_pr
};

/// All four settings x configured classifiers on one shared upstream.
AblationOutput run_ablation(const PipelineConfig& config);

/// Writes report.json, timing.json, ablation.csv and module artifacts
/// under `dir`.
void write_pipeline_outputs(const std::string& dir, const PipelineOutput& out);
void write_ablation_outputs(const std::string& dir, const AblationOutput& out);

/// Runs and writes in one call; used by the CLI.
void run_pipeline_to(const PipelineConfig& config, const std::string& dir);
void run_ablation_to(const PipelineConfig& config, const std::string& dir);

/// Loads (notes, admissions) from CSV paths or the synthetic generator.
SyntheticCorpus load_corpus(const PipelineConfig& config);

}  // namespace fineehr
