#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fineehr/classify.hpp"
#include "fineehr/corpus.hpp"
#include "fineehr/embed.hpp"
#include "fineehr/siamese.hpp"
#include "fineehr/weighting.hpp"
#include "json.hpp"

namespace fineehr {

enum class Setting { Baseline, Metric, Weight, Full };

inline constexpr Setting kAllSettings[] = {Setting::Baseline, Setting::Metric,
                                           Setting::Weight, Setting::Full};

std::string_view setting_name(Setting s);
/// Accepts baseline | metric | weight | full. Throws ConfigError.
Setting parse_setting(std::string_view name);
inline bool uses_metric(Setting s) { return s == Setting::Metric || s == Setting::Full; }
inline bool uses_weight(Setting s) { return s == Setting::Weight || s == Setting::Full; }

struct DataSource {
  std::string notes_csv;
  std::string admissions_csv;
  std::optional<SyntheticConfig> synthetic;
};

/// Fully resolved pipeline configuration. Stage seeds are derived from the
/// master seed and the stage name unless a stage sets its own.
struct PipelineConfig {
  std::uint64_t seed = 1;
  DataSource data;
  std::vector<std::string> exclude_categories;
  double test_fraction = 0.2;
  std::size_t min_count = 2;
  Word2VecParams word2vec;
  bool siamese_enabled = true;
  SiameseTrainParams siamese;
  bool weighting_enabled = true;
  WeightTrainParams weighting;
  /// "pooled" feeds the weighted pool to classifiers; "head_hidden" feeds
  /// the trained head's hidden activations.
  std::string weighting_features = "pooled";
  std::vector<std::string> classifiers{"logreg", "mlp"};
  LogRegParams logreg;
  MlpParams mlp;
  /// z-score classifier inputs with training-split statistics.
  bool standardize = true;
  std::uint64_t split_seed = 0;
  std::string output_dir;
  /// Test hook: feed one test-split admission into the named stage.
  std::string leak_stage;

  Setting setting() const;
  void set_setting(Setting s);
};

/// Default key/value tree; every accepted key appears here.
nlohmann::json default_config_tree();

/// Reads a JSON config file. Throws ConfigError.
nlohmann::json load_config_file(const std::string& path);

/// Applies "dotted.key=value". The value is parsed as JSON when possible
/// and otherwise taken as a string.
void apply_override(nlohmann::json& tree, std::string_view assignment);

/// Merges `user` over the defaults, rejects unknown keys, and resolves
/// stage seeds.
PipelineConfig resolve_config(const nlohmann::json& user);

/// Resolved tree echoed into reports.
nlohmann::json config_to_json(const PipelineConfig& config);

/// Hex FNV-1a digest of the resolved tree's canonical dump.
std::string config_digest(const PipelineConfig& config);

}  // namespace fineehr
