#include "fineehr/config.hpp"

#include <cstdio>
#include <fstream>

#include "fineehr/error.hpp"
#include "fineehr/random.hpp"

namespace fineehr {

using nlohmann::json;

std::string_view setting_name(Setting s) {
  switch (s) {
    case Setting::Baseline: return "baseline";
    case Setting::Metric: return "metric";
    case Setting::Weight: return "weight";
    case Setting::Full: return "full";
  }
  return "unknown";
}

Setting parse_setting(std::string_view name) {
  for (Setting s : kAllSettings)
    if (setting_name(s) == name) return s;
  throw ConfigError("unknown setting '" + std::string(name) +
                    "' (expected baseline|metric|weight|full)");
}

Setting PipelineConfig::setting() const {
  if (siamese_enabled && weighting_enabled) return Setting::Full;
  if (siamese_enabled) return Setting::Metric;
  if (weighting_enabled) return Setting::Weight;
  return Setting::Baseline;
}

void PipelineConfig::set_setting(Setting s) {
  siamese_enabled = uses_metric(s);
  weighting_enabled = uses_weight(s);
}

json default_config_tree() {
  json w2v = Word2VecParams{};
  w2v.erase("seed");
  json siamese = SiameseTrainParams{};
  siamese.erase("seed");
  siamese["enabled"] = true;
  json weighting = WeightTrainParams{};
  weighting.erase("seed");
  weighting["enabled"] = true;
  weighting["features"] = "pooled";
  json mlp = MlpParams{};
  mlp.erase("seed");
  return json{
      {"seed", 1},
      {"data", {{"notes_csv", ""}, {"admissions_csv", ""}}},
      {"exclude_categories", json::array()},
      {"split", {{"test_fraction", 0.2}}},
      {"text", {{"min_count", 2}}},
      {"word2vec", w2v},
      {"siamese", siamese},
      {"weighting", weighting},
      {"classifiers", {"logreg", "mlp"}},
      {"logreg", LogRegParams{}},
      {"mlp", mlp},
      {"standardize", true},
      {"output_dir", ""},
      {"debug", {{"leak_stage", ""}}},
  };
}

json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  try {
    return json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::exception& e) {
    throw ConfigError("config " + path + ": " + e.what());
  }
}

void apply_override(json& tree, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0)
    throw ConfigError("--set expects key=value, got '" + std::string(assignment) + "'");
  const std::string key(assignment.substr(0, eq));
  const std::string raw(assignment.substr(eq + 1));
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::exception&) {
    value = raw;
  }
  json* node = &tree;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot - start);
    if (part.empty()) throw ConfigError("--set: empty key segment in '" + key + "'");
    if (!node->is_object()) *node = json::object();
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    start = dot + 1;
  }
}

namespace {

// Keys under these paths are free-form or validated by their own parsers.
bool is_open_path(const std::string& path) {
  return path == "/data" || path.rfind("/data/", 0) == 0;
}

void reject_unknown(const json& user, const json& defaults, const std::string& path) {
  if (!user.is_object() || is_open_path(path)) return;
  for (const auto& [key, value] : user.items()) {
    const std::string child = path + "/" + key;
    if (key == "seed" && path != "") continue;  // per-stage seed overrides
    if (!defaults.is_object() || !defaults.contains(key))
      throw ConfigError("unknown config key " + child);
    reject_unknown(value, defaults.at(key), child);
  }
}

std::uint64_t stage_seed(const json& section, std::uint64_t master, std::string_view stage) {
  if (section.is_object() && section.contains("seed"))
    return section.at("seed").get<std::uint64_t>();
  return derive_seed(master, stage);
}

}  // namespace

PipelineConfig resolve_config(const json& user) {
  if (!user.is_object()) throw ConfigError("config root must be an object");
  reject_unknown(user, default_config_tree(), "");
  json tree = default_config_tree();
  tree.merge_patch(user);

  PipelineConfig c;
  try {
    c.seed = tree.at("seed").get<std::uint64_t>();
    const auto& data = tree.at("data");
    c.data.notes_csv = data.value("notes_csv", "");
    c.data.admissions_csv = data.value("admissions_csv", "");
    if (data.contains("synthetic") && !data.at("synthetic").is_null()) {
      SyntheticConfig syn = data.at("synthetic").get<SyntheticConfig>();
      if (!data.at("synthetic").contains("seed")) syn.seed = derive_seed(c.seed, "synthetic");
      syn.validate();
      c.data.synthetic = std::move(syn);
    }
    c.exclude_categories = tree.at("exclude_categories").get<std::vector<std::string>>();
    c.test_fraction = tree.at("split").at("test_fraction").get<double>();
    c.split_seed = stage_seed(tree.at("split"), c.seed, "split");
    c.min_count = tree.at("text").at("min_count").get<std::size_t>();

    c.word2vec = tree.at("word2vec").get<Word2VecParams>();
    c.word2vec.seed = stage_seed(tree.at("word2vec"), c.seed, "word2vec");
    c.siamese = tree.at("siamese").get<SiameseTrainParams>();
    c.siamese.seed = stage_seed(tree.at("siamese"), c.seed, "siamese");
    c.siamese_enabled = tree.at("siamese").at("enabled").get<bool>();
    c.weighting = tree.at("weighting").get<WeightTrainParams>();
    c.weighting.seed = stage_seed(tree.at("weighting"), c.seed, "weighting");
    c.weighting_enabled = tree.at("weighting").at("enabled").get<bool>();
    c.weighting_features = tree.at("weighting").at("features").get<std::string>();
    c.classifiers = tree.at("classifiers").get<std::vector<std::string>>();
    c.logreg = tree.at("logreg").get<LogRegParams>();
    c.mlp = tree.at("mlp").get<MlpParams>();
    c.mlp.seed = stage_seed(tree.at("mlp"), c.seed, "mlp");
    c.standardize = tree.at("standardize").get<bool>();
    c.output_dir = tree.at("output_dir").get<std::string>();
    c.leak_stage = tree.at("debug").at("leak_stage").get<std::string>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }

  if (!c.data.synthetic && (c.data.notes_csv.empty() || c.data.admissions_csv.empty()))
    throw ConfigError("config: data needs notes_csv and admissions_csv, or synthetic");
  if (!(c.test_fraction > 0.0 && c.test_fraction < 1.0))
    throw ConfigError("config: split.test_fraction must lie in (0,1)");
  if (c.min_count < 1) throw ConfigError("config: text.min_count must be >= 1");
  if (c.classifiers.empty()) throw ConfigError("config: at least one classifier required");
  for (const auto& k : c.classifiers)
    if (k != "logreg" && k != "mlp")
      throw ConfigError("config: unknown classifier '" + k + "' (expected logreg|mlp)");
  if (c.weighting_features != "pooled" && c.weighting_features != "head_hidden")
    throw ConfigError("config: weighting.features must be pooled|head_hidden");
  c.word2vec.validate();
  c.siamese.validate();
  c.weighting.validate();
  c.logreg.validate();
  c.mlp.validate();
  return c;
}

json config_to_json(const PipelineConfig& c) {
  json data{{"notes_csv", c.data.notes_csv}, {"admissions_csv", c.data.admissions_csv}};
  if (c.data.synthetic) data["synthetic"] = *c.data.synthetic;
  json siamese = c.siamese;
  siamese["enabled"] = c.siamese_enabled;
  json weighting = c.weighting;
  weighting["enabled"] = c.weighting_enabled;
  weighting["features"] = c.weighting_features;
  return json{{"seed", c.seed},
              {"data", data},
              {"exclude_categories", c.exclude_categories},
              {"split", {{"test_fraction", c.test_fraction}, {"seed", c.split_seed}}},
              {"text", {{"min_count", c.min_count}}},
              {"word2vec", c.word2vec},
              {"siamese", siamese},
              {"weighting", weighting},
              {"classifiers", c.classifiers},
              {"logreg", c.logreg},
              {"mlp", c.mlp},
              {"standardize", c.standardize},
              {"debug", {{"leak_stage", c.leak_stage}}}};
}

std::string config_digest(const PipelineConfig& config) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(config_to_json(config).dump())));
  return buf;
}

}  // namespace fineehr
