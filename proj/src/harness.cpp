#include "fineehr/harness.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <unordered_map>

#include "fineehr/classify.hpp"
#include "fineehr/error.hpp"

namespace fineehr {

using nlohmann::json;
namespace fs = std::filesystem;

void LeakageGuard::check(std::string_view stage, const std::string& admission_id) const {
  if (!train_ids_.contains(admission_id))
    throw LeakageError(std::string(stage), admission_id);
}

Vocabulary guarded_vocabulary(const LeakageGuard& guard,
                              std::span<const TokenizedNote> notes, std::size_t min_count) {
  guard.check_all("vocabulary", notes, [](const TokenizedNote& n) { return n.admission_id; });
  return build_vocabulary(notes, min_count);
}

namespace {

using Clock = std::chrono::steady_clock;

/// Runs `fn`, labelling any library error with the stage name.
template <typename Fn>
auto stage(const char* name, json& timing, Fn&& fn) {
  const auto start = Clock::now();
  auto record = [&] {
    timing[name] = std::chrono::duration<double>(Clock::now() - start).count();
  };
  try {
    if constexpr (std::is_void_v<decltype(fn())>) {
      fn();
      record();
    } else {
      auto result = fn();
      record();
      return result;
    }
  } catch (Error& e) {
    if (dynamic_cast<LeakageError*>(&e) == nullptr) e.add_stage(name);
    throw;
  }
}

/// Admission ids a training stage may select: the training split, plus one
/// test admission when the leak hook targets this stage.
std::set<std::string> stage_selection(const PipelineConfig& cfg, const SplitAssignment& split,
                                      std::string_view stage_name) {
  std::set<std::string> ids = split.train_ids;
  if (cfg.leak_stage == stage_name && !split.test_ids.empty())
    ids.insert(*split.test_ids.begin());
  return ids;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

SyntheticCorpus load_corpus(const PipelineConfig& config) {
  if (config.data.synthetic) return generate_synthetic(*config.data.synthetic);
  SyntheticCorpus corpus;
  std::ifstream notes(config.data.notes_csv, std::ios::binary);
  if (!notes) throw DataError("cannot open notes file " + config.data.notes_csv);
  corpus.notes = parse_notes_csv(notes);
  std::ifstream adm(config.data.admissions_csv, std::ios::binary);
  if (!adm) throw DataError("cannot open admissions file " + config.data.admissions_csv);
  corpus.admissions = parse_admissions_csv(adm);
  return corpus;
}

Upstream prepare_upstream(const PipelineConfig& config) {
  json timing;
  Upstream up;
  up.config = config;
  auto& stats = up.stats;

  SyntheticCorpus corpus = stage("ingest", timing, [&] { return load_corpus(config); });
  stats.notes_read = corpus.notes.size();
  stats.admissions_read = corpus.admissions.size();

  const std::set<std::string> excluded(config.exclude_categories.begin(),
                                       config.exclude_categories.end());
  std::unordered_map<std::string, bool> mortality;
  for (const auto& a : corpus.admissions) mortality.emplace(a.admission_id, a.mortality);

  std::vector<NoteRecord> notes;
  std::set<std::string> with_notes;
  for (auto& n : corpus.notes) {
    if (excluded.contains(n.category)) {
      ++stats.notes_excluded;
      continue;
    }
    if (!mortality.contains(n.admission_id)) {
      ++stats.notes_orphaned;
      continue;
    }
    with_notes.insert(n.admission_id);
    notes.push_back(std::move(n));
  }
  std::vector<AdmissionRecord> admissions;
  for (const auto& a : corpus.admissions) {
    if (with_notes.contains(a.admission_id)) {
      admissions.push_back(a);
    } else {
      ++stats.admissions_without_notes;
    }
  }

  up.split = stage("split", timing, [&] {
    return balance_and_split(admissions, config.test_fraction, config.split_seed);
  });
  for (const auto& a : admissions)
    if (up.split.train_ids.contains(a.admission_id) || up.split.test_ids.contains(a.admission_id))
      up.labels.emplace(a.admission_id, a.mortality ? 1 : 0);

  std::vector<TokenizedNote> tokenized;
  stage("textprep", timing, [&] {
    for (const auto& n : notes)
      if (up.labels.contains(n.admission_id))
        tokenized.push_back(prepare_note(n.admission_id, n.category, n.text));
  });
  stats.notes_used = tokenized.size();

  const LeakageGuard guard(up.split.train_ids);
  auto select = [&](std::string_view stage_name) {
    const auto ids = stage_selection(config, up.split, stage_name);
    std::vector<TokenizedNote> out;
    for (const auto& n : tokenized)
      if (ids.contains(n.admission_id)) out.push_back(n);
    return out;
  };

  up.vocab = stage("vocabulary", timing, [&] {
    return guarded_vocabulary(guard, select("vocabulary"), config.min_count);
  });
  stats.vocab_size = up.vocab.size();

  up.embeddings = stage("word2vec", timing, [&] {
    const auto train_notes = select("word2vec");
    guard.check_all("word2vec", train_notes,
                    [](const TokenizedNote& n) { return n.admission_id; });
    return train_word2vec(train_notes, up.vocab, config.word2vec);
  });

  stage("embed", timing, [&] {
    up.notes.reserve(tokenized.size());
    for (const auto& n : tokenized) up.notes.push_back(embed_note(n, up.embeddings, up.vocab));
  });
  return up;
}

SettingResult run_setting(const Upstream& up, Setting setting, const RefinerBundle* refiners) {
  const auto& cfg = up.config;
  json timing;
  SettingResult res;
  res.setting = setting;
  const LeakageGuard guard(up.split.train_ids);

  std::vector<NoteEmbedding> notes = up.notes;
  if (uses_metric(setting)) {
    if (refiners == nullptr) {
      res.refiners = stage("siamese", timing, [&] {
        const auto ids = stage_selection(cfg, up.split, "siamese");
        CategoryNotes by_category;
        for (const auto& n : notes) {
          if (!ids.contains(n.admission_id)) continue;
          guard.check("siamese", n.admission_id);
          by_category[n.category].push_back({n.vector, up.labels.at(n.admission_id)});
        }
        return train_refiners(by_category, cfg.siamese);
      });
      for (const auto& cat : res.refiners->skipped)
        std::cerr << "warning: category '" << cat
                  << "' lacks >= 2 training notes with both labels; refiner is identity\n";
    } else {
      res.refiners = *refiners;
    }
    for (auto& n : notes) n = refine(*res.refiners, n);
  }

  std::map<std::string, std::vector<NoteEmbedding>> by_admission;
  for (auto& n : notes) by_admission[n.admission_id].push_back(std::move(n));

  if (uses_weight(setting)) {
    std::map<std::string, CategoryEmbeddingSet> sets;
    for (const auto& [id, list] : by_admission) sets.emplace(id, build_category_embeddings(list));

    res.weights = stage("weighting", timing, [&] {
      const auto ids = stage_selection(cfg, up.split, "weighting");
      std::vector<LabeledCategorySet> train;
      for (const auto& [id, set] : sets) {
        if (!ids.contains(id)) continue;
        guard.check("weighting", id);
        train.push_back({set, up.labels.at(id)});
      }
      return train_weights(train, cfg.weighting);
    });
    const auto& model = res.weights->model;
    const PoolOptions options{cfg.weighting.renormalize};
    for (auto& [id, set] : sets) {
      // Categories unseen in training carry no weight.
      std::erase_if(set.vectors, [&](const auto& kv) {
        const auto& cats = model.weights.categories();
        return !std::binary_search(cats.begin(), cats.end(), kv.first);
      });
      Vector pooled = weighted_pool(set, model.weights, options);
      res.admission_vectors.emplace(
          id, cfg.weighting_features == "head_hidden" ? model.head.hidden(pooled) : pooled);
    }
  } else {
    for (const auto& [id, list] : by_admission) {
      std::vector<Vector> vs;
      vs.reserve(list.size());
      for (const auto& n : list) vs.push_back(n.vector);
      res.admission_vectors.emplace(id, pool_mean(vs));
    }
  }

  stage("classify", timing, [&] {
    const auto ids = stage_selection(cfg, up.split, "classifier");
    std::vector<Vector> X_train, X_test;
    std::vector<int> y_train, y_test;
    for (const auto& [id, v] : res.admission_vectors) {
      if (ids.contains(id)) {
        guard.check("classifier", id);
        X_train.push_back(v);
        y_train.push_back(up.labels.at(id));
      } else if (up.split.test_ids.contains(id)) {
        X_test.push_back(v);
        y_test.push_back(up.labels.at(id));
        res.test_ids.push_back(id);
      }
    }
    if (X_train.empty() || X_test.empty())
      throw DataError("no admissions in the training or test split");

    if (cfg.standardize) {
      const auto dim = X_train.front().size();
      Vector mean = Vector::Zero(dim);
      for (const auto& x : X_train) mean += x;
      mean /= static_cast<double>(X_train.size());
      Vector var = Vector::Zero(dim);
      for (const auto& x : X_train) var.array() += (x - mean).array().square();
      var /= static_cast<double>(X_train.size());
      Vector inv_std = var.array().sqrt().unaryExpr(
          [](double s) { return s > 1e-12 ? 1.0 / s : 1.0; });
      for (auto* X : {&X_train, &X_test})
        for (auto& x : *X) x = (x - mean).cwiseProduct(inv_std);
    }

    for (const auto& kind : cfg.classifiers) {
      std::unique_ptr<Classifier> model;
      if (kind == "logreg") {
        model = std::make_unique<LogRegModel>(train_logreg(X_train, y_train, cfg.logreg));
      } else {
        model = std::make_unique<MlpClassifier>(train_mlp(X_train, y_train, cfg.mlp));
      }
      std::vector<double> scores;
      scores.reserve(X_test.size());
      for (const auto& x : X_test) scores.push_back(model->predict_proba(x));
      res.results.push_back({kind, evaluate_scores(scores, y_test), model->to_json()});
    }
  });
  return res;
}

namespace {

json data_summary(const Upstream& up) {
  const auto& s = up.stats;
  return json{{"notes_read", s.notes_read},
              {"admissions_read", s.admissions_read},
              {"notes_excluded", s.notes_excluded},
              {"notes_orphaned", s.notes_orphaned},
              {"admissions_without_notes", s.admissions_without_notes},
              {"notes_used", s.notes_used},
              {"n_train", up.split.train_ids.size()},
              {"n_test", up.split.test_ids.size()},
              {"vocab_size", s.vocab_size}};
}

json setting_json(const SettingResult& r) {
  json results = json::array();
  for (const auto& c : r.results) {
    json m = c.metrics;
    m["classifier"] = c.classifier;
    results.push_back(std::move(m));
  }
  json out{{"setting", setting_name(r.setting)}, {"results", results}};
  if (r.refiners) out["refiner_skipped_categories"] = r.refiners->skipped;
  if (r.weights) {
    json w = json::object();
    const auto& cw = r.weights->model.weights;
    for (std::size_t i = 0; i < cw.size(); ++i) w[cw.categories()[i]] = cw.weights()[i];
    out["category_weights"] = w;
  }
  return out;
}

json base_report(const PipelineConfig& cfg, const Upstream& up) {
  return json{{"config", config_to_json(cfg)},
              {"config_digest", config_digest(cfg)},
              {"seed", cfg.seed},
              {"data", data_summary(up)}};
}

}  // namespace

PipelineOutput run_pipeline(const PipelineConfig& config) {
  const auto start = Clock::now();
  PipelineOutput out;
  out.upstream = prepare_upstream(config);
  const auto upstream_done = Clock::now();
  out.result = run_setting(out.upstream, config.setting());
  out.report = base_report(config, out.upstream);
  const json cell = setting_json(out.result);
  for (const auto& [k, v] : cell.items()) out.report[k] = v;
  out.timing = json{
      {"upstream_seconds", std::chrono::duration<double>(upstream_done - start).count()},
      {"total_seconds", std::chrono::duration<double>(Clock::now() - start).count()}};
  return out;
}

AblationOutput run_ablation(const PipelineConfig& config) {
  const auto start = Clock::now();
  AblationOutput out;
  out.upstream = prepare_upstream(config);
  out.timing["upstream_seconds"] =
      std::chrono::duration<double>(Clock::now() - start).count();

  const RefinerBundle* shared_refiners = nullptr;
  out.settings.reserve(std::size(kAllSettings));
  for (Setting s : kAllSettings) {
    const auto cell_start = Clock::now();
    out.settings.push_back(run_setting(out.upstream, s, shared_refiners));
    if (uses_metric(s) && shared_refiners == nullptr)
      shared_refiners = &*out.settings.back().refiners;
    out.timing[std::string(setting_name(s)) + "_seconds"] =
        std::chrono::duration<double>(Clock::now() - cell_start).count();
  }

  out.report = base_report(config, out.upstream);
  json settings = json::array();
  json cells = json::array();
  std::ostringstream csv;
  csv << "setting,classifier,auc,auc_pr\n";
  for (const auto& r : out.settings) {
    settings.push_back(setting_json(r));
    for (const auto& c : r.results) {
      json cell = c.metrics;
      cell["setting"] = setting_name(r.setting);
      cell["classifier"] = c.classifier;
      cells.push_back(std::move(cell));
      csv << setting_name(r.setting) << ',' << c.classifier << ','
          << format_double(c.metrics.auc) << ',' << format_double(c.metrics.auc_pr) << '\n';
    }
  }
  out.report["cells"] = cells;
  out.report["settings"] = settings;
  out.csv = csv.str();
  out.timing["total_seconds"] = std::chrono::duration<double>(Clock::now() - start).count();
  return out;
}

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write " + path.string());
  f << text;
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

void write_upstream(const fs::path& dir, const Upstream& up) {
  fs::create_directories(dir);
  write_json(dir / "split.json", up.split);
  write_json(dir / "vocab.json", up.vocab);
  {
    std::ofstream f(dir / "word2vec.bin", std::ios::binary);
    if (!f) throw DataError("cannot write " + (dir / "word2vec.bin").string());
    write_embeddings(f, up.embeddings);
  }
  write_json(dir / "word2vec.json", embeddings_to_json(up.embeddings, up.vocab));
}

void write_setting(const fs::path& dir, const SettingResult& r) {
  fs::create_directories(dir / "models");
  if (r.refiners) write_json(dir / "refiners.json", *r.refiners);
  if (r.weights) write_json(dir / "weights.json", r.weights->model);
  for (const auto& c : r.results) write_json(dir / "models" / (c.classifier + ".json"), c.model);
}

}  // namespace

void write_pipeline_outputs(const std::string& dir, const PipelineOutput& out) {
  const fs::path root(dir);
  write_upstream(root, out.upstream);
  write_setting(root, out.result);
  write_json(root / "report.json", out.report);
  write_json(root / "timing.json", out.timing);
  std::ostringstream csv;
  csv << "setting,classifier,auc,auc_pr\n";
  for (const auto& c : out.result.results)
    csv << setting_name(out.result.setting) << ',' << c.classifier << ','
        << format_double(c.metrics.auc) << ',' << format_double(c.metrics.auc_pr) << '\n';
  write_text(root / "ablation.csv", csv.str());
}

void write_ablation_outputs(const std::string& dir, const AblationOutput& out) {
  const fs::path root(dir);
  write_upstream(root, out.upstream);
  for (const auto& r : out.settings) write_setting(root / std::string(setting_name(r.setting)), r);
  write_json(root / "report.json", out.report);
  write_json(root / "timing.json", out.timing);
  write_text(root / "ablation.csv", out.csv);
}

void run_pipeline_to(const PipelineConfig& config, const std::string& dir) {
  write_pipeline_outputs(dir, run_pipeline(config));
}

void run_ablation_to(const PipelineConfig& config, const std::string& dir) {
  write_ablation_outputs(dir, run_ablation(config));
}

}  // namespace fineehr
