// fineehr: generate synthetic corpora, run one pipeline setting, run the
// four-setting ablation, or inspect trained artifacts.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>

#include "CLI11.hpp"
#include "fineehr/config.hpp"
#include "fineehr/error.hpp"
#include "fineehr/harness.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonOptions {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> overrides;
  std::string setting;
};

fineehr::PipelineConfig build_config(const CommonOptions& opt) {
  json tree = opt.config_path.empty() ? json::object()
                                      : fineehr::load_config_file(opt.config_path);
  for (const auto& o : opt.overrides) fineehr::apply_override(tree, o);
  if (opt.seed) tree["seed"] = *opt.seed;
  auto cfg = fineehr::resolve_config(tree);
  if (!opt.setting.empty()) cfg.set_setting(fineehr::parse_setting(opt.setting));
  if (!opt.out_dir.empty()) cfg.output_dir = opt.out_dir;
  if (cfg.output_dir.empty()) cfg.output_dir = "fineehr_out";
  return cfg;
}

void add_common(CLI::App* cmd, CommonOptions& opt, bool with_setting) {
  cmd->add_option("--config", opt.config_path, "JSON config file");
  cmd->add_option("--out", opt.out_dir, "Output directory");
  cmd->add_option("--seed", opt.seed, "Master seed");
  cmd->add_option("--set", opt.overrides, "Override a config key: dotted.key=value");
  if (with_setting)
    cmd->add_option("--setting", opt.setting, "baseline|metric|weight|full")
        ->check(CLI::IsMember({"baseline", "metric", "weight", "full"}));
}

json read_json(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw fineehr::DataError("cannot open " + path.string());
  return json::parse(f);
}

int cmd_generate(const CommonOptions& opt) {
  auto cfg = build_config(opt);
  if (!cfg.data.synthetic) throw fineehr::ConfigError("generate needs data.synthetic in the config");
  const auto corpus = fineehr::generate_synthetic(*cfg.data.synthetic);
  fs::create_directories(cfg.output_dir);
  std::ofstream notes(fs::path(cfg.output_dir) / "notes.csv", std::ios::binary);
  fineehr::write_notes_csv(notes, corpus.notes);
  std::ofstream adm(fs::path(cfg.output_dir) / "admissions.csv", std::ios::binary);
  fineehr::write_admissions_csv(adm, corpus.admissions);
  std::cout << "wrote " << corpus.notes.size() << " notes and " << corpus.admissions.size()
            << " admissions to " << cfg.output_dir << "\n";
  return 0;
}

void print_cells(const json& report) {
  for (const auto& cell : report.at("cells"))
    std::cout << std::left << std::setw(10) << cell.at("setting").get<std::string>()
              << std::setw(8) << cell.at("classifier").get<std::string>() << " auc "
              << std::fixed << std::setprecision(4) << cell.at("auc").get<double>()
              << "  auc_pr " << cell.at("auc_pr").get<double>() << "\n";
}

int cmd_run(const CommonOptions& opt) {
  auto cfg = build_config(opt);
  auto out = fineehr::run_pipeline(cfg);
  fineehr::write_pipeline_outputs(cfg.output_dir, out);
  for (const auto& r : out.report.at("results"))
    std::cout << out.report.at("setting").get<std::string>() << " "
              << r.at("classifier").get<std::string>() << " auc " << std::fixed
              << std::setprecision(4) << r.at("auc").get<double>() << "  auc_pr "
              << r.at("auc_pr").get<double>() << "\n";
  return 0;
}

int cmd_ablate(const CommonOptions& opt) {
  auto cfg = build_config(opt);
  auto out = fineehr::run_ablation(cfg);
  fineehr::write_ablation_outputs(cfg.output_dir, out);
  print_cells(out.report);
  return 0;
}

int cmd_inspect(const std::string& dir, const std::vector<std::string>& words, int k) {
  const fs::path root(dir);
  for (const char* sub : {"", "full", "weight"}) {
    const fs::path p = root / sub / "weights.json";
    if (fs::exists(p)) {
      const auto model = fineehr::weight_model_from_json(read_json(p));
      std::cout << "category weights (" << p.string() << ")\n";
      for (std::size_t i = 0; i < model.weights.size(); ++i)
        std::cout << "  " << std::left << std::setw(24) << model.weights.categories()[i]
                  << std::fixed << std::setprecision(6) << model.weights.weights()[i] << "\n";
      break;
    }
  }

  const auto vocab = fineehr::vocabulary_from_json(read_json(root / "vocab.json"));
  std::ifstream bin(root / "word2vec.bin", std::ios::binary);
  if (!bin) throw fineehr::DataError("cannot open " + (root / "word2vec.bin").string());
  const auto emb = fineehr::read_embeddings(bin);
  if (emb.rows() != vocab.size())
    throw fineehr::DataError("word2vec.bin rows do not match vocab.json");

  std::vector<std::string> queries = words;
  if (queries.empty())
    for (std::size_t i = 0; i < std::min<std::size_t>(5, vocab.size()); ++i)
      queries.push_back(vocab.token(i));

  for (const auto& q : queries) {
    const std::size_t qi = vocab.index_of(fineehr::ascii_lower(q));
    if (qi == fineehr::Vocabulary::npos) {
      std::cout << q << ": not in vocabulary\n";
      continue;
    }
    const fineehr::Vector qv = emb.input.row(static_cast<Eigen::Index>(qi)).transpose();
    std::vector<std::pair<double, std::size_t>> sims;
    for (std::size_t i = 0; i < vocab.size(); ++i) {
      if (i == qi) continue;
      sims.emplace_back(
          fineehr::cosine_similarity(qv, emb.input.row(static_cast<Eigen::Index>(i)).transpose()),
          i);
    }
    const auto top = std::min<std::size_t>(static_cast<std::size_t>(k), sims.size());
    std::partial_sort(sims.begin(), sims.begin() + static_cast<std::ptrdiff_t>(top), sims.end(),
                      [](const auto& a, const auto& b) {
                        return a.first != b.first ? a.first > b.first : a.second < b.second;
                      });
    std::cout << vocab.token(qi) << ":";
    for (std::size_t i = 0; i < top; ++i)
      std::cout << " " << vocab.token(sims[i].second) << "(" << std::fixed
                << std::setprecision(3) << sims[i].first << ")";
    std::cout << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Clinical-note embedding refinement pipeline"};
  app.require_subcommand(1);

  CommonOptions gen_opt, run_opt, abl_opt;
  auto* gen = app.add_subcommand("generate", "Write a synthetic notes/admissions corpus");
  add_common(gen, gen_opt, false);
  auto* run = app.add_subcommand("run", "Run one ablation setting end to end");
  add_common(run, run_opt, true);
  auto* abl = app.add_subcommand("ablate", "Run all four settings on a shared split");
  add_common(abl, abl_opt, false);

  std::string inspect_dir;
  std::vector<std::string> words;
  int k = 5;
  auto* ins = app.add_subcommand("inspect", "Show category weights and nearest words");
  ins->add_option("--out", inspect_dir, "Directory written by run or ablate")->required();
  ins->add_option("--word", words, "Query word (repeatable)");
  ins->add_option("-k", k, "Neighbours per word")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : fineehr::exit_code(fineehr::ErrorKind::Config);
  }

  try {
    if (*gen) return cmd_generate(gen_opt);
    if (*run) return cmd_run(run_opt);
    if (*abl) return cmd_ablate(abl_opt);
    if (*ins) return cmd_inspect(inspect_dir, words, k);
  } catch (const fineehr::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return fineehr::exit_code(e.kind());
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return fineehr::exit_code(fineehr::ErrorKind::Data);
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return fineehr::exit_code(fineehr::ErrorKind::Data);
  }
  return 0;
}
