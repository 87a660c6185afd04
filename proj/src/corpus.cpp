#include "fineehr/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <istream>
#include <ostream>
#include <unordered_set>

#include "fineehr/csv.hpp"
#include "fineehr/error.hpp"
#include "fineehr/random.hpp"

namespace fineehr {

namespace {

const std::string& field_at(const csv::Record& rec, std::size_t index) {
  if (index >= rec.fields.size())
    throw RowError(rec.line, "expected at least " + std::to_string(index + 1) +
                                 " fields, found " +
                                 std::to_string(rec.fields.size()));
  return rec.fields[index];
}

std::string require_nonempty(const csv::Record& rec, std::size_t index,
                             const char* what) {
  std::string value = csv::trim(field_at(rec, index));
  if (value.empty()) throw RowError(rec.line, std::string("empty ") + what);
  return value;
}

}  // namespace

std::vector<NoteRecord> parse_notes_csv(std::istream& source) {
  auto records = csv::read(source);
  if (records.empty()) throw SchemaError("HADM_ID");
  const auto& header = records.front().fields;
  const std::size_t id_col = csv::require_column(header, "HADM_ID");
  const std::size_t cat_col = csv::require_column(header, "CATEGORY");
  const std::size_t text_col = csv::require_column(header, "TEXT");

  std::vector<NoteRecord> notes;
  notes.reserve(records.size() - 1);
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.fields.size() != header.size())
      throw RowError(rec.line, "expected " + std::to_string(header.size()) +
                                   " fields, found " +
                                   std::to_string(rec.fields.size()));
    NoteRecord note;
    note.admission_id = require_nonempty(rec, id_col, "HADM_ID");
    note.category = require_nonempty(rec, cat_col, "CATEGORY");
    note.text = field_at(rec, text_col);
    notes.push_back(std::move(note));
  }
  return notes;
}

std::vector<AdmissionRecord> parse_admissions_csv(std::istream& source) {
  auto records = csv::read(source);
  if (records.empty()) throw SchemaError("HADM_ID");
  const auto& header = records.front().fields;
  const std::size_t id_col = csv::require_column(header, "HADM_ID");
  const std::size_t flag_col =
      csv::require_column(header, "HOSPITAL_EXPIRE_FLAG");

  std::vector<AdmissionRecord> admissions;
  std::unordered_set<std::string> seen;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.fields.size() != header.size())
      throw RowError(rec.line, "expected " + std::to_string(header.size()) +
                                   " fields, found " +
                                   std::to_string(rec.fields.size()));
    AdmissionRecord adm;
    adm.admission_id = require_nonempty(rec, id_col, "HADM_ID");
    const std::string flag = csv::trim(field_at(rec, flag_col));
    if (flag == "1") {
      adm.mortality = true;
    } else if (flag == "0") {
      adm.mortality = false;
    } else {
      throw RowError(rec.line,
                     "HOSPITAL_EXPIRE_FLAG must be 0 or 1, got '" + flag + "'");
    }
    if (!seen.insert(adm.admission_id).second)
      throw DuplicateKeyError(rec.line, adm.admission_id);
    admissions.push_back(std::move(adm));
  }
  return admissions;
}

void write_notes_csv(std::ostream& out, std::span<const NoteRecord> notes) {
  const std::string header[] = {"HADM_ID", "CATEGORY", "TEXT"};
  csv::write_row(out, header);
  for (const auto& n : notes) {
    const std::string row[] = {n.admission_id, n.category, n.text};
    csv::write_row(out, row);
  }
}

void write_admissions_csv(std::ostream& out,
                          std::span<const AdmissionRecord> admissions) {
  const std::string header[] = {"HADM_ID", "HOSPITAL_EXPIRE_FLAG"};
  csv::write_row(out, header);
  for (const auto& a : admissions) {
    const std::string row[] = {a.admission_id, a.mortality ? "1" : "0"};
    csv::write_row(out, row);
  }
}

// --- synthetic generation ---------------------------------------------------

void SyntheticConfig::validate() const {
  auto fail = [](const std::string& msg) {
    throw ConfigError("synthetic: " + msg);
  };
  if (n_admissions < 2) fail("n_admissions must be >= 2");
  if (!(positive_fraction > 0.0 && positive_fraction < 1.0))
    fail("positive_fraction must lie in (0,1)");
  if (categories.empty()) fail("at least one category is required");
  std::unordered_set<std::string> names;
  for (const auto& c : categories) {
    if (c.name.empty()) fail("category name must be non-empty");
    if (!names.insert(c.name).second) fail("duplicate category " + c.name);
    if (!(c.presence_probability > 0.0 && c.presence_probability <= 1.0))
      fail("presence_probability of " + c.name + " must lie in (0,1]");
    if (!(c.signal_strength >= 0.0 && c.signal_strength <= 1.0))
      fail("signal_strength of " + c.name + " must lie in [0,1]");
    if (c.notes_min < 0 || c.notes_max < c.notes_min)
      fail("bad notes range for " + c.name);
    if (c.tokens_min < 0 || c.tokens_max < c.tokens_min)
      fail("bad tokens range for " + c.name);
  }
  if (notes_min < 1 || notes_max < notes_min) fail("bad notes_per_category");
  if (tokens_min < 1 || tokens_max < tokens_min) fail("bad tokens_per_note");
  if (shared_tokens < 1) fail("shared_tokens must be >= 1");
  if (indicative_tokens < 1) fail("indicative_tokens must be >= 1");
  if (topic_tokens < 0) fail("topic_tokens must be >= 0");
  if (!(topic_fraction >= 0.0 && topic_fraction <= 1.0))
    fail("topic_fraction must lie in [0,1]");
  for (double r : {uppercase_rate, newline_rate, period_rate})
    if (!(r >= 0.0 && r <= 1.0)) fail("formatting rates must lie in [0,1]");
}

namespace {

std::string slug(const std::string& name) {
  std::string s;
  for (unsigned char c : name)
    if (std::isalnum(c)) s.push_back(static_cast<char>(std::tolower(c)));
  return s.empty() ? "cat" : s;
}

struct CategoryPools {
  std::vector<std::string> indicative[2];  // [0] negative, [1] positive
  std::vector<std::string> topic;
};

}  // namespace

SyntheticCorpus generate_synthetic(const SyntheticConfig& config) {
  config.validate();
  Rng rng(config.seed);

  std::vector<std::string> shared;
  std::vector<double> shared_cdf;
  double total = 0.0;
  for (int k = 0; k < config.shared_tokens; ++k) {
    shared.push_back("w" + std::to_string(k));
    total += 1.0 / (k + 1.0);
    shared_cdf.push_back(total);
  }
  for (double& c : shared_cdf) c /= total;

  std::vector<CategoryPools> pools(config.categories.size());
  for (std::size_t c = 0; c < config.categories.size(); ++c) {
    // Index suffix keeps pools disjoint even when slugs collide.
    const std::string base = slug(config.categories[c].name) + std::to_string(c);
    for (int k = 0; k < config.indicative_tokens; ++k) {
      pools[c].indicative[0].push_back(base + "neg" + std::to_string(k));
      pools[c].indicative[1].push_back(base + "pos" + std::to_string(k));
    }
    for (int k = 0; k < config.topic_tokens; ++k)
      pools[c].topic.push_back(base + "t" + std::to_string(k));
  }

  SyntheticCorpus out;
  const int n = config.n_admissions;
  const int n_pos = static_cast<int>(std::lround(n * config.positive_fraction));
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  rng.shuffle(std::span<int>(order));
  std::vector<bool> positive(n, false);
  for (int i = 0; i < n_pos; ++i) positive[order[i]] = true;

  for (int i = 0; i < n; ++i) {
    AdmissionRecord adm{std::to_string(100000 + i), positive[i]};
    const int label = adm.mortality ? 1 : 0;

    for (std::size_t c = 0; c < config.categories.size(); ++c) {
      const auto& cat = config.categories[c];
      if (!rng.bernoulli(cat.presence_probability)) continue;
      const int nmin = cat.notes_max > 0 ? cat.notes_min : config.notes_min;
      const int nmax = cat.notes_max > 0 ? cat.notes_max : config.notes_max;
      const int tmin = cat.tokens_max > 0 ? cat.tokens_min : config.tokens_min;
      const int tmax = cat.tokens_max > 0 ? cat.tokens_max : config.tokens_max;
      const int notes = static_cast<int>(rng.between(std::max(1, nmin), nmax));

      for (int k = 0; k < notes; ++k) {
        const int length = static_cast<int>(rng.between(std::max(1, tmin), tmax));
        std::string text;
        for (int t = 0; t < length; ++t) {
          std::string token;
          const double r = rng.uniform();
          if (r < cat.signal_strength) {
            const auto& pool = pools[c].indicative[label];
            token = pool[rng.below(pool.size())];
          } else if (!pools[c].topic.empty() &&
                     rng.uniform() < config.topic_fraction) {
            token = pools[c].topic[rng.below(pools[c].topic.size())];
          } else {
            const double u = rng.uniform();
            auto it = std::upper_bound(shared_cdf.begin(), shared_cdf.end(), u);
            std::size_t idx = static_cast<std::size_t>(it - shared_cdf.begin());
            token = shared[std::min(idx, shared.size() - 1)];
          }
          if (rng.bernoulli(config.uppercase_rate))
            for (char& ch : token)
              ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
          text += token;
          if (t + 1 < length) {
            const double f = rng.uniform();
            if (f < config.newline_rate) {
              text += "\n";
            } else if (f < config.newline_rate + config.period_rate) {
              text += ". ";
            } else {
              text += " ";
            }
          } else {
            text += ".";
          }
        }
        out.notes.push_back(NoteRecord{adm.admission_id, cat.name, std::move(text)});
      }
    }
    out.admissions.push_back(std::move(adm));
  }
  return out;
}

// --- balancing ------------------------------------------------------------

SplitAssignment balance_and_split(std::span<const AdmissionRecord> admissions,
                                  double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw ConfigError("test_fraction must lie in (0,1)");
  std::vector<std::string> pos, neg;
  for (const auto& a : admissions)
    (a.mortality ? pos : neg).push_back(a.admission_id);
  if (pos.empty() || neg.empty())
    throw DataError("balance_and_split: need at least one admission of each class (" +
                    std::to_string(pos.size()) + " positive, " +
                    std::to_string(neg.size()) + " negative)");

  // Sorting first makes the result independent of input order.
  std::sort(pos.begin(), pos.end());
  std::sort(neg.begin(), neg.end());
  Rng rng(seed);
  rng.shuffle(std::span<std::string>(pos));
  rng.shuffle(std::span<std::string>(neg));
  const std::size_t m = std::min(pos.size(), neg.size());
  pos.resize(m);
  neg.resize(m);

  auto per_class_test = static_cast<std::size_t>(
      std::llround(static_cast<double>(m) * test_fraction));
  if (m >= 2) per_class_test = std::clamp<std::size_t>(per_class_test, 1, m - 1);

  SplitAssignment split;
  split.seed = seed;
  for (const auto* cls : {&pos, &neg}) {
    for (std::size_t i = 0; i < cls->size(); ++i) {
      (i < per_class_test ? split.test_ids : split.train_ids).insert((*cls)[i]);
    }
  }
  return split;
}

// --- JSON -----------------------------------------------------------------

void to_json(nlohmann::json& j, const SplitAssignment& split) {
  j = nlohmann::json{{"seed", split.seed},
                     {"train", std::vector<std::string>(split.train_ids.begin(),
                                                        split.train_ids.end())},
                     {"test", std::vector<std::string>(split.test_ids.begin(),
                                                       split.test_ids.end())}};
}

void from_json(const nlohmann::json& j, SplitAssignment& split) {
  split.seed = j.at("seed").get<std::uint64_t>();
  auto train = j.at("train").get<std::vector<std::string>>();
  auto test = j.at("test").get<std::vector<std::string>>();
  split.train_ids = {train.begin(), train.end()};
  split.test_ids = {test.begin(), test.end()};
}

void to_json(nlohmann::json& j, const SyntheticConfig& c) {
  nlohmann::json cats = nlohmann::json::array();
  for (const auto& cat : c.categories) {
    nlohmann::json e{{"name", cat.name},
                     {"presence_probability", cat.presence_probability},
                     {"signal_strength", cat.signal_strength}};
    if (cat.notes_max > 0) e["notes_per_category"] = {cat.notes_min, cat.notes_max};
    if (cat.tokens_max > 0) e["tokens_per_note"] = {cat.tokens_min, cat.tokens_max};
    cats.push_back(std::move(e));
  }
  j = nlohmann::json{{"n_admissions", c.n_admissions},
                     {"positive_fraction", c.positive_fraction},
                     {"categories", cats},
                     {"notes_per_category", {c.notes_min, c.notes_max}},
                     {"tokens_per_note", {c.tokens_min, c.tokens_max}},
                     {"shared_tokens", c.shared_tokens},
                     {"indicative_tokens", c.indicative_tokens},
                     {"topic_tokens", c.topic_tokens},
                     {"topic_fraction", c.topic_fraction},
                     {"uppercase_rate", c.uppercase_rate},
                     {"newline_rate", c.newline_rate},
                     {"period_rate", c.period_rate},
                     {"seed", c.seed}};
}

namespace {
void read_range(const nlohmann::json& j, const char* key, int& lo, int& hi) {
  if (!j.contains(key)) return;
  const auto& r = j.at(key);
  if (!r.is_array() || r.size() != 2)
    throw ConfigError(std::string("synthetic: ") + key + " must be [min, max]");
  lo = r[0].get<int>();
  hi = r[1].get<int>();
}
}  // namespace

void from_json(const nlohmann::json& j, SyntheticConfig& c) {
  c = SyntheticConfig{};
  c.n_admissions = j.value("n_admissions", c.n_admissions);
  c.positive_fraction = j.value("positive_fraction", c.positive_fraction);
  read_range(j, "notes_per_category", c.notes_min, c.notes_max);
  read_range(j, "tokens_per_note", c.tokens_min, c.tokens_max);
  c.shared_tokens = j.value("shared_tokens", c.shared_tokens);
  c.indicative_tokens = j.value("indicative_tokens", c.indicative_tokens);
  c.topic_tokens = j.value("topic_tokens", c.topic_tokens);
  c.topic_fraction = j.value("topic_fraction", c.topic_fraction);
  c.uppercase_rate = j.value("uppercase_rate", c.uppercase_rate);
  c.newline_rate = j.value("newline_rate", c.newline_rate);
  c.period_rate = j.value("period_rate", c.period_rate);
  c.seed = j.value("seed", c.seed);
  for (const auto& e : j.value("categories", nlohmann::json::array())) {
    SyntheticCategory cat;
    cat.name = e.at("name").get<std::string>();
    cat.presence_probability = e.value("presence_probability", 1.0);
    cat.signal_strength = e.value("signal_strength", 0.0);
    read_range(e, "notes_per_category", cat.notes_min, cat.notes_max);
    read_range(e, "tokens_per_note", cat.tokens_min, cat.tokens_max);
    c.categories.push_back(std::move(cat));
  }
}

}  // namespace fineehr
