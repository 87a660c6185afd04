#pragma once

#include <cstdint>
#include <iosfwd>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace fineehr {

/// One clinical note. `text` may be empty.
struct NoteRecord {
  std::string admission_id;
  std::string category;
  std::string text;

  bool operator==(const NoteRecord&) const = default;
};

struct AdmissionRecord {
  std::string admission_id;
  bool mortality = false;

  bool operator==(const AdmissionRecord&) const = default;
};

struct SplitAssignment {
  std::set<std::string> train_ids;
  std::set<std::string> test_ids;
  std::uint64_t seed = 0;

  bool operator==(const SplitAssignment&) const = default;
};

struct SyntheticCategory {
  std::string name;
  double presence_probability = 1.0;
  double signal_strength = 0.0;
  // Per-category overrides of the global ranges; 0 means "use global".
  int notes_min = 0;
  int notes_max = 0;
  int tokens_min = 0;
  int tokens_max = 0;
};

/// Layout of a synthetic corpus standing in for restricted clinical data.
/// A note of category c for an admission with label l draws each token
/// from c's label-l indicative pool with probability signal_strength;
/// otherwise from c's topic pool with probability topic_fraction, else
/// from the shared Zipf-weighted noise pool.
struct SyntheticConfig {
  int n_admissions = 400;
  double positive_fraction = 0.5;
  std::vector<SyntheticCategory> categories;
  int notes_min = 1;
  int notes_max = 3;
  int tokens_min = 20;
  int tokens_max = 60;
  int shared_tokens = 300;
  int indicative_tokens = 20;
  int topic_tokens = 30;
  double topic_fraction = 0.3;
  double uppercase_rate = 0.05;
  double newline_rate = 0.05;
  double period_rate = 0.05;
  std::uint64_t seed = 0;

  /// Throws ConfigError on any invariant violation.
  void validate() const;
};

struct SyntheticCorpus {
  std::vector<NoteRecord> notes;
  std::vector<AdmissionRecord> admissions;
};

/// Parses a NOTEEVENTS-style table (HADM_ID, CATEGORY, TEXT; extra
/// columns ignored, header match case-insensitive).
std::vector<NoteRecord> parse_notes_csv(std::istream& source);

/// Parses an ADMISSIONS-style table (HADM_ID, HOSPITAL_EXPIRE_FLAG).
std::vector<AdmissionRecord> parse_admissions_csv(std::istream& source);

void write_notes_csv(std::ostream& out, std::span<const NoteRecord> notes);
void write_admissions_csv(std::ostream& out,
                          std::span<const AdmissionRecord> admissions);

SyntheticCorpus generate_synthetic(const SyntheticConfig& config);

/// Downsamples the majority class to the minority count, then splits each
/// class so that round(minority * test_fraction) of it goes to test.
SplitAssignment balance_and_split(std::span<const AdmissionRecord> admissions,
                                  double test_fraction, std::uint64_t seed);

void to_json(nlohmann::json& j, const SplitAssignment& split);
void from_json(const nlohmann::json& j, SplitAssignment& split);
void to_json(nlohmann::json& j, const SyntheticConfig& config);
void from_json(const nlohmann::json& j, SyntheticConfig& config);

}  // namespace fineehr
