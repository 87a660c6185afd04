#include "fineehr/textprep.hpp"

#include <algorithm>
#include <map>

#include "fineehr/csv.hpp"
#include "fineehr/error.hpp"

namespace fineehr {

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}
bool is_terminal(char c) { return c == '.' || c == '!' || c == '?'; }
bool is_word(char c) {
  const auto u = static_cast<unsigned char>(c);
  return (u >= 'a' && u <= 'z') || (u >= 'A' && u <= 'Z') ||
         (u >= '0' && u <= '9') || u >= 0x80;
}

}  // namespace

std::vector<std::string> split_sentences(std::string_view raw) {
  std::vector<std::string> out;
  auto flush = [&](std::size_t begin, std::size_t end) {
    std::string seg = csv::trim(raw.substr(begin, end - begin));
    if (!seg.empty()) out.push_back(std::move(seg));
  };
  std::size_t start = 0;
  std::size_t i = 0;
  while (i < raw.size()) {
    if (raw[i] == '\n') {
      flush(start, i);
      start = ++i;
    } else if (is_terminal(raw[i])) {
      std::size_t j = i;
      while (j < raw.size() && is_terminal(raw[j])) ++j;
      if (j == raw.size() || is_space(raw[j])) {
        flush(start, j);
        start = j;
      }
      i = j;
    } else {
      ++i;
    }
  }
  flush(start, raw.size());
  return out;
}

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  return out;
}

std::vector<std::string> tokenize(std::string_view sentence) {
  const std::string lower = ascii_lower(sentence);
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < lower.size()) {
    if (!is_word(lower[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < lower.size() && is_word(lower[j])) ++j;
    tokens.emplace_back(lower.substr(i, j - i));
    i = j;
  }
  return tokens;
}

TokenizedNote prepare_note(const std::string& admission_id,
                           const std::string& category, std::string_view text) {
  TokenizedNote note{admission_id, category, {}};
  for (const auto& s : split_sentences(text)) {
    auto tokens = tokenize(s);
    if (!tokens.empty()) note.sentences.push_back(std::move(tokens));
  }
  return note;
}

Vocabulary::Vocabulary(std::vector<std::pair<std::string, std::size_t>> entries,
                       std::size_t min_count)
    : min_count_(min_count) {
  tokens_.reserve(entries.size());
  freqs_.reserve(entries.size());
  for (auto& [tok, freq] : entries) {
    if (!index_.emplace(tok, tokens_.size()).second)
      throw DataError("vocabulary: duplicate token '" + tok + "'");
    tokens_.push_back(std::move(tok));
    freqs_.push_back(freq);
  }
}

std::size_t Vocabulary::index_of(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? npos : it->second;
}

Vocabulary build_vocabulary(std::span<const TokenizedNote> notes,
                            std::size_t min_count) {
  if (min_count < 1) throw ConfigError("vocabulary: min_count must be >= 1");
  std::map<std::string, std::size_t> counts;
  for (const auto& note : notes)
    for (const auto& sentence : note.sentences)
      for (const auto& tok : sentence) ++counts[tok];

  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [tok, freq] : counts)
    if (freq >= min_count) kept.emplace_back(tok, freq);
  if (kept.empty())
    throw DataError("vocabulary: no token reaches min_count " +
                    std::to_string(min_count));
  std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  return Vocabulary(std::move(kept), min_count);
}

void to_json(nlohmann::json& j, const Vocabulary& vocab) {
  nlohmann::json tokens = nlohmann::json::array();
  for (std::size_t i = 0; i < vocab.size(); ++i)
    tokens.push_back({{"t", vocab.token(i)}, {"f", vocab.frequency(i)}});
  j = nlohmann::json{{"min_count", vocab.min_count()}, {"tokens", tokens}};
}

Vocabulary vocabulary_from_json(const nlohmann::json& j) {
  std::vector<std::pair<std::string, std::size_t>> entries;
  for (const auto& e : j.at("tokens"))
    entries.emplace_back(e.at("t").get<std::string>(), e.at("f").get<std::size_t>());
  return Vocabulary(std::move(entries), j.at("min_count").get<std::size_t>());
}

}  // namespace fineehr
