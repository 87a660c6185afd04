#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"

namespace fineehr {

using Sentence = std::vector<std::string>;

struct TokenizedNote {
  std::string admission_id;
  std::string category;
  std::vector<Sentence> sentences;
};

/// Splits at newlines and after runs of sentence-ending punctuation
/// (. ! ?) that are followed by whitespace or end of text. Segments are
/// trimmed; empty ones are dropped.
std::vector<std::string> split_sentences(std::string_view raw);

/// ASCII-lowercases, then returns maximal runs of word characters.
/// Word characters are ASCII letters, digits and any byte >= 0x80, so
/// multi-byte UTF-8 sequences stay inside tokens.
std::vector<std::string> tokenize(std::string_view sentence);

std::string ascii_lower(std::string_view s);

TokenizedNote prepare_note(const std::string& admission_id,
                           const std::string& category, std::string_view text);

class Vocabulary {
 public:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  Vocabulary() = default;
  /// Entries must already be in index order.
  Vocabulary(std::vector<std::pair<std::string, std::size_t>> entries,
             std::size_t min_count);

  std::size_t size() const { return tokens_.size(); }
  std::size_t min_count() const { return min_count_; }
  std::size_t index_of(std::string_view token) const;
  bool contains(std::string_view token) const { return index_of(token) != npos; }
  const std::string& token(std::size_t index) const { return tokens_.at(index); }
  std::size_t frequency(std::size_t index) const { return freqs_.at(index); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  const std::vector<std::size_t>& frequencies() const { return freqs_; }

  bool operator==(const Vocabulary& other) const {
    return min_count_ == other.min_count_ && tokens_ == other.tokens_ &&
           freqs_ == other.freqs_;
  }

 private:
  std::size_t min_count_ = 1;
  std::vector<std::string> tokens_;
  std::vector<std::size_t> freqs_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Keeps tokens with frequency >= min_count, ordered by descending
/// frequency with lexicographic tie-break. Only training-split notes may
/// be passed here.
Vocabulary build_vocabulary(std::span<const TokenizedNote> notes,
                            std::size_t min_count);

void to_json(nlohmann::json& j, const Vocabulary& vocab);
Vocabulary vocabulary_from_json(const nlohmann::json& j);

}  // namespace fineehr
