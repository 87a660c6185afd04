#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "fineehr/textprep.hpp"
#include "fineehr/types.hpp"
#include "json.hpp"

namespace fineehr {

struct Word2VecParams {
  int dim = 64;
  int window = 5;
  int negatives = 5;
  int epochs = 10;
  double learning_rate = 0.025;
  /// Frequent-word downsampling threshold; 0 disables subsampling.
  double subsample_threshold = 1e-3;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Skip-gram word vectors. `input` rows are the word embeddings; `output`
/// rows are the negative-sampling context weights kept for resumption.
struct EmbeddingMatrix {
  RowMatrix input;
  RowMatrix output;

  int dim() const { return static_cast<int>(input.cols()); }
  std::size_t rows() const { return static_cast<std::size_t>(input.rows()); }
  bool operator==(const EmbeddingMatrix& o) const {
    return input.rows() == o.input.rows() && input.cols() == o.input.cols() &&
           input == o.input && output == o.output;
  }
};

struct NoteEmbedding {
  std::string admission_id;
  std::string category;
  Vector vector;
  std::size_t n_known_tokens = 0;
};

inline constexpr std::size_t kNegativeTableSize = 1'000'000;

/// Skip-gram with negative sampling, single-threaded. For a fixed seed the
/// result is bit-identical across runs.
EmbeddingMatrix train_word2vec(std::span<const TokenizedNote> notes,
                               const Vocabulary& vocab,
                               const Word2VecParams& params);

/// Mean of the input vectors of every in-vocabulary token occurrence.
/// Zero vector when the note has no known token.
NoteEmbedding embed_note(const TokenizedNote& note, const EmbeddingMatrix& emb,
                         const Vocabulary& vocab);

Vector pool_mean(std::span<const Vector> vectors);

double cosine_similarity(const Vector& a, const Vector& b);

/// "FEHRW2V1", u32 rows, u32 dim, then row-major little-endian f64 input
/// rows followed by output rows.
void write_embeddings(std::ostream& out, const EmbeddingMatrix& emb);
EmbeddingMatrix read_embeddings(std::istream& in);

nlohmann::json embeddings_to_json(const EmbeddingMatrix& emb,
                                  const Vocabulary& vocab);

void to_json(nlohmann::json& j, const Word2VecParams& p);
void from_json(const nlohmann::json& j, Word2VecParams& p);

}  // namespace fineehr
