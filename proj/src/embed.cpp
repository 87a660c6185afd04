#include "fineehr/embed.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>

#include "fineehr/error.hpp"
#include "fineehr/random.hpp"

namespace fineehr {

void Word2VecParams::validate() const {
  if (dim < 1) throw ConfigError("word2vec: dim must be >= 1");
  if (window < 1) throw ConfigError("word2vec: window must be >= 1");
  if (negatives < 1) throw ConfigError("word2vec: negatives must be >= 1");
  if (epochs < 1) throw ConfigError("word2vec: epochs must be >= 1");
  if (!(learning_rate > 0.0))
    throw ConfigError("word2vec: learning_rate must be > 0");
  if (!(subsample_threshold >= 0.0))
    throw ConfigError("word2vec: subsample_threshold must be >= 0");
}

namespace {

std::vector<std::uint32_t> unigram_table(const Vocabulary& vocab) {
  std::vector<std::uint32_t> table(kNegativeTableSize);
  double norm = 0.0;
  for (std::size_t f : vocab.frequencies()) norm += std::pow(static_cast<double>(f), 0.75);
  std::size_t word = 0;
  double cumulative = std::pow(static_cast<double>(vocab.frequency(0)), 0.75) / norm;
  for (std::size_t a = 0; a < table.size(); ++a) {
    table[a] = static_cast<std::uint32_t>(word);
    if (static_cast<double>(a) / static_cast<double>(table.size()) > cumulative &&
        word + 1 < vocab.size()) {
      ++word;
      cumulative += std::pow(static_cast<double>(vocab.frequency(word)), 0.75) / norm;
    }
  }
  return table;
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

EmbeddingMatrix train_word2vec(std::span<const TokenizedNote> notes,
                               const Vocabulary& vocab,
                               const Word2VecParams& params) {
  params.validate();
  if (vocab.size() == 0) throw DataError("word2vec: empty vocabulary");

  std::vector<std::vector<std::uint32_t>> corpus;
  std::size_t total_tokens = 0;
  for (const auto& note : notes) {
    for (const auto& sentence : note.sentences) {
      std::vector<std::uint32_t> ids;
      for (const auto& tok : sentence) {
        const std::size_t idx = vocab.index_of(tok);
        if (idx != Vocabulary::npos) ids.push_back(static_cast<std::uint32_t>(idx));
      }
      total_tokens += ids.size();
      if (!ids.empty()) corpus.push_back(std::move(ids));
    }
  }
  if (total_tokens == 0)
    throw DataError("word2vec: no in-vocabulary tokens in the training notes");

  const int dim = params.dim;
  const auto rows = static_cast<Eigen::Index>(vocab.size());
  Rng rng(params.seed);
  EmbeddingMatrix emb;
  emb.input.resize(rows, dim);
  emb.output = RowMatrix::Zero(rows, dim);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (int c = 0; c < dim; ++c) emb.input(r, c) = (rng.uniform() - 0.5) / dim;

  const auto table = unigram_table(vocab);
  std::vector<double> keep_prob(vocab.size(), 1.0);
  if (params.subsample_threshold > 0.0) {
    double vocab_total = 0.0;
    for (std::size_t f : vocab.frequencies()) vocab_total += static_cast<double>(f);
    const double t = params.subsample_threshold * vocab_total;
    for (std::size_t i = 0; i < vocab.size(); ++i) {
      const double f = static_cast<double>(vocab.frequency(i));
      keep_prob[i] = (std::sqrt(f / t) + 1.0) * t / f;
    }
  }

  const double planned = static_cast<double>(total_tokens) * params.epochs;
  double processed = 0.0;
  std::vector<std::uint32_t> kept;
  Vector grad_in(dim);

  for (int epoch = 0; epoch < params.epochs; ++epoch) {
    for (const auto& sentence : corpus) {
      const double alpha =
          params.learning_rate * std::max(0.1, 1.0 - 0.9 * processed / planned);
      processed += static_cast<double>(sentence.size());

      kept.clear();
      for (std::uint32_t id : sentence)
        if (keep_prob[id] >= 1.0 || rng.uniform() < keep_prob[id]) kept.push_back(id);

      const auto n = static_cast<std::int64_t>(kept.size());
      for (std::int64_t pos = 0; pos < n; ++pos) {
        const std::int64_t radius = rng.between(1, params.window);
        const std::uint32_t center = kept[pos];
        auto in_row = emb.input.row(center);
        for (std::int64_t ctx = std::max<std::int64_t>(0, pos - radius);
             ctx <= std::min(n - 1, pos + radius); ++ctx) {
          if (ctx == pos) continue;
          const std::uint32_t context = kept[ctx];
          grad_in.setZero();
          for (int d = 0; d <= params.negatives; ++d) {
            std::uint32_t target;
            double label;
            if (d == 0) {
              target = context;
              label = 1.0;
            } else {
              target = table[rng.below(table.size())];
              if (target == context) continue;
              label = 0.0;
            }
            auto out_row = emb.output.row(target);
            const double g = (label - sigmoid(in_row.dot(out_row))) * alpha;
            grad_in.noalias() += g * out_row.transpose();
            out_row.noalias() += g * in_row;
          }
          in_row.noalias() += grad_in.transpose();
        }
      }
    }
  }

  if (!emb.input.allFinite() || !emb.output.allFinite())
    throw TrainingError("word2vec: non-finite parameters after training");
  return emb;
}

NoteEmbedding embed_note(const TokenizedNote& note, const EmbeddingMatrix& emb,
                         const Vocabulary& vocab) {
  NoteEmbedding out{note.admission_id, note.category, Vector::Zero(emb.dim()), 0};
  for (const auto& sentence : note.sentences) {
    for (const auto& tok : sentence) {
      const std::size_t idx = vocab.index_of(tok);
      if (idx == Vocabulary::npos || idx >= emb.rows()) continue;
      out.vector += emb.input.row(static_cast<Eigen::Index>(idx)).transpose();
      ++out.n_known_tokens;
    }
  }
  if (out.n_known_tokens > 0) out.vector /= static_cast<double>(out.n_known_tokens);
  return out;
}

Vector pool_mean(std::span<const Vector> vectors) {
  if (vectors.empty()) throw DataError("pool_mean: empty input");
  Vector sum = Vector::Zero(vectors.front().size());
  for (const auto& v : vectors) {
    if (v.size() != sum.size())
      throw DataError("pool_mean: vector length mismatch (" +
                      std::to_string(v.size()) + " vs " +
                      std::to_string(sum.size()) + ")");
    sum += v;
  }
  return sum / static_cast<double>(vectors.size());
}

double cosine_similarity(const Vector& a, const Vector& b) {
  const double denom = a.norm() * b.norm();
  return denom > 0.0 ? a.dot(b) / denom : 0.0;
}

// --- binary format -----------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'F', 'E', 'H', 'R', 'W', '2', 'V', '1'};

template <typename T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &v, sizeof(T));
    std::reverse(bytes, bytes + sizeof(T));
    std::memcpy(&v, bytes, sizeof(T));
  }
  return v;
}

template <typename T>
void put(std::ostream& out, T v) {
  v = to_little(v);
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T)))
    throw DataError("embeddings: truncated file");
  return to_little(v);
}

}  // namespace

void write_embeddings(std::ostream& out, const EmbeddingMatrix& emb) {
  out.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(emb.input.rows()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(emb.input.cols()));
  for (const RowMatrix* m : {&emb.input, &emb.output})
    for (Eigen::Index r = 0; r < m->rows(); ++r)
      for (Eigen::Index c = 0; c < m->cols(); ++c) put<double>(out, (*m)(r, c));
  if (!out) throw DataError("embeddings: write failed");
}

EmbeddingMatrix read_embeddings(std::istream& in) {
  char magic[8];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw DataError("embeddings: bad magic, expected FEHRW2V1");
  const auto rows = get<std::uint32_t>(in);
  const auto dim = get<std::uint32_t>(in);
  EmbeddingMatrix emb;
  emb.input.resize(rows, dim);
  emb.output.resize(rows, dim);
  for (RowMatrix* m : {&emb.input, &emb.output})
    for (Eigen::Index r = 0; r < m->rows(); ++r)
      for (Eigen::Index c = 0; c < m->cols(); ++c) (*m)(r, c) = get<double>(in);
  return emb;
}

nlohmann::json embeddings_to_json(const EmbeddingMatrix& emb,
                                  const Vocabulary& vocab) {
  nlohmann::json words = nlohmann::json::object();
  for (std::size_t i = 0; i < vocab.size() && i < emb.rows(); ++i) {
    const auto row = emb.input.row(static_cast<Eigen::Index>(i));
    words[vocab.token(i)] = std::vector<double>(row.data(), row.data() + row.size());
  }
  return nlohmann::json{{"dim", emb.dim()}, {"vectors", words}};
}

void to_json(nlohmann::json& j, const Word2VecParams& p) {
  j = nlohmann::json{{"dim", p.dim},
                     {"window", p.window},
                     {"negatives", p.negatives},
                     {"epochs", p.epochs},
                     {"learning_rate", p.learning_rate},
                     {"subsample_threshold", p.subsample_threshold},
                     {"seed", p.seed}};
}

void from_json(const nlohmann::json& j, Word2VecParams& p) {
  p = Word2VecParams{};
  p.dim = j.value("dim", p.dim);
  p.window = j.value("window", p.window);
  p.negatives = j.value("negatives", p.negatives);
  p.epochs = j.value("epochs", p.epochs);
  p.learning_rate = j.value("learning_rate", p.learning_rate);
  p.subsample_threshold = j.value("subsample_threshold", p.subsample_threshold);
  p.seed = j.value("seed", p.seed);
}

}  // namespace fineehr
