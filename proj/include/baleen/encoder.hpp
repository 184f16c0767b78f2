#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "baleen/corpus.hpp"
#include "baleen/query.hpp"

namespace baleen {

/// Lowercased alphanumeric runs. Anything that is not a letter or digit
/// (ASCII or otherwise) separates tokens; malformed UTF-8 bytes do too.
std::vector<std::string> tokenize(std::string_view text);

/// Tokens joined by single spaces: lowercased, punctuation stripped,
/// whitespace collapsed.
std::string normalize_text(std::string_view text);

/// True if needle's normalized form occurs in haystack's normalized form on
/// token boundaries. An empty needle never matches.
bool contains_normalized(std::string_view haystack, std::string_view needle);

struct EncoderConfig {
  std::size_t dim = 128;
  std::uint64_t seed = 0;
  std::size_t max_passage_tokens = 256;
  std::size_t max_query_tokens = 64;
  std::size_t max_overall_tokens = 512;

  void validate() const;
  bool operator==(const EncoderConfig&) const = default;
};

/// Non-owning row-major view over rows x dim floats.
struct MatrixView {
  const float* data = nullptr;
  std::size_t rows = 0;
  std::size_t dim = 0;

  std::span<const float> row(std::size_t i) const { return {data + i * dim, dim}; }
};

/// One embedding per token, row-major.
class TokenMatrix {
 public:
  TokenMatrix() = default;
  TokenMatrix(std::size_t rows, std::size_t dim) : rows_(rows), dim_(dim), data_(rows * dim) {}

  std::size_t rows() const { return rows_; }
  std::size_t dim() const { return dim_; }
  std::span<const float> row(std::size_t i) const { return {data_.data() + i * dim_, dim_}; }
  std::span<float> row(std::size_t i) { return {data_.data() + i * dim_, dim_}; }
  const std::vector<float>& data() const { return data_; }
  std::vector<float>& data() { return data_; }
  MatrixView view() const { return {data_.data(), rows_, dim_}; }

  /// Keeps the first n rows.
  void truncate(std::size_t n);

  bool operator==(const TokenMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t dim_ = 0;
  std::vector<float> data_;
};

struct EncodedPassage {
  TokenMatrix matrix;
  /// Half-open row range per sentence after truncation; sentences cut off
  /// entirely get an empty range at the end of the matrix.
  std::vector<std::pair<std::size_t, std::size_t>> sentence_rows;
  std::size_t title_rows = 0;
};

struct EncodedQuery {
  TokenMatrix query_part;  // from Q_0
  TokenMatrix fact_part;   // from accumulated facts; may have zero rows
  std::vector<std::string> query_tokens;
  std::vector<std::string> fact_tokens;

  std::size_t dim() const { return query_part.dim(); }
};

/// Maps texts to token matrices. Subclasses supply token embeddings; the
/// base class owns the passage/query layout and truncation rules.
class Encoder {
 public:
  explicit Encoder(EncoderConfig cfg);
  virtual ~Encoder() = default;
  Encoder(const Encoder&) = delete;
  Encoder& operator=(const Encoder&) = delete;

  const EncoderConfig& config() const { return cfg_; }

  /// Rows for "title. sentence ..." truncated to max_passage_tokens.
  virtual EncodedPassage encode_passage(const Passage& p) const;
  /// Query rows from Q_0 (capped at max_query_tokens) and fact rows from the
  /// accumulated facts, capped so the total stays within max_overall_tokens.
  virtual EncodedQuery encode_query(const MultiHopQuery& q) const;

  /// Writes the unit-norm embedding of one token into out (size dim).
  virtual void embed_token(std::string_view token, std::span<float> out) const = 0;

  TokenMatrix encode_tokens(std::span<const std::string> tokens) const;

 private:
  EncoderConfig cfg_;
};

/// Training-free reference encoder: each token vector is the normalized sum
/// of seeded Gaussian vectors, one per character trigram of "#token#".
/// Tokens sharing trigrams get correlated vectors.
class LexicalEncoder : public Encoder {
 public:
  explicit LexicalEncoder(EncoderConfig cfg);

  void embed_token(std::string_view token, std::span<float> out) const override;

 private:
  void compute(std::string_view token, std::span<float> out) const;

  mutable std::shared_mutex mu_;
  mutable std::unordered_map<std::string, std::vector<float>> cache_;
};

/// Scales each query-side row by a per-token weight in (0, 1]. Passage
/// encoding is delegated unchanged, so an index built with the base encoder
/// stays valid.
class TermWeightedEncoder : public Encoder {
 public:
  TermWeightedEncoder(std::shared_ptr<const Encoder> base,
                      std::unordered_map<std::string, float> weights);

  EncodedPassage encode_passage(const Passage& p) const override;
  EncodedQuery encode_query(const MultiHopQuery& q) const override;
  void embed_token(std::string_view token, std::span<float> out) const override;

  float weight(const std::string& token) const;
  const std::unordered_map<std::string, float>& weights() const { return weights_; }

 private:
  std::shared_ptr<const Encoder> base_;
  std::unordered_map<std::string, float> weights_;
};

/// Serves passage matrices from "<dir>/<pid>.tmat" files and delegates
/// query encoding to a fallback encoder.
class PrecomputedEncoder : public Encoder {
 public:
  PrecomputedEncoder(std::string dir, std::shared_ptr<const Encoder> query_encoder);

  EncodedPassage encode_passage(const Passage& p) const override;
  EncodedQuery encode_query(const MultiHopQuery& q) const override;
  void embed_token(std::string_view token, std::span<float> out) const override;

 private:
  std::string dir_;
  std::shared_ptr<const Encoder> query_encoder_;
};

/// Binary matrix file: "BTMX" magic, u32 dim, u32 rows, then rows*dim
/// little-endian float32 values, row-major.
void write_token_matrix(const std::string& path, const TokenMatrix& m);
TokenMatrix read_token_matrix(const std::string& path);

}  // namespace baleen
