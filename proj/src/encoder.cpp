#include "baleen/encoder.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <mutex>

#include "baleen/util.hpp"

namespace baleen {

static_assert(std::endian::native == std::endian::little,
              "binary formats are little-endian only");

namespace {

// Decodes one code point starting at s[i]; advances i. Malformed input
// yields U+FFFD and consumes a single byte.
char32_t next_code_point(std::string_view s, std::size_t& i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  auto cont = [&](std::size_t k) -> int {
    if (i + k >= s.size()) return -1;
    const auto b = static_cast<unsigned char>(s[i + k]);
    return (b & 0xC0) == 0x80 ? (b & 0x3F) : -1;
  };
  if (b0 < 0x80) {
    ++i;
    return b0;
  }
  int len = 0;
  char32_t cp = 0;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    ++i;
    return 0xFFFD;
  }
  for (int k = 1; k < len; ++k) {
    const int c = cont(static_cast<std::size_t>(k));
    if (c < 0) {
      ++i;
      return 0xFFFD;
    }
    cp = (cp << 6) | static_cast<char32_t>(c);
  }
  // Reject overlong forms and surrogates.
  if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000) ||
      cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
    ++i;
    return 0xFFFD;
  }
  i += static_cast<std::size_t>(len);
  return cp;
}

bool is_word_char(char32_t cp) {
  if (cp < 0x80) {
    return (cp >= '0' && cp <= '9') || (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z');
  }
  if (cp == 0xFFFD) return false;
  if (cp <= 0xBF) return cp == 0xAA || cp == 0xB5 || cp == 0xBA;  // Latin-1 punctuation
  if (cp == 0xD7 || cp == 0xF7) return false;                     // x and division signs
  if (cp >= 0x2000 && cp <= 0x2BFF) return false;  // punctuation, symbols, arrows
  if (cp >= 0x3000 && cp <= 0x303F) return false;  // CJK punctuation
  if (cp >= 0xFE10 && cp <= 0xFE6F) return false;  // vertical and small forms
  if (cp >= 0xFF00 && cp <= 0xFF0F) return false;  // fullwidth punctuation
  if (cp >= 0xFF1A && cp <= 0xFF20) return false;
  if (cp >= 0xFF3B && cp <= 0xFF40) return false;
  if (cp >= 0xFF5B && cp <= 0xFF65) return false;
  return true;
}

char32_t to_lower(char32_t cp) {
  if (cp >= 'A' && cp <= 'Z') return cp + 32;
  if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 32;
  if (cp >= 0x100 && cp <= 0x137 && cp % 2 == 0) return cp + 1;
  if (cp >= 0x139 && cp <= 0x148 && cp % 2 == 1) return cp + 1;
  if (cp >= 0x14A && cp <= 0x177 && cp % 2 == 0) return cp + 1;
  if (cp == 0x178) return 0xFF;
  if (cp >= 0x179 && cp <= 0x17E && cp % 2 == 1) return cp + 1;
  if (cp >= 0x391 && cp <= 0x3A9 && cp != 0x3A2) return cp + 32;  // Greek
  if (cp >= 0x410 && cp <= 0x42F) return cp + 32;                 // Cyrillic
  if (cp >= 0x400 && cp <= 0x40F) return cp + 80;
  return cp;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

void normalize_row(std::span<float> row) {
  double norm = 0.0;
  for (float v : row) norm += static_cast<double>(v) * v;
  norm = std::sqrt(norm);
  if (norm == 0.0) return;
  for (float& v : row) v = static_cast<float>(v / norm);
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  std::size_t i = 0;
  while (i < text.size()) {
    const char32_t cp = next_code_point(text, i);
    if (is_word_char(cp)) {
      append_utf8(current, to_lower(cp));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::string normalize_text(std::string_view text) {
  std::string out;
  for (const auto& t : tokenize(text)) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

bool contains_normalized(std::string_view haystack, std::string_view needle) {
  const std::string n = normalize_text(needle);
  if (n.empty()) return false;
  const std::string h = " " + normalize_text(haystack) + " ";
  return h.find(" " + n + " ") != std::string::npos;
}

void EncoderConfig::validate() const {
  if (dim < 8) throw Error("encoder dim must be >= 8");
  if (max_passage_tokens == 0 || max_query_tokens == 0 || max_overall_tokens == 0) {
    throw Error("encoder token limits must be positive");
  }
  if (max_query_tokens > max_overall_tokens) {
    throw Error("max_query_tokens exceeds max_overall_tokens");
  }
}

void TokenMatrix::truncate(std::size_t n) {
  if (n >= rows_) return;
  rows_ = n;
  data_.resize(rows_ * dim_);
}

Encoder::Encoder(EncoderConfig cfg) : cfg_(cfg) { cfg_.validate(); }

TokenMatrix Encoder::encode_tokens(std::span<const std::string> tokens) const {
  TokenMatrix m(tokens.size(), cfg_.dim);
  for (std::size_t i = 0; i < tokens.size(); ++i) embed_token(tokens[i], m.row(i));
  return m;
}

EncodedPassage Encoder::encode_passage(const Passage& p) const {
  const std::size_t cap = cfg_.max_passage_tokens;
  std::vector<std::string> tokens = tokenize(p.title);
  if (tokens.size() > cap) tokens.resize(cap);
  EncodedPassage out;
  out.title_rows = tokens.size();
  for (const auto& sentence : p.sentences) {
    const std::size_t begin = tokens.size();
    for (auto& t : tokenize(sentence)) {
      if (tokens.size() == cap) break;
      tokens.push_back(std::move(t));
    }
    out.sentence_rows.emplace_back(begin, tokens.size());
  }
  out.matrix = encode_tokens(tokens);
  return out;
}

EncodedQuery Encoder::encode_query(const MultiHopQuery& q) const {
  EncodedQuery out;
  out.query_tokens = tokenize(q.q0_text);
  if (out.query_tokens.size() > cfg_.max_query_tokens) {
    out.query_tokens.resize(cfg_.max_query_tokens);
  }
  const std::size_t fact_budget = cfg_.max_overall_tokens - out.query_tokens.size();
  for (const auto& f : q.facts) {
    if (out.fact_tokens.size() >= fact_budget) break;
    for (auto& t : tokenize(f.text)) {
      if (out.fact_tokens.size() >= fact_budget) break;
      out.fact_tokens.push_back(std::move(t));
    }
  }
  out.query_part = encode_tokens(out.query_tokens);
  out.fact_part = encode_tokens(out.fact_tokens);
  return out;
}

LexicalEncoder::LexicalEncoder(EncoderConfig cfg) : Encoder(cfg) {}

void LexicalEncoder::embed_token(std::string_view token, std::span<float> out) const {
  {
    std::shared_lock lock(mu_);
    auto it = cache_.find(std::string(token));
    if (it != cache_.end()) {
      std::copy(it->second.begin(), it->second.end(), out.begin());
      return;
    }
  }
  compute(token, out);
  std::unique_lock lock(mu_);
  cache_.try_emplace(std::string(token), out.begin(), out.end());
}

void LexicalEncoder::compute(std::string_view token, std::span<float> out) const {
  const std::size_t dim = config().dim;
  // Split into code points so trigrams never cut a multi-byte character.
  std::vector<std::string> chars{"#"};
  std::size_t i = 0;
  while (i < token.size()) {
    const std::size_t start = i;
    next_code_point(token, i);
    chars.emplace_back(token.substr(start, i - start));
  }
  chars.emplace_back("#");

  std::vector<double> acc(dim, 0.0);
  for (std::size_t k = 0; k + 2 < chars.size(); ++k) {
    const std::string trigram = chars[k] + chars[k + 1] + chars[k + 2];
    Rng rng(hash64(trigram, config().seed));
    for (std::size_t d = 0; d < dim; ++d) acc[d] += rng.normal();
  }
  double norm = 0.0;
  for (double v : acc) norm += v * v;
  norm = std::sqrt(norm);
  for (std::size_t d = 0; d < dim; ++d) out[d] = static_cast<float>(acc[d] / norm);
}

TermWeightedEncoder::TermWeightedEncoder(std::shared_ptr<const Encoder> base,
                                         std::unordered_map<std::string, float> weights)
    : Encoder(base->config()), base_(std::move(base)), weights_(std::move(weights)) {}

float TermWeightedEncoder::weight(const std::string& token) const {
  auto it = weights_.find(token);
  return it == weights_.end() ? 1.0f : it->second;
}

EncodedPassage TermWeightedEncoder::encode_passage(const Passage& p) const {
  return base_->encode_passage(p);
}

EncodedQuery TermWeightedEncoder::encode_query(const MultiHopQuery& q) const {
  EncodedQuery eq = base_->encode_query(q);
  auto scale = [&](TokenMatrix& m, const std::vector<std::string>& tokens) {
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      const float w = weight(tokens[i]);
      for (float& v : m.row(i)) v *= w;
    }
  };
  scale(eq.query_part, eq.query_tokens);
  scale(eq.fact_part, eq.fact_tokens);
  return eq;
}

void TermWeightedEncoder::embed_token(std::string_view token, std::span<float> out) const {
  base_->embed_token(token, out);
}

PrecomputedEncoder::PrecomputedEncoder(std::string dir,
                                       std::shared_ptr<const Encoder> query_encoder)
    : Encoder(query_encoder->config()),
      dir_(std::move(dir)),
      query_encoder_(std::move(query_encoder)) {}

EncodedPassage PrecomputedEncoder::encode_passage(const Passage& p) const {
  EncodedPassage out;
  out.matrix = read_token_matrix(dir_ + "/" + p.pid + ".tmat");
  if (out.matrix.dim() != config().dim) {
    throw Error("precomputed matrix for " + p.pid + " has dim " +
                std::to_string(out.matrix.dim()) + ", expected " + std::to_string(config().dim));
  }
  out.matrix.truncate(config().max_passage_tokens);
  // Sentence boundaries are unknown for externally produced matrices.
  return out;
}

EncodedQuery PrecomputedEncoder::encode_query(const MultiHopQuery& q) const {
  return query_encoder_->encode_query(q);
}

void PrecomputedEncoder::embed_token(std::string_view token, std::span<float> out) const {
  query_encoder_->embed_token(token, out);
}

void write_token_matrix(const std::string& path, const TokenMatrix& m) {
  std::string buf = "BTMX";
  const auto dim = static_cast<std::uint32_t>(m.dim());
  const auto rows = static_cast<std::uint32_t>(m.rows());
  buf.append(reinterpret_cast<const char*>(&dim), sizeof dim);
  buf.append(reinterpret_cast<const char*>(&rows), sizeof rows);
  buf.append(reinterpret_cast<const char*>(m.data().data()), m.data().size() * sizeof(float));
  write_file(path, buf);
}

TokenMatrix read_token_matrix(const std::string& path) {
  const std::string buf = read_file(path);
  if (buf.size() < 12 || buf.compare(0, 4, "BTMX") != 0) {
    throw Error(path + ": not a token matrix file");
  }
  std::uint32_t dim = 0;
  std::uint32_t rows = 0;
  std::memcpy(&dim, buf.data() + 4, sizeof dim);
  std::memcpy(&rows, buf.data() + 8, sizeof rows);
  const std::size_t need = 12 + static_cast<std::size_t>(dim) * rows * sizeof(float);
  if (dim == 0 || buf.size() != need) throw Error(path + ": truncated or oversized matrix");
  TokenMatrix m(rows, dim);
  std::memcpy(m.data().data(), buf.data() + 12, m.data().size() * sizeof(float));
  for (std::size_t r = 0; r < m.rows(); ++r) normalize_row(m.row(r));
  return m;
}

}  // namespace baleen
