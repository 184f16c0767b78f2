#pragma once

#include <memory>
#include <string>
#include <vector>

#include "baleen/corpus.hpp"
#include "baleen/encoder.hpp"
#include "baleen/index.hpp"
#include "baleen/util.hpp"

namespace testing {

/// Passages of random words drawn from a small vocabulary, so tokens repeat
/// across passages and rankings are non-trivial.
inline std::vector<baleen::Passage> word_corpus(std::size_t n, std::size_t words,
                                                std::uint64_t seed, std::size_t vocab = 300) {
  baleen::Rng r(seed);
  std::vector<baleen::Passage> out;
  for (std::size_t i = 0; i < n; ++i) {
    char pid[32];
    std::snprintf(pid, sizeof pid, "d%05zu", i);
    std::string s;
    for (std::size_t w = 0; w < words; ++w) s += "tok" + std::to_string(r.uniform(vocab)) + " ";
    out.push_back({pid, "t" + std::to_string(i), {s + "."}});
  }
  return out;
}

inline std::string word_query(std::size_t words, std::uint64_t seed, std::size_t vocab = 300) {
  baleen::Rng r(seed);
  std::string s;
  for (std::size_t w = 0; w < words; ++w) s += "tok" + std::to_string(r.uniform(vocab)) + " ";
  return s;
}

inline baleen::EncoderConfig enc_cfg(std::size_t dim = 32) {
  baleen::EncoderConfig c;
  c.dim = dim;
  c.seed = 99;
  return c;
}

}  // namespace testing
