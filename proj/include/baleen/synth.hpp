#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "baleen/corpus.hpp"
#include "baleen/supervision.hpp"

namespace baleen {

/// Planted multi-hop benchmark. Each query names an entity E_1 plus a few
/// claim words. Gold g_1 is titled E_1 and has a bridge sentence naming
/// E_2; gold g_t is titled E_t and its bridge sentence names E_{t+1} (the
/// last one holds the answer instead). Later golds share nothing with the
/// query, so only the accumulated bridge sentences can reach them.
struct PlantSpec {
  std::size_t hops = 3;
  std::size_t queries = 100;
  std::size_t corpus_size = 0;  // 0 = golds + distractors, no padding
  std::size_t bridge_token_count = 3;  // tokens per entity name
  std::size_t claim_words = 4;
  std::size_t distractors_per_query = 4;
  std::size_t distractor_shared = 2;  // claim words each distractor repeats
  std::size_t sentences_per_passage = 3;
  std::uint64_t seed = 0;

  std::size_t min_corpus_size() const;
  void validate() const;
};

struct SynthData {
  std::vector<Passage> passages;  // pid order
  std::vector<QueryRecord> queries;
  std::map<std::string, HopOrder> order;
};

SynthData generate(const PlantSpec& spec);

struct SynthPaths {
  std::string corpus;
  std::string queries;
  std::string order;
};

/// Writes corpus.jsonl, queries.jsonl and order.jsonl under dir.
SynthPaths write_synth(const SynthData& data, const std::string& dir);

}  // namespace baleen
