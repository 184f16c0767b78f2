#pragma once

#include <optional>
#include <string>
#include <vector>

namespace baleen {

/// A sentence extracted from a retrieved passage, with provenance.
struct Fact {
  std::string pid;
  int sentence_index = 0;
  std::string text;
  double stage1_score = 0.0;
  std::optional<double> stage2_score;

  bool operator==(const Fact&) const = default;
};

/// Q_t: the original query text plus the facts accumulated over hops < t,
/// in hop order and, within a hop, in condenser rank order.
struct MultiHopQuery {
  std::string qid;
  std::string q0_text;
  std::vector<Fact> facts;
  int hop_index = 0;
};

}  // namespace baleen
