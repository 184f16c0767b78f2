#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <unordered_set>
#include <vector>

#include "baleen/encoder.hpp"
#include "baleen/index.hpp"
#include "baleen/query.hpp"
#include "baleen/scoring.hpp"

namespace baleen {

struct RetrievalConfig {
  std::size_t k = 25;
  std::size_t results_per_vector = kResultsPerVectorInference;
  FocusParams focus;
  CandidateSource candidate_source = CandidateSource::QueryAndFacts;
  std::unordered_set<std::string> exclude;
};

/// Candidate generation, then focused scoring of every surviving candidate.
/// Returns at most k passages ordered by (score desc, pid asc); excluded
/// pids never appear.
std::vector<ScoredPassage> retrieve(const EncodedQuery& eq, const TokenIndex& idx,
                                    const RetrievalConfig& cfg);

/// A query encoder paired with the index it searches. Trainers hand back a
/// Retriever with a different query encoder over the same index.
class Retriever {
 public:
  Retriever(std::shared_ptr<const Encoder> encoder, std::shared_ptr<const TokenIndex> index);

  std::vector<ScoredPassage> retrieve(const MultiHopQuery& q, const RetrievalConfig& cfg) const;

  const Encoder& encoder() const { return *encoder_; }
  const TokenIndex& index() const { return *index_; }
  std::shared_ptr<const Encoder> encoder_ptr() const { return encoder_; }
  std::shared_ptr<const TokenIndex> index_ptr() const { return index_; }

 private:
  std::shared_ptr<const Encoder> encoder_;
  std::shared_ptr<const TokenIndex> index_;
};

}  // namespace baleen
