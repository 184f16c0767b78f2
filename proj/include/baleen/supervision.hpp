#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "baleen/corpus.hpp"
#include "baleen/query.hpp"
#include "baleen/retriever.hpp"

namespace baleen {

/// Positive-depth entry meaning "every gold within k_retrieve".
inline constexpr std::size_t kAllDepth = 0;

struct LhoConfig {
  std::size_t k_retrieve = 1000;  // negative sampling depth per hop
  std::vector<std::size_t> k_hat{20, kAllDepth, kAllDepth, kAllDepth};  // last entry repeats
  std::size_t facts_per_expansion = 5;
  std::string trainer = "identity";
  std::size_t results_per_vector = kResultsPerVectorTraining;
  FocusParams focus;
  CandidateSource candidate_source = CandidateSource::QueryAndFacts;
  std::vector<std::size_t> triple_caps{16};  // negatives per hop; last entry repeats
  /// Ablation: expand with random corpus sentences instead of P_t's facts.
  bool shuffled_expansion = false;
  std::uint64_t seed = 0;
  std::size_t threads = 1;

  /// Positive depth for 1-based hop t, with kAllDepth resolved.
  std::size_t positive_depth(std::size_t hop) const;
  void validate() const;
};

/// Round-1 and round-2 positive depths, four-hop claim verification.
LhoConfig lho_hover_round1();
LhoConfig lho_hover_round2();
/// Same for two-hop question answering.
LhoConfig lho_hotpotqa_round1();
LhoConfig lho_hotpotqa_round2();

struct HopSupervision {
  int hop = 0;
  std::vector<std::string> positives;  // P_t, in rank order
  std::vector<std::string> negatives;  // N_t, in rank order
  bool weak = false;                   // P_t came from the empty-intersection fallback
  MultiHopQuery query;                 // Q_{t-1}, the query used at hop t
};

struct QuerySupervision {
  std::string qid;
  std::vector<HopSupervision> hops;
  std::vector<std::string> unassigned;  // golds left after the last hop
};

struct SupervisionSet {
  std::vector<QuerySupervision> queries;
  std::size_t weak_hops() const;
};

struct TrainingTriple {
  std::string qid;
  int hop = 0;
  MultiHopQuery query;
  std::string positive;
  std::string negative;
};

/// Turns triples into a retriever. Implementations must be deterministic.
class Trainer {
 public:
  virtual ~Trainer() = default;
  virtual std::string name() const = 0;
  virtual Retriever train(const Retriever& base, std::span<const TrainingTriple> triples) const = 0;
};

/// Returns the base retriever unchanged.
class IdentityTrainer : public Trainer {
 public:
  std::string name() const override { return "identity"; }
  Retriever train(const Retriever& base, std::span<const TrainingTriple> triples) const override;
};

/// Down-weights query tokens that show up in negatives more than positives:
/// w(t) = clamp(sqrt((1 + pos(t)) / (1 + neg(t))), 0.1, 1).
class TermWeightTrainer : public Trainer {
 public:
  explicit TermWeightTrainer(const Corpus& corpus) : corpus_(corpus) {}
  std::string name() const override { return "term_weight"; }
  Retriever train(const Retriever& base, std::span<const TrainingTriple> triples) const override;

 private:
  const Corpus& corpus_;
};

std::unique_ptr<Trainer> make_trainer(const std::string& name, const Corpus& corpus);

struct Discovery {
  std::vector<std::string> positives;
  std::vector<std::string> negatives;
  bool weak = false;
};

/// Splits one ranking: positives are remaining golds within the top k_hat,
/// negatives every non-gold within the ranking. If no remaining gold makes
/// the cut, the best-ranked remaining gold is promoted and flagged weak
/// (the smallest remaining pid if none was ranked at all).
Discovery split_ranking(const std::vector<ScoredPassage>& ranked,
                        const std::vector<std::string>& remaining_gold,
                        const std::vector<std::string>& all_gold, std::size_t k_hat);

/// Retrieves the top k_retrieve for every query and splits each ranking.
std::vector<Discovery> discover_positives(const Retriever& retriever,
                                          const std::vector<MultiHopQuery>& queries,
                                          const std::vector<std::vector<std::string>>& remaining,
                                          const std::vector<std::vector<std::string>>& all_gold,
                                          std::size_t hop, const LhoConfig& cfg);

/// Oracle facts for one positive: its labeled gold sentences by index, or
/// its leading sentences when unlabeled, at most `depth` either way.
std::vector<Fact> oracle_facts(const Passage& p, const QueryRecord& q, std::size_t depth);

/// Q_t = Q_{t-1} + oracle facts of each positive, in positive order.
void expand_queries(std::vector<MultiHopQuery>& queries,
                    const std::vector<std::vector<std::string>>& positives,
                    const std::vector<QueryRecord>& records, const Corpus& corpus,
                    std::size_t facts_per_expansion);

struct LhoResult {
  SupervisionSet supervision;
  std::vector<TrainingTriple> triples;
  std::vector<std::string> warnings;
};

/// Latent hop ordering: for each hop, let the current retriever rank the
/// corpus, take its highly ranked remaining golds as that hop's positives,
/// expand the queries with their facts, and train the next hop's retriever
/// on the remaining golds as weak positives.
LhoResult latent_hop_ordering(const Corpus& corpus, const std::vector<QueryRecord>& queries,
                              std::size_t hops, const LhoConfig& cfg, const Retriever& first_hop,
                              const Trainer& trainer);

/// Title-overlap ordering baseline. Returns the hop sets in order.
std::vector<std::vector<std::string>> heuristic_order(const QueryRecord& query,
                                                      const Corpus& corpus);

/// 1.0 if the title's token sequence occurs in `text_tokens`, otherwise the
/// fraction of distinct title tokens present.
double title_overlap(const std::vector<std::string>& text_tokens, const std::string& title);

/// Pairs every positive with up to cap sampled negatives, per query and
/// hop. Sampling is seeded per (qid, hop).
std::vector<TrainingTriple> build_triples(const SupervisionSet& set,
                                          const std::vector<std::size_t>& caps,
                                          std::uint64_t seed);

using HopOrder = std::vector<std::vector<std::string>>;

struct OrderRecovery {
  std::size_t recovered = 0;
  std::size_t total = 0;
  double rate() const { return total == 0 ? 0.0 : static_cast<double>(recovered) / total; }
};

/// A gold counts as recovered when it is assigned to its planted hop by a
/// ranked (non-fallback) discovery.
OrderRecovery order_recovery(const SupervisionSet& set, const std::map<std::string, HopOrder>& truth);
OrderRecovery order_recovery(const std::map<std::string, HopOrder>& predicted,
                             const std::map<std::string, HopOrder>& truth);

std::map<std::string, HopOrder> read_order_file(const std::string& path);
void write_order_file(const std::string& path, const std::vector<std::string>& qids,
                      const std::map<std::string, HopOrder>& orders);

std::string supervision_to_jsonl(const SupervisionSet& set);
std::string triples_to_jsonl(const std::vector<TrainingTriple>& triples);

}  // namespace baleen
