#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "baleen/condenser.hpp"
#include "baleen/corpus.hpp"
#include "baleen/query.hpp"
#include "baleen/retriever.hpp"

namespace baleen {

enum class PipelineVariant { Condensed, Rerank, Hybrid };

std::string to_string(PipelineVariant v);
PipelineVariant pipeline_variant_from_string(const std::string& s);

struct PipelineConfig {
  PipelineVariant variant = PipelineVariant::Condensed;
  std::vector<std::size_t> hops_k{25, 25, 25, 25};  // one entry per hop; T = size
  RetrievalConfig retrieval;  // k and exclude are set per hop
  CondenserConfig condenser;
  bool accumulate_facts = true;  // off: facts are extracted but never appended to Q_t
  std::size_t hybrid_total = 100;
  std::string verifier = "none";  // "none" | "all_hops_kept"
  std::size_t threads = 1;

  std::size_t hops() const { return hops_k.size(); }
  void validate() const;
};

/// Four hops of 25 (claim verification).
PipelineConfig hover_preset();
/// Two hops of 10 and 40 (question answering).
PipelineConfig hotpotqa_preset();

struct HopRecord {
  int hop = 0;
  std::size_t k = 0;
  std::vector<std::string> excluded;  // snapshot before the hop, sorted
  std::vector<ScoredPassage> ranked;
  std::vector<Fact> facts;                // condensed: kept facts
  std::vector<std::string> context_pids;  // rerank: passage added as context
};

struct HopTrace {
  PipelineVariant variant = PipelineVariant::Condensed;
  std::vector<HopRecord> hops;
  std::vector<std::string> union_pids;
  std::vector<Fact> final_facts;  // kept facts (rerank: context sentences), hop order
  MultiHopQuery final_query;
  std::size_t context_words = 0;
};

/// One output line: a single trace, or both sub-traces and the merge for
/// the hybrid variant.
struct TraceRecord {
  std::string qid;
  PipelineVariant variant = PipelineVariant::Condensed;
  std::optional<HopTrace> condensed;
  std::optional<HopTrace> rerank;
  std::vector<std::string> merged;  // hybrid only
  std::optional<bool> verdict;

  /// The passage list Retrieval@k reads: the merge for hybrid runs,
  /// otherwise the single trace's hop union.
  const std::vector<std::string>& ranked_union() const;
};

/// Picks the passage a rerank hop adds as context.
class PassageScorer {
 public:
  virtual ~PassageScorer() = default;
  /// Index into ranked of the chosen passage; ranked is non-empty.
  virtual std::size_t select(const MultiHopQuery& q, const std::vector<ScoredPassage>& ranked,
                             const Corpus& corpus) const = 0;
};

/// Uses the retriever's own score, so the choice is ranked[0].
class RetrievalOrderScorer : public PassageScorer {
 public:
  std::size_t select(const MultiHopQuery& q, const std::vector<ScoredPassage>& ranked,
                     const Corpus& corpus) const override;
};

std::size_t count_words(const std::string& text);

class Pipeline {
 public:
  Pipeline(const Corpus& corpus, Retriever retriever, Condenser condenser, PipelineConfig cfg,
           std::shared_ptr<const PassageScorer> reranker = nullptr);

  /// Each hop: retrieve k_t with every earlier hop's passages excluded,
  /// condense, append the kept facts to the query.
  HopTrace run_condensed(const QueryRecord& q) const;
  /// Each hop: retrieve k_t, add the selected passage's sentences as context.
  HopTrace run_rerank(const QueryRecord& q) const;
  TraceRecord run(const QueryRecord& q) const;
  /// Parallel over queries; output order is input order.
  std::vector<TraceRecord> run_all(const std::vector<QueryRecord>& queries) const;

  const PipelineConfig& config() const { return cfg_; }

 private:
  const Corpus& corpus_;
  Retriever retriever_;
  Condenser condenser_;
  PipelineConfig cfg_;
  std::shared_ptr<const PassageScorer> reranker_;
};

/// Per hop, the first `first_share` unseen pids from the condensed trace
/// then `second_share` from the rerank trace, each list advancing past
/// duplicates and covering for the other when it runs dry. Anything still
/// missing from `total` is back-filled hop-major from leftovers.
std::vector<std::string> merge_hybrid(const HopTrace& condensed, const HopTrace& rerank,
                                      std::size_t total = 100, std::size_t first_share = 13,
                                      std::size_t second_share = 12);

/// Concatenation of each hop's top take[t] pids.
std::vector<std::string> union_topk(const HopTrace& trace, const std::vector<std::size_t>& take);

std::string trace_to_jsonl(const TraceRecord& rec);
TraceRecord trace_from_json_line(const std::string& line);
std::vector<TraceRecord> read_traces(const std::string& path);
void write_traces(const std::string& path, const std::vector<TraceRecord>& traces);

}  // namespace baleen
