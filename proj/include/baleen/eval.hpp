#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "baleen/corpus.hpp"
#include "baleen/pipeline.hpp"

namespace baleen {

/// 1 iff every gold pid is among the first k of ranked.
int retrieval_at_k(const std::vector<std::string>& ranked, const std::vector<std::string>& gold,
                   std::size_t k);

struct SetScore {
  int em = 0;
  double f1 = 0.0;
};

/// Duplicates are ignored on both sides. gold must be non-empty.
template <typename T>
SetScore set_em_f1(const std::vector<T>& predicted, const std::vector<T>& gold);

/// yes/no answers carry no span, so they are left out of answer recall.
bool is_yes_no(const std::string& answer);

/// 1 iff the normalized answer occurs on token boundaries in one of the
/// first k passages' full text.
int answer_recall(const std::vector<std::string>& ranked, const std::string& answer,
                  const Corpus& corpus, std::size_t k);

/// Which trace supplies the predicted passage set.
enum class PassageSource { Auto, Condensed, Rerank };

std::string to_string(PassageSource s);
PassageSource passage_source_from_string(const std::string& s);

struct EvalConfig {
  std::size_t k = 100;         // Retrieval@k depth
  std::size_t answer_k = 100;  // answer recall depth
  bool supported_only = false;  // Retrieval@k over supported (or unlabeled) queries only
  PassageSource passage_source = PassageSource::Auto;
  std::size_t threads = 1;

  void validate() const;
};

/// A mean kept as sum and count so strata add up exactly.
struct Mean {
  double sum = 0.0;
  std::size_t count = 0;

  void add(double v) {
    sum += v;
    ++count;
  }
  double value() const { return count == 0 ? 0.0 : sum / static_cast<double>(count); }
};

inline constexpr const char* kMetricNames[] = {
    "retrieval_at_k", "passage_em",    "passage_f1",           "sentence_em",
    "sentence_f1",    "answer_recall", "verification_accuracy"};

struct StratumMetrics {
  std::size_t queries = 0;
  std::map<std::string, Mean> metrics;  // keyed by kMetricNames; absent = never applicable
};

struct MetricsReport {
  std::size_t k = 0;
  std::size_t answer_k = 0;
  /// "all" plus one entry per hop-count stratum ("2-hop", ..., "unknown").
  std::map<std::string, StratumMetrics> strata;

  std::string table() const;
  std::string to_json() const;
};

/// Per-query values; absent metrics did not apply to that query.
struct QueryMetrics {
  std::string stratum;
  std::map<std::string, double> values;
};

/// Predicted passage set of a trace under `source`.
std::vector<std::string> predicted_passages(const TraceRecord& t, PassageSource source);
std::vector<SentenceRef> predicted_sentences(const TraceRecord& t, PassageSource source);

QueryMetrics score_query(const TraceRecord& trace, const QueryRecord& q, const Corpus& corpus,
                         const EvalConfig& cfg);

/// Throws Error listing every query id missing from traces.
MetricsReport evaluate_run(const std::vector<TraceRecord>& traces,
                           const std::vector<QueryRecord>& queries, const Corpus& corpus,
                           const EvalConfig& cfg);

std::string stratum_of(const QueryRecord& q);

}  // namespace baleen
