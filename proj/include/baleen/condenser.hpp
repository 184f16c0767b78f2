#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "baleen/corpus.hpp"
#include "baleen/query.hpp"

namespace baleen {

/// Document frequencies over titles and sentences of a corpus.
class IdfTable {
 public:
  explicit IdfTable(const Corpus& corpus);

  /// ln(1 + (N - df + 0.5) / (df + 0.5)); unseen tokens get df = 0.
  double idf(const std::string& token) const;
  std::size_t documents() const { return documents_; }

 private:
  std::size_t documents_ = 0;
  std::unordered_map<std::string, std::size_t> df_;
};

/// Scores one candidate sentence given the query text and the facts
/// accumulated so far.
class SentenceScorer {
 public:
  virtual ~SentenceScorer() = default;
  virtual std::string name() const = 0;
  virtual double score(const std::string& query_text, const std::vector<Fact>& facts,
                       const std::string& sentence) const = 0;
  /// Batch form; must equal calling score() per sentence.
  virtual std::vector<double> score_all(const std::string& query_text,
                                        const std::vector<Fact>& facts,
                                        const std::vector<std::string>& sentences) const;
};

/// IDF-weighted share of the sentence's distinct tokens that also occur in
/// Q_0 or an accumulated fact, minus a fixed offset. With offset 0 this is
/// the stage-1 scorer; with offset tau it is the stage-2 keep rule.
class LexicalOverlapScorer : public SentenceScorer {
 public:
  LexicalOverlapScorer(std::shared_ptr<const IdfTable> idf, double offset = 0.0);

  std::string name() const override { return "lexical"; }
  double score(const std::string& query_text, const std::vector<Fact>& facts,
               const std::string& sentence) const override;
  std::vector<double> score_all(const std::string& query_text, const std::vector<Fact>& facts,
                                const std::vector<std::string>& sentences) const override;

  double overlap(const std::unordered_set<std::string>& context,
                 const std::string& sentence) const;

 private:
  std::shared_ptr<const IdfTable> idf_;
  double offset_;
};

struct CondenserConfig {
  std::size_t stage1_top_k_facts = 9;
  double tau = 0.1;
  std::string scorer = "lexical";

  void validate() const;
};

/// Builds the stage-1 and stage-2 scorers registered under cfg.scorer.
struct ScorerPair {
  std::shared_ptr<const SentenceScorer> stage1;
  std::shared_ptr<const SentenceScorer> stage2;
};
ScorerPair make_scorers(const CondenserConfig& cfg, std::shared_ptr<const IdfTable> idf);

/// Two-stage per-hop fact extraction.
class Condenser {
 public:
  Condenser(CondenserConfig cfg, ScorerPair scorers);

  /// Every sentence of every passage scored; the top stage1_top_k_facts
  /// pooled across passages, by score desc then (pid, sentence index) asc.
  std::vector<Fact> stage1_extract(const MultiHopQuery& q,
                                   const std::vector<const Passage*>& passages) const;
  /// Joint filter: facts with a positive stage-2 score, by that score desc.
  std::vector<Fact> stage2_filter(const MultiHopQuery& q, std::vector<Fact> pooled) const;
  std::vector<Fact> condense(const MultiHopQuery& q,
                             const std::vector<const Passage*>& passages) const;

  const CondenserConfig& config() const { return cfg_; }

 private:
  CondenserConfig cfg_;
  ScorerPair scorers_;
};

}  // namespace baleen
