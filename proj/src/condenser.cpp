#include "baleen/condenser.hpp"

#include <algorithm>
#include <cmath>

#include "baleen/encoder.hpp"
#include "baleen/util.hpp"

namespace baleen {

namespace {

bool fact_before(double sa, const Fact& a, double sb, const Fact& b) {
  if (sa != sb) return sa > sb;
  if (a.pid != b.pid) return a.pid < b.pid;
  return a.sentence_index < b.sentence_index;
}

std::unordered_set<std::string> context_tokens(const std::string& query_text,
                                               const std::vector<Fact>& facts) {
  std::unordered_set<std::string> ctx;
  for (auto& t : tokenize(query_text)) ctx.insert(std::move(t));
  for (const auto& f : facts) {
    for (auto& t : tokenize(f.text)) ctx.insert(std::move(t));
  }
  return ctx;
}

}  // namespace

IdfTable::IdfTable(const Corpus& corpus) : documents_(corpus.size()) {
  for (const auto& p : corpus.passages()) {
    std::unordered_set<std::string> seen;
    for (auto& t : tokenize(p.title)) seen.insert(std::move(t));
    for (const auto& s : p.sentences) {
      for (auto& t : tokenize(s)) seen.insert(std::move(t));
    }
    for (const auto& t : seen) ++df_[t];
  }
}

double IdfTable::idf(const std::string& token) const {
  auto it = df_.find(token);
  const double df = it == df_.end() ? 0.0 : static_cast<double>(it->second);
  const double n = static_cast<double>(documents_);
  return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
}

std::vector<double> SentenceScorer::score_all(const std::string& query_text,
                                              const std::vector<Fact>& facts,
                                              const std::vector<std::string>& sentences) const {
  std::vector<double> out;
  out.reserve(sentences.size());
  for (const auto& s : sentences) out.push_back(score(query_text, facts, s));
  return out;
}

LexicalOverlapScorer::LexicalOverlapScorer(std::shared_ptr<const IdfTable> idf, double offset)
    : idf_(std::move(idf)), offset_(offset) {}

double LexicalOverlapScorer::overlap(const std::unordered_set<std::string>& context,
                                     const std::string& sentence) const {
  auto tokens = tokenize(sentence);
  std::sort(tokens.begin(), tokens.end());
  tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
  double matched = 0.0;
  double total = 0.0;
  for (const auto& t : tokens) {
    const double w = idf_->idf(t);
    total += w;
    if (context.count(t)) matched += w;
  }
  return total > 0.0 ? matched / total : 0.0;
}

double LexicalOverlapScorer::score(const std::string& query_text, const std::vector<Fact>& facts,
                                   const std::string& sentence) const {
  return overlap(context_tokens(query_text, facts), sentence) - offset_;
}

std::vector<double> LexicalOverlapScorer::score_all(
    const std::string& query_text, const std::vector<Fact>& facts,
    const std::vector<std::string>& sentences) const {
  const auto ctx = context_tokens(query_text, facts);
  std::vector<double> out;
  out.reserve(sentences.size());
  for (const auto& s : sentences) out.push_back(overlap(ctx, s) - offset_);
  return out;
}

void CondenserConfig::validate() const {
  if (stage1_top_k_facts < 1 || stage1_top_k_facts > 16) {
    throw Error("stage1_top_k_facts must be in [1, 16]");
  }
}

ScorerPair make_scorers(const CondenserConfig& cfg, std::shared_ptr<const IdfTable> idf) {
  if (cfg.scorer == "lexical") {
    return {std::make_shared<LexicalOverlapScorer>(idf, 0.0),
            std::make_shared<LexicalOverlapScorer>(idf, cfg.tau)};
  }
  throw Error("unknown sentence scorer: " + cfg.scorer);
}

Condenser::Condenser(CondenserConfig cfg, ScorerPair scorers)
    : cfg_(std::move(cfg)), scorers_(std::move(scorers)) {
  cfg_.validate();
  if (!scorers_.stage1 || !scorers_.stage2) throw Error("condenser needs both stage scorers");
}

std::vector<Fact> Condenser::stage1_extract(const MultiHopQuery& q,
                                            const std::vector<const Passage*>& passages) const {
  std::vector<Fact> pooled;
  for (const Passage* p : passages) {
    const auto scores = scorers_.stage1->score_all(q.q0_text, q.facts, p->sentences);
    for (std::size_t i = 0; i < p->sentences.size(); ++i) {
      Fact f;
      f.pid = p->pid;
      f.sentence_index = static_cast<int>(i);
      f.text = p->sentences[i];
      f.stage1_score = scores[i];
      pooled.push_back(std::move(f));
    }
  }
  const std::size_t keep = std::min(cfg_.stage1_top_k_facts, pooled.size());
  std::partial_sort(pooled.begin(), pooled.begin() + static_cast<std::ptrdiff_t>(keep),
                    pooled.end(), [](const Fact& a, const Fact& b) {
                      return fact_before(a.stage1_score, a, b.stage1_score, b);
                    });
  pooled.resize(keep);
  return pooled;
}

std::vector<Fact> Condenser::stage2_filter(const MultiHopQuery& q, std::vector<Fact> pooled) const {
  if (pooled.size() > cfg_.stage1_top_k_facts) {
    throw Error("stage 2 received more facts than stage1_top_k_facts");
  }
  std::vector<std::string> texts;
  texts.reserve(pooled.size());
  for (const auto& f : pooled) texts.push_back(f.text);
  const auto scores = scorers_.stage2->score_all(q.q0_text, q.facts, texts);
  std::vector<Fact> kept;
  for (std::size_t i = 0; i < pooled.size(); ++i) {
    pooled[i].stage2_score = scores[i];
    if (scores[i] > 0.0) kept.push_back(std::move(pooled[i]));
  }
  std::stable_sort(kept.begin(), kept.end(), [](const Fact& a, const Fact& b) {
    return fact_before(*a.stage2_score, a, *b.stage2_score, b);
  });
  return kept;
}

std::vector<Fact> Condenser::condense(const MultiHopQuery& q,
                                      const std::vector<const Passage*>& passages) const {
  return stage2_filter(q, stage1_extract(q, passages));
}

}  // namespace baleen
