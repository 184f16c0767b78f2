#include "baleen/pipeline.hpp"

#include <algorithm>
#include <set>
#include <unordered_set>

#include "baleen/util.hpp"
#include "json.hpp"
#include "json_io.hpp"

namespace baleen {

using namespace detail;

std::string to_string(PipelineVariant v) {
  switch (v) {
    case PipelineVariant::Condensed: return "condensed";
    case PipelineVariant::Rerank: return "rerank";
    case PipelineVariant::Hybrid: return "hybrid";
  }
  return "condensed";
}

PipelineVariant pipeline_variant_from_string(const std::string& s) {
  if (s == "condensed") return PipelineVariant::Condensed;
  if (s == "rerank") return PipelineVariant::Rerank;
  if (s == "hybrid") return PipelineVariant::Hybrid;
  throw Error("unknown pipeline variant: " + s);
}

void PipelineConfig::validate() const {
  if (hops_k.empty()) throw Error("pipeline needs at least one hop");
  for (auto k : hops_k) {
    if (k < 1) throw Error("per-hop k must be >= 1");
  }
  if (verifier != "none" && verifier != "all_hops_kept") {
    throw Error("unknown verifier: " + verifier);
  }
  retrieval.focus.validate();
  condenser.validate();
}

PipelineConfig hover_preset() {
  PipelineConfig cfg;
  cfg.hops_k = {25, 25, 25, 25};
  return cfg;
}

PipelineConfig hotpotqa_preset() {
  PipelineConfig cfg;
  cfg.hops_k = {10, 40};
  return cfg;
}

const std::vector<std::string>& TraceRecord::ranked_union() const {
  if (variant == PipelineVariant::Hybrid) return merged;
  if (variant == PipelineVariant::Rerank) return rerank.value().union_pids;
  return condensed.value().union_pids;
}

std::size_t RetrievalOrderScorer::select(const MultiHopQuery&,
                                         const std::vector<ScoredPassage>& ranked,
                                         const Corpus&) const {
  std::size_t best = 0;
  for (std::size_t i = 1; i < ranked.size(); ++i) {
    if (ranked[i].score > ranked[best].score) best = i;
  }
  return best;
}

std::size_t count_words(const std::string& text) {
  std::size_t words = 0;
  bool in_word = false;
  for (unsigned char c : text) {
    const bool space = c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
    if (!space && !in_word) ++words;
    in_word = !space;
  }
  return words;
}

Pipeline::Pipeline(const Corpus& corpus, Retriever retriever, Condenser condenser,
                   PipelineConfig cfg, std::shared_ptr<const PassageScorer> reranker)
    : corpus_(corpus),
      retriever_(std::move(retriever)),
      condenser_(std::move(condenser)),
      cfg_(std::move(cfg)),
      reranker_(reranker ? std::move(reranker) : std::make_shared<RetrievalOrderScorer>()) {
  cfg_.validate();
  if (corpus_.empty()) throw Error("pipeline over an empty corpus");
}

namespace {

struct HopLoop {
  MultiHopQuery query;
  std::set<std::string> excluded;
};

std::size_t fact_words(const std::vector<Fact>& facts) {
  std::size_t n = 0;
  for (const auto& f : facts) n += count_words(f.text);
  return n;
}

}  // namespace

HopTrace Pipeline::run_condensed(const QueryRecord& q) const {
  HopTrace trace;
  trace.variant = PipelineVariant::Condensed;
  HopLoop loop{{q.qid, q.text, {}, 0}, {}};
  for (std::size_t t = 0; t < cfg_.hops(); ++t) {
    HopRecord hop;
    hop.hop = static_cast<int>(t + 1);
    hop.k = cfg_.hops_k[t];
    hop.excluded.assign(loop.excluded.begin(), loop.excluded.end());

    RetrievalConfig rc = cfg_.retrieval;
    rc.k = hop.k;
    rc.exclude = {loop.excluded.begin(), loop.excluded.end()};
    hop.ranked = retriever_.retrieve(loop.query, rc);

    std::vector<const Passage*> passages;
    for (const auto& sp : hop.ranked) passages.push_back(&corpus_.lookup(sp.pid));
    hop.facts = condenser_.condense(loop.query, passages);

    for (const auto& sp : hop.ranked) {
      loop.excluded.insert(sp.pid);
      trace.union_pids.push_back(sp.pid);
    }
    trace.final_facts.insert(trace.final_facts.end(), hop.facts.begin(), hop.facts.end());
    if (cfg_.accumulate_facts) {
      loop.query.facts.insert(loop.query.facts.end(), hop.facts.begin(), hop.facts.end());
    }
    loop.query.hop_index = hop.hop;
    trace.hops.push_back(std::move(hop));
  }
  trace.final_query = std::move(loop.query);
  trace.context_words = fact_words(trace.final_query.facts);
  return trace;
}

HopTrace Pipeline::run_rerank(const QueryRecord& q) const {
  HopTrace trace;
  trace.variant = PipelineVariant::Rerank;
  HopLoop loop{{q.qid, q.text, {}, 0}, {}};
  for (std::size_t t = 0; t < cfg_.hops(); ++t) {
    HopRecord hop;
    hop.hop = static_cast<int>(t + 1);
    hop.k = cfg_.hops_k[t];
    hop.excluded.assign(loop.excluded.begin(), loop.excluded.end());

    RetrievalConfig rc = cfg_.retrieval;
    rc.k = hop.k;
    rc.exclude = {loop.excluded.begin(), loop.excluded.end()};
    hop.ranked = retriever_.retrieve(loop.query, rc);

    std::vector<Fact> context;
    if (!hop.ranked.empty()) {
      const auto& chosen = hop.ranked.at(reranker_->select(loop.query, hop.ranked, corpus_));
      const Passage& p = corpus_.lookup(chosen.pid);
      hop.context_pids.push_back(p.pid);
      for (std::size_t i = 0; i < p.sentences.size(); ++i) {
        context.push_back({p.pid, static_cast<int>(i), p.sentences[i], chosen.score, {}});
      }
    }
    for (const auto& sp : hop.ranked) {
      loop.excluded.insert(sp.pid);
      trace.union_pids.push_back(sp.pid);
    }
    trace.final_facts.insert(trace.final_facts.end(), context.begin(), context.end());
    if (cfg_.accumulate_facts) {
      loop.query.facts.insert(loop.query.facts.end(), context.begin(), context.end());
    }
    loop.query.hop_index = hop.hop;
    trace.hops.push_back(std::move(hop));
  }
  trace.final_query = std::move(loop.query);
  trace.context_words = fact_words(trace.final_query.facts);
  return trace;
}

TraceRecord Pipeline::run(const QueryRecord& q) const {
  TraceRecord rec;
  rec.qid = q.qid;
  rec.variant = cfg_.variant;
  if (cfg_.variant != PipelineVariant::Rerank) rec.condensed = run_condensed(q);
  if (cfg_.variant != PipelineVariant::Condensed) rec.rerank = run_rerank(q);
  if (cfg_.variant == PipelineVariant::Hybrid) {
    rec.merged = merge_hybrid(*rec.condensed, *rec.rerank, cfg_.hybrid_total);
  }
  if (cfg_.verifier == "all_hops_kept") {
    // Baseline verdict that only exercises the accuracy metric.
    bool all_kept = rec.condensed.has_value();
    if (rec.condensed) {
      for (const auto& h : rec.condensed->hops) all_kept = all_kept && !h.facts.empty();
    }
    rec.verdict = all_kept;
  }
  return rec;
}

std::vector<TraceRecord> Pipeline::run_all(const std::vector<QueryRecord>& queries) const {
  std::vector<TraceRecord> out(queries.size());
  parallel_for(queries.size(), cfg_.threads, [&](std::size_t i) { out[i] = run(queries[i]); });
  return out;
}

std::vector<std::string> merge_hybrid(const HopTrace& condensed, const HopTrace& rerank,
                                      std::size_t total, std::size_t first_share,
                                      std::size_t second_share) {
  if (condensed.hops.size() != rerank.hops.size()) {
    throw Error("merge_hybrid: traces have " + std::to_string(condensed.hops.size()) + " and " +
                std::to_string(rerank.hops.size()) + " hops");
  }
  const std::size_t hops = condensed.hops.size();
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  std::vector<std::size_t> cpos(hops, 0);
  std::vector<std::size_t> rpos(hops, 0);

  auto take = [&](const std::vector<ScoredPassage>& list, std::size_t& pos, std::size_t n) {
    std::size_t taken = 0;
    while (taken < n && pos < list.size()) {
      const auto& pid = list[pos++].pid;
      if (seen.insert(pid).second) {
        out.push_back(pid);
        ++taken;
      }
    }
    return taken;
  };

  for (std::size_t t = 0; t < hops && out.size() < total; ++t) {
    const auto& c = condensed.hops[t].ranked;
    const auto& r = rerank.hops[t].ranked;
    const std::size_t quota = std::min(first_share + second_share, total - out.size());
    std::size_t got = take(c, cpos[t], std::min(first_share, quota));
    got += take(r, rpos[t], std::min(second_share, quota - got));
    if (got < quota) got += take(c, cpos[t], quota - got);
    if (got < quota) take(r, rpos[t], quota - got);
  }
  for (std::size_t t = 0; t < hops && out.size() < total; ++t) {
    take(condensed.hops[t].ranked, cpos[t], total - out.size());
    take(rerank.hops[t].ranked, rpos[t], total - out.size());
  }
  return out;
}

std::vector<std::string> union_topk(const HopTrace& trace, const std::vector<std::size_t>& take) {
  if (take.size() != trace.hops.size()) throw Error("union_topk: one take per hop required");
  std::vector<std::string> out;
  for (std::size_t t = 0; t < take.size(); ++t) {
    const auto& hop = trace.hops[t];
    if (take[t] > hop.k) {
      throw Error("union_topk: take " + std::to_string(take[t]) + " exceeds hop " +
                  std::to_string(t + 1) + " k " + std::to_string(hop.k));
    }
    const std::size_t n = std::min(take[t], hop.ranked.size());
    for (std::size_t i = 0; i < n; ++i) out.push_back(hop.ranked[i].pid);
  }
  return out;
}

namespace {

ojson hop_trace_json(const HopTrace& t) {
  ojson j;
  ojson hops = ojson::array();
  for (const auto& h : t.hops) {
    ojson hj;
    hj["hop"] = h.hop;
    hj["k"] = h.k;
    hj["excluded"] = h.excluded;
    ojson ranked = ojson::array();
    for (const auto& sp : h.ranked) {
      ranked.push_back(
          {{"pid", sp.pid}, {"score", sp.score}, {"s_query", sp.s_query}, {"s_fact", sp.s_fact}});
    }
    hj["ranked"] = std::move(ranked);
    if (t.variant == PipelineVariant::Condensed) {
      hj["facts"] = facts_json(h.facts);
    } else {
      hj["context_pids"] = h.context_pids;
    }
    hops.push_back(std::move(hj));
  }
  j["hops"] = std::move(hops);
  j["union"] = t.union_pids;
  j["final_facts"] = facts_json(t.final_facts);
  j["final_query"] = {{"q0", t.final_query.q0_text}, {"facts", facts_json(t.final_query.facts)}};
  j["context_words"] = t.context_words;
  return j;
}

HopTrace hop_trace_from(const nlohmann::json& j, PipelineVariant variant, const std::string& qid) {
  HopTrace t;
  t.variant = variant;
  for (const auto& hj : j.at("hops")) {
    HopRecord h;
    h.hop = hj.at("hop").get<int>();
    h.k = hj.at("k").get<std::size_t>();
    h.excluded = hj.at("excluded").get<std::vector<std::string>>();
    for (const auto& sp : hj.at("ranked")) {
      h.ranked.push_back({sp.at("pid").get<std::string>(), sp.at("score").get<double>(),
                          sp.at("s_query").get<double>(), sp.at("s_fact").get<double>()});
    }
    if (hj.contains("facts")) h.facts = facts_from(hj.at("facts"));
    if (hj.contains("context_pids")) {
      h.context_pids = hj.at("context_pids").get<std::vector<std::string>>();
    }
    t.hops.push_back(std::move(h));
  }
  t.union_pids = j.at("union").get<std::vector<std::string>>();
  t.final_facts = facts_from(j.at("final_facts"));
  t.final_query.qid = qid;
  t.final_query.q0_text = j.at("final_query").at("q0").get<std::string>();
  t.final_query.facts = facts_from(j.at("final_query").at("facts"));
  t.final_query.hop_index = static_cast<int>(t.hops.size());
  t.context_words = j.at("context_words").get<std::size_t>();
  return t;
}

}  // namespace

std::string trace_to_jsonl(const TraceRecord& rec) {
  ojson j;
  j["qid"] = rec.qid;
  j["variant"] = to_string(rec.variant);
  switch (rec.variant) {
    case PipelineVariant::Condensed: {
      const ojson body = hop_trace_json(*rec.condensed);
      for (auto it = body.begin(); it != body.end(); ++it) j[it.key()] = it.value();
      break;
    }
    case PipelineVariant::Rerank: {
      const ojson body = hop_trace_json(*rec.rerank);
      for (auto it = body.begin(); it != body.end(); ++it) j[it.key()] = it.value();
      break;
    }
    case PipelineVariant::Hybrid:
      j["condensed"] = hop_trace_json(*rec.condensed);
      j["rerank"] = hop_trace_json(*rec.rerank);
      j["merged"] = rec.merged;
      break;
  }
  if (rec.verdict) j["verdict"] = *rec.verdict;
  return j.dump();
}

TraceRecord trace_from_json_line(const std::string& line) {
  const auto j = nlohmann::json::parse(line);
  TraceRecord rec;
  rec.qid = j.at("qid").get<std::string>();
  rec.variant = pipeline_variant_from_string(j.at("variant").get<std::string>());
  switch (rec.variant) {
    case PipelineVariant::Condensed:
      rec.condensed = hop_trace_from(j, rec.variant, rec.qid);
      break;
    case PipelineVariant::Rerank:
      rec.rerank = hop_trace_from(j, rec.variant, rec.qid);
      break;
    case PipelineVariant::Hybrid:
      rec.condensed = hop_trace_from(j.at("condensed"), PipelineVariant::Condensed, rec.qid);
      rec.rerank = hop_trace_from(j.at("rerank"), PipelineVariant::Rerank, rec.qid);
      rec.merged = j.at("merged").get<std::vector<std::string>>();
      break;
  }
  if (j.contains("verdict")) rec.verdict = j.at("verdict").get<bool>();
  return rec;
}

std::vector<TraceRecord> read_traces(const std::string& path) {
  std::vector<TraceRecord> out;
  for_each_line(path, [&](std::size_t lineno, const std::string& line) {
    try {
      out.push_back(trace_from_json_line(line));
    } catch (const nlohmann::json::exception& e) {
      throw Error(path + ":" + std::to_string(lineno) + ": malformed trace: " + e.what());
    }
  });
  return out;
}

void write_traces(const std::string& path, const std::vector<TraceRecord>& traces) {
  std::string out;
  for (const auto& t : traces) {
    out += trace_to_jsonl(t);
    out += '\n';
  }
  write_file(path, out);
}

}  // namespace baleen
