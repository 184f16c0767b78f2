#include "baleen/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <unordered_map>

#include "baleen/encoder.hpp"
#include "baleen/util.hpp"
#include "json.hpp"

namespace baleen {

int retrieval_at_k(const std::vector<std::string>& ranked, const std::vector<std::string>& gold,
                   std::size_t k) {
  const std::set<std::string> top(ranked.begin(), ranked.begin() + std::min(k, ranked.size()));
  for (const auto& g : gold) {
    if (!top.count(g)) return 0;
  }
  return 1;
}

template <typename T>
SetScore set_em_f1(const std::vector<T>& predicted, const std::vector<T>& gold) {
  const std::set<T> p(predicted.begin(), predicted.end());
  const std::set<T> g(gold.begin(), gold.end());
  if (g.empty()) throw Error("set_em_f1: gold set is empty");
  std::size_t inter = 0;
  for (const auto& x : p) inter += g.count(x);
  SetScore s;
  s.em = p == g ? 1 : 0;
  if (inter == 0) return s;
  const double prec = static_cast<double>(inter) / static_cast<double>(p.size());
  const double rec = static_cast<double>(inter) / static_cast<double>(g.size());
  s.f1 = 2.0 * prec * rec / (prec + rec);
  if (s.em) s.f1 = 1.0;
  return s;
}

template SetScore set_em_f1(const std::vector<std::string>&, const std::vector<std::string>&);
template SetScore set_em_f1(const std::vector<SentenceRef>&, const std::vector<SentenceRef>&);

bool is_yes_no(const std::string& answer) {
  const auto n = normalize_text(answer);
  return n == "yes" || n == "no";
}

int answer_recall(const std::vector<std::string>& ranked, const std::string& answer,
                  const Corpus& corpus, std::size_t k) {
  const std::size_t n = std::min(k, ranked.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (contains_normalized(corpus.lookup(ranked[i]).full_text(), answer)) return 1;
  }
  return 0;
}

std::string to_string(PassageSource s) {
  switch (s) {
    case PassageSource::Auto: return "auto";
    case PassageSource::Condensed: return "condensed";
    case PassageSource::Rerank: return "rerank";
  }
  return "auto";
}

PassageSource passage_source_from_string(const std::string& s) {
  if (s == "auto") return PassageSource::Auto;
  if (s == "condensed") return PassageSource::Condensed;
  if (s == "rerank") return PassageSource::Rerank;
  throw Error("unknown passage source '" + s + "' (expected auto, condensed or rerank)");
}

void EvalConfig::validate() const {
  if (k == 0) throw Error("eval k must be positive");
  if (answer_k == 0) throw Error("eval answer_k must be positive");
}

namespace {

const HopTrace& pick_trace(const TraceRecord& t, PassageSource source) {
  const HopTrace* h = nullptr;
  switch (source) {
    case PassageSource::Auto:
      h = t.condensed ? &*t.condensed : (t.rerank ? &*t.rerank : nullptr);
      break;
    case PassageSource::Condensed:
      h = t.condensed ? &*t.condensed : nullptr;
      break;
    case PassageSource::Rerank:
      h = t.rerank ? &*t.rerank : nullptr;
      break;
  }
  if (!h) throw Error("trace " + t.qid + " has no " + to_string(source) + " sub-trace");
  return *h;
}

}  // namespace

std::vector<std::string> predicted_passages(const TraceRecord& t, PassageSource source) {
  const HopTrace& h = pick_trace(t, source);
  std::vector<std::string> out;
  if (h.variant == PipelineVariant::Rerank) {
    for (const auto& hop : h.hops) out.insert(out.end(), hop.context_pids.begin(), hop.context_pids.end());
  } else {
    for (const auto& f : h.final_facts) out.push_back(f.pid);
  }
  return out;
}

std::vector<SentenceRef> predicted_sentences(const TraceRecord& t, PassageSource source) {
  std::vector<SentenceRef> out;
  for (const auto& f : pick_trace(t, source).final_facts) out.emplace_back(f.pid, f.sentence_index);
  return out;
}

std::string stratum_of(const QueryRecord& q) {
  return q.num_hops ? std::to_string(*q.num_hops) + "-hop" : "unknown";
}

QueryMetrics score_query(const TraceRecord& trace, const QueryRecord& q, const Corpus& corpus,
                         const EvalConfig& cfg) {
  QueryMetrics m;
  m.stratum = stratum_of(q);
  const auto& ranked = trace.ranked_union();
  if (!q.gold_pids.empty()) {
    if (!cfg.supported_only || q.label.value_or(true)) {
      m.values["retrieval_at_k"] = retrieval_at_k(ranked, q.gold_pids, cfg.k);
    }
    const auto ps = set_em_f1(predicted_passages(trace, cfg.passage_source), q.gold_pids);
    m.values["passage_em"] = ps.em;
    m.values["passage_f1"] = ps.f1;
  }
  if (!q.gold_facts.empty()) {
    const auto ss = set_em_f1(predicted_sentences(trace, cfg.passage_source), q.gold_facts);
    m.values["sentence_em"] = ss.em;
    m.values["sentence_f1"] = ss.f1;
  }
  if (q.answer && !is_yes_no(*q.answer)) {
    m.values["answer_recall"] = answer_recall(ranked, *q.answer, corpus, cfg.answer_k);
  }
  if (trace.verdict && q.label) {
    m.values["verification_accuracy"] = *trace.verdict == *q.label ? 1.0 : 0.0;
  }
  return m;
}

MetricsReport evaluate_run(const std::vector<TraceRecord>& traces,
                           const std::vector<QueryRecord>& queries, const Corpus& corpus,
                           const EvalConfig& cfg) {
  cfg.validate();
  std::unordered_map<std::string, const TraceRecord*> by_qid;
  for (const auto& t : traces) by_qid.emplace(t.qid, &t);
  std::vector<std::string> missing;
  for (const auto& q : queries) {
    if (!by_qid.count(q.qid)) missing.push_back(q.qid);
  }
  if (!missing.empty()) {
    std::string msg = "traces missing " + std::to_string(missing.size()) + " query id(s):";
    for (const auto& id : missing) msg += " " + id;
    throw Error(msg);
  }

  std::vector<QueryMetrics> per(queries.size());
  parallel_for(queries.size(), cfg.threads, [&](std::size_t i) {
    per[i] = score_query(*by_qid.at(queries[i].qid), queries[i], corpus, cfg);
  });

  MetricsReport r;
  r.k = cfg.k;
  r.answer_k = cfg.answer_k;
  auto& all = r.strata["all"];
  for (const auto& m : per) {
    auto& s = r.strata[m.stratum];
    ++s.queries;
    ++all.queries;
    for (const auto& [name, v] : m.values) {
      s.metrics[name].add(v);
      all.metrics[name].add(v);
    }
  }
  return r;
}

namespace {

std::string pct(const Mean& m) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", 100.0 * m.value());
  return buf;
}

std::vector<std::string> stratum_order(const MetricsReport& r) {
  std::vector<std::string> names;
  for (const auto& [name, s] : r.strata) {
    if (name != "all") names.push_back(name);
  }
  names.push_back("all");
  return names;
}

}  // namespace

std::string MetricsReport::table() const {
  std::vector<std::string> header{"stratum", "n"};
  for (const char* m : kMetricNames) {
    std::string h = m;
    if (h == "retrieval_at_k") h = "retrieval@" + std::to_string(k);
    if (h == "answer_recall") h = "answer_recall@" + std::to_string(answer_k);
    header.push_back(h);
  }
  std::vector<std::vector<std::string>> rows{header};
  for (const auto& name : stratum_order(*this)) {
    const auto& s = strata.at(name);
    std::vector<std::string> row{name, std::to_string(s.queries)};
    for (const char* m : kMetricNames) {
      auto it = s.metrics.find(m);
      row.push_back(it == s.metrics.end() || it->second.count == 0 ? "-" : pct(it->second));
    }
    rows.push_back(std::move(row));
  }
  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::string out;
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out += "  ";
      out += c == 0 ? row[c] + std::string(width[c] - row[c].size(), ' ')
                    : std::string(width[c] - row[c].size(), ' ') + row[c];
    }
    out += "\n";
  }
  return out;
}

std::string MetricsReport::to_json() const {
  nlohmann::ordered_json j;
  j["k"] = k;
  j["answer_k"] = answer_k;
  nlohmann::ordered_json st = nlohmann::ordered_json::object();
  for (const auto& name : stratum_order(*this)) {
    const auto& s = strata.at(name);
    nlohmann::ordered_json sj;
    sj["queries"] = s.queries;
    for (const char* m : kMetricNames) {
      auto it = s.metrics.find(m);
      if (it == s.metrics.end()) continue;
      sj[m] = {{"value", it->second.value()}, {"count", it->second.count}};
    }
    st[name] = std::move(sj);
  }
  j["strata"] = std::move(st);
  return j.dump(2) + "\n";
}

}  // namespace baleen
