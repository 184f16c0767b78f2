#include "baleen/supervision.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "baleen/encoder.hpp"
#include "baleen/util.hpp"
#include "json.hpp"
#include "json_io.hpp"

namespace baleen {

using namespace detail;

std::size_t LhoConfig::positive_depth(std::size_t hop) const {
  if (k_hat.empty() || hop == 0) throw Error("positive depth needs a 1-based hop and k_hat");
  const std::size_t d = k_hat[std::min(hop, k_hat.size()) - 1];
  return d == kAllDepth ? k_retrieve : std::min(d, k_retrieve);
}

void LhoConfig::validate() const {
  if (k_retrieve == 0) throw Error("k_retrieve must be positive");
  if (k_hat.empty()) throw Error("k_hat needs at least one entry");
  for (std::size_t d : k_hat) {
    if (d != kAllDepth && d > k_retrieve) {
      throw Error("k_hat entry " + std::to_string(d) + " exceeds k_retrieve " +
                  std::to_string(k_retrieve));
    }
  }
  if (triple_caps.empty()) throw Error("triple_caps needs at least one entry");
  for (std::size_t c : triple_caps) {
    if (c == 0) throw Error("triple caps must be positive");
  }
  if (results_per_vector == 0) throw Error("results_per_vector must be positive");
  if (trainer != "identity" && trainer != "term_weight") {
    throw Error("unknown trainer '" + trainer + "'");
  }
}

LhoConfig lho_hover_round1() { return {}; }

LhoConfig lho_hover_round2() {
  LhoConfig c;
  c.k_hat = {10, 10, 10, kAllDepth};
  return c;
}

LhoConfig lho_hotpotqa_round1() {
  LhoConfig c;
  c.k_hat = {20, kAllDepth};
  return c;
}

LhoConfig lho_hotpotqa_round2() {
  LhoConfig c;
  c.k_hat = {10, kAllDepth};
  return c;
}

std::size_t SupervisionSet::weak_hops() const {
  std::size_t n = 0;
  for (const auto& q : queries) {
    for (const auto& h : q.hops) n += h.weak ? 1 : 0;
  }
  return n;
}

Retriever IdentityTrainer::train(const Retriever& base, std::span<const TrainingTriple>) const {
  return base;
}

Retriever TermWeightTrainer::train(const Retriever& base,
                                   std::span<const TrainingTriple> triples) const {
  std::unordered_map<std::string, std::unordered_set<std::string>> passage_tokens;
  auto tokens_of = [&](const std::string& pid) -> const std::unordered_set<std::string>& {
    auto it = passage_tokens.find(pid);
    if (it != passage_tokens.end()) return it->second;
    const auto toks = tokenize(corpus_.lookup(pid).full_text());
    return passage_tokens.emplace(pid, std::unordered_set<std::string>(toks.begin(), toks.end()))
        .first->second;
  };

  std::unordered_map<std::string, std::pair<std::size_t, std::size_t>> counts;  // (pos, neg)
  for (const auto& t : triples) {
    std::set<std::string> qtoks;
    for (auto& tok : tokenize(t.query.q0_text)) qtoks.insert(std::move(tok));
    for (const auto& f : t.query.facts) {
      for (auto& tok : tokenize(f.text)) qtoks.insert(std::move(tok));
    }
    const auto& pos = tokens_of(t.positive);
    const auto& neg = tokens_of(t.negative);
    for (const auto& tok : qtoks) {
      auto& c = counts[tok];
      c.first += pos.count(tok);
      c.second += neg.count(tok);
    }
  }

  std::unordered_map<std::string, float> weights;
  for (const auto& [tok, c] : counts) {
    const double w = std::sqrt((1.0 + c.first) / (1.0 + c.second));
    weights[tok] = static_cast<float>(std::clamp(w, 0.1, 1.0));
  }
  auto enc = std::make_shared<TermWeightedEncoder>(base.encoder_ptr(), std::move(weights));
  return Retriever(std::move(enc), base.index_ptr());
}

std::unique_ptr<Trainer> make_trainer(const std::string& name, const Corpus& corpus) {
  if (name == "identity") return std::make_unique<IdentityTrainer>();
  if (name == "term_weight") return std::make_unique<TermWeightTrainer>(corpus);
  throw Error("unknown trainer '" + name + "'");
}

Discovery split_ranking(const std::vector<ScoredPassage>& ranked,
                        const std::vector<std::string>& remaining_gold,
                        const std::vector<std::string>& all_gold, std::size_t k_hat) {
  const std::unordered_set<std::string> remaining(remaining_gold.begin(), remaining_gold.end());
  const std::unordered_set<std::string> gold(all_gold.begin(), all_gold.end());
  Discovery d;
  std::string first_ranked_gold;
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    const auto& pid = ranked[i].pid;
    if (remaining.count(pid)) {
      if (first_ranked_gold.empty()) first_ranked_gold = pid;
      if (i < k_hat) d.positives.push_back(pid);
    } else if (!gold.count(pid)) {
      d.negatives.push_back(pid);
    }
  }
  if (d.positives.empty() && !remaining_gold.empty()) {
    d.weak = true;
    d.positives.push_back(first_ranked_gold.empty()
                              ? *std::min_element(remaining_gold.begin(), remaining_gold.end())
                              : first_ranked_gold);
  }
  return d;
}

namespace {

RetrievalConfig lho_retrieval(const LhoConfig& cfg) {
  RetrievalConfig rc;
  rc.k = cfg.k_retrieve;
  rc.results_per_vector = cfg.results_per_vector;
  rc.focus = cfg.focus;
  rc.candidate_source = cfg.candidate_source;
  return rc;
}

std::vector<std::string> minus(const std::vector<std::string>& a,
                               const std::vector<std::string>& b) {
  const std::unordered_set<std::string> drop(b.begin(), b.end());
  std::vector<std::string> out;
  for (const auto& x : a) {
    if (!drop.count(x)) out.push_back(x);
  }
  return out;
}

std::vector<std::string> unique_golds(const QueryRecord& q) {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (const auto& p : q.gold_pids) {
    if (seen.insert(p).second) out.push_back(p);
  }
  return out;
}

// Random corpus sentences standing in for the oracle facts of P_t.
std::vector<Fact> random_facts(const Corpus& corpus, std::size_t n, Rng& rng) {
  std::vector<Fact> out;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& p = corpus.at(rng.uniform(corpus.size()));
    if (p.sentences.empty()) continue;
    const auto s = rng.uniform(p.sentences.size());
    out.push_back({p.pid, static_cast<int>(s), p.sentences[s], 0.0, std::nullopt});
  }
  return out;
}

}  // namespace

std::vector<Discovery> discover_positives(const Retriever& retriever,
                                          const std::vector<MultiHopQuery>& queries,
                                          const std::vector<std::vector<std::string>>& remaining,
                                          const std::vector<std::vector<std::string>>& all_gold,
                                          std::size_t hop, const LhoConfig& cfg) {
  if (queries.size() != remaining.size() || queries.size() != all_gold.size()) {
    throw Error("discover_positives: query and gold lists differ in length");
  }
  const std::size_t k_hat = cfg.positive_depth(hop);
  std::vector<Discovery> out(queries.size());
  parallel_for(queries.size(), cfg.threads, [&](std::size_t i) {
    if (remaining[i].empty()) return;
    RetrievalConfig rc = lho_retrieval(cfg);
    // Golds assigned at earlier hops are already known; keep them out of the
    // ranking the way inference excludes earlier hops' passages.
    for (const auto& g : minus(all_gold[i], remaining[i])) rc.exclude.insert(g);
    out[i] = split_ranking(retriever.retrieve(queries[i], rc), remaining[i], all_gold[i], k_hat);
  });
  return out;
}

std::vector<Fact> oracle_facts(const Passage& p, const QueryRecord& q, std::size_t depth) {
  std::vector<int> idx;
  for (const auto& [pid, s] : q.gold_facts) {
    if (pid == p.pid && s >= 0 && static_cast<std::size_t>(s) < p.sentences.size()) {
      idx.push_back(s);
    }
  }
  std::sort(idx.begin(), idx.end());
  idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
  if (idx.empty()) {
    for (std::size_t s = 0; s < p.sentences.size(); ++s) idx.push_back(static_cast<int>(s));
  }
  if (idx.size() > depth) idx.resize(depth);
  std::vector<Fact> out;
  for (int s : idx) out.push_back({p.pid, s, p.sentences[s], 0.0, std::nullopt});
  return out;
}

void expand_queries(std::vector<MultiHopQuery>& queries,
                    const std::vector<std::vector<std::string>>& positives,
                    const std::vector<QueryRecord>& records, const Corpus& corpus,
                    std::size_t facts_per_expansion) {
  for (std::size_t i = 0; i < queries.size(); ++i) {
    for (const auto& pid : positives[i]) {
      for (auto& f : oracle_facts(corpus.lookup(pid), records[i], facts_per_expansion)) {
        queries[i].facts.push_back(std::move(f));
      }
    }
    ++queries[i].hop_index;
  }
}

LhoResult latent_hop_ordering(const Corpus& corpus, const std::vector<QueryRecord>& queries,
                              std::size_t hops, const LhoConfig& cfg, const Retriever& first_hop,
                              const Trainer& trainer) {
  cfg.validate();
  if (hops == 0) throw Error("latent hop ordering needs at least one hop");
  LhoResult res;
  const std::size_t n = queries.size();

  std::vector<std::vector<std::string>> gold(n), remaining(n);
  std::vector<MultiHopQuery> q(n);
  std::size_t max_gold = 0;
  for (std::size_t i = 0; i < n; ++i) {
    gold[i] = unique_golds(queries[i]);
    remaining[i] = gold[i];
    max_gold = std::max(max_gold, gold[i].size());
    q[i] = {queries[i].qid, queries[i].text, {}, 0};
    res.supervision.queries.push_back({queries[i].qid, {}, {}});
  }
  if (hops < max_gold) {
    res.warnings.push_back("hops " + std::to_string(hops) + " < largest gold set " +
                           std::to_string(max_gold) + "; some golds will stay unassigned");
  }

  const std::uint64_t sampling = derive_seed(cfg.seed, "sampling");
  Retriever current = first_hop;
  for (std::size_t t = 1; t <= hops; ++t) {
    const auto found = discover_positives(current, q, remaining, gold, t, cfg);

    std::vector<std::vector<std::string>> positives(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (remaining[i].empty()) continue;
      HopSupervision h;
      h.hop = static_cast<int>(t);
      h.positives = found[i].positives;
      h.negatives = found[i].negatives;
      h.weak = found[i].weak;
      h.query = q[i];
      res.supervision.queries[i].hops.push_back(std::move(h));
      positives[i] = found[i].positives;
      remaining[i] = minus(remaining[i], positives[i]);
    }

    if (cfg.shuffled_expansion) {
      for (std::size_t i = 0; i < n; ++i) {
        std::size_t want = 0;
        for (const auto& pid : positives[i]) {
          want += oracle_facts(corpus.lookup(pid), queries[i], cfg.facts_per_expansion).size();
        }
        Rng rng(hash64(queries[i].qid + "#" + std::to_string(t), sampling));
        for (auto& f : random_facts(corpus, want, rng)) q[i].facts.push_back(std::move(f));
        ++q[i].hop_index;
      }
    } else {
      expand_queries(q, positives, queries, corpus, cfg.facts_per_expansion);
    }

    if (t == hops) break;
    // R_{t+1}: remaining golds act as weak positives for Q_t against N_t.
    SupervisionSet next;
    for (std::size_t i = 0; i < n; ++i) {
      if (remaining[i].empty() || positives[i].empty()) continue;
      const auto& hs = res.supervision.queries[i].hops.back();
      HopSupervision h{static_cast<int>(t + 1), remaining[i], hs.negatives, false, q[i]};
      next.queries.push_back({queries[i].qid, {std::move(h)}, {}});
    }
    const auto triples = build_triples(next, cfg.triple_caps, cfg.seed);
    current = trainer.train(first_hop, triples);
  }

  for (std::size_t i = 0; i < n; ++i) {
    res.supervision.queries[i].unassigned = remaining[i];
    if (!remaining[i].empty()) {
      res.warnings.push_back("query " + queries[i].qid + ": " +
                             std::to_string(remaining[i].size()) + " gold(s) unassigned");
    }
  }
  res.triples = build_triples(res.supervision, cfg.triple_caps, cfg.seed);
  return res;
}

double title_overlap(const std::vector<std::string>& text_tokens, const std::string& title) {
  const auto tt = tokenize(title);
  if (tt.empty()) return 0.0;
  if (std::search(text_tokens.begin(), text_tokens.end(), tt.begin(), tt.end()) !=
      text_tokens.end()) {
    return 1.0;
  }
  const std::unordered_set<std::string> have(text_tokens.begin(), text_tokens.end());
  const std::set<std::string> distinct(tt.begin(), tt.end());
  std::size_t hit = 0;
  for (const auto& t : distinct) hit += have.count(t);
  return static_cast<double>(hit) / static_cast<double>(distinct.size());
}

namespace {

struct Ordering {
  std::vector<std::vector<std::string>> hops;
  double score = 0.0;
};

void append_tokens(std::vector<std::string>& tokens, const Passage& p) {
  for (auto& t : tokenize(p.full_text())) tokens.push_back(std::move(t));
}

Ordering order_rec(const std::vector<std::string>& pool, const std::vector<std::string>& tokens,
                   const Corpus& corpus) {
  if (pool.empty()) return {};
  std::vector<double> score(pool.size());
  double best = 0.0;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    score[i] = title_overlap(tokens, corpus.lookup(pool[i]).title);
    best = std::max(best, score[i]);
  }

  if (best > 0.0) {
    std::vector<std::string> hop, rest;
    auto next = tokens;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (score[i] == best) {
        hop.push_back(pool[i]);
        append_tokens(next, corpus.lookup(pool[i]));
      } else {
        rest.push_back(pool[i]);
      }
    }
    Ordering o = order_rec(rest, next, corpus);
    o.hops.insert(o.hops.begin(), std::move(hop));
    o.score += best;
    return o;
  }

  // Nothing overlaps: try each passage as the next hop, keep the branch with
  // the most downstream overlap (first in gold order on ties).
  Ordering best_branch;
  bool have = false;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    std::vector<std::string> rest;
    for (std::size_t j = 0; j < pool.size(); ++j) {
      if (j != i) rest.push_back(pool[j]);
    }
    auto next = tokens;
    append_tokens(next, corpus.lookup(pool[i]));
    Ordering o = order_rec(rest, next, corpus);
    if (!have || o.score > best_branch.score) {
      o.hops.insert(o.hops.begin(), {pool[i]});
      best_branch = std::move(o);
      have = true;
    }
  }
  return best_branch;
}

}  // namespace

std::vector<std::vector<std::string>> heuristic_order(const QueryRecord& query,
                                                      const Corpus& corpus) {
  auto pool = unique_golds(query);
  if (pool.empty()) throw Error("heuristic_order: query " + query.qid + " has no gold passages");

  std::optional<std::string> last;
  if (query.answer) {
    std::vector<std::string> holders;
    for (const auto& pid : pool) {
      if (contains_normalized(corpus.lookup(pid).full_text(), *query.answer)) holders.push_back(pid);
    }
    if (holders.size() == 1 && pool.size() > 1) {
      last = holders[0];
      pool = minus(pool, holders);
    }
  }

  auto hops = order_rec(pool, tokenize(query.text), corpus).hops;
  if (last) hops.push_back({*last});
  return hops;
}

std::vector<TrainingTriple> build_triples(const SupervisionSet& set,
                                          const std::vector<std::size_t>& caps,
                                          std::uint64_t seed) {
  if (caps.empty()) throw Error("build_triples needs at least one cap");
  const std::uint64_t sampling = derive_seed(seed, "sampling");
  std::vector<TrainingTriple> out;
  for (const auto& q : set.queries) {
    for (const auto& h : q.hops) {
      if (h.positives.empty() || h.negatives.empty()) continue;
      const std::size_t cap = caps[std::min<std::size_t>(h.hop, caps.size()) - 1];
      auto negs = h.negatives;
      if (negs.size() > cap) {
        Rng rng(hash64(q.qid + "#" + std::to_string(h.hop), sampling));
        rng.shuffle(negs);
        negs.resize(cap);
      }
      for (const auto& p : h.positives) {
        for (const auto& n : negs) out.push_back({q.qid, h.hop, h.query, p, n});
      }
    }
  }
  return out;
}

namespace {

std::size_t planted_total(const HopOrder& order) {
  std::size_t n = 0;
  for (const auto& h : order) n += h.size();
  return n;
}

}  // namespace

OrderRecovery order_recovery(const SupervisionSet& set,
                             const std::map<std::string, HopOrder>& truth) {
  OrderRecovery r;
  for (const auto& q : set.queries) {
    auto it = truth.find(q.qid);
    if (it == truth.end()) continue;
    const auto& planted = it->second;
    r.total += planted_total(planted);
    for (std::size_t t = 0; t < planted.size() && t < q.hops.size(); ++t) {
      const auto& h = q.hops[t];
      if (h.weak) continue;
      for (const auto& pid : planted[t]) {
        r.recovered += std::count(h.positives.begin(), h.positives.end(), pid) > 0 ? 1 : 0;
      }
    }
  }
  return r;
}

OrderRecovery order_recovery(const std::map<std::string, HopOrder>& predicted,
                             const std::map<std::string, HopOrder>& truth) {
  OrderRecovery r;
  for (const auto& [qid, planted] : truth) {
    r.total += planted_total(planted);
    auto it = predicted.find(qid);
    if (it == predicted.end()) continue;
    const auto& pred = it->second;
    for (std::size_t t = 0; t < planted.size() && t < pred.size(); ++t) {
      for (const auto& pid : planted[t]) {
        r.recovered += std::count(pred[t].begin(), pred[t].end(), pid) > 0 ? 1 : 0;
      }
    }
  }
  return r;
}

std::map<std::string, HopOrder> read_order_file(const std::string& path) {
  std::map<std::string, HopOrder> out;
  for_each_line(path, [&](std::size_t lineno, const std::string& line) {
    try {
      const auto j = nlohmann::json::parse(line);
      const auto qid = j.at("qid").get<std::string>();
      if (!out.emplace(qid, j.at("hops").get<HopOrder>()).second) {
        throw Error("duplicate qid " + qid);
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(path + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  });
  return out;
}

void write_order_file(const std::string& path, const std::vector<std::string>& qids,
                      const std::map<std::string, HopOrder>& orders) {
  std::string out;
  for (const auto& qid : qids) {
    ojson j;
    j["qid"] = qid;
    j["hops"] = orders.at(qid);
    out += j.dump() + "\n";
  }
  write_file(path, out);
}

namespace {

ojson query_json(const MultiHopQuery& q) {
  return {{"q0", q.q0_text}, {"facts", facts_json(q.facts)}};
}

}  // namespace

std::string supervision_to_jsonl(const SupervisionSet& set) {
  std::string out;
  for (const auto& q : set.queries) {
    ojson j;
    j["qid"] = q.qid;
    ojson hops = ojson::array();
    for (const auto& h : q.hops) {
      ojson hj;
      hj["hop"] = h.hop;
      hj["positives"] = h.positives;
      hj["negatives"] = h.negatives;
      hj["weak"] = h.weak;
      hj["query"] = query_json(h.query);
      hops.push_back(std::move(hj));
    }
    j["hops"] = std::move(hops);
    j["unassigned"] = q.unassigned;
    out += j.dump() + "\n";
  }
  return out;
}

std::string triples_to_jsonl(const std::vector<TrainingTriple>& triples) {
  std::string out;
  for (const auto& t : triples) {
    ojson j;
    j["qid"] = t.qid;
    j["hop"] = t.hop;
    j["query"] = query_json(t.query);
    j["positive"] = t.positive;
    j["negative"] = t.negative;
    out += j.dump() + "\n";
  }
  return out;
}

}  // namespace baleen
