#include "baleen/synth.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <unordered_set>

#include "baleen/util.hpp"

namespace baleen {

std::size_t PlantSpec::min_corpus_size() const {
  return queries * (hops + distractors_per_query);
}

void PlantSpec::validate() const {
  if (hops < 2 || hops > 4) throw Error("synth hops must be in [2, 4]");
  if (queries == 0) throw Error("synth needs at least one query");
  if (bridge_token_count == 0) throw Error("bridge_token_count must be positive");
  if (claim_words < 2) throw Error("claim_words must be at least 2");
  if (distractor_shared > claim_words) {
    throw Error("distractor_shared exceeds claim_words");
  }
  if (sentences_per_passage < 2) throw Error("sentences_per_passage must be at least 2");
  if (corpus_size != 0 && corpus_size < min_corpus_size()) {
    throw Error("corpus_size " + std::to_string(corpus_size) + " below the " +
                std::to_string(min_corpus_size()) + " planted passages");
  }
}

namespace {

class WordSource {
 public:
  explicit WordSource(Rng& rng) : rng_(rng) {}

  /// A fresh lowercase word, never returned before.
  std::string unique() {
    for (;;) {
      std::string w = draw();
      if (used_.insert(w).second) return w;
    }
  }

 private:
  std::string draw() {
    const std::size_t len = 6 + rng_.uniform(4);
    std::string w(len, 'a');
    for (auto& c : w) c = static_cast<char>('a' + rng_.uniform(26));
    return w;
  }

  Rng& rng_;
  std::unordered_set<std::string> used_;
};

std::string join(const std::vector<std::string>& words) {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

std::string sentence(std::vector<std::string> words) {
  std::string s = join(words);
  if (!s.empty()) s[0] = static_cast<char>(s[0] - 'a' + 'A');
  return s + ".";
}

std::string title_case(const std::vector<std::string>& words) {
  std::vector<std::string> w = words;
  for (auto& x : w) x[0] = static_cast<char>(x[0] - 'a' + 'A');
  return join(w);
}

struct Draft {
  std::string title;
  std::vector<std::string> sentences;
  int query = -1;     // owning query, -1 for padding
  int hop = 0;        // 1-based planted hop; 0 for distractors and padding
  int bridge = -1;    // sentence index of the bridge sentence
};

}  // namespace

SynthData generate(const PlantSpec& spec) {
  spec.validate();
  Rng rng(derive_seed(spec.seed, "synth"));
  WordSource words(rng);

  const std::size_t total = std::max(spec.corpus_size, spec.min_corpus_size());
  // A wide vocabulary keeps chance overlaps between unrelated sentences rare,
  // and long filler sentences keep a single shared word under the keep
  // threshold of the reference condenser.
  std::vector<std::string> filler(std::max<std::size_t>(5000, 30 * total));
  for (auto& w : filler) w = words.unique();
  auto fill = [&](std::size_t n) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(filler[rng.uniform(filler.size())]);
    return out;
  };
  auto filler_sentence = [&] { return sentence(fill(11 + rng.uniform(4))); };
  // Padding for planted sentences is never reused, so those sentences share
  // exactly the tokens the plan gives them.
  auto fresh = [&](std::size_t n) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(words.unique());
    return out;
  };
  auto passage_with = [&](std::string title, std::string bridge_text) {
    Draft d;
    d.title = std::move(title);
    d.bridge = static_cast<int>(rng.uniform(spec.sentences_per_passage));
    for (std::size_t s = 0; s < spec.sentences_per_passage; ++s) {
      d.sentences.push_back(static_cast<int>(s) == d.bridge ? bridge_text : filler_sentence());
    }
    return d;
  };

  struct Plan {
    std::string text;
    std::string answer;
  };
  std::vector<Draft> drafts;
  std::vector<Plan> plans(spec.queries);
  for (std::size_t q = 0; q < spec.queries; ++q) {
    std::vector<std::vector<std::string>> ent(spec.hops);
    for (auto& e : ent) {
      for (std::size_t i = 0; i < spec.bridge_token_count; ++i) e.push_back(words.unique());
    }
    std::vector<std::string> claim;
    for (std::size_t i = 0; i < spec.claim_words; ++i) claim.push_back(words.unique());
    plans[q].answer = words.unique();

    std::vector<std::string> q0 = ent[0];
    q0.insert(q0.end(), claim.begin(), claim.end());
    plans[q].text = sentence(q0);

    for (std::size_t t = 0; t < spec.hops; ++t) {
      std::vector<std::string> b = ent[t];
      if (t == 0) b.insert(b.end(), claim.begin(), claim.begin() + 2);
      const auto pad = fresh(2 + rng.uniform(3));
      b.insert(b.end(), pad.begin(), pad.end());
      if (t + 1 < spec.hops) {
        b.insert(b.end(), ent[t + 1].begin(), ent[t + 1].end());
      } else {
        b.push_back(plans[q].answer);
      }
      Draft d = passage_with(title_case(ent[t]), sentence(b));
      d.query = static_cast<int>(q);
      d.hop = static_cast<int>(t + 1);
      drafts.push_back(std::move(d));
    }

    for (std::size_t k = 0; k < spec.distractors_per_query; ++k) {
      std::vector<std::string> shared = claim;
      rng.shuffle(shared);
      shared.resize(spec.distractor_shared);
      auto b = fresh(4 + rng.uniform(4));
      for (const auto& w : shared) b.insert(b.begin() + rng.uniform(b.size() + 1), w);
      Draft d = passage_with(title_case({words.unique(), words.unique()}), sentence(b));
      d.query = static_cast<int>(q);
      drafts.push_back(std::move(d));
    }
  }
  while (drafts.size() < total) {
    drafts.push_back(passage_with(title_case({words.unique(), words.unique()}), filler_sentence()));
  }

  rng.shuffle(drafts);
  SynthData out;
  out.queries.resize(spec.queries);
  std::vector<HopOrder> orders(spec.queries, HopOrder(spec.hops));
  const int width = total < 1000000 ? 6 : 9;
  for (std::size_t i = 0; i < drafts.size(); ++i) {
    char pid[32];
    std::snprintf(pid, sizeof pid, "p%0*zu", width, i);
    auto& d = drafts[i];
    out.passages.push_back({pid, d.title, d.sentences});
    if (d.hop > 0) {
      auto& q = out.queries[d.query];
      q.gold_pids.push_back(pid);
      q.gold_facts.emplace_back(pid, d.bridge);
      orders[d.query][d.hop - 1].push_back(pid);
    }
  }
  for (std::size_t q = 0; q < spec.queries; ++q) {
    char qid[32];
    std::snprintf(qid, sizeof qid, "q%05zu", q);
    auto& rec = out.queries[q];
    rec.qid = qid;
    rec.text = plans[q].text;
    rec.answer = plans[q].answer;
    rec.label = true;
    rec.num_hops = static_cast<int>(spec.hops);
    rng.shuffle(rec.gold_pids);
    out.order[qid] = orders[q];
  }
  return out;
}

SynthPaths write_synth(const SynthData& data, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path base(dir);
  SynthPaths p{(base / "corpus.jsonl").string(), (base / "queries.jsonl").string(),
               (base / "order.jsonl").string()};
  write_corpus(p.corpus, data.passages);
  write_queryset(p.queries, data.queries);
  std::vector<std::string> qids;
  for (const auto& q : data.queries) qids.push_back(q.qid);
  write_order_file(p.order, qids, data.order);
  return p;
}

}  // namespace baleen
