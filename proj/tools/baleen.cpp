// baleen: command-line front end over the retrieval, pipeline,
// supervision, eval and synth modules.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "baleen/config.hpp"
#include "baleen/condenser.hpp"
#include "baleen/corpus.hpp"
#include "baleen/encoder.hpp"
#include "baleen/eval.hpp"
#include "baleen/index.hpp"
#include "baleen/pipeline.hpp"
#include "baleen/retriever.hpp"
#include "baleen/supervision.hpp"
#include "baleen/synth.hpp"
#include "baleen/util.hpp"

namespace {

using namespace baleen;

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

/// Bad input the user can fix from the command line or config file.
struct UsageError : Error {
  using Error::Error;
};

void log(const std::string& msg) { std::cerr << "[baleen] " << msg << "\n"; }

/// Flags that land in the config document under a JSON pointer, applied
/// only when given on the command line or through the environment.
class Flags {
 public:
  explicit Flags(CLI::App* app) : app_(app) {}

  template <typename T>
  CLI::Option* add(const std::string& name, const std::string& pointer, const std::string& desc) {
    auto v = std::make_shared<T>();
    CLI::Option* opt = app_->add_option(name, *v, desc);
    setters_.push_back([opt, v, pointer](Json& j) {
      if (opt->count() > 0) j[Json::json_pointer(pointer)] = *v;
    });
    return opt;
  }

  CLI::Option* set_bool(const std::string& name, const std::string& pointer, bool value,
                        const std::string& desc) {
    CLI::Option* opt = app_->add_flag(name, desc);
    setters_.push_back([opt, pointer, value](Json& j) {
      if (opt->count() > 0) j[Json::json_pointer(pointer)] = value;
    });
    return opt;
  }

  Json overlay() const {
    Json j = Json::object();
    for (const auto& s : setters_) s(j);
    return j;
  }

  std::string config_path;

 private:
  CLI::App* app_;
  std::vector<std::function<void(Json&)>> setters_;
};

void add_common(Flags& f, CLI::App* app) {
  app->add_option("--config", f.config_path, "JSON config document")->envname("BALEEN_CONFIG");
  f.add<std::string>("--preset", "/preset", "built-in or user preset name")
      ->envname("BALEEN_PRESET");
  f.add<std::uint64_t>("--seed", "/seed", "root seed")->envname("BALEEN_SEED");
  f.add<std::size_t>("--threads", "/threads", "worker threads (0 = all cores)")
      ->envname("BALEEN_THREADS");
}

RunConfig resolve(const Flags& f, Json* resolved_out = nullptr) {
  Json file = Json::object();
  if (!f.config_path.empty()) {
    if (!std::filesystem::exists(f.config_path)) {
      throw UsageError("config file not found: " + f.config_path);
    }
    try {
      file = Json::parse(read_file(f.config_path));
    } catch (const nlohmann::json::exception& e) {
      throw UsageError(f.config_path + ": " + e.what());
    }
  }
  Json resolved;
  RunConfig cfg;
  try {
    resolved = resolve_config(file, f.overlay());
    cfg = config_from_json(resolved);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  log("resolved config: " + resolved.dump());
  if (resolved_out) *resolved_out = resolved;
  cfg.finalize();
  return cfg;
}

const std::string& need(const std::string& path, const std::string& what) {
  if (path.empty()) throw UsageError("missing " + what + " path");
  return path;
}

const std::string& need_file(const std::string& path, const std::string& what) {
  need(path, what);
  if (!std::filesystem::is_regular_file(path)) throw UsageError(what + " not found: " + path);
  return path;
}

/// The index at paths.index if set, otherwise one built in memory from the
/// corpus with the configured encoder and index settings.
std::shared_ptr<const TokenIndex> open_index(const RunConfig& cfg, const Corpus& corpus) {
  if (!cfg.paths.index.empty()) {
    need_file(cfg.paths.index, "index");
    auto idx = std::make_shared<TokenIndex>(load_index(cfg.paths.index));
    if (!(idx->encoder_config() == cfg.encoder)) {
      log("index carries its own encoder settings; using them");
    }
    return idx;
  }
  LexicalEncoder enc(cfg.encoder);
  return std::make_shared<TokenIndex>(build_index(corpus, enc, cfg.index));
}

Retriever open_retriever(std::shared_ptr<const TokenIndex> idx) {
  auto enc = std::make_shared<LexicalEncoder>(idx->encoder_config());
  return Retriever(std::move(enc), std::move(idx));
}

int cmd_build_index(const Flags& f) {
  const RunConfig cfg = resolve(f);
  const Corpus corpus = load_corpus(need_file(cfg.paths.corpus, "corpus"));
  need(cfg.paths.index, "index output");
  LexicalEncoder enc(cfg.encoder);
  const TokenIndex idx = build_index(corpus, enc, cfg.index);
  save_index(idx, cfg.paths.index);
  std::cout << "passages=" << idx.passage_count() << " total_vectors=" << idx.total_vectors()
            << " dim=" << idx.dim() << " variant=" << to_string(idx.variant())
            << " centroids=" << idx.centroid_count() << " nprobe=" << idx.nprobe() << "\n";
  return 0;
}

int cmd_retrieve(const Flags& f, const std::string& text, std::size_t k) {
  const RunConfig cfg = resolve(f);
  std::vector<MultiHopQuery> queries;
  if (!text.empty()) {
    queries.push_back({"query", text, {}, 0});
  } else {
    for (const auto& q : read_queryset(need_file(cfg.paths.queries, "queries"))) {
      queries.push_back({q.qid, q.text, {}, 0});
    }
  }
  need_file(cfg.paths.index, "index");
  const Retriever retriever = open_retriever(std::make_shared<TokenIndex>(load_index(cfg.paths.index)));
  RetrievalConfig rc = cfg.pipeline.retrieval;
  rc.k = k;

  std::vector<std::string> lines(queries.size());
  parallel_for(queries.size(), cfg.threads, [&](std::size_t i) {
    Json j;
    j["qid"] = queries[i].qid;
    Json ranked = Json::array();
    for (const auto& sp : retriever.retrieve(queries[i], rc)) {
      ranked.push_back({{"pid", sp.pid}, {"score", sp.score}});
    }
    j["ranked"] = std::move(ranked);
    lines[i] = j.dump() + "\n";
  });
  std::string out;
  for (const auto& l : lines) out += l;
  if (cfg.paths.out.empty()) {
    std::cout << out;
  } else {
    write_file(cfg.paths.out, out);
  }
  return 0;
}

int cmd_run(const Flags& f) {
  Json resolved;
  const RunConfig cfg = resolve(f, &resolved);
  const Corpus corpus = load_corpus(need_file(cfg.paths.corpus, "corpus"));
  const auto queries = load_queryset(need_file(cfg.paths.queries, "queries"), corpus);
  need(cfg.paths.out, "trace output");

  Retriever retriever = open_retriever(open_index(cfg, corpus));
  auto idf = std::make_shared<IdfTable>(corpus);
  Condenser condenser(cfg.pipeline.condenser, make_scorers(cfg.pipeline.condenser, idf));
  Pipeline pipeline(corpus, std::move(retriever), std::move(condenser), cfg.pipeline);

  const auto traces = pipeline.run_all(queries);
  write_traces(cfg.paths.out, traces);
  write_file(cfg.paths.out + ".config.json", resolved.dump(2) + "\n");
  std::cout << "queries=" << traces.size() << " hops=" << cfg.pipeline.hops()
            << " variant=" << to_string(cfg.pipeline.variant) << " traces=" << cfg.paths.out
            << "\n";
  return 0;
}

int cmd_lho(const Flags& f) {
  const RunConfig cfg = resolve(f);
  const Corpus corpus = load_corpus(need_file(cfg.paths.corpus, "corpus"));
  const auto queries = load_queryset(need_file(cfg.paths.queries, "queries"), corpus);
  need(cfg.paths.out, "supervision output");

  const Retriever first = open_retriever(open_index(cfg, corpus));
  const auto trainer = make_trainer(cfg.lho.trainer, corpus);
  const auto res = latent_hop_ordering(corpus, queries, cfg.lho_hops, cfg.lho, first, *trainer);
  for (const auto& w : res.warnings) log("warning: " + w);

  write_file(cfg.paths.out, supervision_to_jsonl(res.supervision));
  if (!cfg.paths.triples.empty()) write_file(cfg.paths.triples, triples_to_jsonl(res.triples));
  std::cout << "queries=" << queries.size() << " hops=" << cfg.lho_hops
            << " weak_hops=" << res.supervision.weak_hops() << " triples=" << res.triples.size()
            << "\n";
  if (!cfg.paths.order.empty()) {
    const auto rec = order_recovery(res.supervision, read_order_file(need_file(cfg.paths.order, "order")));
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.1f", 100.0 * rec.rate());
    std::cout << "order_recovery=" << buf << "% (" << rec.recovered << "/" << rec.total << ")\n";
  }
  return 0;
}

int cmd_heuristic_order(const Flags& f, const std::string& truth) {
  const RunConfig cfg = resolve(f);
  const Corpus corpus = load_corpus(need_file(cfg.paths.corpus, "corpus"));
  const auto queries = load_queryset(need_file(cfg.paths.queries, "queries"), corpus);
  need(cfg.paths.out, "order output");

  std::map<std::string, HopOrder> orders;
  std::vector<std::string> qids;
  for (const auto& q : queries) {
    if (q.gold_pids.empty()) {
      log("warning: query " + q.qid + " has no gold passages; skipped");
      continue;
    }
    orders[q.qid] = heuristic_order(q, corpus);
    qids.push_back(q.qid);
  }
  write_order_file(cfg.paths.out, qids, orders);
  std::cout << "queries=" << qids.size() << " order=" << cfg.paths.out << "\n";
  if (!truth.empty()) {
    const auto rec = order_recovery(orders, read_order_file(need_file(truth, "truth order")));
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.1f", 100.0 * rec.rate());
    std::cout << "order_recovery=" << buf << "% (" << rec.recovered << "/" << rec.total << ")\n";
  }
  return 0;
}

int cmd_eval(const Flags& f) {
  const RunConfig cfg = resolve(f);
  const Corpus corpus = load_corpus(need_file(cfg.paths.corpus, "corpus"));
  const auto queries = load_queryset(need_file(cfg.paths.queries, "queries"), corpus);
  const auto traces = read_traces(need_file(cfg.paths.traces, "traces"));
  const auto report = evaluate_run(traces, queries, corpus, cfg.eval);
  std::cout << report.table();
  if (!cfg.paths.out.empty()) write_file(cfg.paths.out, report.to_json());
  return 0;
}

int cmd_synth(const Flags& f) {
  const RunConfig cfg = resolve(f);
  need(cfg.paths.out, "output directory");
  const auto paths = write_synth(generate(cfg.synth), cfg.paths.out);
  std::cout << paths.corpus << "\n" << paths.queries << "\n" << paths.order << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Condensed multi-hop retrieval with focused late interaction"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "baleen 1.0");

  std::vector<std::unique_ptr<Flags>> all;
  auto sub = [&](const std::string& name, const std::string& desc) {
    CLI::App* s = app.add_subcommand(name, desc);
    all.push_back(std::make_unique<Flags>(s));
    add_common(*all.back(), s);
    return std::make_pair(s, all.back().get());
  };

  auto [build, fb] = sub("build-index", "encode a corpus and save the token index");
  fb->add<std::string>("--corpus", "/paths/corpus", "corpus JSONL");
  fb->add<std::string>("--out,--index", "/paths/index", "index file to write");
  fb->add<std::string>("--variant", "/index/variant", "flat or ivf");
  fb->add<std::size_t>("--centroids", "/index/centroid_count", "IVF centroid count (0 = auto)");
  fb->add<std::size_t>("--nprobe", "/index/nprobe", "IVF lists probed per vector (0 = auto)");
  fb->add<std::size_t>("--dim", "/encoder/dim", "embedding dimension");

  auto [ret, fr] = sub("retrieve", "rank passages for one query or a query set");
  std::string query_text;
  std::size_t retrieve_k = 25;
  fr->add<std::string>("--index", "/paths/index", "index file");
  fr->add<std::string>("--queries", "/paths/queries", "query set JSONL");
  fr->add<std::string>("--out", "/paths/out", "output JSONL (default stdout)");
  ret->add_option("--query", query_text, "query text");
  ret->add_option("--k", retrieve_k, "passages to return")->check(CLI::PositiveNumber);

  auto [run, fp] = sub("run", "run the multi-hop pipeline and write traces");
  fp->add<std::string>("--corpus", "/paths/corpus", "corpus JSONL");
  fp->add<std::string>("--queries", "/paths/queries", "query set JSONL");
  fp->add<std::string>("--index", "/paths/index", "index file (built in memory if absent)");
  fp->add<std::string>("--out", "/paths/out", "trace JSONL to write");
  fp->add<std::string>("--variant", "/pipeline/variant", "condensed, rerank or hybrid");
  fp->add<std::vector<std::size_t>>("--hops-k", "/pipeline/hops_k", "passages per hop");
  fp->set_bool("--no-accumulate", "/pipeline/accumulate_facts", false,
               "extract facts but never append them to the query");
  fp->add<std::string>("--verifier", "/pipeline/verifier", "none or all_hops_kept");

  auto [lho, fl] = sub("lho", "latent hop ordering: per-hop positives and negatives");
  fl->add<std::string>("--corpus", "/paths/corpus", "corpus JSONL");
  fl->add<std::string>("--queries", "/paths/queries", "query set JSONL");
  fl->add<std::string>("--index", "/paths/index", "index file (built in memory if absent)");
  fl->add<std::string>("--out", "/paths/out", "supervision JSONL to write");
  fl->add<std::string>("--triples", "/paths/triples", "training triples JSONL to write");
  fl->add<std::string>("--order", "/paths/order", "planted order JSONL to score against");
  fl->add<std::size_t>("--hops", "/supervision/hops", "hops to run");
  fl->add<std::vector<std::size_t>>("--k-hat", "/supervision/k_hat",
                                    "positive depth per hop (0 = all)");
  fl->add<std::size_t>("--k-retrieve", "/supervision/k_retrieve", "negative sampling depth");
  fl->add<std::string>("--trainer", "/supervision/trainer", "identity or term_weight");
  fl->set_bool("--shuffled-expansion", "/supervision/shuffled_expansion", true,
               "expand with random sentences (ablation)");

  auto [heur, fh] = sub("heuristic-order", "order gold passages by title overlap");
  std::string truth;
  fh->add<std::string>("--corpus", "/paths/corpus", "corpus JSONL");
  fh->add<std::string>("--queries", "/paths/queries", "query set JSONL");
  fh->add<std::string>("--out", "/paths/out", "order JSONL to write");
  heur->add_option("--truth", truth, "planted order JSONL to score against");

  auto [ev, fe] = sub("eval", "score traces against gold data");
  fe->add<std::string>("--corpus", "/paths/corpus", "corpus JSONL");
  fe->add<std::string>("--queries", "/paths/queries", "query set JSONL");
  fe->add<std::string>("--traces", "/paths/traces", "trace JSONL");
  fe->add<std::string>("--out", "/paths/out", "metrics JSON to write");
  fe->add<std::size_t>("--k", "/eval/k", "Retrieval@k depth");
  fe->add<std::size_t>("--answer-k", "/eval/answer_k", "answer recall depth");
  fe->set_bool("--supported-only", "/eval/supported_only", true,
               "Retrieval@k over supported claims only");
  fe->add<std::string>("--passage-source", "/eval/passage_source", "auto, condensed or rerank");

  auto [syn, fs] = sub("synth", "generate a planted multi-hop benchmark");
  fs->add<std::string>("--out", "/paths/out", "output directory");
  fs->add<std::size_t>("--hops", "/synth/hops", "hops per query (2-4)");
  fs->add<std::size_t>("--queries", "/synth/queries", "query count");
  fs->add<std::size_t>("--corpus-size", "/synth/corpus_size", "total passages (0 = minimum)");
  fs->add<std::size_t>("--distractors", "/synth/distractors_per_query", "distractors per query");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (build->parsed()) return cmd_build_index(*fb);
    if (ret->parsed()) return cmd_retrieve(*fr, query_text, retrieve_k);
    if (run->parsed()) return cmd_run(*fp);
    if (lho->parsed()) return cmd_lho(*fl);
    if (heur->parsed()) return cmd_heuristic_order(*fh, truth);
    if (ev->parsed()) return cmd_eval(*fe);
    if (syn->parsed()) return cmd_synth(*fs);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
