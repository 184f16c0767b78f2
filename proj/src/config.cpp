#include "baleen/config.hpp"

#include "baleen/util.hpp"

namespace baleen {

void RunConfig::finalize() {
  threads = resolve_threads(threads);
  encoder.seed = derive_seed(seed, "encoder");
  index.seed = derive_seed(seed, "kmeans");
  index.threads = threads;
  pipeline.threads = threads;
  lho.seed = seed;
  lho.threads = threads;
  eval.threads = threads;
  synth.seed = seed;
}

Json config_to_json(const RunConfig& c) {
  Json j;
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  j["preset"] = "";
  j["presets"] = Json::object();
  j["paths"] = {{"corpus", c.paths.corpus},   {"queries", c.paths.queries},
                {"index", c.paths.index},     {"out", c.paths.out},
                {"traces", c.paths.traces},   {"order", c.paths.order},
                {"triples", c.paths.triples}};
  j["encoder"] = {{"dim", c.encoder.dim},
                  {"max_passage_tokens", c.encoder.max_passage_tokens},
                  {"max_query_tokens", c.encoder.max_query_tokens},
                  {"max_overall_tokens", c.encoder.max_overall_tokens}};
  j["index"] = {{"variant", to_string(c.index.variant)},
                {"centroid_count", c.index.centroid_count},
                {"nprobe", c.index.nprobe},
                {"kmeans_iterations", c.index.kmeans_iterations},
                {"sample_factor", c.index.sample_factor}};
  const auto& r = c.pipeline.retrieval;
  j["retrieval"] = {{"results_per_vector", r.results_per_vector},
                    {"n_hat", r.focus.n_hat},
                    {"l_hat", r.focus.l_hat},
                    {"candidate_source", to_string(r.candidate_source)}};
  const auto& cd = c.pipeline.condenser;
  j["condenser"] = {{"stage1_top_k_facts", cd.stage1_top_k_facts},
                    {"tau", cd.tau},
                    {"scorer", cd.scorer}};
  j["pipeline"] = {{"variant", to_string(c.pipeline.variant)},
                   {"hops_k", c.pipeline.hops_k},
                   {"accumulate_facts", c.pipeline.accumulate_facts},
                   {"hybrid_total", c.pipeline.hybrid_total},
                   {"verifier", c.pipeline.verifier}};
  j["supervision"] = {{"hops", c.lho_hops},
                      {"k_retrieve", c.lho.k_retrieve},
                      {"k_hat", c.lho.k_hat},
                      {"facts_per_expansion", c.lho.facts_per_expansion},
                      {"trainer", c.lho.trainer},
                      {"results_per_vector", c.lho.results_per_vector},
                      {"triple_caps", c.lho.triple_caps},
                      {"shuffled_expansion", c.lho.shuffled_expansion}};
  j["eval"] = {{"k", c.eval.k},
               {"answer_k", c.eval.answer_k},
               {"supported_only", c.eval.supported_only},
               {"passage_source", to_string(c.eval.passage_source)}};
  j["synth"] = {{"hops", c.synth.hops},
                {"queries", c.synth.queries},
                {"corpus_size", c.synth.corpus_size},
                {"bridge_token_count", c.synth.bridge_token_count},
                {"claim_words", c.synth.claim_words},
                {"distractors_per_query", c.synth.distractors_per_query},
                {"distractor_shared", c.synth.distractor_shared},
                {"sentences_per_passage", c.synth.sentences_per_passage}};
  return j;
}

Json default_config_json() { return config_to_json(RunConfig{}); }

Json builtin_preset(const std::string& name) {
  // k_hat 0 means "every gold within k_retrieve".
  if (name == "hover") {
    return Json::parse(R"({"pipeline": {"hops_k": [25, 25, 25, 25]},
      "supervision": {"hops": 4, "k_hat": [20, 0, 0, 0]},
      "eval": {"k": 100, "answer_k": 100}})");
  }
  if (name == "hover_round2") {
    auto j = builtin_preset("hover");
    j["supervision"]["k_hat"] = {10, 10, 10, 0};
    return j;
  }
  if (name == "hotpotqa") {
    return Json::parse(R"({"pipeline": {"hops_k": [10, 40]},
      "supervision": {"hops": 2, "k_hat": [20, 0]},
      "eval": {"k": 20, "answer_k": 20}})");
  }
  if (name == "hotpotqa_round2") {
    auto j = builtin_preset("hotpotqa");
    j["supervision"]["k_hat"] = {10, 0};
    return j;
  }
  return nullptr;
}

void reject_unknown_keys(const Json& doc, const Json& schema, const std::string& where) {
  if (!doc.is_object()) return;
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    const std::string key = where.empty() ? it.key() : where + "." + it.key();
    if (!schema.contains(it.key())) throw Error("unknown config key '" + key + "'");
    const auto& sub = schema.at(it.key());
    if (sub.is_object() && it.key() != "presets") {
      if (!it.value().is_object()) throw Error("config key '" + key + "' must be an object");
      reject_unknown_keys(it.value(), sub, key);
    }
  }
}

Json resolve_config(const Json& file, const Json& flags) {
  const Json defaults = default_config_json();
  if (!file.is_null() && !file.is_object()) throw Error("config document must be a JSON object");
  reject_unknown_keys(file, defaults);
  reject_unknown_keys(flags, defaults);

  Json user_presets = file.is_object() && file.contains("presets") ? file["presets"] : Json::object();
  if (!user_presets.is_object()) throw Error("config key 'presets' must be an object");
  for (auto it = user_presets.begin(); it != user_presets.end(); ++it) {
    reject_unknown_keys(it.value(), defaults, "presets." + it.key());
  }

  std::string preset;
  if (flags.contains("preset")) {
    preset = flags["preset"].get<std::string>();
  } else if (file.is_object() && file.contains("preset")) {
    preset = file["preset"].get<std::string>();
  }

  Json out = defaults;
  if (!preset.empty()) {
    Json overlay = user_presets.contains(preset) ? user_presets[preset] : builtin_preset(preset);
    if (overlay.is_null()) throw Error("unknown preset '" + preset + "'");
    out.merge_patch(overlay);
  }
  if (file.is_object()) out.merge_patch(file);
  out.merge_patch(flags);
  out["preset"] = preset;
  return out;
}

namespace {

template <typename T>
T get(const Json& j, const char* section, const char* key) {
  try {
    return j.at(section).at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(std::string("config key '") + section + "." + key + "' has the wrong type");
  }
}

}  // namespace

RunConfig config_from_json(const Json& j) {
  reject_unknown_keys(j, default_config_json());
  RunConfig c;
  try {
    c.seed = j.at("seed").get<std::uint64_t>();
    c.threads = j.at("threads").get<std::size_t>();
  } catch (const nlohmann::json::exception&) {
    throw Error("config keys 'seed' and 'threads' must be non-negative integers");
  }

  c.paths.corpus = get<std::string>(j, "paths", "corpus");
  c.paths.queries = get<std::string>(j, "paths", "queries");
  c.paths.index = get<std::string>(j, "paths", "index");
  c.paths.out = get<std::string>(j, "paths", "out");
  c.paths.traces = get<std::string>(j, "paths", "traces");
  c.paths.order = get<std::string>(j, "paths", "order");
  c.paths.triples = get<std::string>(j, "paths", "triples");

  c.encoder.dim = get<std::size_t>(j, "encoder", "dim");
  c.encoder.max_passage_tokens = get<std::size_t>(j, "encoder", "max_passage_tokens");
  c.encoder.max_query_tokens = get<std::size_t>(j, "encoder", "max_query_tokens");
  c.encoder.max_overall_tokens = get<std::size_t>(j, "encoder", "max_overall_tokens");
  c.encoder.validate();

  c.index.variant = index_variant_from_string(get<std::string>(j, "index", "variant"));
  c.index.centroid_count = get<std::size_t>(j, "index", "centroid_count");
  c.index.nprobe = get<std::size_t>(j, "index", "nprobe");
  c.index.kmeans_iterations = get<std::size_t>(j, "index", "kmeans_iterations");
  c.index.sample_factor = get<std::size_t>(j, "index", "sample_factor");

  auto& r = c.pipeline.retrieval;
  r.results_per_vector = get<std::size_t>(j, "retrieval", "results_per_vector");
  r.focus.n_hat = get<std::size_t>(j, "retrieval", "n_hat");
  r.focus.l_hat = get<std::size_t>(j, "retrieval", "l_hat");
  r.candidate_source =
      candidate_source_from_string(get<std::string>(j, "retrieval", "candidate_source"));

  auto& cd = c.pipeline.condenser;
  cd.stage1_top_k_facts = get<std::size_t>(j, "condenser", "stage1_top_k_facts");
  cd.tau = get<double>(j, "condenser", "tau");
  cd.scorer = get<std::string>(j, "condenser", "scorer");
  cd.validate();

  c.pipeline.variant = pipeline_variant_from_string(get<std::string>(j, "pipeline", "variant"));
  c.pipeline.hops_k = get<std::vector<std::size_t>>(j, "pipeline", "hops_k");
  c.pipeline.accumulate_facts = get<bool>(j, "pipeline", "accumulate_facts");
  c.pipeline.hybrid_total = get<std::size_t>(j, "pipeline", "hybrid_total");
  c.pipeline.verifier = get<std::string>(j, "pipeline", "verifier");
  c.pipeline.validate();

  c.lho_hops = get<std::size_t>(j, "supervision", "hops");
  if (c.lho_hops == 0) throw Error("supervision.hops must be positive");
  c.lho.k_retrieve = get<std::size_t>(j, "supervision", "k_retrieve");
  c.lho.k_hat = get<std::vector<std::size_t>>(j, "supervision", "k_hat");
  c.lho.facts_per_expansion = get<std::size_t>(j, "supervision", "facts_per_expansion");
  c.lho.trainer = get<std::string>(j, "supervision", "trainer");
  c.lho.results_per_vector = get<std::size_t>(j, "supervision", "results_per_vector");
  c.lho.triple_caps = get<std::vector<std::size_t>>(j, "supervision", "triple_caps");
  c.lho.shuffled_expansion = get<bool>(j, "supervision", "shuffled_expansion");
  c.lho.focus = r.focus;
  c.lho.candidate_source = r.candidate_source;
  c.lho.validate();

  c.eval.k = get<std::size_t>(j, "eval", "k");
  c.eval.answer_k = get<std::size_t>(j, "eval", "answer_k");
  c.eval.supported_only = get<bool>(j, "eval", "supported_only");
  c.eval.passage_source = passage_source_from_string(get<std::string>(j, "eval", "passage_source"));
  c.eval.validate();

  c.synth.hops = get<std::size_t>(j, "synth", "hops");
  c.synth.queries = get<std::size_t>(j, "synth", "queries");
  c.synth.corpus_size = get<std::size_t>(j, "synth", "corpus_size");
  c.synth.bridge_token_count = get<std::size_t>(j, "synth", "bridge_token_count");
  c.synth.claim_words = get<std::size_t>(j, "synth", "claim_words");
  c.synth.distractors_per_query = get<std::size_t>(j, "synth", "distractors_per_query");
  c.synth.distractor_shared = get<std::size_t>(j, "synth", "distractor_shared");
  c.synth.sentences_per_passage = get<std::size_t>(j, "synth", "sentences_per_passage");
  c.synth.validate();
  return c;
}

}  // namespace baleen
