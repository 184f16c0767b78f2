#include "baleen/config.hpp"
#include "baleen/util.hpp"
#include "doctest.h"

using namespace baleen;

TEST_CASE("defaults resolve and round trip") {
  const auto j = resolve_config(nullptr, Json::object());
  const auto c = config_from_json(j);
  CHECK(c.pipeline.hops_k == std::vector<std::size_t>{25, 25, 25, 25});
  CHECK(c.pipeline.retrieval.focus.n_hat == 32);
  CHECK(c.pipeline.retrieval.focus.l_hat == 8);
  auto again = config_to_json(c);
  again["preset"] = j["preset"];
  CHECK(again == j);
}

TEST_CASE("precedence: defaults, preset, file, flags") {
  const auto file = Json::parse(R"({"preset": "hotpotqa", "seed": 4, "eval": {"k": 50}})");
  auto flags = Json::parse(R"({"seed": 7})");
  auto c = config_from_json(resolve_config(file, flags));
  CHECK(c.pipeline.hops_k == std::vector<std::size_t>{10, 40});
  CHECK(c.eval.k == 50);                // file beats preset
  CHECK(c.eval.answer_k == 20);         // preset beats default
  CHECK(c.seed == 7);                   // flag beats file
  CHECK(c.lho.k_hat == std::vector<std::size_t>{20, 0});

  flags = Json::parse(R"({"preset": "hover"})");
  c = config_from_json(resolve_config(file, flags));
  CHECK(c.pipeline.hops_k.size() == 4);
}

TEST_CASE("user presets override built-ins") {
  const auto file = Json::parse(
      R"({"preset": "hover", "presets": {"hover": {"pipeline": {"hops_k": [5, 5]}}}})");
  const auto c = config_from_json(resolve_config(file, Json::object()));
  CHECK(c.pipeline.hops_k == std::vector<std::size_t>{5, 5});
}

TEST_CASE("round-2 presets tighten the positive depth") {
  const auto c = config_from_json(resolve_config(nullptr, Json::parse(R"({"preset": "hover_round2"})")));
  CHECK(c.lho.k_hat == std::vector<std::size_t>{10, 10, 10, 0});
}

TEST_CASE("bad documents are rejected") {
  CHECK_THROWS_AS(resolve_config(Json::parse(R"({"bogus": 1})"), Json::object()), Error);
  CHECK_THROWS_AS(resolve_config(Json::parse(R"({"index": {"nprobes": 1}})"), Json::object()), Error);
  CHECK_THROWS_AS(resolve_config(Json::parse(R"({"preset": "nope"})"), Json::object()), Error);
  CHECK_THROWS_AS(resolve_config(Json::parse("[1]"), Json::object()), Error);
  CHECK_THROWS_AS(config_from_json(resolve_config(Json::parse(R"({"eval": {"k": "ten"}})"), Json::object())),
                  Error);
  CHECK_THROWS_AS(config_from_json(resolve_config(Json::parse(R"({"pipeline": {"hops_k": []}})"), Json::object())),
                  Error);
}

TEST_CASE("finalize derives named sub-seeds") {
  auto c = config_from_json(resolve_config(nullptr, Json::parse(R"({"seed": 3, "threads": 2})")));
  c.finalize();
  CHECK(c.encoder.seed == derive_seed(3, "encoder"));
  CHECK(c.index.seed == derive_seed(3, "kmeans"));
  CHECK(c.pipeline.threads == 2);
  CHECK(c.synth.seed == 3);
}
