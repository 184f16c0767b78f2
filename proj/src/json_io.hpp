#pragma once

// JSON helpers shared by the trace and supervision writers.

#include <vector>

#include "baleen/query.hpp"
#include "json.hpp"

namespace baleen::detail {

using ojson = nlohmann::ordered_json;

inline ojson fact_json(const Fact& f) {
  ojson j;
  j["pid"] = f.pid;
  j["sentence_index"] = f.sentence_index;
  j["text"] = f.text;
  j["stage1_score"] = f.stage1_score;
  if (f.stage2_score) j["stage2_score"] = *f.stage2_score;
  return j;
}

inline Fact fact_from(const nlohmann::json& j) {
  Fact f;
  f.pid = j.at("pid").get<std::string>();
  f.sentence_index = j.at("sentence_index").get<int>();
  f.text = j.at("text").get<std::string>();
  f.stage1_score = j.at("stage1_score").get<double>();
  if (j.contains("stage2_score")) f.stage2_score = j.at("stage2_score").get<double>();
  return f;
}

inline ojson facts_json(const std::vector<Fact>& facts) {
  ojson arr = ojson::array();
  for (const auto& f : facts) arr.push_back(fact_json(f));
  return arr;
}

inline std::vector<Fact> facts_from(const nlohmann::json& arr) {
  std::vector<Fact> out;
  for (const auto& f : arr) out.push_back(fact_from(f));
  return out;
}

}  // namespace baleen::detail
