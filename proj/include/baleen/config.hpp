#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "baleen/encoder.hpp"
#include "baleen/eval.hpp"
#include "baleen/index.hpp"
#include "baleen/pipeline.hpp"
#include "baleen/supervision.hpp"
#include "baleen/synth.hpp"
#include "json.hpp"

namespace baleen {

using Json = nlohmann::ordered_json;

struct PathConfig {
  std::string corpus;
  std::string queries;
  std::string index;
  std::string out;
  std::string traces;
  std::string order;
  std::string triples;
};

/// Every module's settings in one document. Sub-seeds are derived from
/// `seed` by name, so the document never carries them.
struct RunConfig {
  std::uint64_t seed = 0;
  std::size_t threads = 0;  // 0 = all hardware threads
  PathConfig paths;
  EncoderConfig encoder;
  IndexConfig index;
  PipelineConfig pipeline;  // carries the retrieval and condenser settings
  std::size_t lho_hops = 4;
  LhoConfig lho;
  EvalConfig eval;
  PlantSpec synth;

  /// Fills every derived seed and thread count.
  void finalize();
};

/// The default document: every accepted key with its default value.
Json default_config_json();

/// Overlay for a built-in preset ("hover", "hotpotqa", and their
/// "_round2" supervision variants), or null if the name is unknown.
Json builtin_preset(const std::string& name);

/// defaults <- preset (user "presets" entries win over built-ins) <- file
/// body <- flag overlay. The preset name comes from flags, then the file.
/// Unknown keys anywhere throw Error.
Json resolve_config(const Json& file, const Json& flags);

RunConfig config_from_json(const Json& resolved);
Json config_to_json(const RunConfig& cfg);

/// Throws Error naming the first key of `doc` that `schema` lacks.
void reject_unknown_keys(const Json& doc, const Json& schema, const std::string& where = "");

}  // namespace baleen
