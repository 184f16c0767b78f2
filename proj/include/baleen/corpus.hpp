#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace baleen {

/// A corpus unit. Sentences are the candidate facts.
struct Passage {
  std::string pid;
  std::string title;
  std::vector<std::string> sentences;

  /// "title. sentence sentence ..." as fed to encoders and string matchers.
  std::string full_text() const;

  bool operator==(const Passage&) const = default;
};

using SentenceRef = std::pair<std::string, int>;  // (pid, sentence index)

struct QueryRecord {
  std::string qid;
  std::string text;
  std::vector<std::string> gold_pids;
  std::vector<SentenceRef> gold_facts;
  std::optional<std::string> answer;
  std::optional<bool> label;  // true = Supported
  // Evaluation stratification only; never read at inference.
  std::optional<int> num_hops;

  bool operator==(const QueryRecord&) const = default;
};

/// Read-only passage collection with O(1) pid lookup.
class Corpus {
 public:
  Corpus() = default;
  /// Validates every passage invariant; throws Error on the first violation.
  explicit Corpus(std::vector<Passage> passages);

  std::size_t size() const { return passages_.size(); }
  bool empty() const { return passages_.empty(); }
  const std::vector<Passage>& passages() const { return passages_; }
  const Passage& at(std::size_t slot) const { return passages_.at(slot); }

  bool contains(std::string_view pid) const;
  /// Throws Error for unknown pids.
  const Passage& lookup(std::string_view pid) const;
  std::optional<std::size_t> slot_of(std::string_view pid) const;

 private:
  std::vector<Passage> passages_;
  std::unordered_map<std::string, std::size_t> by_pid_;
};

Corpus load_corpus(const std::string& path);
std::vector<QueryRecord> load_queryset(const std::string& path, const Corpus& corpus);

/// Parses without corpus validation (gold references unchecked).
std::vector<QueryRecord> read_queryset(const std::string& path);
void validate_queryset(const std::vector<QueryRecord>& queries, const Corpus& corpus);

std::string passage_to_jsonl(const Passage& p);
std::string query_to_jsonl(const QueryRecord& q);
Passage passage_from_json_line(const std::string& line);
QueryRecord query_from_json_line(const std::string& line);

void write_corpus(const std::string& path, const std::vector<Passage>& passages);
void write_queryset(const std::string& path, const std::vector<QueryRecord>& queries);

/// Split sizes of the HoVer claim sets (train / dev / test).
inline constexpr std::size_t kHoverTrainClaims = 18171;
inline constexpr std::size_t kHoverDevClaims = 4000;
inline constexpr std::size_t kHoverTestClaims = 4000;
/// Approximate size of the first-paragraph Wikipedia corpus both tasks use.
inline constexpr std::size_t kWikipediaPassagesApprox = 5'000'000;

}  // namespace baleen
