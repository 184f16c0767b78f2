#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "baleen/corpus.hpp"
#include "baleen/encoder.hpp"
#include "baleen/scoring.hpp"

namespace baleen {

enum class IndexVariant { Flat, Ivf };
enum class CandidateSource { QueryOnly, QueryAndFacts };

std::string to_string(IndexVariant v);
IndexVariant index_variant_from_string(const std::string& s);
std::string to_string(CandidateSource s);
CandidateSource candidate_source_from_string(const std::string& s);

// Full-scale (~5M passage) settings; desk-scale builds derive their own.
inline constexpr std::size_t kPaperCentroids = 8192;
inline constexpr std::size_t kPaperNprobe = 16;
inline constexpr std::size_t kResultsPerVectorTraining = 256;
inline constexpr std::size_t kResultsPerVectorInference = 512;

struct IndexConfig {
  IndexVariant variant = IndexVariant::Flat;
  std::size_t centroid_count = 0;  // 0 -> ceil(sqrt(total_vectors))
  std::size_t nprobe = 0;          // 0 -> max(1, C / 64)
  std::size_t kmeans_iterations = 25;
  std::size_t sample_factor = 64;  // k-means trains on min(n, factor * C) vectors
  std::uint64_t seed = 0;
  std::size_t threads = 1;
};

/// All passage token vectors, concatenated in corpus order, plus the
/// optional inverted-file layer. Immutable once built or loaded.
class TokenIndex {
 public:
  std::size_t dim() const { return encoder_.dim; }
  const EncoderConfig& encoder_config() const { return encoder_; }
  std::size_t total_vectors() const { return vec_to_slot_.size(); }
  std::size_t passage_count() const { return pids_.size(); }
  const std::string& pid(std::size_t slot) const { return pids_.at(slot); }
  const std::vector<std::string>& pids() const { return pids_; }
  std::uint32_t slot_of_vector(std::size_t row) const { return vec_to_slot_.at(row); }
  std::pair<std::size_t, std::size_t> rows_of(std::size_t slot) const {
    return {offsets_.at(slot), offsets_.at(slot + 1)};
  }
  MatrixView passage_view(std::size_t slot) const;
  MatrixView all_vectors() const { return {vectors_.data(), total_vectors(), dim()}; }

  IndexVariant variant() const { return variant_; }
  std::size_t centroid_count() const { return centroid_count_; }
  std::size_t nprobe() const { return nprobe_; }
  /// Overrides the probe count of an IVF index (clamped to [1, C]).
  void set_nprobe(std::size_t n);
  MatrixView centroids() const { return {centroids_.data(), centroid_count_, dim()}; }
  std::uint32_t assignment(std::size_t row) const { return assignments_.at(row); }
  const std::vector<std::uint32_t>& inverted_list(std::size_t c) const { return lists_.at(c); }

  friend TokenIndex build_index(const Corpus&, const Encoder&, const IndexConfig&);
  friend TokenIndex load_index(const std::string&);
  friend std::string serialize_index(const TokenIndex&);

 private:
  void rebuild_lists();

  EncoderConfig encoder_;
  IndexVariant variant_ = IndexVariant::Flat;
  std::vector<std::string> pids_;
  std::vector<std::size_t> offsets_;  // passage_count + 1 entries
  std::vector<std::uint32_t> vec_to_slot_;
  std::vector<float> vectors_;
  std::size_t centroid_count_ = 0;
  std::size_t nprobe_ = 0;
  std::vector<float> centroids_;
  std::vector<std::uint32_t> assignments_;
  std::vector<std::vector<std::uint32_t>> lists_;
};

TokenIndex build_index(const Corpus& corpus, const Encoder& encoder, const IndexConfig& cfg);

/// Binary layout: header | vec_to_pid | vectors | optional IVF block.
std::string serialize_index(const TokenIndex& idx);
void save_index(const TokenIndex& idx, const std::string& path);
TokenIndex load_index(const std::string& path);

/// Passages reached by nearest-neighbor search from the query's token
/// vectors, with the number of retrieved vectors per passage.
struct CandidateSet {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> hits;  // (slot, count), slot ascending

  std::size_t size() const { return hits.size(); }
  std::vector<std::string> pids(const TokenIndex& idx) const;
};

/// For every source row, the results_per_vector stored vectors with the
/// highest dot product (ties to the lower vector id); their passages unioned.
/// Flat search is exact; IVF scans only the nprobe closest lists per row.
CandidateSet candidates_for(const EncodedQuery& eq, const TokenIndex& idx,
                            std::size_t results_per_vector, CandidateSource source);

/// Indices of the k best entries of sims under (value desc, index asc).
std::vector<std::uint32_t> top_vectors(std::span<const float> sims, std::size_t k);

/// Brute force: encodes and fully scores every passage.
std::vector<ScoredPassage> exact_topk_oracle(const EncodedQuery& eq, const Corpus& corpus,
                                             const Encoder& encoder, const FocusParams& fp,
                                             std::size_t k);
/// Same, over passages encoded up front (pids[i] names passages[i]).
std::vector<ScoredPassage> exact_topk_oracle(const EncodedQuery& eq,
                                             std::span<const std::string> pids,
                                             std::span<const MatrixView> passages,
                                             const FocusParams& fp, std::size_t k);

}  // namespace baleen
