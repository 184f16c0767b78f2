#include "baleen/index.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>

#include "baleen/util.hpp"

namespace baleen {

namespace {

constexpr char kMagic[] = "BLNIDX";
constexpr std::uint8_t kVersion = 1;

// Nearest centroid under dot product; ties go to the lower centroid id.
std::uint32_t nearest_centroid(const float* v, const std::vector<float>& centroids,
                               std::size_t count, std::size_t dim) {
  std::uint32_t best = 0;
  float best_sim = -std::numeric_limits<float>::infinity();
  for (std::size_t c = 0; c < count; ++c) {
    const float s = dot(v, centroids.data() + c * dim, dim);
    if (s > best_sim) {
      best_sim = s;
      best = static_cast<std::uint32_t>(c);
    }
  }
  return best;
}

void normalize(std::span<float> v) {
  double n = 0.0;
  for (float x : v) n += static_cast<double>(x) * x;
  n = std::sqrt(n);
  if (n == 0.0) return;
  for (float& x : v) x = static_cast<float>(x / n);
}

// Spherical k-means over the rows listed in `sample`.
std::vector<float> train_centroids(const std::vector<float>& vectors, std::size_t dim,
                                   std::vector<std::uint32_t> sample, std::size_t count,
                                   std::size_t iterations, std::size_t threads) {
  std::vector<float> centroids(count * dim);
  // The sample arrives shuffled, so its prefix is a uniform draw of
  // distinct vectors.
  for (std::size_t c = 0; c < count; ++c) {
    std::copy_n(vectors.data() + static_cast<std::size_t>(sample[c]) * dim, dim,
                centroids.data() + c * dim);
  }
  std::vector<std::uint32_t> assign(sample.size(), std::numeric_limits<std::uint32_t>::max());
  std::vector<std::uint32_t> next(sample.size());
  for (std::size_t it = 0; it < iterations; ++it) {
    parallel_for(sample.size(), threads, [&](std::size_t i) {
      next[i] = nearest_centroid(vectors.data() + static_cast<std::size_t>(sample[i]) * dim,
                                 centroids, count, dim);
    });
    if (next == assign) break;
    assign = next;

    std::vector<double> sums(count * dim, 0.0);
    std::vector<std::size_t> sizes(count, 0);
    for (std::size_t i = 0; i < sample.size(); ++i) {
      const float* v = vectors.data() + static_cast<std::size_t>(sample[i]) * dim;
      double* s = sums.data() + static_cast<std::size_t>(assign[i]) * dim;
      for (std::size_t d = 0; d < dim; ++d) s[d] += v[d];
      ++sizes[assign[i]];
    }
    for (std::size_t c = 0; c < count; ++c) {
      if (sizes[c] == 0) continue;
      std::vector<float> updated(dim);
      for (std::size_t d = 0; d < dim; ++d) updated[d] = static_cast<float>(sums[c * dim + d]);
      normalize(updated);
      std::copy(updated.begin(), updated.end(), centroids.begin() + c * dim);
    }
    // Empty clusters take the worst-fitting member of the largest cluster.
    for (std::size_t c = 0; c < count; ++c) {
      if (sizes[c] != 0) continue;
      const auto largest = static_cast<std::uint32_t>(
          std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
      std::size_t far = sample.size();
      float far_sim = std::numeric_limits<float>::infinity();
      for (std::size_t i = 0; i < sample.size(); ++i) {
        if (assign[i] != largest) continue;
        const float s = dot(vectors.data() + static_cast<std::size_t>(sample[i]) * dim,
                            centroids.data() + static_cast<std::size_t>(largest) * dim, dim);
        if (s < far_sim) {
          far_sim = s;
          far = i;
        }
      }
      if (far == sample.size()) continue;
      std::copy_n(vectors.data() + static_cast<std::size_t>(sample[far]) * dim, dim,
                  centroids.data() + c * dim);
      assign[far] = static_cast<std::uint32_t>(c);
      --sizes[largest];
      sizes[c] = 1;
    }
  }
  return centroids;
}

class ByteReader {
 public:
  ByteReader(const std::string& buf, const std::string& path) : buf_(buf), path_(path) {}

  template <typename T>
  T get() {
    T v;
    need(sizeof(T));
    std::memcpy(&v, buf_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string get_string(std::size_t n) {
    need(n);
    std::string s = buf_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  void get_floats(std::vector<float>& out, std::size_t n) {
    need(n * sizeof(float));
    out.resize(n);
    std::memcpy(out.data(), buf_.data() + pos_, n * sizeof(float));
    pos_ += n * sizeof(float);
  }
  void get_u32s(std::vector<std::uint32_t>& out, std::size_t n) {
    need(n * sizeof(std::uint32_t));
    out.resize(n);
    std::memcpy(out.data(), buf_.data() + pos_, n * sizeof(std::uint32_t));
    pos_ += n * sizeof(std::uint32_t);
  }
  bool done() const { return pos_ == buf_.size(); }

 private:
  void need(std::size_t n) const {
    if (buf_.size() - pos_ < n) throw Error(path_ + ": truncated index file");
  }

  const std::string& buf_;
  const std::string& path_;
  std::size_t pos_ = 0;
};

template <typename T>
void put(std::string& out, T v) {
  out.append(reinterpret_cast<const char*>(&v), sizeof(T));
}

}  // namespace

std::string to_string(IndexVariant v) { return v == IndexVariant::Flat ? "flat" : "ivf"; }

IndexVariant index_variant_from_string(const std::string& s) {
  if (s == "flat") return IndexVariant::Flat;
  if (s == "ivf") return IndexVariant::Ivf;
  throw Error("unknown index variant: " + s);
}

std::string to_string(CandidateSource s) {
  return s == CandidateSource::QueryOnly ? "query_only" : "query_and_facts";
}

CandidateSource candidate_source_from_string(const std::string& s) {
  if (s == "query_only") return CandidateSource::QueryOnly;
  if (s == "query_and_facts") return CandidateSource::QueryAndFacts;
  throw Error("unknown candidate source: " + s);
}

MatrixView TokenIndex::passage_view(std::size_t slot) const {
  const auto [begin, end] = rows_of(slot);
  return {vectors_.data() + begin * dim(), end - begin, dim()};
}

void TokenIndex::set_nprobe(std::size_t n) {
  if (variant_ != IndexVariant::Ivf) return;
  nprobe_ = std::clamp<std::size_t>(n, 1, centroid_count_);
}

void TokenIndex::rebuild_lists() {
  lists_.assign(centroid_count_, {});
  for (std::size_t v = 0; v < assignments_.size(); ++v) {
    lists_[assignments_[v]].push_back(static_cast<std::uint32_t>(v));
  }
}

TokenIndex build_index(const Corpus& corpus, const Encoder& encoder, const IndexConfig& cfg) {
  if (corpus.empty()) throw Error("cannot index an empty corpus");
  TokenIndex idx;
  idx.encoder_ = encoder.config();
  idx.variant_ = cfg.variant;
  const std::size_t dim = idx.dim();

  std::vector<TokenMatrix> encoded(corpus.size());
  parallel_for(corpus.size(), cfg.threads,
               [&](std::size_t i) { encoded[i] = encoder.encode_passage(corpus.at(i)).matrix; });

  idx.offsets_.push_back(0);
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    idx.pids_.push_back(corpus.at(i).pid);
    const auto& m = encoded[i];
    idx.vectors_.insert(idx.vectors_.end(), m.data().begin(), m.data().end());
    idx.vec_to_slot_.insert(idx.vec_to_slot_.end(), m.rows(), static_cast<std::uint32_t>(i));
    idx.offsets_.push_back(idx.offsets_.back() + m.rows());
  }
  const std::size_t total = idx.total_vectors();

  if (cfg.variant == IndexVariant::Ivf) {
    std::size_t count = cfg.centroid_count;
    if (count == 0) {
      count = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(total))));
    }
    if (count == 0 || count > total) {
      throw Error("centroid count " + std::to_string(count) + " exceeds total vectors " +
                  std::to_string(total));
    }
    idx.centroid_count_ = count;
    idx.nprobe_ = cfg.nprobe == 0 ? std::max<std::size_t>(1, count / 64)
                                  : std::min(cfg.nprobe, count);

    std::vector<std::uint32_t> order(total);
    std::iota(order.begin(), order.end(), 0U);
    Rng rng(cfg.seed);
    const std::size_t sample_size = std::min(total, std::max(count, cfg.sample_factor * count));
    // Partial Fisher-Yates: the first sample_size entries become a uniform
    // sample without replacement.
    for (std::size_t i = 0; i < sample_size; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.uniform(total - i));
      std::swap(order[i], order[j]);
    }
    order.resize(sample_size);
    idx.centroids_ = train_centroids(idx.vectors_, dim, std::move(order), count,
                                     cfg.kmeans_iterations, cfg.threads);
    idx.assignments_.resize(total);
    parallel_for(total, cfg.threads, [&](std::size_t v) {
      idx.assignments_[v] = nearest_centroid(idx.vectors_.data() + v * dim, idx.centroids_,
                                             count, dim);
    });
    idx.rebuild_lists();
  }
  return idx;
}

std::string serialize_index(const TokenIndex& idx) {
  std::string out(kMagic, 6);
  put<std::uint8_t>(out, kVersion);
  put<std::uint8_t>(out, idx.variant_ == IndexVariant::Flat ? 0 : 1);
  const auto& e = idx.encoder_;
  put<std::uint32_t>(out, static_cast<std::uint32_t>(e.dim));
  put<std::uint64_t>(out, e.seed);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(e.max_passage_tokens));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(e.max_query_tokens));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(e.max_overall_tokens));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(idx.pids_.size()));
  put<std::uint64_t>(out, idx.total_vectors());
  for (const auto& pid : idx.pids_) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(pid.size()));
    out += pid;
  }
  out.append(reinterpret_cast<const char*>(idx.vec_to_slot_.data()),
             idx.vec_to_slot_.size() * sizeof(std::uint32_t));
  out.append(reinterpret_cast<const char*>(idx.vectors_.data()),
             idx.vectors_.size() * sizeof(float));
  if (idx.variant_ == IndexVariant::Ivf) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(idx.centroid_count_));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(idx.nprobe_));
    out.append(reinterpret_cast<const char*>(idx.centroids_.data()),
               idx.centroids_.size() * sizeof(float));
    out.append(reinterpret_cast<const char*>(idx.assignments_.data()),
               idx.assignments_.size() * sizeof(std::uint32_t));
  }
  return out;
}

void save_index(const TokenIndex& idx, const std::string& path) {
  write_file(path, serialize_index(idx));
}

TokenIndex load_index(const std::string& path) {
  const std::string buf = read_file(path);
  ByteReader in(buf, path);
  if (in.get_string(6) != std::string(kMagic, 6)) throw Error(path + ": bad index magic");
  const auto version = in.get<std::uint8_t>();
  if (version != kVersion) {
    throw Error(path + ": unsupported index version " + std::to_string(version));
  }
  TokenIndex idx;
  const auto variant = in.get<std::uint8_t>();
  if (variant > 1) throw Error(path + ": unknown index variant byte");
  idx.variant_ = variant == 0 ? IndexVariant::Flat : IndexVariant::Ivf;
  idx.encoder_.dim = in.get<std::uint32_t>();
  idx.encoder_.seed = in.get<std::uint64_t>();
  idx.encoder_.max_passage_tokens = in.get<std::uint32_t>();
  idx.encoder_.max_query_tokens = in.get<std::uint32_t>();
  idx.encoder_.max_overall_tokens = in.get<std::uint32_t>();
  try {
    idx.encoder_.validate();
  } catch (const Error& e) {
    throw Error(path + ": " + e.what());
  }
  const auto passages = in.get<std::uint32_t>();
  const auto total = in.get<std::uint64_t>();
  for (std::uint32_t i = 0; i < passages; ++i) {
    const auto len = in.get<std::uint32_t>();
    idx.pids_.push_back(in.get_string(len));
  }
  in.get_u32s(idx.vec_to_slot_, total);
  in.get_floats(idx.vectors_, total * idx.encoder_.dim);

  // vec_to_pid must be a non-decreasing run of valid slots.
  idx.offsets_.assign(passages + 1, 0);
  std::uint32_t prev = 0;
  for (std::size_t v = 0; v < total; ++v) {
    const auto slot = idx.vec_to_slot_[v];
    if (slot >= passages || slot < prev) throw Error(path + ": corrupt vec_to_pid section");
    prev = slot;
    ++idx.offsets_[slot + 1];
  }
  for (std::size_t i = 0; i < passages; ++i) idx.offsets_[i + 1] += idx.offsets_[i];

  if (idx.variant_ == IndexVariant::Ivf) {
    idx.centroid_count_ = in.get<std::uint32_t>();
    idx.nprobe_ = in.get<std::uint32_t>();
    if (idx.centroid_count_ == 0 || idx.nprobe_ == 0 || idx.nprobe_ > idx.centroid_count_) {
      throw Error(path + ": corrupt IVF header");
    }
    in.get_floats(idx.centroids_, idx.centroid_count_ * idx.encoder_.dim);
    in.get_u32s(idx.assignments_, total);
    for (auto a : idx.assignments_) {
      if (a >= idx.centroid_count_) throw Error(path + ": corrupt IVF assignments");
    }
    idx.rebuild_lists();
  }
  if (!in.done()) throw Error(path + ": trailing bytes after index");
  return idx;
}

std::vector<std::string> CandidateSet::pids(const TokenIndex& idx) const {
  std::vector<std::string> out;
  out.reserve(hits.size());
  for (const auto& [slot, _] : hits) out.push_back(idx.pid(slot));
  return out;
}

std::vector<std::uint32_t> top_vectors(std::span<const float> sims, std::size_t k) {
  std::vector<std::uint32_t> ids(sims.size());
  std::iota(ids.begin(), ids.end(), 0U);
  if (k >= ids.size()) return ids;
  auto better = [&](std::uint32_t a, std::uint32_t b) {
    if (sims[a] != sims[b]) return sims[a] > sims[b];
    return a < b;
  };
  std::nth_element(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(k), ids.end(), better);
  ids.resize(k);
  return ids;
}

CandidateSet candidates_for(const EncodedQuery& eq, const TokenIndex& idx,
                            std::size_t results_per_vector, CandidateSource source) {
  if (eq.dim() != idx.dim() ||
      (eq.fact_part.rows() > 0 && eq.fact_part.dim() != idx.dim())) {
    throw Error("query dim " + std::to_string(eq.dim()) + " does not match index dim " +
                std::to_string(idx.dim()));
  }
  std::vector<MatrixView> sources{eq.query_part.view()};
  if (source == CandidateSource::QueryAndFacts) sources.push_back(eq.fact_part.view());

  const std::size_t dim = idx.dim();
  const MatrixView all = idx.all_vectors();
  std::vector<std::uint32_t> counts(idx.passage_count(), 0);
  std::vector<float> sims;
  for (const auto& part : sources) {
    for (std::size_t r = 0; r < part.rows; ++r) {
      const float* q = part.data + r * dim;
      if (idx.variant() == IndexVariant::Flat) {
        sims.resize(all.rows);
        for (std::size_t v = 0; v < all.rows; ++v) sims[v] = dot(q, all.data + v * dim, dim);
        for (auto v : top_vectors(sims, results_per_vector)) ++counts[idx.slot_of_vector(v)];
        continue;
      }
      const MatrixView cents = idx.centroids();
      std::vector<float> csims(cents.rows);
      for (std::size_t c = 0; c < cents.rows; ++c) csims[c] = dot(q, cents.data + c * dim, dim);
      std::vector<std::uint32_t> probe_ids;
      for (auto c : top_vectors(csims, idx.nprobe())) {
        const auto& list = idx.inverted_list(c);
        probe_ids.insert(probe_ids.end(), list.begin(), list.end());
      }
      // Ascending vector ids keep the tie-break identical to flat search.
      std::sort(probe_ids.begin(), probe_ids.end());
      sims.resize(probe_ids.size());
      for (std::size_t i = 0; i < probe_ids.size(); ++i) {
        sims[i] = dot(q, all.data + static_cast<std::size_t>(probe_ids[i]) * dim, dim);
      }
      for (auto i : top_vectors(sims, results_per_vector)) {
        ++counts[idx.slot_of_vector(probe_ids[i])];
      }
    }
  }
  CandidateSet out;
  for (std::size_t s = 0; s < counts.size(); ++s) {
    if (counts[s] > 0) out.hits.emplace_back(static_cast<std::uint32_t>(s), counts[s]);
  }
  return out;
}

std::vector<ScoredPassage> exact_topk_oracle(const EncodedQuery& eq,
                                             std::span<const std::string> pids,
                                             std::span<const MatrixView> passages,
                                             const FocusParams& fp, std::size_t k) {
  std::vector<ScoredPassage> scored;
  scored.reserve(passages.size());
  for (std::size_t i = 0; i < passages.size(); ++i) {
    if (passages[i].rows == 0) continue;  // nothing to match against
    ScoredPassage s = flipr_score(eq, passages[i], fp);
    s.pid = pids[i];
    scored.push_back(std::move(s));
  }
  const std::size_t keep = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(keep),
                    scored.end(), ranks_before);
  scored.resize(keep);
  return scored;
}

std::vector<ScoredPassage> exact_topk_oracle(const EncodedQuery& eq, const Corpus& corpus,
                                             const Encoder& encoder, const FocusParams& fp,
                                             std::size_t k) {
  std::vector<TokenMatrix> encoded;
  std::vector<MatrixView> views;
  std::vector<std::string> pids;
  encoded.reserve(corpus.size());
  for (const auto& p : corpus.passages()) {
    encoded.push_back(encoder.encode_passage(p).matrix);
    pids.push_back(p.pid);
  }
  for (const auto& m : encoded) views.push_back(m.view());
  return exact_topk_oracle(eq, pids, views, fp, k);
}

}  // namespace baleen
