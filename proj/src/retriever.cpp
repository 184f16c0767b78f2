#include "baleen/retriever.hpp"

#include <algorithm>
#include <limits>

#include "baleen/util.hpp"

namespace baleen {

namespace {

// Above this many similarity entries the flat path scores per passage
// instead of materializing the full query x corpus table.
constexpr std::size_t kMaxTableEntries = std::size_t{1} << 25;

std::vector<ScoredPassage> rank(std::vector<ScoredPassage> scored, std::size_t k) {
  const std::size_t keep = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(keep),
                    scored.end(), ranks_before);
  scored.resize(keep);
  return scored;
}

std::vector<char> exclusion_mask(const TokenIndex& idx, const RetrievalConfig& cfg) {
  std::vector<char> mask(idx.passage_count(), 0);
  if (cfg.exclude.empty()) return mask;
  for (std::size_t s = 0; s < idx.passage_count(); ++s) {
    mask[s] = cfg.exclude.count(idx.pid(s)) ? 1 : 0;
  }
  return mask;
}

// Flat search with one similarity table shared by candidate generation and
// MaxSim; both read the same dot() values the per-passage path computes.
std::vector<ScoredPassage> retrieve_flat_table(const EncodedQuery& eq, const TokenIndex& idx,
                                               const RetrievalConfig& cfg) {
  const std::size_t dim = idx.dim();
  const std::size_t total = idx.total_vectors();
  const std::size_t nq = eq.query_part.rows();
  const std::size_t nf = eq.fact_part.rows();
  const MatrixView all = idx.all_vectors();

  std::vector<float> table((nq + nf) * total);
  std::vector<const float*> rows;
  for (std::size_t r = 0; r < nq; ++r) rows.push_back(eq.query_part.row(r).data());
  for (std::size_t r = 0; r < nf; ++r) rows.push_back(eq.fact_part.row(r).data());
  // Stored vectors in cache-sized blocks, every query row against a block
  // before moving on.
  constexpr std::size_t kBlock = 256;
  for (std::size_t v0 = 0; v0 < total; v0 += kBlock) {
    const std::size_t v1 = std::min(total, v0 + kBlock);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      dot_rows(rows[r], all.data + v0 * dim, v1 - v0, dim, table.data() + r * total + v0);
    }
  }

  const std::size_t source_rows = cfg.candidate_source == CandidateSource::QueryOnly ? nq : nq + nf;
  std::vector<char> is_candidate(idx.passage_count(), 0);
  for (std::size_t r = 0; r < source_rows; ++r) {
    std::span<const float> sims(table.data() + r * total, total);
    for (auto v : top_vectors(sims, cfg.results_per_vector)) is_candidate[idx.slot_of_vector(v)] = 1;
  }
  const auto excluded = exclusion_mask(idx, cfg);

  std::vector<ScoredPassage> scored;
  std::vector<double> mq(nq);
  std::vector<double> mf(nf);
  for (std::size_t s = 0; s < idx.passage_count(); ++s) {
    if (!is_candidate[s] || excluded[s]) continue;
    const auto [begin, end] = idx.rows_of(s);
    auto maxsim = [&](std::size_t row) {
      const float* t = table.data() + row * total;
      float best = -std::numeric_limits<float>::infinity();
      for (std::size_t v = begin; v < end; ++v) best = std::max(best, t[v]);
      return static_cast<double>(best);
    };
    for (std::size_t r = 0; r < nq; ++r) mq[r] = maxsim(r);
    for (std::size_t r = 0; r < nf; ++r) mf[r] = maxsim(nq + r);
    ScoredPassage sp = flipr_from_maxsim(mq, mf, cfg.focus);
    sp.pid = idx.pid(s);
    scored.push_back(std::move(sp));
  }
  return rank(std::move(scored), cfg.k);
}

}  // namespace

std::vector<ScoredPassage> retrieve(const EncodedQuery& eq, const TokenIndex& idx,
                                    const RetrievalConfig& cfg) {
  if (cfg.k < 1) throw Error("retrieval k must be >= 1");
  cfg.focus.validate();
  if (eq.dim() != idx.dim()) {
    throw Error("query dim " + std::to_string(eq.dim()) + " does not match index dim " +
                std::to_string(idx.dim()));
  }
  const std::size_t rows = eq.query_part.rows() + eq.fact_part.rows();
  if (idx.variant() == IndexVariant::Flat && rows * idx.total_vectors() <= kMaxTableEntries) {
    return retrieve_flat_table(eq, idx, cfg);
  }

  const CandidateSet cands = candidates_for(eq, idx, cfg.results_per_vector, cfg.candidate_source);
  const auto excluded = exclusion_mask(idx, cfg);
  std::vector<ScoredPassage> scored;
  scored.reserve(cands.size());
  for (const auto& [slot, _] : cands.hits) {
    if (excluded[slot]) continue;
    ScoredPassage sp = flipr_score(eq, idx.passage_view(slot), cfg.focus);
    sp.pid = idx.pid(slot);
    scored.push_back(std::move(sp));
  }
  return rank(std::move(scored), cfg.k);
}

Retriever::Retriever(std::shared_ptr<const Encoder> encoder,
                     std::shared_ptr<const TokenIndex> index)
    : encoder_(std::move(encoder)), index_(std::move(index)) {
  if (encoder_->config().dim != index_->dim()) {
    throw Error("encoder dim " + std::to_string(encoder_->config().dim) +
                " does not match index dim " + std::to_string(index_->dim()));
  }
}

std::vector<ScoredPassage> Retriever::retrieve(const MultiHopQuery& q,
                                               const RetrievalConfig& cfg) const {
  return baleen::retrieve(encoder_->encode_query(q), *index_, cfg);
}

}  // namespace baleen
