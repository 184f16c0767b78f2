#include "baleen/scoring.hpp"

#include <algorithm>
#include <cstring>
#include <functional>
#include <limits>
#include <numeric>

#include "baleen/util.hpp"

namespace baleen {

void FocusParams::validate() const {
  if (n_hat < 1) throw Error("n_hat must be >= 1");
}

#pragma GCC diagnostic push
#pragma GCC diagnostic ignored "-Wpsabi"  // helpers are always inlined

namespace {

// Eight float lanes as one value; element-wise + and * keep each lane's
// arithmetic exactly as written, so every caller sees the same bits.
typedef float Lanes __attribute__((vector_size(32)));

[[gnu::always_inline]] inline Lanes load8(const float* p) {
  Lanes v;
  std::memcpy(&v, p, sizeof v);
  return v;
}

[[gnu::always_inline]] inline float reduce(Lanes l, const float* a, const float* b, std::size_t i, std::size_t dim) {
  for (std::size_t k = 0; i < dim; ++i, ++k) l[k] += a[i] * b[i];
  return ((l[0] + l[1]) + (l[2] + l[3])) + ((l[4] + l[5]) + (l[6] + l[7]));
}

}  // namespace

// Both clones run the same per-lane arithmetic (no fused multiply-add), so
// results are identical whichever one the loader picks.
__attribute__((target_clones("avx2", "default")))
float dot(const float* a, const float* b, std::size_t dim) {
  Lanes acc = {};
  std::size_t i = 0;
  for (; i + 8 <= dim; i += 8) acc += load8(a + i) * load8(b + i);
  return reduce(acc, a, b, i, dim);
}

__attribute__((target_clones("avx2", "default")))
void dot_rows(const float* a, const float* rows, std::size_t count, std::size_t dim, float* out) {
  std::size_t r = 0;
  for (; r + 4 <= count; r += 4) {
    const float* b0 = rows + r * dim;
    const float* b1 = b0 + dim;
    const float* b2 = b1 + dim;
    const float* b3 = b2 + dim;
    Lanes s0 = {}, s1 = {}, s2 = {}, s3 = {};
    std::size_t i = 0;
    for (; i + 8 <= dim; i += 8) {
      const Lanes x = load8(a + i);
      s0 += x * load8(b0 + i);
      s1 += x * load8(b1 + i);
      s2 += x * load8(b2 + i);
      s3 += x * load8(b3 + i);
    }
    out[r] = reduce(s0, a, b0, i, dim);
    out[r + 1] = reduce(s1, a, b1, i, dim);
    out[r + 2] = reduce(s2, a, b2, i, dim);
    out[r + 3] = reduce(s3, a, b3, i, dim);
  }
  for (; r < count; ++r) out[r] = dot(a, rows + r * dim, dim);
}

#pragma GCC diagnostic pop

std::vector<double> maxsim_rows(MatrixView q, MatrixView d) {
  if (q.rows > 0 && q.dim != d.dim) throw Error("maxsim: dimension mismatch");
  if (d.rows == 0) throw Error("maxsim: passage matrix is empty");
  std::vector<double> out(q.rows);
  for (std::size_t i = 0; i < q.rows; ++i) {
    const float* qi = q.data + i * q.dim;
    float best = -std::numeric_limits<float>::infinity();
    for (std::size_t j = 0; j < d.rows; ++j) {
      best = std::max(best, dot(qi, d.data + j * d.dim, d.dim));
    }
    out[i] = best;
  }
  return out;
}

double top_k_sum(std::vector<double> values, std::size_t k) {
  if (k >= values.size()) return std::accumulate(values.begin(), values.end(), 0.0);
  if (k == 0) return 0.0;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(k - 1),
                   values.end(), std::greater<>());
  std::sort(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(k), std::greater<>());
  return std::accumulate(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(k), 0.0);
}

double colbert_score(const EncodedQuery& eq, MatrixView d) {
  const auto mq = maxsim_rows(eq.query_part.view(), d);
  const auto mf = maxsim_rows(eq.fact_part.view(), d);
  return std::accumulate(mq.begin(), mq.end(), 0.0) + std::accumulate(mf.begin(), mf.end(), 0.0);
}

ScoredPassage flipr_from_maxsim(std::vector<double> m_query, std::vector<double> m_fact,
                                const FocusParams& fp) {
  ScoredPassage out;
  out.s_query = top_k_sum(std::move(m_query), fp.n_hat);
  out.s_fact = top_k_sum(std::move(m_fact), fp.l_hat);
  out.score = out.s_query + out.s_fact;
  return out;
}

ScoredPassage flipr_score(const EncodedQuery& eq, MatrixView d, const FocusParams& fp) {
  return flipr_from_maxsim(maxsim_rows(eq.query_part.view(), d),
                           maxsim_rows(eq.fact_part.view(), d), fp);
}

std::vector<ScoredPassage> flipr_score_batch(const EncodedQuery& eq,
                                             std::span<const MatrixView> passages,
                                             const FocusParams& fp, std::size_t threads) {
  std::vector<ScoredPassage> out(passages.size());
  parallel_for(passages.size(), threads,
               [&](std::size_t i) { out[i] = flipr_score(eq, passages[i], fp); });
  return out;
}

bool ranks_before(const ScoredPassage& a, const ScoredPassage& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.pid < b.pid;
}

}  // namespace baleen
