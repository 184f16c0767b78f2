#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "baleen/encoder.hpp"

namespace baleen {

/// Keep counts for focused late interaction: the query side sums its
/// n_hat strongest MaxSim values, the fact side its l_hat strongest.
struct FocusParams {
  std::size_t n_hat = 32;
  std::size_t l_hat = 8;

  void validate() const;
};

struct ScoredPassage {
  std::string pid;
  double score = 0.0;
  double s_query = 0.0;
  double s_fact = 0.0;

  bool operator==(const ScoredPassage&) const = default;
};

/// The single dot-product kernel every scoring and search path uses, so
/// blocked and per-passage evaluation agree bit for bit.
float dot(const float* a, const float* b, std::size_t dim);

/// out[i] = dot(a, rows + i * dim, dim) for i < count, bit-identical to
/// calling dot() per row but several rows per pass.
void dot_rows(const float* a, const float* rows, std::size_t count, std::size_t dim, float* out);

/// M_i = max_j dot(Q_i, D_j) for every query row.
std::vector<double> maxsim_rows(MatrixView q, MatrixView d);

/// Sum of the min(k, |values|) largest values. With k >= |values| the sum
/// runs in input order.
double top_k_sum(std::vector<double> values, std::size_t k);

/// Vanilla late interaction: every MaxSim value of both parts summed.
double colbert_score(const EncodedQuery& eq, MatrixView d);

/// Focused late interaction over the query and fact parts separately.
ScoredPassage flipr_score(const EncodedQuery& eq, MatrixView d, const FocusParams& fp);

/// Combines precomputed MaxSim vectors the same way flipr_score does.
ScoredPassage flipr_from_maxsim(std::vector<double> m_query, std::vector<double> m_fact,
                                const FocusParams& fp);

/// Scores many passages against one query. Result i equals
/// flipr_score(eq, passages[i], fp) exactly.
std::vector<ScoredPassage> flipr_score_batch(const EncodedQuery& eq,
                                             std::span<const MatrixView> passages,
                                             const FocusParams& fp, std::size_t threads = 1);

/// Ranking order used everywhere: higher score first, then smaller pid.
bool ranks_before(const ScoredPassage& a, const ScoredPassage& b);

}  // namespace baleen
