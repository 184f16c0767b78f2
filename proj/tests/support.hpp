#pragma once

// Shared fixtures and brute-force reference implementations. Nothing here
// calls the library routine it is used to check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <unistd.h>

#include "baleen/corpus.hpp"
#include "baleen/encoder.hpp"

namespace testing {

/// A fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("baleen_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  std::string file(const std::string& name) const { return (path_ / name).string(); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

/// Row-major matrix of doubles, used by the reference scorers.
struct Mat {
  std::size_t rows = 0;
  std::size_t dim = 0;
  std::vector<double> v;

  const double* row(std::size_t i) const { return v.data() + i * dim; }
};

inline Mat to_mat(const baleen::TokenMatrix& m) {
  Mat out{m.rows(), m.dim(), {}};
  out.v.assign(m.data().begin(), m.data().end());
  return out;
}

inline double ref_dot(const double* a, const double* b, std::size_t dim) {
  double s = 0;
  for (std::size_t i = 0; i < dim; ++i) s += a[i] * b[i];
  return s;
}

inline std::vector<double> ref_maxsim(const Mat& q, const Mat& d) {
  std::vector<double> out;
  for (std::size_t i = 0; i < q.rows; ++i) {
    double best = -1e300;
    for (std::size_t j = 0; j < d.rows; ++j) best = std::max(best, ref_dot(q.row(i), d.row(j), q.dim));
    out.push_back(best);
  }
  return out;
}

inline double ref_top_sum(std::vector<double> m, std::size_t k) {
  std::sort(m.begin(), m.end(), std::greater<>());
  double s = 0;
  for (std::size_t i = 0; i < std::min(k, m.size()); ++i) s += m[i];
  return s;
}

/// Unit vectors with standard normal components, seeded.
inline std::vector<float> random_unit_rows(std::size_t rows, std::size_t dim, std::mt19937_64& g) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<float> out(rows * dim);
  for (std::size_t r = 0; r < rows; ++r) {
    double norm = 0;
    std::vector<double> x(dim);
    for (auto& e : x) {
      e = n(g);
      norm += e * e;
    }
    norm = std::sqrt(norm);
    for (std::size_t i = 0; i < dim; ++i) out[r * dim + i] = static_cast<float>(x[i] / norm);
  }
  return out;
}

inline baleen::TokenMatrix matrix_from(std::size_t rows, std::size_t dim, std::vector<float> data) {
  baleen::TokenMatrix m(rows, dim);
  m.data() = std::move(data);
  return m;
}

/// Brute-force merge: walk both lists per hop, taking the next unseen pid
/// from whichever list is due, then back-fill leftovers hop by hop.
inline std::vector<std::string> ref_merge(const std::vector<std::vector<std::string>>& c,
                                          const std::vector<std::vector<std::string>>& r,
                                          std::size_t total, std::size_t a, std::size_t b) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  auto take_from = [&](const std::vector<std::string>& list, std::size_t& pos) -> bool {
    while (pos < list.size()) {
      const auto& p = list[pos++];
      if (seen.insert(p).second) {
        out.push_back(p);
        return true;
      }
    }
    return false;
  };
  std::vector<std::size_t> pc(c.size(), 0), pr(r.size(), 0);
  for (std::size_t t = 0; t < c.size() && out.size() < total; ++t) {
    std::size_t got_c = 0, got_r = 0;
    while (got_c < a && out.size() < total) {
      if (take_from(c[t], pc[t])) {
        ++got_c;
      } else if (take_from(r[t], pr[t])) {
        ++got_c;
      } else {
        break;
      }
    }
    while (got_r < b && out.size() < total) {
      if (take_from(r[t], pr[t])) {
        ++got_r;
      } else if (take_from(c[t], pc[t])) {
        ++got_r;
      } else {
        break;
      }
    }
  }
  for (std::size_t t = 0; t < c.size() && out.size() < total; ++t) {
    while (out.size() < total && (take_from(c[t], pc[t]) || take_from(r[t], pr[t]))) {
    }
  }
  return out;
}

}  // namespace testing
