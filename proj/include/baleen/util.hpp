#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace baleen {

/// Every recoverable failure in the library surfaces as this type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// FNV-1a over the bytes, finalized with a splitmix round so nearby
/// inputs land far apart. Stable across platforms and processes.
std::uint64_t hash64(std::string_view bytes, std::uint64_t seed = 0);

/// Named sub-seed derivation: every consumer of randomness asks for its
/// own stream by name so adding a consumer never perturbs the others.
std::uint64_t derive_seed(std::uint64_t root, std::string_view name);

std::uint64_t splitmix64(std::uint64_t& state);

/// Small deterministic generator. std::*_distribution output is
/// implementation-defined, so the library draws through this instead.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() { return splitmix64(state_); }
  /// Uniform in [0, bound). bound must be positive.
  std::uint64_t uniform(std::uint64_t bound);
  /// Uniform in [0, 1).
  double unit();
  /// Standard normal via Box-Muller (one value per call).
  double normal();

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t state_;
};

/// 0 means "all hardware threads".
std::size_t resolve_threads(std::size_t requested);

/// Runs fn(i) for i in [0, n) on up to `threads` workers. Work is split into
/// contiguous chunks; callers write results into per-index slots so the
/// outcome never depends on scheduling.
void parallel_for(std::size_t n, std::size_t threads,
                  const std::function<void(std::size_t)>& fn);

/// Reads a file line by line, skipping blank lines. The callback gets the
/// 1-based line number.
void for_each_line(const std::string& path,
                   const std::function<void(std::size_t, const std::string&)>& fn);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

}  // namespace baleen
