#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace cooctk {

inline constexpr const char* kVersion = "0.1.0";

/// Bad input or bad request; the CLI maps this to exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical or internal failure; the CLI maps this to exit code 1.
class ComputeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

/// Deterministic RNG with a fixed algorithm and hand-rolled distributions,
/// so seeded streams are identical on every platform and standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);
  std::uint64_t next_u64();
  /// Uniform double in [0, 1).
  double next_double();
  /// Uniform integer in [0, n); n must be positive.
  std::uint64_t next_below(std::uint64_t n);
  /// Uniform double in [lo, hi).
  double next_in(double lo, double hi);
  /// Standard normal via Box–Muller on the deterministic stream.
  double next_gaussian();

 private:
  std::uint64_t state_[4];
};

std::uint64_t fnv1a(const void* data, std::size_t len, std::uint64_t seed = 0xcbf29ce484222325ull);
std::uint64_t hash_file(const std::filesystem::path& path);

/// Round-trippable text form of a double ("%.17g").
std::string fmt_double(double value);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);

/// Runs body(begin, end) over contiguous chunks of [0, n) on up to `threads`
/// workers. Chunk boundaries depend only on n and threads.
void parallel_chunks(std::size_t n, int threads, const std::function<void(std::size_t, std::size_t)>& body);

/// Runs job(i) for i in [0, n) on up to `threads` workers, pulling from a
/// shared counter. Jobs must write results to disjoint, pre-sized slots.
void parallel_indexed(std::size_t n, int threads, const std::function<void(std::size_t)>& job);

}  // namespace cooctk
