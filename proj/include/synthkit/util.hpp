#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace synthkit {

std::uint64_t fnv1a64(std::string_view bytes);
std::string to_hex(std::uint64_t value);

// Content hashes are printed as "fnv1a:<hex>" in manifests and reports.
std::string content_hash(std::string_view bytes);

std::uint64_t splitmix64(std::uint64_t x);

// Named sub-seed so each randomized stage draws from its own stream.
std::uint64_t derive_seed(std::uint64_t base_seed, std::string_view name);

// Deterministic random source. mt19937_64 output is pinned by the standard;
// the distributions are hand-rolled because the std ones are not portable.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }
  // Uniform integer in [0, n). n must be > 0.
  std::uint64_t bounded(std::uint64_t n);
  // Uniform double in [0, 1).
  double next_double();
  // Standard normal via Box-Muller.
  double gaussian();

 private:
  std::mt19937_64 gen_;
  std::optional<double> spare_;
};

// Fisher-Yates permutation of 0..n-1.
std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

std::string trim(std::string_view s);
std::vector<std::string> split_lines(std::string_view text);

}  // namespace synthkit
