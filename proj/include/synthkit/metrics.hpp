#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "synthkit/tokenizer.hpp"

namespace synthkit {

// exp of the Shannon entropy of the normalized cosine-kernel spectrum; 1 when
// all inputs coincide, n when they are mutually orthogonal. Inputs are
// normalized internally if needed.
double vendi_score(const std::vector<std::vector<double>>& embeddings);

// Distinct length-n token windows over total windows, pooled corpus-wide as a
// multiset (windows do not cross text boundaries).
double unique_ngram_ratio(const std::vector<std::string>& texts, int n, const Tokenizer& tokenizer);

enum class JlMode {
  Gaussian,  // seeded i.i.d. N(0, 1/target_dim) projection
  Identity,  // bypass for tests needing exact cosine preservation
};

std::vector<std::vector<double>> jl_project(const std::vector<std::vector<double>>& vectors,
                                            int target_dim, std::uint64_t seed,
                                            JlMode mode = JlMode::Gaussian);

struct GradientSet {
  std::vector<std::string> labels;  // one per vector, e.g. "quality/QA"
  std::vector<std::vector<double>> vectors;
};

// Row-major little-endian float32 matrix plus a JSON sidecar with
// {rows, dim, labels[]}.
GradientSet load_gradient_set(const std::string& matrix_path, const std::string& sidecar_path);
void save_gradient_set(const GradientSet& grads, const std::string& matrix_path,
                       const std::string& sidecar_path);

struct GroupSimilarity {
  std::vector<std::string> groups;                 // distinct labels, first-seen order
  std::vector<std::vector<double>> mean_cosine;    // groups x groups
};

// Projects the gradients, then averages cosine similarity over all cross
// pairs for each group pair (self-pairs excluded within a group; a singleton
// group's intra similarity is reported as 1).
GroupSimilarity group_similarity(const GradientSet& grads, int target_dim, std::uint64_t seed,
                                 JlMode mode = JlMode::Gaussian);

struct DiversityReport {
  double vendi = 0.0;
  double unique_4gram_ratio = 0.0;
  int n_samples = 0;  // texts scored for the Vendi component
  std::uint64_t seed = 0;
  int total_texts = 0;
  bool subsampled = false;
};

inline constexpr int kVendiSubsampleCap = 2000;

// Seeded uniform subsample of at most cap indices out of n.
std::vector<std::size_t> subsample_indices(std::size_t n, std::size_t cap, std::uint64_t seed);

struct FlopEstimate {
  double trainee_params = 0.0;   // N
  double generator_params = 0.0; // M
  double tokens = 0.0;           // D
  double flops = 0.0;            // 2MD + 6ND
  double h100_hours = 0.0;
};

FlopEstimate flop_estimate(double trainee_params, double generator_params, double tokens);

}  // namespace synthkit
