#include "synthkit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <unordered_map>

#include <Eigen/Dense>
#include <json.hpp>

#include "synthkit/errors.hpp"
#include "synthkit/util.hpp"

namespace synthkit {

namespace {

Eigen::MatrixXd rows_to_matrix(const std::vector<std::vector<double>>& vectors) {
  if (vectors.empty()) throw ValidationError("expected at least one vector");
  const std::size_t dim = vectors.front().size();
  if (dim == 0) throw ValidationError("vectors must have positive dimension");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(vectors.size()), static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    if (vectors[i].size() != dim) {
      throw ValidationError("vector dimension mismatch at row " + std::to_string(i));
    }
    for (std::size_t j = 0; j < dim; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = vectors[i][j];
  }
  return m;
}

void normalize_rows(Eigen::MatrixXd& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    double norm = m.row(i).norm();
    if (norm > 0) m.row(i) /= norm;
  }
}

}  // namespace

double vendi_score(const std::vector<std::vector<double>>& embeddings) {
  Eigen::MatrixXd x = rows_to_matrix(embeddings);
  normalize_rows(x);
  const double n = static_cast<double>(x.rows());
  Eigen::MatrixXd kernel = (x * x.transpose()) / n;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(kernel, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw SynthError("eigen decomposition failed");

  double entropy = 0.0;
  for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i) {
    double lambda = solver.eigenvalues()(i);
    if (lambda < -1e-6) {
      throw SynthError("similarity kernel has eigenvalue " + std::to_string(lambda) +
                       " below -1e-6; input is numerically broken");
    }
    if (lambda <= 0.0) continue;  // clamp small negative float noise; 0*ln 0 := 0
    entropy -= lambda * std::log(lambda);
  }
  return std::exp(entropy);
}

double unique_ngram_ratio(const std::vector<std::string>& texts, int n, const Tokenizer& tokenizer) {
  if (n < 1) throw ValidationError("n-gram size must be positive");
  std::unordered_map<std::string, std::int64_t> counts;
  std::int64_t total = 0;
  for (const auto& text : texts) {
    std::vector<std::string> tokens = tokenizer.tokenize(text);
    if (static_cast<int>(tokens.size()) < n) continue;
    for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= tokens.size(); ++i) {
      std::string key;
      for (int j = 0; j < n; ++j) {
        key += tokens[i + static_cast<std::size_t>(j)];
        key.push_back('\x1f');  // unit separator avoids token-boundary collisions
      }
      ++counts[key];
      ++total;
    }
  }
  if (total == 0) {
    throw ValidationError("no window of length " + std::to_string(n) + " in the pooled corpus");
  }
  return static_cast<double>(counts.size()) / static_cast<double>(total);
}

std::vector<std::vector<double>> jl_project(const std::vector<std::vector<double>>& vectors,
                                            int target_dim, std::uint64_t seed, JlMode mode) {
  Eigen::MatrixXd x = rows_to_matrix(vectors);
  const int source_dim = static_cast<int>(x.cols());
  if (target_dim < 1 || target_dim > source_dim) {
    throw ValidationError("target_dim must be in [1, " + std::to_string(source_dim) + "], got " +
                          std::to_string(target_dim));
  }

  if (mode == JlMode::Identity) {
    if (target_dim != source_dim) {
      throw ValidationError("identity projection requires target_dim == source dimension");
    }
    return vectors;
  }

  Eigen::MatrixXd projection(target_dim, source_dim);
  Rng rng(seed);
  const double scale = 1.0 / std::sqrt(static_cast<double>(target_dim));
  for (int r = 0; r < target_dim; ++r) {
    for (int c = 0; c < source_dim; ++c) projection(r, c) = rng.gaussian() * scale;
  }

  Eigen::MatrixXd projected = x * projection.transpose();
  std::vector<std::vector<double>> out(vectors.size(), std::vector<double>(static_cast<std::size_t>(target_dim)));
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    for (int j = 0; j < target_dim; ++j) out[i][static_cast<std::size_t>(j)] = projected(static_cast<Eigen::Index>(i), j);
  }
  return out;
}

GradientSet load_gradient_set(const std::string& matrix_path, const std::string& sidecar_path) {
  std::size_t rows = 0;
  std::size_t dim = 0;
  GradientSet grads;
  try {
    nlohmann::json sidecar = nlohmann::json::parse(read_file(sidecar_path));
    rows = sidecar.at("rows").get<std::size_t>();
    dim = sidecar.at("dim").get<std::size_t>();
    grads.labels = sidecar.at("labels").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("gradient sidecar " + sidecar_path + ": " + e.what());
  }
  if (grads.labels.size() != rows) {
    throw ValidationError("gradient sidecar has " + std::to_string(grads.labels.size()) +
                          " labels for " + std::to_string(rows) + " rows");
  }

  std::string raw = read_file(matrix_path);
  if (raw.size() != rows * dim * sizeof(float)) {
    throw ValidationError("gradient matrix size mismatch: expected " +
                          std::to_string(rows * dim * sizeof(float)) + " bytes, got " +
                          std::to_string(raw.size()));
  }
  grads.vectors.assign(rows, std::vector<double>(dim));
  const char* ptr = raw.data();
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < dim; ++j) {
      float value;
      std::memcpy(&value, ptr, sizeof(float));
      ptr += sizeof(float);
      grads.vectors[i][j] = static_cast<double>(value);
    }
  }
  return grads;
}

void save_gradient_set(const GradientSet& grads, const std::string& matrix_path,
                       const std::string& sidecar_path) {
  if (grads.labels.size() != grads.vectors.size()) {
    throw ValidationError("gradient set has mismatched labels and vectors");
  }
  std::string raw;
  std::size_t dim = grads.vectors.empty() ? 0 : grads.vectors.front().size();
  raw.reserve(grads.vectors.size() * dim * sizeof(float));
  for (const auto& row : grads.vectors) {
    if (row.size() != dim) throw ValidationError("gradient rows have inconsistent dimensions");
    for (double v : row) {
      float f = static_cast<float>(v);
      char buf[sizeof(float)];
      std::memcpy(buf, &f, sizeof(float));
      raw.append(buf, sizeof(float));
    }
  }
  write_file(matrix_path, raw);

  nlohmann::json sidecar;
  sidecar["rows"] = grads.vectors.size();
  sidecar["dim"] = dim;
  sidecar["labels"] = grads.labels;
  write_file(sidecar_path, sidecar.dump(2) + "\n");
}

GroupSimilarity group_similarity(const GradientSet& grads, int target_dim, std::uint64_t seed,
                                 JlMode mode) {
  if (grads.vectors.empty()) throw ValidationError("gradient set is empty");
  if (grads.labels.size() != grads.vectors.size()) {
    throw ValidationError("gradient set has mismatched labels and vectors");
  }

  GroupSimilarity result;
  std::unordered_map<std::string, std::size_t> group_index;
  std::vector<std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < grads.labels.size(); ++i) {
    auto [it, inserted] = group_index.emplace(grads.labels[i], result.groups.size());
    if (inserted) {
      result.groups.push_back(grads.labels[i]);
      members.emplace_back();
    }
    members[it->second].push_back(i);
  }

  std::vector<std::vector<double>> projected = jl_project(grads.vectors, target_dim, seed, mode);
  Eigen::MatrixXd x = rows_to_matrix(projected);
  normalize_rows(x);
  Eigen::MatrixXd cosines = x * x.transpose();

  const std::size_t g = result.groups.size();
  result.mean_cosine.assign(g, std::vector<double>(g, 0.0));
  for (std::size_t a = 0; a < g; ++a) {
    for (std::size_t b = 0; b < g; ++b) {
      double sum = 0.0;
      std::int64_t count = 0;
      for (std::size_t i : members[a]) {
        for (std::size_t j : members[b]) {
          if (a == b && i == j) continue;
          sum += cosines(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
          ++count;
        }
      }
      // A singleton group is perfectly similar to itself.
      result.mean_cosine[a][b] = count == 0 ? 1.0 : sum / static_cast<double>(count);
    }
  }
  return result;
}

std::vector<std::size_t> subsample_indices(std::size_t n, std::size_t cap, std::uint64_t seed) {
  if (n <= cap) {
    std::vector<std::size_t> all(n);
    for (std::size_t i = 0; i < n; ++i) all[i] = i;
    return all;
  }
  auto perm = shuffled_indices(n, seed);
  perm.resize(cap);
  std::sort(perm.begin(), perm.end());
  return perm;
}

FlopEstimate flop_estimate(double trainee_params, double generator_params, double tokens) {
  if (trainee_params < 0 || generator_params < 0 || tokens < 0) {
    throw ValidationError("parameter and token counts must be non-negative");
  }
  FlopEstimate estimate;
  estimate.trainee_params = trainee_params;
  estimate.generator_params = generator_params;
  estimate.tokens = tokens;
  estimate.flops = 2.0 * generator_params * tokens + 6.0 * trainee_params * tokens;
  estimate.h100_hours = estimate.flops / (1.979e15 * 3600.0);
  return estimate;
}

}  // namespace synthkit
