#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "synthkit/gateway.hpp"
#include "synthkit/mixer.hpp"
#include "synthkit/tokenizer.hpp"

namespace synthkit {

struct EndpointSettings {
  bool mock = true;
  std::optional<std::uint64_t> mock_seed;
  int mock_embedding_dim = 64;
  std::string url;
  std::string api_key_env_var;
  std::string generator_model = "mock-generator";
  std::string embedding_model = "mock-embedding";
  std::string judge_model;  // defaults to generator_model
  int max_in_flight = 4;
  RetryPolicy retry;
};

struct MixComponentConfig {
  std::string label;
  double weight = 1.0;
  std::string records;  // explicit records file, or
  std::string method;   // records_<METHOD>.jsonl from this run's generate stage
};

struct GradientConfig {
  std::string matrix;
  std::string sidecar;
  int target_dim = 64;
  bool identity_bypass = false;
};

struct RunConfig {
  std::uint64_t seed = 0;
  std::string output_dir;
  std::string corpus;
  std::string corpus_domain;
  std::string replay_corpus;
  std::string tokenizer_spec = "whitespace";

  EndpointSettings endpoint;

  std::vector<std::string> generate_methods;
  std::int64_t generate_token_budget = 0;

  std::vector<MixComponentConfig> mix_components;
  double replay_fraction = 0.0;
  std::int64_t mix_token_budget = 0;
  std::string mix_unit = "tokens";

  int seq_len = 2048;

  std::string metrics_records;  // file of SynthRecords to score
  int ngram_n = 4;
  int vendi_subsample_cap = 2000;
  std::optional<GradientConfig> gradients;

  std::string fit_input;
  std::optional<double> fit_target_accuracy;
  std::int64_t fit_original_tokens = 0;
  double fit_z = 1.96;

  std::string eval_items;
  std::string eval_mode = "mcqa";  // or "freeform"
  int eval_n = 8;

  int rag_chunk_tokens = 512;
  int rag_overlap_tokens = 64;
  int rag_k1 = 128;
  int rag_k2 = 8;
  std::string rag_rerank_url;  // empty -> embedding-cosine fallback
  std::string rag_index_path;  // defaults to <output_dir>/rag_index

  std::string config_hash;  // of the canonical config JSON
  std::string config_dir;   // for resolving relative paths
};

// Parses and validates the config file. `overrides` are dotted key=value
// pairs applied on top (values parsed as JSON when possible).
RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {});

// Helpers shared by the commands.
std::string resolve_path(const RunConfig& config, const std::string& path);
std::unique_ptr<Backend> make_backend(const RunConfig& config);
std::unique_ptr<Tokenizer> make_run_tokenizer(const RunConfig& config);

// Per-run manifest: config hash, per-stage status and output content hashes.
class RunManifest {
 public:
  static RunManifest load_or_create(const std::string& run_dir, const std::string& config_hash);

  void record_stage(const std::string& stage, const std::map<std::string, std::string>& output_hashes);
  void save() const;

  const std::string& path() const { return path_; }
  std::string stage_status(const std::string& stage) const;
  std::map<std::string, std::string> stage_outputs(const std::string& stage) const;

 private:
  std::string path_;
  std::string config_hash_;
  // stage -> (status, output file -> content hash)
  std::map<std::string, std::map<std::string, std::string>> stages_;
};

}  // namespace synthkit
