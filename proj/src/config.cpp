#include "synthkit/config.hpp"

#include <filesystem>
#include <set>

#include <json.hpp>

#include "synthkit/errors.hpp"
#include "synthkit/util.hpp"

namespace synthkit {

namespace {

void apply_override(nlohmann::json& doc, const std::string& assignment) {
  auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw ValidationError("override must look like key.path=value, got '" + assignment + "'");
  }
  std::string key = assignment.substr(0, eq);
  std::string value = assignment.substr(eq + 1);

  nlohmann::json parsed = nlohmann::json::parse(value, nullptr, /*allow_exceptions=*/false);
  if (parsed.is_discarded()) parsed = value;  // plain string

  nlohmann::json* node = &doc;
  std::size_t start = 0;
  while (true) {
    auto dot = key.find('.', start);
    std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ValidationError("override key has an empty segment: '" + key + "'");
    if (dot == std::string::npos) {
      (*node)[part] = parsed;
      break;
    }
    node = &(*node)[part];
    start = dot + 1;
  }
}

template <typename T>
T require(const nlohmann::json& j, const std::string& key) {
  if (!j.contains(key)) throw ValidationError("config is missing required key '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ValidationError("config key '" + key + "' has the wrong type");
  }
}

}  // namespace

RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("config file is not valid JSON: " + path + ": " + e.what());
  }
  for (const auto& override_kv : overrides) apply_override(doc, override_kv);

  // Typos in top-level keys would otherwise silently disable whole stages.
  static const std::set<std::string> known_keys{
      "seed",        "output_dir",     "corpus",        "corpus_domain",   "replay_corpus",
      "tokenizer",   "endpoint",       "endpoint_url",  "api_key_env_var", "generator_model",
      "embedding_model", "max_in_flight", "generate",   "mix",             "pack",
      "metrics",     "fit",            "eval",          "rag"};
  for (const auto& [key, value] : doc.items()) {
    (void)value;
    if (!known_keys.count(key)) {
      throw ValidationError("unknown config key '" + key + "'");
    }
  }

  RunConfig config;
  config.config_dir = std::filesystem::path(path).parent_path().string();
  config.config_hash = content_hash(doc.dump());

  // Seeds must be explicit: reruns of a config are reproducible by contract.
  config.seed = require<std::uint64_t>(doc, "seed");
  config.output_dir = require<std::string>(doc, "output_dir");

  config.corpus = doc.value("corpus", "");
  config.corpus_domain = doc.value("corpus_domain", "");
  config.replay_corpus = doc.value("replay_corpus", "");
  config.tokenizer_spec = doc.value("tokenizer", "whitespace");

  if (doc.contains("endpoint")) {
    const auto& e = doc["endpoint"];
    config.endpoint.mock = e.value("mock", true);
    if (e.contains("mock_seed")) config.endpoint.mock_seed = e["mock_seed"].get<std::uint64_t>();
    config.endpoint.mock_embedding_dim = e.value("mock_embedding_dim", 64);
    config.endpoint.url = e.value("url", "");
    config.endpoint.api_key_env_var = e.value("api_key_env_var", "");
    config.endpoint.generator_model = e.value("generator_model", "mock-generator");
    config.endpoint.embedding_model = e.value("embedding_model", "mock-embedding");
    config.endpoint.judge_model = e.value("judge_model", "");
    config.endpoint.max_in_flight = e.value("max_in_flight", 4);
    if (e.contains("retry")) {
      const auto& r = e["retry"];
      config.endpoint.retry.max_attempts = r.value("max_attempts", 5);
      config.endpoint.retry.initial_delay_ms = r.value("initial_delay_ms", 1000);
      config.endpoint.retry.factor = r.value("factor", 2.0);
      config.endpoint.retry.jitter = r.value("jitter", 0.2);
    }
    if (!config.endpoint.mock && config.endpoint.url.empty()) {
      throw ValidationError("config key 'endpoint.url' is required when endpoint.mock is false");
    }
  }
  // Flat aliases for the endpoint settings; these override the nested block.
  if (doc.contains("endpoint_url")) {
    config.endpoint.url = doc["endpoint_url"].get<std::string>();
    config.endpoint.mock = false;
  }
  if (doc.contains("api_key_env_var")) {
    config.endpoint.api_key_env_var = doc["api_key_env_var"].get<std::string>();
  }
  if (doc.contains("generator_model")) {
    config.endpoint.generator_model = doc["generator_model"].get<std::string>();
  }
  if (doc.contains("embedding_model")) {
    config.endpoint.embedding_model = doc["embedding_model"].get<std::string>();
  }
  if (doc.contains("max_in_flight")) config.endpoint.max_in_flight = doc["max_in_flight"].get<int>();

  if (config.endpoint.judge_model.empty()) config.endpoint.judge_model = config.endpoint.generator_model;
  if (config.endpoint.max_in_flight < 1) {
    throw ValidationError("config key 'endpoint.max_in_flight' must be >= 1");
  }

  if (doc.contains("generate")) {
    const auto& g = doc["generate"];
    config.generate_methods = require<std::vector<std::string>>(g, "methods");
    config.generate_token_budget = require<std::int64_t>(g, "token_budget");
    if (config.generate_token_budget <= 0) {
      throw ValidationError("config key 'generate.token_budget' must be positive");
    }
  }

  if (doc.contains("mix")) {
    const auto& m = doc["mix"];
    for (const auto& c : require<nlohmann::json>(m, "components")) {
      MixComponentConfig component;
      component.label = require<std::string>(c, "label");
      component.weight = c.value("weight", 1.0);
      component.records = c.value("records", "");
      component.method = c.value("method", "");
      if (component.records.empty() == component.method.empty()) {
        throw ValidationError("mix component '" + component.label +
                              "' needs exactly one of 'records' or 'method'");
      }
      config.mix_components.push_back(std::move(component));
    }
    config.replay_fraction = m.value("replay_fraction", 0.0);
    config.mix_token_budget = require<std::int64_t>(m, "total_token_budget");
    config.mix_unit = m.value("unit", "tokens");
    if (config.mix_unit != "tokens" && config.mix_unit != "records") {
      throw ValidationError("config key 'mix.unit' must be 'tokens' or 'records'");
    }
  }

  if (doc.contains("pack")) {
    config.seq_len = doc["pack"].value("seq_len", 2048);
    if (config.seq_len < 2) throw ValidationError("config key 'pack.seq_len' must be >= 2");
  }

  if (doc.contains("metrics")) {
    const auto& m = doc["metrics"];
    config.metrics_records = m.value("records", "");
    config.ngram_n = m.value("ngram_n", 4);
    config.vendi_subsample_cap = m.value("subsample_cap", 2000);
    if (m.contains("gradients")) {
      GradientConfig g;
      g.matrix = require<std::string>(m["gradients"], "matrix");
      g.sidecar = require<std::string>(m["gradients"], "sidecar");
      g.target_dim = m["gradients"].value("target_dim", 64);
      g.identity_bypass = m["gradients"].value("identity_bypass", false);
      config.gradients = g;
    }
  }

  if (doc.contains("fit")) {
    const auto& f = doc["fit"];
    config.fit_input = require<std::string>(f, "input");
    if (f.contains("target_accuracy")) config.fit_target_accuracy = f["target_accuracy"].get<double>();
    config.fit_original_tokens = f.value("original_tokens", std::int64_t{0});
    config.fit_z = f.value("z", 1.96);
  }

  if (doc.contains("eval")) {
    const auto& e = doc["eval"];
    config.eval_items = require<std::string>(e, "items");
    config.eval_mode = e.value("mode", "mcqa");
    config.eval_n = e.value("n", 8);
    if (config.eval_mode != "mcqa" && config.eval_mode != "freeform") {
      throw ValidationError("config key 'eval.mode' must be 'mcqa' or 'freeform'");
    }
    if (config.eval_n < 1) throw ValidationError("config key 'eval.n' must be >= 1");
  }

  if (doc.contains("rag")) {
    const auto& r = doc["rag"];
    config.rag_chunk_tokens = r.value("chunk_tokens", 512);
    config.rag_overlap_tokens = r.value("overlap_tokens", 64);
    config.rag_k1 = r.value("k1", 128);
    config.rag_k2 = r.value("k2", 8);
    config.rag_rerank_url = r.value("rerank_url", "");
    config.rag_index_path = r.value("index_path", "");
  }
  return config;
}

std::string resolve_path(const RunConfig& config, const std::string& path) {
  std::filesystem::path p(path);
  if (p.is_absolute() || config.config_dir.empty()) return path;
  return (std::filesystem::path(config.config_dir) / p).string();
}

std::unique_ptr<Backend> make_backend(const RunConfig& config) {
  if (config.endpoint.mock) {
    std::uint64_t seed = config.endpoint.mock_seed.value_or(derive_seed(config.seed, "mock"));
    return std::make_unique<MockBackend>(seed, config.endpoint.mock_embedding_dim);
  }
  EndpointConfig endpoint;
  endpoint.url = config.endpoint.url;
  endpoint.api_key_env_var = config.endpoint.api_key_env_var;
  endpoint.retry = config.endpoint.retry;
  return std::make_unique<HttpBackend>(endpoint);
}

std::unique_ptr<Tokenizer> make_run_tokenizer(const RunConfig& config) {
  if (config.tokenizer_spec == "whitespace" || config.tokenizer_spec.empty()) {
    return std::make_unique<WhitespaceTokenizer>();
  }
  return make_tokenizer(resolve_path(config, config.tokenizer_spec));
}

RunManifest RunManifest::load_or_create(const std::string& run_dir, const std::string& config_hash) {
  RunManifest manifest;
  manifest.path_ = (std::filesystem::path(run_dir) / "manifest.json").string();
  manifest.config_hash_ = config_hash;
  if (std::filesystem::exists(manifest.path_)) {
    nlohmann::json j = nlohmann::json::parse(read_file(manifest.path_));
    if (j.value("config_hash", "") == config_hash) {
      nlohmann::json stages = j.value("stages", nlohmann::json::object());
      for (const auto& [stage, entry] : stages.items()) {
        auto& record = manifest.stages_[stage];
        record["__status"] = entry.value("status", "");
        nlohmann::json outputs = entry.value("outputs", nlohmann::json::object());
        for (const auto& [file, hash] : outputs.items()) {
          record[file] = hash.get<std::string>();
        }
      }
    }
    // A manifest from a different config is ignored and overwritten on save.
  }
  return manifest;
}

void RunManifest::record_stage(const std::string& stage,
                               const std::map<std::string, std::string>& output_hashes) {
  auto& record = stages_[stage];
  record.clear();
  record["__status"] = "done";
  for (const auto& [file, hash] : output_hashes) record[file] = hash;
  save();
}

std::string RunManifest::stage_status(const std::string& stage) const {
  auto it = stages_.find(stage);
  if (it == stages_.end()) return "";
  auto status = it->second.find("__status");
  return status == it->second.end() ? "" : status->second;
}

std::map<std::string, std::string> RunManifest::stage_outputs(const std::string& stage) const {
  std::map<std::string, std::string> outputs;
  auto it = stages_.find(stage);
  if (it == stages_.end()) return outputs;
  for (const auto& [k, v] : it->second) {
    if (k != "__status") outputs[k] = v;
  }
  return outputs;
}

void RunManifest::save() const {
  nlohmann::json j;
  j["config_hash"] = config_hash_;
  nlohmann::json stages = nlohmann::json::object();
  for (const auto& [stage, record] : stages_) {
    nlohmann::json entry;
    entry["status"] = record.count("__status") ? record.at("__status") : "";
    nlohmann::json outputs = nlohmann::json::object();
    for (const auto& [k, v] : record) {
      if (k != "__status") outputs[k] = v;
    }
    entry["outputs"] = outputs;
    stages[stage] = entry;
  }
  j["stages"] = stages;
  write_file(path_, j.dump(2) + "\n");
}

}  // namespace synthkit
