#include "synthkit/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <map>
#include <set>

#include <json.hpp>

#include "synthkit/corpus.hpp"
#include "synthkit/errors.hpp"
#include "synthkit/eval.hpp"
#include "synthkit/generators.hpp"
#include "synthkit/metrics.hpp"
#include "synthkit/mixer.hpp"
#include "synthkit/prompts.hpp"
#include "synthkit/scaling.hpp"
#include "synthkit/util.hpp"

namespace synthkit {

namespace {

namespace fs = std::filesystem;

std::string require_existing(const RunConfig& config, const std::string& key, const std::string& path) {
  if (path.empty()) throw ValidationError("config key '" + key + "' is required for this command");
  std::string resolved = resolve_path(config, path);
  if (!fs::exists(resolved)) {
    throw ValidationError("config key '" + key + "' points to a missing path: " + resolved);
  }
  return resolved;
}

std::string run_path(const RunConfig& config, const std::string& file) {
  return (fs::path(config.output_dir) / file).string();
}

void ensure_run_dir(const RunConfig& config) {
  if (config.output_dir.empty()) throw ValidationError("config key 'output_dir' is required");
  fs::create_directories(config.output_dir);
}

std::string hash_of_file(const std::string& path) { return content_hash(read_file(path)); }

std::string fmt(const char* format, double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), format, value);
  return buf;
}

Corpus load_main_corpus(const RunConfig& config, const Tokenizer& tokenizer) {
  std::string path = require_existing(config, "corpus", config.corpus);
  return load_corpus(path, tokenizer, config.corpus_domain);
}

std::string records_file_for_method(const RunConfig& config, const std::string& method) {
  return run_path(config, "records_" + method + ".jsonl");
}

// Formats every component's records against the corpus, honoring explicit
// record paths or this run's generate outputs.
std::map<std::string, std::vector<TrainingRecord>> load_mix_sources(const RunConfig& config,
                                                                    const Corpus& corpus,
                                                                    const Tokenizer& tokenizer) {
  if (config.mix_components.empty()) {
    throw ValidationError("config key 'mix.components' is required for this command");
  }
  std::map<std::string, std::vector<TrainingRecord>> sources;
  for (const auto& component : config.mix_components) {
    std::string path = component.records.empty()
                           ? records_file_for_method(config, component.method)
                           : resolve_path(config, component.records);
    if (!fs::exists(path)) {
      throw ValidationError("mix component '" + component.label + "' records file missing: " + path);
    }
    std::vector<TrainingRecord> formatted;
    for (const auto& record : load_records(path)) {
      const Document* doc = corpus.find(record.doc_id);
      if (doc == nullptr) {
        throw ValidationError("record '" + record.record_id + "' references unknown document '" +
                              record.doc_id + "'");
      }
      formatted.push_back(format_record(record, *doc, tokenizer));
    }
    sources[component.label] = std::move(formatted);
  }
  return sources;
}

MixSpec make_mix_spec(const RunConfig& config) {
  MixSpec spec;
  for (const auto& component : config.mix_components) {
    spec.components.push_back({component.label, component.weight});
  }
  spec.replay_fraction = config.replay_fraction;
  spec.total_token_budget = config.mix_token_budget;
  spec.seed = derive_seed(config.seed, "mix");
  spec.unit = config.mix_unit == "records" ? MixUnit::Records : MixUnit::Tokens;
  return spec;
}

std::vector<TrainingRecord> build_run_mixture(const RunConfig& config, const Tokenizer& tokenizer) {
  Corpus corpus = load_main_corpus(config, tokenizer);
  auto sources = load_mix_sources(config, corpus, tokenizer);
  MixSpec spec = make_mix_spec(config);

  std::optional<Corpus> replay;
  if (spec.replay_fraction > 0.0) {
    std::string path = require_existing(config, "replay_corpus", config.replay_corpus);
    replay = load_corpus(path, tokenizer);
  }
  return build_mixture(sources, spec, replay ? &*replay : nullptr);
}

void write_mixture_file(const std::vector<TrainingRecord>& mixture, const std::string& path) {
  std::string out;
  for (const auto& record : mixture) {
    nlohmann::json j;
    j["text"] = record.text;
    j["token_count"] = record.token_count;
    j["source"] = record.source;
    out += j.dump();
    out.push_back('\n');
  }
  write_file(path, out);
}

std::vector<MCQAItem> load_mcqa_items(const std::string& path) {
  std::vector<MCQAItem> items;
  int line_no = 0;
  for (const auto& line : split_lines(read_file(path))) {
    ++line_no;
    if (trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("eval items line " + std::to_string(line_no) + " is not valid JSON: " +
                            e.what());
    }
    MCQAItem item;
    try {
      item.item_id = j.value("item_id", "item-" + std::to_string(line_no));
      item.question = j.at("question").get<std::string>();
      const auto& options = j.at("options");
      char letter = 'A';
      for (const auto& option : options) {
        if (option.is_array()) {
          item.options.push_back(
              {option.at(0).get<std::string>().at(0), option.at(1).get<std::string>()});
        } else {
          item.options.push_back({letter, option.get<std::string>()});
        }
        ++letter;
      }
      item.gold = j.at("gold").get<std::string>().at(0);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("eval items line " + std::to_string(line_no) + ": " + e.what());
    }
    validate_item(item);
    items.push_back(std::move(item));
  }
  if (items.empty()) throw ValidationError("eval items file is empty: " + path);
  return items;
}

struct FreeFormItem {
  std::string item_id;
  std::string question;
  std::string gold;
};

std::vector<FreeFormItem> load_freeform_items(const std::string& path) {
  std::vector<FreeFormItem> items;
  int line_no = 0;
  for (const auto& line : split_lines(read_file(path))) {
    ++line_no;
    if (trim(line).empty()) continue;
    FreeFormItem item;
    try {
      nlohmann::json j = nlohmann::json::parse(line);
      item.item_id = j.value("item_id", "item-" + std::to_string(line_no));
      item.question = j.at("question").get<std::string>();
      item.gold = j.at("gold").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("eval items line " + std::to_string(line_no) + ": " + e.what());
    }
    if (item.gold.empty()) {
      throw ValidationError("eval items line " + std::to_string(line_no) + " has an empty gold answer");
    }
    items.push_back(std::move(item));
  }
  if (items.empty()) throw ValidationError("eval items file is empty: " + path);
  return items;
}

std::string extract_final_answer(const std::string& completion) {
  std::optional<std::string> answer;
  for (const auto& raw : split_lines(completion)) {
    std::string line = trim(raw);
    if (line.rfind("Answer:", 0) == 0) answer = trim(line.substr(std::string("Answer:").size()));
  }
  return answer.value_or(trim(completion));
}

nlohmann::json eval_result_to_json(const EvalResult& result) {
  nlohmann::json j;
  j["profile"] = {{"temperature", profiles::EVAL.temperature},
                  {"top_p", profiles::EVAL.top_p},
                  {"max_tokens", profiles::EVAL.max_tokens}};
  j["mean_accuracy"] = result.mean_accuracy;
  if (result.band) j["band"] = {result.band->first, result.band->second};
  nlohmann::json per_item = nlohmann::json::array();
  for (const auto& item : result.per_item) {
    per_item.push_back(
        {{"item_id", item.item_id}, {"n_correct", item.n_correct}, {"n_samples", item.n_samples}});
  }
  j["per_item"] = per_item;
  return j;
}

// Free-form scoring: sample n responses per item, judge each against gold.
EvalResult evaluate_freeform(const std::vector<FreeFormItem>& items,
                             const std::vector<std::string>& item_prompts, const RunConfig& config,
                             Backend& backend) {
  SamplingProfile profile = profiles::EVAL;
  profile.n = config.eval_n;
  std::vector<ChatRequest> requests;
  for (std::size_t i = 0; i < items.size(); ++i) {
    requests.push_back(
        {"freeform:" + items[i].item_id, config.endpoint.generator_model, item_prompts[i], profile});
  }
  BatchOptions batch;
  batch.max_in_flight = config.endpoint.max_in_flight;
  batch.strict = true;
  auto responses = run_batch(backend, requests, batch);

  EvalResult result;
  std::vector<std::vector<bool>> per_sample(items.size());
  std::int64_t total_correct = 0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    ItemScore score;
    score.item_id = items[i].item_id;
    score.n_samples = config.eval_n;
    per_sample[i].resize(static_cast<std::size_t>(config.eval_n), false);
    for (int s = 0; s < config.eval_n; ++s) {
      std::string candidate = extract_final_answer(responses[i].response->texts[static_cast<std::size_t>(s)]);
      JudgeVerdict verdict = judge_freeform(items[i].question, items[i].gold, candidate, backend,
                                            config.endpoint.judge_model,
                                            items[i].item_id + ":" + std::to_string(s));
      per_sample[i][static_cast<std::size_t>(s)] = verdict.correct;
      if (verdict.correct) ++score.n_correct;
    }
    total_correct += score.n_correct;
    result.per_item.push_back(score);
  }
  result.mean_accuracy = static_cast<double>(total_correct) /
                         (static_cast<double>(items.size()) * static_cast<double>(config.eval_n));
  if (config.eval_n >= 2) {
    RunPoint runs;
    runs.tokens = 1;
    for (int s = 0; s < config.eval_n; ++s) {
      double acc = 0.0;
      for (std::size_t i = 0; i < items.size(); ++i) {
        if (per_sample[i][static_cast<std::size_t>(s)]) acc += 1.0;
      }
      runs.run_accuracies.push_back(acc / static_cast<double>(items.size()));
    }
    auto band = confidence_band({runs});
    result.band = std::make_pair(band.front().low, band.front().high);
  }
  return result;
}

struct ScalingInput {
  std::vector<ScalingPoint> points;
  std::vector<RunPoint> runs;
};

ScalingInput load_scaling_input(const std::string& path) {
  ScalingInput input;
  auto& points = input.points;
  auto& scaling_runs = input.runs;
  std::string raw = read_file(path);
  bool json_input = fs::path(path).extension() == ".json" || (!raw.empty() && raw.front() == '[');
  if (json_input) {
    try {
      for (const auto& j : nlohmann::json::parse(raw)) {
        ScalingPoint p;
        p.tokens = j.at("tokens").get<std::int64_t>();
        p.accuracy = j.at("accuracy").get<double>();
        points.push_back(p);
        if (j.contains("runs")) {
          scaling_runs.push_back({p.tokens, j["runs"].get<std::vector<double>>()});
        }
      }
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("scaling input " + path + ": " + e.what());
    }
    return input;
  }
  for (const auto& line : split_lines(raw)) {
    std::string t = trim(line);
    if (t.empty()) continue;
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
      auto comma = t.find(',', start);
      cells.push_back(trim(t.substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (cells.size() < 2) throw ValidationError("scaling input line needs tokens,accuracy: " + t);
    char* end = nullptr;
    double tokens = std::strtod(cells[0].c_str(), &end);
    if (end == cells[0].c_str()) continue;  // header line
    ScalingPoint p;
    p.tokens = static_cast<std::int64_t>(tokens);
    p.accuracy = std::strtod(cells[1].c_str(), nullptr);
    points.push_back(p);
    if (cells.size() > 2) {
      RunPoint rp;
      rp.tokens = p.tokens;
      for (std::size_t i = 2; i < cells.size(); ++i) {
        if (!cells[i].empty()) rp.run_accuracies.push_back(std::strtod(cells[i].c_str(), nullptr));
      }
      if (!rp.run_accuracies.empty()) scaling_runs.push_back(std::move(rp));
    }
  }
  return input;
}

}  // namespace

void cmd_ingest(const RunConfig& config, std::ostream& out) {
  ensure_run_dir(config);
  auto tokenizer = make_run_tokenizer(config);
  Corpus corpus = load_main_corpus(config, *tokenizer);

  std::string path = run_path(config, "corpus_normalized.jsonl");
  save_corpus(corpus, path);

  auto manifest = RunManifest::load_or_create(config.output_dir, config.config_hash);
  manifest.record_stage("ingest", {{"corpus_normalized.jsonl", hash_of_file(path)}});

  out << "ingested " << corpus.documents.size() << " documents, " << corpus.total_tokens
      << " tokens (tokenizer: " << tokenizer->name() << ")\n";
}

void cmd_generate(const RunConfig& config, std::ostream& out) {
  ensure_run_dir(config);
  if (config.generate_methods.empty()) {
    throw ValidationError("config key 'generate.methods' is required for this command");
  }
  auto tokenizer = make_run_tokenizer(config);
  Corpus corpus = load_main_corpus(config, *tokenizer);
  auto backend = make_backend(config);

  std::set<std::string> seen_methods;
  for (const auto& method_str : config.generate_methods) {
    if (!seen_methods.insert(method_str).second) {
      throw ValidationError("config key 'generate.methods' lists '" + method_str + "' twice");
    }
  }

  auto manifest = RunManifest::load_or_create(config.output_dir, config.config_hash);
  std::map<std::string, std::string> outputs;
  for (const auto& method_str : config.generate_methods) {
    Method method = method_from_name(method_str);
    GenSession session;
    session.backend = backend.get();
    session.tokenizer = tokenizer.get();
    session.model = config.endpoint.generator_model;
    session.seed = derive_seed(config.seed, "generate:" + method_str);

    BudgetOptions options;
    options.max_in_flight = config.endpoint.max_in_flight;
    options.records_path = records_file_for_method(config, method_str);
    options.manifest_path = run_path(config, "gen_" + method_str + ".json");

    auto records = generate_until_budget(session, corpus, method, config.generate_token_budget, options);
    std::int64_t tokens = 0;
    for (const auto& r : records) tokens += r.token_count;
    out << method_str << ": " << records.size() << " records, " << tokens << " tokens\n";

    outputs["records_" + method_str + ".jsonl"] = hash_of_file(options.records_path);
    outputs["gen_" + method_str + ".json"] = hash_of_file(options.manifest_path);
  }
  manifest.record_stage("generate", outputs);
}

void cmd_mix(const RunConfig& config, std::ostream& out) {
  ensure_run_dir(config);
  auto tokenizer = make_run_tokenizer(config);
  auto mixture = build_run_mixture(config, *tokenizer);
  std::string path = run_path(config, "mixture.jsonl");
  write_mixture_file(mixture, path);

  auto manifest = RunManifest::load_or_create(config.output_dir, config.config_hash);
  manifest.record_stage("mix", {{"mixture.jsonl", hash_of_file(path)}});

  std::map<std::string, std::int64_t> share;
  for (const auto& record : mixture) share[record.source] += record.token_count;
  out << "mixture: " << mixture.size() << " records\n";
  for (const auto& [label, tokens] : share) out << "  " << label << ": " << tokens << " tokens\n";
}

void cmd_pack(const RunConfig& config, std::ostream& out) {
  ensure_run_dir(config);
  auto tokenizer = make_run_tokenizer(config);
  auto mixture = build_run_mixture(config, *tokenizer);
  std::string mixture_path = run_path(config, "mixture.jsonl");
  write_mixture_file(mixture, mixture_path);

  auto sequences = pack_sequences(mixture, config.seq_len, derive_seed(config.seed, "pack"), *tokenizer);
  std::string training_path = run_path(config, "training.jsonl");
  export_training_file(sequences, training_path, config.seq_len);

  auto manifest = RunManifest::load_or_create(config.output_dir, config.config_hash);
  manifest.record_stage("pack", {{"mixture.jsonl", hash_of_file(mixture_path)},
                                 {"training.jsonl", hash_of_file(training_path)}});

  out << "packed " << sequences.size() << " sequences of " << config.seq_len << " tokens\n";
}

void cmd_metrics(const RunConfig& config, std::ostream& out) {
  ensure_run_dir(config);
  auto tokenizer = make_run_tokenizer(config);
  auto backend = make_backend(config);

  std::vector<std::string> record_files;
  if (!config.metrics_records.empty()) {
    record_files.push_back(require_existing(config, "metrics.records", config.metrics_records));
  } else {
    for (const auto& method : config.generate_methods) {
      std::string path = records_file_for_method(config, method);
      if (fs::exists(path)) record_files.push_back(path);
    }
    if (record_files.empty()) {
      throw ValidationError("config key 'metrics.records' is required (no generate outputs found)");
    }
  }

  std::vector<std::string> texts;
  for (const auto& file : record_files) {
    for (const auto& record : load_records(file)) texts.push_back(record.text);
  }
  if (texts.empty()) throw ValidationError("no records to score");

  std::uint64_t subsample_seed = derive_seed(config.seed, "subsample");
  auto indices = subsample_indices(texts.size(), static_cast<std::size_t>(config.vendi_subsample_cap),
                                   subsample_seed);
  std::vector<std::string> sampled;
  sampled.reserve(indices.size());
  for (auto i : indices) sampled.push_back(texts[i]);

  DiversityReport report;
  report.vendi = vendi_score(backend->embed(config.endpoint.embedding_model, sampled).vectors);
  report.unique_4gram_ratio = unique_ngram_ratio(texts, config.ngram_n, *tokenizer);
  report.n_samples = static_cast<int>(sampled.size());
  report.total_texts = static_cast<int>(texts.size());
  report.subsampled = sampled.size() < texts.size();
  report.seed = subsample_seed;

  nlohmann::json j;
  j["config_hash"] = config.config_hash;
  j["vendi"] = report.vendi;
  j["unique_4gram_ratio"] = report.unique_4gram_ratio;
  j["ngram_n"] = config.ngram_n;
  j["n_samples"] = report.n_samples;
  j["total_texts"] = report.total_texts;
  j["subsampled"] = report.subsampled;
  j["seed"] = report.seed;
  std::string report_path = run_path(config, "diversity_report.json");
  write_file(report_path, j.dump(2) + "\n");

  std::map<std::string, std::string> outputs{{"diversity_report.json", hash_of_file(report_path)}};

  if (config.gradients) {
    GradientSet grads = load_gradient_set(resolve_path(config, config.gradients->matrix),
                                          resolve_path(config, config.gradients->sidecar));
    JlMode mode = config.gradients->identity_bypass ? JlMode::Identity : JlMode::Gaussian;
    std::uint64_t jl_seed = derive_seed(config.seed, "jl");
    GroupSimilarity similarity = group_similarity(grads, config.gradients->target_dim, jl_seed, mode);
    nlohmann::json g;
    g["config_hash"] = config.config_hash;
    g["groups"] = similarity.groups;
    g["mean_cosine"] = similarity.mean_cosine;
    g["target_dim"] = config.gradients->target_dim;
    g["seed"] = jl_seed;
    std::string grad_path = run_path(config, "gradient_similarity.json");
    write_file(grad_path, g.dump(2) + "\n");
    outputs["gradient_similarity.json"] = hash_of_file(grad_path);
  }

  auto manifest = RunManifest::load_or_create(config.output_dir, config.config_hash);
  manifest.record_stage("metrics", outputs);

  out << "vendi: " << fmt("%.6g", report.vendi) << " (n=" << report.n_samples << ")\n"
      << "unique_" << config.ngram_n << "gram_ratio: " << fmt("%.6g", report.unique_4gram_ratio) << "\n";
}

void cmd_fit(const RunConfig& config, std::ostream& out) {
  ensure_run_dir(config);
  std::string input = require_existing(config, "fit.input", config.fit_input);
  ScalingInput scaling_input = load_scaling_input(input);
  const auto& points = scaling_input.points;
  ScalingFit fit = fit_log_linear(points);

  nlohmann::json j;
  j["config_hash"] = config.config_hash;
  j["slope"] = fit.slope;
  j["intercept"] = fit.intercept;
  j["r_squared"] = fit.r_squared;
  j["n_points"] = fit.n_points;

  if (config.fit_target_accuracy && config.fit_original_tokens > 0) {
    CrossoverEstimate crossover =
        extrapolate_crossover(fit, *config.fit_target_accuracy, config.fit_original_tokens);
    j["crossover"] = {{"target_accuracy", *config.fit_target_accuracy},
                      {"tokens_needed", crossover.tokens_needed},
                      {"ratio_to_original", crossover.ratio_to_original},
                      {"target_outside_unit_range", crossover.target_outside_unit_range}};
  }

  std::map<std::int64_t, BandPoint> band_by_tokens;
  if (!scaling_input.runs.empty()) {
    for (const auto& band : confidence_band(scaling_input.runs, config.fit_z)) {
      band_by_tokens[band.tokens] = band;
    }
  }

  std::string csv = "tokens,fitted_accuracy,band_low,band_high\n";
  for (const auto& p : points) {
    csv += std::to_string(p.tokens) + "," + fmt("%.10g", fitted_accuracy(fit, static_cast<double>(p.tokens)));
    if (auto it = band_by_tokens.find(p.tokens); it != band_by_tokens.end()) {
      csv += "," + fmt("%.10g", it->second.low) + "," + fmt("%.10g", it->second.high);
    } else {
      csv += ",,";
    }
    csv += "\n";
  }

  std::string report_path = run_path(config, "fit_report.json");
  std::string csv_path = run_path(config, "fit_curve.csv");
  write_file(report_path, j.dump(2) + "\n");
  write_file(csv_path, csv);

  auto manifest = RunManifest::load_or_create(config.output_dir, config.config_hash);
  manifest.record_stage("fit", {{"fit_report.json", hash_of_file(report_path)},
                                {"fit_curve.csv", hash_of_file(csv_path)}});

  out << "fit: accuracy = " << fmt("%.6g", fit.intercept) << " + " << fmt("%.6g", fit.slope)
      << " * ln(tokens), r^2 = " << fmt("%.4f", fit.r_squared) << "\n";
  if (j.contains("crossover")) {
    out << "crossover: " << fmt("%.6g", j["crossover"]["tokens_needed"].get<double>()) << " tokens ("
        << fmt("%.6g", j["crossover"]["ratio_to_original"].get<double>()) << "x original)\n";
  }
}

void cmd_eval(const RunConfig& config, std::ostream& out) {
  ensure_run_dir(config);
  std::string items_path = require_existing(config, "eval.items", config.eval_items);
  auto backend = make_backend(config);

  EvalResult result;
  if (config.eval_mode == "mcqa") {
    auto items = load_mcqa_items(items_path);
    result = evaluate_mcqa(items, config.endpoint.generator_model, *backend, config.eval_n,
                           config.endpoint.max_in_flight);
  } else {
    auto items = load_freeform_items(items_path);
    std::vector<std::string> item_prompts;
    item_prompts.reserve(items.size());
    for (const auto& item : items) item_prompts.push_back(prompts::free_form(item.question));
    result = evaluate_freeform(items, item_prompts, config, *backend);
  }

  nlohmann::json j = eval_result_to_json(result);
  j["config_hash"] = config.config_hash;
  j["mode"] = config.eval_mode;
  j["n"] = config.eval_n;
  std::string report_path = run_path(config, "eval_report.json");
  write_file(report_path, j.dump(2) + "\n");

  auto manifest = RunManifest::load_or_create(config.output_dir, config.config_hash);
  manifest.record_stage("eval", {{"eval_report.json", hash_of_file(report_path)}});

  out << "accuracy: " << fmt("%.6g", result.mean_accuracy) << " over " << result.per_item.size()
      << " items x " << config.eval_n << " samples\n";
}

void cmd_rag_index(const RunConfig& config, std::ostream& out) {
  ensure_run_dir(config);
  auto tokenizer = make_run_tokenizer(config);
  Corpus corpus = load_main_corpus(config, *tokenizer);
  auto backend = make_backend(config);

  RagIndex index = build_rag_index(corpus, *backend, config.endpoint.embedding_model, *tokenizer,
                                   config.rag_chunk_tokens, config.rag_overlap_tokens);
  std::string base = config.rag_index_path.empty() ? run_path(config, "rag_index")
                                                   : resolve_path(config, config.rag_index_path);
  save_rag_index(index, base);

  auto manifest = RunManifest::load_or_create(config.output_dir, config.config_hash);
  manifest.record_stage("rag-index", {{"rag_index.json", hash_of_file(base + ".json")},
                                      {"rag_index.f32", hash_of_file(base + ".f32")}});

  out << "indexed " << index.chunks.size() << " chunks from " << corpus.documents.size()
      << " documents\n";
}

void cmd_rag_eval(const RunConfig& config, std::ostream& out) {
  ensure_run_dir(config);
  std::string items_path = require_existing(config, "eval.items", config.eval_items);
  std::string base = config.rag_index_path.empty() ? run_path(config, "rag_index")
                                                   : resolve_path(config, config.rag_index_path);
  if (!fs::exists(base + ".json")) {
    throw ValidationError("rag index not found at " + base + ".json (run rag-index first)");
  }
  RagIndex index = load_rag_index(base);
  auto backend = make_backend(config);

  std::unique_ptr<RerankScorer> scorer;
  if (!config.rag_rerank_url.empty()) {
    scorer = std::make_unique<HttpRerankScorer>(config.rag_rerank_url, config.endpoint.retry);
  } else {
    scorer = std::make_unique<EmbeddingCosineScorer>(*backend, config.endpoint.embedding_model);
  }

  auto retrieve_context = [&](const std::string& question) {
    auto candidates = retrieve(index, question, *backend, config.endpoint.embedding_model, config.rag_k1);
    return rerank(question, candidates, *scorer, config.rag_k2);
  };

  EvalResult result;
  if (config.eval_mode == "mcqa") {
    auto items = load_mcqa_items(items_path);
    std::vector<std::string> context_prompts;
    context_prompts.reserve(items.size());
    for (const auto& item : items) {
      context_prompts.push_back(render_rag_prompt(retrieve_context(item.question), item));
    }
    result = evaluate_mcqa(items, config.endpoint.generator_model, *backend, config.eval_n,
                           config.endpoint.max_in_flight, &context_prompts);
  } else {
    auto items = load_freeform_items(items_path);
    std::vector<std::string> item_prompts;
    item_prompts.reserve(items.size());
    for (const auto& item : items) {
      item_prompts.push_back(render_rag_prompt(retrieve_context(item.question), item.question));
    }
    result = evaluate_freeform(items, item_prompts, config, *backend);
  }

  nlohmann::json j = eval_result_to_json(result);
  j["config_hash"] = config.config_hash;
  j["mode"] = config.eval_mode;
  j["n"] = config.eval_n;
  j["k1"] = config.rag_k1;
  j["k2"] = config.rag_k2;
  std::string report_path = run_path(config, "rag_eval_report.json");
  write_file(report_path, j.dump(2) + "\n");

  auto manifest = RunManifest::load_or_create(config.output_dir, config.config_hash);
  manifest.record_stage("rag-eval", {{"rag_eval_report.json", hash_of_file(report_path)}});

  out << "rag accuracy: " << fmt("%.6g", result.mean_accuracy) << " over " << result.per_item.size()
      << " items x " << config.eval_n << " samples\n";
}

void cmd_estimate_flops(double trainee_params, double generator_params, double tokens,
                        std::ostream& out) {
  FlopEstimate estimate = flop_estimate(trainee_params, generator_params, tokens);
  out << "N (trainee params): " << fmt("%.6g", estimate.trainee_params) << "\n"
      << "M (generator params): " << fmt("%.6g", estimate.generator_params) << "\n"
      << "D (tokens): " << fmt("%.6g", estimate.tokens) << "\n"
      << "FLOPs: " << fmt("%.4g", estimate.flops) << "\n"
      << "H100-hours: " << fmt("%.3g", estimate.h100_hours) << "\n";
}

int run_command(const std::string& name, const RunConfig& config, std::ostream& out,
                std::ostream& err) {
  try {
    if (name == "ingest") {
      cmd_ingest(config, out);
    } else if (name == "generate") {
      cmd_generate(config, out);
    } else if (name == "mix") {
      cmd_mix(config, out);
    } else if (name == "pack") {
      cmd_pack(config, out);
    } else if (name == "metrics") {
      cmd_metrics(config, out);
    } else if (name == "fit") {
      cmd_fit(config, out);
    } else if (name == "eval") {
      cmd_eval(config, out);
    } else if (name == "rag-index") {
      cmd_rag_index(config, out);
    } else if (name == "rag-eval") {
      cmd_rag_eval(config, out);
    } else {
      err << "unknown command: " << name << "\n";
      return kExitConfig;
    }
    return kExitOk;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace synthkit
