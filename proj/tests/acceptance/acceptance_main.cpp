// Acceptance suite: checks the toolkit's closed-form quantities and
// determinism contracts end to end, printing one PASS/FAIL line per
// criterion. Exits non-zero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "synthkit/commands.hpp"
#include "synthkit/corpus.hpp"
#include "synthkit/errors.hpp"
#include "synthkit/eval.hpp"
#include "synthkit/generators.hpp"
#include "synthkit/metrics.hpp"
#include "synthkit/mixer.hpp"
#include "synthkit/prompts.hpp"
#include "synthkit/scaling.hpp"
#include "synthkit/util.hpp"

#ifndef SYNTHKIT_TEST_DIR
#define SYNTHKIT_TEST_DIR "."
#endif

using namespace synthkit;

namespace {

WhitespaceTokenizer tok;

std::string fixture(const std::string& name) {
  return std::string(SYNTHKIT_TEST_DIR) + "/fixtures/" + name;
}

std::string golden(const std::string& name) {
  return std::string(SYNTHKIT_TEST_DIR) + "/golden/" + name;
}

struct Checker {
  bool ok = true;
  std::string detail;

  void expect(bool condition, const std::string& message) {
    if (!condition && ok) {
      ok = false;
      detail = message;
    }
  }
};

std::string words(int n, const std::string& stem) {
  std::string out;
  for (int i = 0; i < n; ++i) {
    if (i > 0) out += " ";
    out += stem + std::to_string(i);
  }
  return out;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  return dot(a, b) / (std::sqrt(dot(a, a)) * std::sqrt(dot(b, b)));
}

// Independent eigen oracle (cyclic Jacobi), separate from the Eigen-based
// implementation path.
std::vector<double> jacobi_eigenvalues(std::vector<std::vector<double>> m) {
  const std::size_t n = m.size();
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) off += m[i][j] * m[i][j];
    }
    if (off < 1e-24) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::abs(m[p][q]) < 1e-18) continue;
        double theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
        double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0);
        double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          double mkp = m[k][p], mkq = m[k][q];
          m[k][p] = c * mkp - s * mkq;
          m[k][q] = s * mkp + c * mkq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          double mpk = m[p][k], mqk = m[q][k];
          m[p][k] = c * mpk - s * mqk;
          m[q][k] = s * mpk + c * mqk;
        }
      }
    }
  }
  std::vector<double> eigenvalues(n);
  for (std::size_t i = 0; i < n; ++i) eigenvalues[i] = m[i][i];
  return eigenvalues;
}

// --- criterion 1 -----------------------------------------------------------

Checker criterion_flops() {
  Checker c;
  FlopEstimate estimate = flop_estimate(8e9, 70e9, 7e8);
  c.expect(std::abs(estimate.flops - 1.316e20) / 1.316e20 < 0.001,
           "flops " + std::to_string(estimate.flops));
  c.expect(std::abs(estimate.h100_hours - 18.5) / 18.5 < 0.005,
           "h100 hours " + std::to_string(estimate.h100_hours));
  return c;
}

// --- criterion 2 -----------------------------------------------------------

Checker criterion_vendi() {
  Checker c;
  std::vector<std::vector<double>> identical(5, std::vector<double>{0.2, 0.4, 0.6});
  c.expect(std::abs(vendi_score(identical) - 1.0) < 1e-9, "identical vectors");

  for (int n : {2, 4, 16}) {
    std::vector<std::vector<double>> orthogonal;
    for (int i = 0; i < n; ++i) {
      std::vector<double> v(static_cast<std::size_t>(n), 0.0);
      v[static_cast<std::size_t>(i)] = 1.0;
      orthogonal.push_back(v);
    }
    c.expect(std::abs(vendi_score(orthogonal) - n) < 1e-9, "orthogonal n=" + std::to_string(n));
  }

  std::vector<std::vector<double>> pair{{1.0, 0.0}, {0.5, std::sqrt(3.0) / 2.0}};
  double score = vendi_score(pair);
  c.expect(std::abs(score - 1.7548) < 1e-3, "cosine-0.5 pair " + std::to_string(score));

  // Cross-check against the independent Jacobi oracle.
  std::vector<std::vector<double>> kernel{{0.5, 0.25}, {0.25, 0.5}};
  double entropy = 0;
  for (double lambda : jacobi_eigenvalues(kernel)) {
    if (lambda > 0) entropy -= lambda * std::log(lambda);
  }
  c.expect(std::abs(score - std::exp(entropy)) < 1e-9, "oracle disagreement");
  return c;
}

// --- criterion 3 -----------------------------------------------------------

Checker criterion_ngrams() {
  Checker c;
  Rng rng(2024);
  int tested = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::string> texts;
    int docs = 1 + static_cast<int>(rng.bounded(5));
    int pooled_windows = 0;
    for (int d = 0; d < docs; ++d) {
      int len = static_cast<int>(rng.bounded(40));
      std::string text;
      for (int i = 0; i < len; ++i) {
        if (i > 0) text += " ";
        text += "w" + std::to_string(rng.bounded(6));
      }
      pooled_windows += std::max(0, len - 3);
      texts.push_back(text);
    }
    if (pooled_windows == 0) continue;
    ++tested;

    std::vector<std::vector<std::string>> windows;
    for (const auto& text : texts) {
      auto tokens = tok.tokenize(text);
      for (std::size_t i = 0; i + 4 <= tokens.size(); ++i) {
        windows.emplace_back(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                             tokens.begin() + static_cast<std::ptrdiff_t>(i) + 4);
      }
    }
    std::sort(windows.begin(), windows.end());
    double distinct =
        static_cast<double>(std::unique(windows.begin(), windows.end()) - windows.begin());
    double oracle = distinct / static_cast<double>(windows.size());
    double measured = unique_ngram_ratio(texts, 4, tok);
    c.expect(measured == oracle, "trial " + std::to_string(trial) + ": " + std::to_string(measured) +
                                     " vs " + std::to_string(oracle));
  }
  c.expect(tested >= 90, "too few non-degenerate corpora: " + std::to_string(tested));
  return c;
}

// --- criterion 4 -----------------------------------------------------------

Checker criterion_packing() {
  Checker c;
  Rng rng(4242);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<TrainingRecord> records;
    int count = 1 + static_cast<int>(rng.bounded(12));
    for (int i = 0; i < count; ++i) {
      std::string text =
          words(1 + static_cast<int>(rng.bounded(120)), "r" + std::to_string(i) + "x");
      records.push_back({text, tok.count(text), "src"});
    }
    int seq_len = 4 + static_cast<int>(rng.bounded(120));
    std::uint64_t seed = rng.next_u64();
    auto sequences = pack_sequences(records, seq_len, seed, tok);

    auto order = shuffled_indices(records.size(), seed);
    std::vector<std::string> stream;
    for (std::size_t i = 0; i < order.size(); ++i) {
      if (i > 0) stream.push_back(kEodToken);
      for (auto& t : tok.tokenize(records[order[i]].text)) stream.push_back(std::move(t));
    }
    stream.resize(stream.size() - stream.size() % static_cast<std::size_t>(seq_len));

    std::vector<std::string> merged;
    for (const auto& seq : sequences) {
      if (seq.segments.size() != static_cast<std::size_t>(seq_len)) {
        c.expect(false, "window length drift");
        return c;
      }
      merged.insert(merged.end(), seq.segments.begin(), seq.segments.end());
    }
    c.expect(merged == stream, "trial " + std::to_string(trial) + " diverged");
    if (!c.ok) return c;
  }
  return c;
}

// --- criterion 5 -----------------------------------------------------------

Checker criterion_mixture() {
  Checker c;
  Rng rng(555);
  std::map<std::string, std::vector<TrainingRecord>> sources;
  for (const std::string label : {"qa", "doc"}) {
    std::vector<TrainingRecord> records;
    for (int i = 0; i < 8000; ++i) {
      std::string text = words(5 + static_cast<int>(rng.bounded(46)), label + std::to_string(i) + "x");
      records.push_back({text, tok.count(text), label});
    }
    sources[label] = std::move(records);
  }
  Corpus replay;
  replay.name = "replay";
  for (int i = 0; i < 1200; ++i) {
    Document doc;
    doc.id = "rp" + std::to_string(i);
    doc.title = doc.id;
    doc.text = words(30, "rp" + std::to_string(i) + "x");
    doc.token_count = tok.count(doc.text);
    replay.documents.push_back(std::move(doc));
  }

  const std::vector<std::pair<double, double>> ratios{{1, 1}, {1, 8}, {2, 7}, {8, 1}};
  for (std::int64_t budget : {std::int64_t{100000}, std::int64_t{160000}}) {
    for (auto [qa_w, doc_w] : ratios) {
      MixSpec spec;
      spec.components = {{"qa", qa_w}, {"doc", doc_w}};
      spec.replay_fraction = 0.1;
      spec.total_token_budget = budget;
      spec.seed = 99;
      auto mixture = build_mixture(sources, spec, &replay);
      std::map<std::string, double> realized;
      for (const auto& record : mixture) realized[record.source] += static_cast<double>(record.token_count);
      for (const auto& [label, target] : mixture_targets(spec)) {
        double relative = std::abs(realized[label] - target) / target;
        c.expect(relative < 0.02, label + " off by " + std::to_string(relative * 100) + "% at ratio " +
                                      std::to_string(qa_w) + ":" + std::to_string(doc_w));
      }
    }
  }
  return c;
}

// --- criterion 6 -----------------------------------------------------------

Checker criterion_scaling() {
  Checker c;
  std::vector<ScalingPoint> planted;
  for (std::int64_t t : {1000000, 10000000, 100000000}) {
    planted.push_back({t, 0.40 + 0.02 * std::log(static_cast<double>(t))});
  }
  ScalingFit fit = fit_log_linear(planted);
  c.expect(std::abs(fit.intercept - 0.40) < 1e-9, "intercept " + std::to_string(fit.intercept));
  c.expect(std::abs(fit.slope - 0.02) < 1e-9, "slope " + std::to_string(fit.slope));

  CrossoverEstimate crossover = extrapolate_crossover(fit, 0.75, 1750000);
  c.expect(std::abs(fitted_accuracy(fit, crossover.tokens_needed) - 0.75) < 1e-9,
           "crossover consistency");

  Rng rng(606);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<ScalingPoint> noisy;
    for (int i = 0; i < 12; ++i) {
      std::int64_t tokens = static_cast<std::int64_t>(2000 * std::pow(2.7, i));
      noisy.push_back(
          {tokens, 0.32 + 0.013 * std::log(static_cast<double>(tokens)) + 0.02 * rng.gaussian()});
    }
    ScalingFit noisy_fit = fit_log_linear(noisy);

    double n = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& p : noisy) {
      double x = std::log(static_cast<double>(p.tokens));
      n += 1;
      sx += x;
      sy += p.accuracy;
      sxx += x * x;
      sxy += x * p.accuracy;
    }
    double det = n * sxx - sx * sx;
    double oracle_intercept = (sy * sxx - sx * sxy) / det;
    double oracle_slope = (n * sxy - sx * sy) / det;
    c.expect(std::abs(noisy_fit.intercept - oracle_intercept) < 1e-9, "normal-equation intercept");
    c.expect(std::abs(noisy_fit.slope - oracle_slope) < 1e-9, "normal-equation slope");
  }
  return c;
}

// --- criterion 7 -----------------------------------------------------------

Checker criterion_goldens() {
  Checker c;
  const std::string article = "The quick study of rivers.\nRivers move sediment.";
  const std::string document = "Rivers carry sediment downstream.\nDeltas form at the mouth.";
  const std::string strategy = "Summarize each section in one line.";
  const std::string query = "Where do deltas form?";
  const std::string question = "What is the capital of France?";
  const std::string options = "A. Paris\nB. Lyon\nC. Nice\nD. Marseille";

  const std::vector<std::pair<std::string, std::string>> cases{
      {"mcqa.golden.txt", prompts::mcqa(question, options)},
      {"free_form.golden.txt", prompts::free_form(question)},
      {"qa_generation.golden.txt", prompts::qa_generation(article)},
      {"wrap.golden.txt", prompts::wrap_rephrase(document)},
      {"eg_extract.golden.txt", prompts::eg_extract(document)},
      {"eg_link.golden.txt", prompts::eg_link(document, "Alice", "Bob Corp")},
      {"ar_strategy.golden.txt", prompts::ar_strategy(document)},
      {"ar_rewrite.golden.txt", prompts::ar_rewrite(strategy, document)},
      {"focal_rewrite.golden.txt", prompts::focal_rewrite(document, strategy, query)},
  };
  for (const auto& [file, rendered] : cases) {
    c.expect(rendered + "\n" == read_file(golden(file)), file + " drifted from golden");
  }
  return c;
}

// --- criterion 8 -----------------------------------------------------------

Checker criterion_parsers() {
  Checker c;
  nlohmann::json fixtures = nlohmann::json::parse(read_file(fixture("parser_fixtures.json")));
  int total = 0;

  for (const auto& f : fixtures.at("qa_pairs")) {
    ++total;
    auto pairs = parse_qa_pairs(f.at("input").get<std::string>(), "d");
    const auto& expect = f.at("expect");
    bool match = pairs.size() == expect.size();
    for (std::size_t i = 0; match && i < pairs.size(); ++i) {
      match = pairs[i].question == expect[i][0].get<std::string>() &&
              pairs[i].answer_short == expect[i][1].get<std::string>();
    }
    c.expect(match, "qa_pairs fixture: " + f.at("input").get<std::string>());
  }

  for (const auto& f : fixtures.at("eg_json")) {
    ++total;
    if (f.value("error", false)) {
      bool threw = false;
      try {
        parse_entity_extraction(f.at("input").get<std::string>(), "d");
      } catch (const ParseError&) {
        threw = true;
      }
      c.expect(threw, "eg_json fixture should fail: " + f.at("input").get<std::string>());
      continue;
    }
    auto extraction = parse_entity_extraction(f.at("input").get<std::string>(), "d");
    c.expect(extraction.summary == f.at("expect").at("summary").get<std::string>() &&
                 extraction.entities == f.at("expect").at("entities").get<std::vector<std::string>>(),
             "eg_json fixture: " + f.at("input").get<std::string>());
  }

  for (const auto& f : fixtures.at("ar_strategy")) {
    ++total;
    auto strategies = parse_strategies(f.at("input").get<std::string>(), "d");
    auto expect = f.at("expect").get<std::vector<std::string>>();
    bool match = strategies.size() == expect.size();
    for (std::size_t i = 0; match && i < strategies.size(); ++i) {
      match = strategies[i].text == expect[i] && strategies[i].ordinal == static_cast<int>(i);
    }
    c.expect(match, "ar_strategy fixture: " + f.at("input").get<std::string>());
  }

  for (const auto& f : fixtures.at("answer_letter")) {
    ++total;
    auto letter = parse_answer(f.at("input").get<std::string>());
    if (f.at("expect").is_null()) {
      c.expect(!letter.has_value(), "answer_letter should fail: " + f.at("input").get<std::string>());
    } else {
      c.expect(letter.has_value() && *letter == f.at("expect").get<std::string>().at(0),
               "answer_letter fixture: " + f.at("input").get<std::string>());
    }
  }

  for (const auto& f : fixtures.at("judge_verdict")) {
    ++total;
    JudgeVerdict verdict = parse_judge_verdict(f.at("input").get<std::string>());
    c.expect(verdict.correct == f.at("expect").at("correct").get<bool>() &&
                 verdict.parsed == f.at("expect").at("parsed").get<bool>(),
             "judge_verdict fixture: " + f.at("input").get<std::string>());
  }

  c.expect(total >= 30, "only " + std::to_string(total) + " fixtures");
  return c;
}

// --- criterion 9 -----------------------------------------------------------

Checker criterion_retrieval() {
  Checker c;
  Rng rng(909);
  MockBackend mock(31, 24);

  for (int trial = 0; trial < 50; ++trial) {
    Corpus corpus;
    corpus.name = "c";
    int docs = 1 + static_cast<int>(rng.bounded(5));
    for (int d = 0; d < docs; ++d) {
      Document doc;
      doc.id = "d" + std::to_string(trial) + "_" + std::to_string(d);
      doc.title = doc.id;
      // 5 docs x <=1129 tokens at stride 6 stays under the 1000-chunk bound.
      int tokens = 30 + static_cast<int>(rng.bounded(1100));
      doc.text = words(tokens, doc.id + "w");
      // A few duplicated documents force exact embedding ties.
      if (d > 0 && rng.bounded(4) == 0) doc.text = corpus.documents[0].text;
      doc.token_count = tok.count(doc.text);
      corpus.documents.push_back(std::move(doc));
    }
    RagIndex index = build_rag_index(corpus, mock, "embed", tok, 8, 2);
    if (index.chunks.size() > 1000) {
      c.expect(false, "index larger than 1000 chunks");
      return c;
    }
    std::string query = words(5 + static_cast<int>(rng.bounded(8)), "q" + std::to_string(trial));
    int k1 = 1 + static_cast<int>(rng.bounded(128));
    auto ranked = retrieve(index, query, mock, "embed", k1);

    auto query_vec = mock.embed("embed", {query}).vectors.front();
    std::vector<std::size_t> order(index.chunks.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      double ca = cosine(query_vec, index.vectors[a]);
      double cb = cosine(query_vec, index.vectors[b]);
      if (ca != cb) return ca > cb;
      if (index.chunks[a].doc_id != index.chunks[b].doc_id) {
        return index.chunks[a].doc_id < index.chunks[b].doc_id;
      }
      return index.chunks[a].index < index.chunks[b].index;
    });
    std::size_t expect_count = std::min<std::size_t>(static_cast<std::size_t>(k1), order.size());
    bool match = ranked.size() == expect_count;
    for (std::size_t i = 0; match && i < ranked.size(); ++i) {
      match = ranked[i].doc_id == index.chunks[order[i]].doc_id &&
              ranked[i].index == index.chunks[order[i]].index;
    }
    c.expect(match, "retrieval order mismatch in trial " + std::to_string(trial));
    if (!c.ok) return c;
  }

  // Rerank truncation and tie rules.
  std::vector<Chunk> candidates;
  for (int i = 0; i < 5; ++i) candidates.push_back({"d", i, "text " + std::to_string(i), 2});
  struct ConstantScorer final : RerankScorer {
    std::vector<double> score(const std::string&, const std::vector<std::string>& docs) override {
      return std::vector<double>(docs.size(), 0.5);
    }
  } constant;
  auto tied = rerank("q", candidates, constant, 3);
  c.expect(tied.size() == 3 && tied[0].index == 0 && tied[1].index == 1 && tied[2].index == 2,
           "tie rule must fall back to (doc_id, index)");
  c.expect(rerank("q", candidates, constant, 9).size() == 5, "k2 beyond candidates must return all");
  return c;
}

// --- criterion 10 ----------------------------------------------------------

Checker criterion_jl() {
  Checker c;
  Rng rng(1010);
  std::vector<std::vector<double>> vectors;
  for (int i = 0; i < 100; ++i) {
    std::vector<double> v(8192);
    double norm2 = 0;
    for (auto& x : v) {
      x = rng.gaussian();
      norm2 += x * x;
    }
    double norm = std::sqrt(norm2);
    for (auto& x : v) x /= norm;
    vectors.push_back(std::move(v));
  }
  auto projected = jl_project(vectors, 1024, 77);

  double max_error = 0;
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    for (std::size_t j = i + 1; j < vectors.size(); ++j) {
      double source = cosine(vectors[i], vectors[j]);
      double low = cosine(projected[i], projected[j]);
      max_error = std::max(max_error, std::abs(source - low));
    }
  }
  c.expect(max_error < 0.15, "max pairwise cosine error " + std::to_string(max_error));
  return c;
}

// --- criterion 11 ----------------------------------------------------------

Checker criterion_end_to_end() {
  Checker c;
  namespace fs = std::filesystem;
  fs::path scratch = fs::temp_directory_path() / "synthkit_acceptance_e2e";
  fs::remove_all(scratch);
  fs::create_directories(scratch);

  nlohmann::json config_json;
  config_json["seed"] = 42;
  config_json["output_dir"] = (scratch / "run").string();
  config_json["corpus"] = fixture("corpus_10docs.jsonl");
  config_json["replay_corpus"] = fixture("replay_corpus.jsonl");
  config_json["endpoint"] = {{"mock", true}, {"mock_seed", 7}, {"max_in_flight", 4}};
  config_json["generate"] = {{"methods", {"QA", "WRAP", "EG", "AR", "AR_FOCAL"}},
                             {"token_budget", 2500}};
  config_json["mix"] = {{"components",
                         {{{"label", "qa"}, {"method", "QA"}, {"weight", 1.0}},
                          {{"label", "doc"}, {"method", "AR_FOCAL"}, {"weight", 1.0}}}},
                        {"replay_fraction", 0.1},
                        {"total_token_budget", 4000}};
  config_json["pack"] = {{"seq_len", 2048}};
  config_json["fit"] = {{"input", fixture("scaling_points.csv")},
                        {"target_accuracy", 0.78},
                        {"original_tokens", 1750000}};
  std::string config_path = (scratch / "config.json").string();
  write_file(config_path, config_json.dump(2));

  auto run_pipeline = [&]() -> std::string {
    fs::remove_all(scratch / "run");
    RunConfig config = load_config(config_path);
    std::ostringstream sink;
    cmd_ingest(config, sink);
    cmd_generate(config, sink);
    cmd_pack(config, sink);
    cmd_metrics(config, sink);
    cmd_fit(config, sink);
    return content_hash(read_file((scratch / "run" / "manifest.json").string()));
  };

  std::string first = run_pipeline();
  std::string training_first = read_file((scratch / "run" / "training.jsonl").string());
  std::string second = run_pipeline();
  std::string training_second = read_file((scratch / "run" / "training.jsonl").string());

  c.expect(first == second, "manifest hash changed across identical runs");
  c.expect(training_first == training_second, "training file changed across identical runs");
  c.expect(!load_training_file((scratch / "run" / "training.jsonl").string()).empty(),
           "no packed sequences produced");

  RunConfig config = load_config(config_path);
  auto manifest = RunManifest::load_or_create((scratch / "run").string(), config.config_hash);
  for (const std::string stage : {"ingest", "generate", "pack", "metrics", "fit"}) {
    c.expect(manifest.stage_status(stage) == "done", "stage " + stage + " not recorded");
  }
  fs::remove_all(scratch);
  return c;
}

struct Criterion {
  int number;
  std::string name;
  std::function<Checker()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "flop estimator reproduces the documented run cost", criterion_flops},
      {2, "vendi identities and independent eigen oracle", criterion_vendi},
      {3, "unique 4-gram ratio equals brute-force enumeration", criterion_ngrams},
      {4, "packing conserves the EOD-joined stream", criterion_packing},
      {5, "mixture token shares within 2% of spec", criterion_mixture},
      {6, "log-linear fit recovery, crossover and oracle agreement", criterion_scaling},
      {7, "prompt templates match checked-in goldens", criterion_goldens},
      {8, "parser fixture suite agrees 100%", criterion_parsers},
      {9, "retrieval equals brute-force cosine ranking", criterion_retrieval},
      {10, "JL projection preserves pairwise cosines", criterion_jl},
      {11, "hermetic end-to-end pipeline is byte-stable", criterion_end_to_end},
  };

  int failures = 0;
  for (const auto& criterion : criteria) {
    auto start = std::chrono::steady_clock::now();
    Checker result;
    try {
      result = criterion.run();
    } catch (const std::exception& e) {
      result.ok = false;
      result.detail = std::string("exception: ") + e.what();
    }
    double seconds =
        std::chrono::duration_cast<std::chrono::duration<double>>(std::chrono::steady_clock::now() - start)
            .count();
    std::printf("[%s] criterion %2d: %s (%.2fs)%s%s\n", result.ok ? "PASS" : "FAIL", criterion.number,
                criterion.name.c_str(), seconds, result.ok ? "" : " — ",
                result.ok ? "" : result.detail.c_str());
    if (!result.ok) ++failures;
  }
  if (failures > 0) {
    std::printf("%d of %zu criteria failed\n", failures, criteria.size());
    return 1;
  }
  std::printf("all %zu criteria passed\n", criteria.size());
  return 0;
}
