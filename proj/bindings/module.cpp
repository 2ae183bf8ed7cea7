#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <iostream>
#include <sstream>

#include "synthkit/commands.hpp"
#include "synthkit/corpus.hpp"
#include "synthkit/errors.hpp"
#include "synthkit/eval.hpp"
#include "synthkit/generators.hpp"
#include "synthkit/metrics.hpp"
#include "synthkit/mixer.hpp"
#include "synthkit/prompts.hpp"
#include "synthkit/scaling.hpp"
#include "synthkit/tokenizer.hpp"

namespace py = pybind11;
using namespace synthkit;

namespace {

const WhitespaceTokenizer& reference_tokenizer() {
  static WhitespaceTokenizer tok;
  return tok;
}

PromptKind kind_from_string(const std::string& name) {
  for (int k = 0; k <= static_cast<int>(PromptKind::Judge); ++k) {
    if (prompts::kind_name(static_cast<PromptKind>(k)) == name) return static_cast<PromptKind>(k);
  }
  throw ValidationError("unknown prompt template '" + name + "'");
}

MCQAItem make_item(const std::string& question, const std::vector<std::string>& options,
                   const std::string& gold) {
  MCQAItem item;
  item.item_id = "py";
  item.question = question;
  char letter = 'A';
  for (const auto& text : options) item.options.push_back({letter++, text});
  item.gold = gold.empty() ? 'A' : gold.front();
  return item;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "synthkit core operations";

  py::register_exception<SynthError>(m, "SynthkitError");

  py::class_<Document>(m, "Document")
      .def(py::init<>())
      .def_readwrite("id", &Document::id)
      .def_readwrite("title", &Document::title)
      .def_readwrite("text", &Document::text)
      .def_readwrite("metadata", &Document::metadata)
      .def_readwrite("token_count", &Document::token_count);

  py::class_<Corpus>(m, "Corpus")
      .def_readonly("name", &Corpus::name)
      .def_readonly("domain", &Corpus::domain)
      .def_readonly("documents", &Corpus::documents)
      .def_readonly("total_tokens", &Corpus::total_tokens);

  py::class_<Chunk>(m, "Chunk")
      .def_readonly("doc_id", &Chunk::doc_id)
      .def_readonly("index", &Chunk::index)
      .def_readonly("text", &Chunk::text)
      .def_readonly("token_count", &Chunk::token_count);

  py::class_<ScalingFit>(m, "ScalingFit")
      .def_readonly("slope", &ScalingFit::slope)
      .def_readonly("intercept", &ScalingFit::intercept)
      .def_readonly("r_squared", &ScalingFit::r_squared)
      .def_readonly("n_points", &ScalingFit::n_points);

  py::class_<CrossoverEstimate>(m, "CrossoverEstimate")
      .def_readonly("tokens_needed", &CrossoverEstimate::tokens_needed)
      .def_readonly("ratio_to_original", &CrossoverEstimate::ratio_to_original)
      .def_readonly("target_outside_unit_range", &CrossoverEstimate::target_outside_unit_range);

  py::class_<FlopEstimate>(m, "FlopEstimate")
      .def_readonly("flops", &FlopEstimate::flops)
      .def_readonly("h100_hours", &FlopEstimate::h100_hours);

  m.def("count_tokens", [](const std::string& text) { return reference_tokenizer().count(text); },
        py::arg("text"), "Token count under the whitespace reference tokenizer");
  m.def("tokenize", [](const std::string& text) { return reference_tokenizer().tokenize(text); },
        py::arg("text"));

  m.def("load_corpus",
        [](const std::string& path, const std::string& domain) {
          return load_corpus(path, reference_tokenizer(), domain);
        },
        py::arg("path"), py::arg("domain") = "");
  m.def("chunk_document",
        [](const Document& doc, int chunk_tokens, int overlap_tokens) {
          return chunk_document(doc, chunk_tokens, overlap_tokens, reference_tokenizer());
        },
        py::arg("doc"), py::arg("chunk_tokens"), py::arg("overlap_tokens"));

  m.def("render_template",
        [](const std::string& name, const std::map<std::string, std::string>& values) {
          return prompts::render(kind_from_string(name), values);
        },
        py::arg("name"), py::arg("values"));
  m.def("template_text",
        [](const std::string& name) { return prompts::template_text(kind_from_string(name)); },
        py::arg("name"));

  m.def("parse_qa_pairs",
        [](const std::string& completion) {
          std::vector<std::pair<std::string, std::string>> out;
          for (const auto& p : parse_qa_pairs(completion, "py")) {
            out.emplace_back(p.question, p.answer_short);
          }
          return out;
        },
        py::arg("completion"));
  m.def("parse_strategies",
        [](const std::string& completion) {
          std::vector<std::string> out;
          for (const auto& s : parse_strategies(completion, "py")) out.push_back(s.text);
          return out;
        },
        py::arg("completion"));
  m.def("parse_entity_extraction",
        [](const std::string& completion) {
          EntityExtraction e = parse_entity_extraction(completion, "py");
          return std::make_pair(e.summary, e.entities);
        },
        py::arg("completion"));
  m.def("entity_pairs", &eg_entity_pairs, py::arg("entities"), py::arg("budget_pairs"), py::arg("seed"));

  m.def("pack_texts",
        [](const std::vector<std::string>& texts, int seq_len, std::uint64_t seed) {
          std::vector<TrainingRecord> records;
          for (const auto& t : texts) records.push_back({t, reference_tokenizer().count(t), "py"});
          std::vector<std::pair<std::vector<std::string>, std::vector<std::int64_t>>> out;
          for (auto& seq : pack_sequences(records, seq_len, seed, reference_tokenizer())) {
            out.emplace_back(std::move(seq.segments), std::move(seq.eod_positions));
          }
          return out;
        },
        py::arg("texts"), py::arg("seq_len"), py::arg("seed"),
        py::call_guard<py::gil_scoped_release>(),
        "Shuffle, EOD-join and window texts into fixed-length sequences");

  m.def("vendi_score", &vendi_score, py::arg("embeddings"),
        py::call_guard<py::gil_scoped_release>());
  m.def("unique_ngram_ratio",
        [](const std::vector<std::string>& texts, int n) {
          return unique_ngram_ratio(texts, n, reference_tokenizer());
        },
        py::arg("texts"), py::arg("n") = 4);
  m.def("jl_project",
        [](const std::vector<std::vector<double>>& vectors, int target_dim, std::uint64_t seed,
           bool identity) {
          return jl_project(vectors, target_dim, seed, identity ? JlMode::Identity : JlMode::Gaussian);
        },
        py::arg("vectors"), py::arg("target_dim"), py::arg("seed"), py::arg("identity") = false,
        py::call_guard<py::gil_scoped_release>());
  m.def("group_similarity",
        [](const std::vector<std::string>& labels, const std::vector<std::vector<double>>& vectors,
           int target_dim, std::uint64_t seed, bool identity) {
          GradientSet grads{labels, vectors};
          GroupSimilarity sim =
              group_similarity(grads, target_dim, seed, identity ? JlMode::Identity : JlMode::Gaussian);
          return std::make_pair(sim.groups, sim.mean_cosine);
        },
        py::arg("labels"), py::arg("vectors"), py::arg("target_dim"), py::arg("seed"),
        py::arg("identity") = false, py::call_guard<py::gil_scoped_release>());
  m.def("flop_estimate", &flop_estimate, py::arg("trainee_params"), py::arg("generator_params"),
        py::arg("tokens"));

  m.def("fit_log_linear",
        [](const std::vector<std::pair<std::int64_t, double>>& raw) {
          std::vector<ScalingPoint> points;
          for (const auto& [tokens, accuracy] : raw) points.push_back({tokens, accuracy});
          return fit_log_linear(points);
        },
        py::arg("points"));
  m.def("fitted_accuracy", &fitted_accuracy, py::arg("fit"), py::arg("tokens"));
  m.def("extrapolate_crossover", &extrapolate_crossover, py::arg("fit"), py::arg("target_accuracy"),
        py::arg("original_tokens"));
  m.def("confidence_band",
        [](const std::vector<std::pair<std::int64_t, std::vector<double>>>& raw, double z) {
          std::vector<RunPoint> points;
          for (const auto& [tokens, runs] : raw) points.push_back({tokens, runs});
          std::vector<std::tuple<std::int64_t, double, double, double>> out;
          for (const auto& b : confidence_band(points, z)) {
            out.emplace_back(b.tokens, b.mean, b.low, b.high);
          }
          return out;
        },
        py::arg("points"), py::arg("z") = 1.96);

  m.def("render_mcqa_prompt",
        [](const std::string& question, const std::vector<std::string>& options) {
          return render_mcqa_prompt(make_item(question, options, "A"));
        },
        py::arg("question"), py::arg("options"));
  m.def("parse_answer",
        [](const std::string& completion) -> py::object {
          auto letter = parse_answer(completion);
          if (!letter) return py::none();
          return py::str(std::string(1, *letter));
        },
        py::arg("completion"));

  m.def("run",
        [](const std::string& command, const std::string& config_path,
           const std::vector<std::string>& overrides) {
          RunConfig config = load_config(config_path, overrides);
          std::ostringstream out;
          int code = run_command(command, config, out, out);
          return std::make_pair(code, out.str());
        },
        py::arg("command"), py::arg("config_path"), py::arg("overrides") = std::vector<std::string>{},
        py::call_guard<py::gil_scoped_release>(),
        "Run a pipeline command against a config; returns (exit_code, output)");
}
