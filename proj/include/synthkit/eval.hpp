#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "synthkit/corpus.hpp"
#include "synthkit/gateway.hpp"

namespace synthkit {

struct McqaOption {
  char letter = 'A';  // A..E, consecutive from A
  std::string text;
};

struct MCQAItem {
  std::string item_id;
  std::string question;
  std::vector<McqaOption> options;  // 2 to 5
  char gold = 'A';
};

void validate_item(const MCQAItem& item);

// The lettered options block ("A. ...\nB. ...") inside the shared template.
std::string render_options_block(const MCQAItem& item);
std::string render_mcqa_prompt(const MCQAItem& item);

// Last line starting "Answer:"; first A-E after the marker, ignoring brackets
// and whitespace. Absence is a value, not an error.
std::optional<char> parse_answer(const std::string& completion);

struct ItemScore {
  std::string item_id;
  int n_correct = 0;
  int n_samples = 0;
};

struct EvalResult {
  std::vector<ItemScore> per_item;
  double mean_accuracy = 0.0;  // pooled over all samples
  std::optional<std::pair<double, double>> band;  // over run-level accuracies
};

// Samples every item n times with the evaluation profile; parse failures
// count as incorrect.
EvalResult evaluate_mcqa(const std::vector<MCQAItem>& items, const std::string& model, Backend& backend,
                         int n = 8, int max_in_flight = 4,
                         const std::vector<std::string>* context_prompts = nullptr);

struct RagIndex {
  std::vector<Chunk> chunks;
  std::vector<std::vector<double>> vectors;  // one embedding per chunk
};

RagIndex build_rag_index(const Corpus& corpus, Backend& backend, const std::string& embedding_model,
                         const Tokenizer& tokenizer, int chunk_tokens = 512, int overlap_tokens = 64);

void save_rag_index(const RagIndex& index, const std::string& base_path);
RagIndex load_rag_index(const std::string& base_path);

// Cosine ranking of all chunks against the query embedding, descending, ties
// broken by (doc_id, index) ascending; returns at most k1.
std::vector<Chunk> retrieve(const RagIndex& index, const std::string& query, Backend& backend,
                            const std::string& embedding_model, int k1 = 128);

class RerankScorer {
 public:
  virtual ~RerankScorer() = default;
  virtual std::vector<double> score(const std::string& query, const std::vector<std::string>& documents) = 0;
};

// Fallback scorer: cosine between query and document embeddings.
class EmbeddingCosineScorer final : public RerankScorer {
 public:
  EmbeddingCosineScorer(Backend& backend, std::string embedding_model)
      : backend_(backend), model_(std::move(embedding_model)) {}
  std::vector<double> score(const std::string& query, const std::vector<std::string>& documents) override;

 private:
  Backend& backend_;
  std::string model_;
};

// POST {query, documents[]} -> {scores[]} against an external rerank service.
class HttpRerankScorer final : public RerankScorer {
 public:
  HttpRerankScorer(std::string url, RetryPolicy retry = {});
  std::vector<double> score(const std::string& query, const std::vector<std::string>& documents) override;

 private:
  std::string url_;
  RetryPolicy retry_;
};

// Re-scores candidates and keeps the top k2 (same tie rule as retrieve).
std::vector<Chunk> rerank(const std::string& query, const std::vector<Chunk>& candidates,
                          RerankScorer& scorer, int k2 = 8);

// Context chunks in rank order, blank-line separated, above the question
// template. An empty chunk list renders a no-context banner.
std::string render_rag_prompt(const std::vector<Chunk>& chunks, const MCQAItem& item);
std::string render_rag_prompt(const std::vector<Chunk>& chunks, const std::string& question);

struct JudgeVerdict {
  std::string item_id;
  bool correct = false;
  std::string rationale;
  bool parsed = true;  // false when no Verdict line was found
};

// Last line starting "Verdict:", matched case-insensitively against
// CORRECT/INCORRECT; anything else is an unparsed (incorrect) verdict.
JudgeVerdict parse_judge_verdict(const std::string& completion);

JudgeVerdict judge_freeform(const std::string& question, const std::string& gold,
                            const std::string& model_answer, Backend& backend,
                            const std::string& judge_model, const std::string& item_id = "");

}  // namespace synthkit
