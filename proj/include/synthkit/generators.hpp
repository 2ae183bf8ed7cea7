#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "synthkit/corpus.hpp"
#include "synthkit/gateway.hpp"
#include "synthkit/tokenizer.hpp"

namespace synthkit {

struct QAPair {
  std::string doc_id;
  std::string question;
  std::string answer_short;
};

struct Strategy {
  std::string doc_id;
  int ordinal = 0;
  std::string text;
};

struct EntityExtraction {
  std::string doc_id;
  std::string summary;
  std::vector<std::string> entities;  // deduplicated case-insensitively
};

enum class RecordKind { QA, DOC };
enum class Method { QA, WRAP, EG, AR, AR_FOCAL };

std::string method_name(Method method);
Method method_from_name(const std::string& name);

struct Provenance {
  std::optional<int> strategy_ordinal;
  std::optional<std::string> strategy_text;  // kept so framing can reproduce the conditioning
  std::optional<std::pair<std::string, std::string>> entity_pair;
  std::optional<std::string> focal_question;
  std::vector<std::string> notes;
};

struct SynthRecord {
  std::string record_id;
  RecordKind kind = RecordKind::DOC;
  Method method = Method::WRAP;
  std::string doc_id;
  std::string generator_model;
  Provenance provenance;
  std::string text;
  std::int64_t token_count = 0;
};

std::string record_to_json_line(const SynthRecord& record);
SynthRecord record_from_json_line(const std::string& line);
void save_records(const std::vector<SynthRecord>& records, const std::string& path);
std::vector<SynthRecord> load_records(const std::string& path);

// --- Completion parsers (pure) ---

// Alternating `Question:` / `Answer:` tag lines; anything else is skipped.
// An Answer without a pending Question is dropped.
std::vector<QAPair> parse_qa_pairs(const std::string& completion, const std::string& doc_id);

// Sections introduced by lines starting "## "; leading prose is discarded.
std::vector<Strategy> parse_strategies(const std::string& completion, const std::string& doc_id);

// Outermost {...} object with keys `summary` and `entities`; surrounding
// prose is tolerated. Throws ParseError when no valid object is found.
EntityExtraction parse_entity_extraction(const std::string& completion, const std::string& doc_id);

// All unordered pairs, deterministically shuffled, cycled to budget_pairs.
std::vector<std::pair<std::string, std::string>> eg_entity_pairs(const std::vector<std::string>& entities,
                                                                 int budget_pairs, std::uint64_t seed);

// --- Gateway-backed operations ---

struct GenSession {
  Backend* backend = nullptr;
  const Tokenizer* tokenizer = nullptr;
  std::string model;
  std::uint64_t seed = 0;
  int json_retries = 2;  // regenerations allowed for malformed structured output
};

std::vector<QAPair> generate_qa_pairs(GenSession& session, const Document& doc, int pass = 0);
SynthRecord generate_qa_response(GenSession& session, const Document& doc, const std::string& question,
                                 int item_index = 0);
SynthRecord wrap_rephrase(GenSession& session, const Document& doc, int item_index = 0);
EntityExtraction eg_extract_entities(GenSession& session, const Document& doc);
SynthRecord eg_link_entities(GenSession& session, const Document& doc, const std::string& entity1,
                             const std::string& entity2, int item_index = 0);
std::vector<Strategy> ar_generate_strategies(GenSession& session, const Document& doc);
SynthRecord ar_rewrite(GenSession& session, const Document& doc, const Strategy& strategy,
                       int item_index = 0);
SynthRecord focal_rewrite(GenSession& session, const Document& doc, const Strategy& strategy,
                          const std::string& question, int item_index = 0);

// --- Budgeted generation ---

struct BudgetOptions {
  int max_in_flight = 4;
  // Abort when more than fail_fraction of the last fail_window items failed.
  int fail_window = 20;
  double fail_fraction = 0.5;
  // When set, records are appended here and a manifest tracks per-item
  // status so an interrupted run can resume.
  std::string records_path;
  std::string manifest_path;
  std::string prereq_cache_path;
  // Test hook: stop (as if killed) after this many items were persisted.
  int interrupt_after_items = 0;
};

// Produces records round-robin over documents until the running token total
// reaches the budget; the record that reaches it is included.
std::vector<SynthRecord> generate_until_budget(GenSession& session, const Corpus& corpus, Method method,
                                               std::int64_t token_budget,
                                               const BudgetOptions& options = {});

}  // namespace synthkit
