#include "synthkit/generators.hpp"

#include <algorithm>
#include <deque>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <unordered_map>

#include <json.hpp>

#include "synthkit/errors.hpp"
#include "synthkit/prompts.hpp"
#include "synthkit/util.hpp"

namespace synthkit {

std::string method_name(Method method) {
  switch (method) {
    case Method::QA: return "QA";
    case Method::WRAP: return "WRAP";
    case Method::EG: return "EG";
    case Method::AR: return "AR";
    case Method::AR_FOCAL: return "AR_FOCAL";
  }
  return "QA";
}

Method method_from_name(const std::string& name) {
  if (name == "QA") return Method::QA;
  if (name == "WRAP") return Method::WRAP;
  if (name == "EG") return Method::EG;
  if (name == "AR") return Method::AR;
  if (name == "AR_FOCAL") return Method::AR_FOCAL;
  throw ValidationError("unknown generation method '" + name + "'");
}

namespace {

std::string kind_name(RecordKind kind) { return kind == RecordKind::QA ? "QA" : "DOC"; }

RecordKind kind_from_name(const std::string& name) {
  if (name == "QA") return RecordKind::QA;
  if (name == "DOC") return RecordKind::DOC;
  throw ValidationError("unknown record kind '" + name + "'");
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

nlohmann::json provenance_to_json(const Provenance& p) {
  nlohmann::json j = nlohmann::json::object();
  if (p.strategy_ordinal) j["strategy_ordinal"] = *p.strategy_ordinal;
  if (p.strategy_text) j["strategy_text"] = *p.strategy_text;
  if (p.entity_pair) j["entity_pair"] = {p.entity_pair->first, p.entity_pair->second};
  if (p.focal_question) j["focal_question"] = *p.focal_question;
  if (!p.notes.empty()) j["notes"] = p.notes;
  return j;
}

Provenance provenance_from_json(const nlohmann::json& j) {
  Provenance p;
  if (j.contains("strategy_ordinal")) p.strategy_ordinal = j["strategy_ordinal"].get<int>();
  if (j.contains("strategy_text")) p.strategy_text = j["strategy_text"].get<std::string>();
  if (j.contains("entity_pair")) {
    p.entity_pair = std::make_pair(j["entity_pair"][0].get<std::string>(),
                                   j["entity_pair"][1].get<std::string>());
  }
  if (j.contains("focal_question")) p.focal_question = j["focal_question"].get<std::string>();
  if (j.contains("notes")) p.notes = j["notes"].get<std::vector<std::string>>();
  return p;
}

ChatRequest make_request(const GenSession& session, std::string request_id, std::string prompt,
                         const SamplingProfile& profile) {
  ChatRequest req;
  req.request_id = std::move(request_id);
  req.model = session.model;
  req.prompt = std::move(prompt);
  req.profile = profile;
  return req;
}

std::string single_text(const ChatResponse& response) {
  return response.texts.empty() ? std::string() : response.texts.front();
}

}  // namespace

std::string record_to_json_line(const SynthRecord& record) {
  nlohmann::json j;
  j["record_id"] = record.record_id;
  j["kind"] = kind_name(record.kind);
  j["method"] = method_name(record.method);
  j["doc_id"] = record.doc_id;
  j["generator_model"] = record.generator_model;
  j["provenance"] = provenance_to_json(record.provenance);
  j["text"] = record.text;
  j["token_count"] = record.token_count;
  return j.dump();
}

SynthRecord record_from_json_line(const std::string& line) {
  nlohmann::json j = nlohmann::json::parse(line);
  SynthRecord record;
  record.record_id = j.at("record_id").get<std::string>();
  record.kind = kind_from_name(j.at("kind").get<std::string>());
  record.method = method_from_name(j.at("method").get<std::string>());
  record.doc_id = j.at("doc_id").get<std::string>();
  record.generator_model = j.at("generator_model").get<std::string>();
  record.provenance = provenance_from_json(j.at("provenance"));
  record.text = j.at("text").get<std::string>();
  record.token_count = j.at("token_count").get<std::int64_t>();
  return record;
}

void save_records(const std::vector<SynthRecord>& records, const std::string& path) {
  std::string out;
  for (const auto& r : records) {
    out += record_to_json_line(r);
    out.push_back('\n');
  }
  write_file(path, out);
}

std::vector<SynthRecord> load_records(const std::string& path) {
  std::vector<SynthRecord> records;
  for (const auto& line : split_lines(read_file(path))) {
    if (trim(line).empty()) continue;
    records.push_back(record_from_json_line(line));
  }
  return records;
}

std::vector<QAPair> parse_qa_pairs(const std::string& completion, const std::string& doc_id) {
  std::vector<QAPair> pairs;
  std::optional<std::string> pending_question;
  for (const auto& raw_line : split_lines(completion)) {
    std::string line = trim(raw_line);
    if (line.rfind("Question:", 0) == 0) {
      std::string q = trim(line.substr(std::string("Question:").size()));
      if (!q.empty()) {
        pending_question = q;  // an unanswered question is replaced
      }
    } else if (line.rfind("Answer:", 0) == 0) {
      if (!pending_question) continue;  // answer with no question: dropped
      std::string a = trim(line.substr(std::string("Answer:").size()));
      if (!a.empty()) {
        pairs.push_back({doc_id, *pending_question, a});
      }
      pending_question.reset();
    }
    // Anything else is prose and is skipped.
  }
  return pairs;
}

std::vector<Strategy> parse_strategies(const std::string& completion, const std::string& doc_id) {
  std::vector<Strategy> strategies;
  std::string current;
  bool in_section = false;
  auto flush = [&]() {
    if (!in_section) return;
    std::string text = trim(current);
    if (!text.empty()) {
      strategies.push_back({doc_id, static_cast<int>(strategies.size()), text});
    }
    current.clear();
  };
  for (const auto& line : split_lines(completion)) {
    if (line.rfind("## ", 0) == 0) {
      flush();
      in_section = true;
      current = line.substr(3);
    } else if (in_section) {
      current += "\n" + line;
    }
    // Leading prose before the first "## " is discarded.
  }
  flush();
  return strategies;
}

EntityExtraction parse_entity_extraction(const std::string& completion, const std::string& doc_id) {
  // Scan for balanced top-level {...} spans (string-aware) and take the first
  // one that parses with the required keys.
  int depth = 0;
  bool in_string = false;
  bool escaped = false;
  std::size_t start = std::string::npos;
  for (std::size_t i = 0; i < completion.size(); ++i) {
    char c = completion[i];
    if (in_string) {
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      if (depth == 0) start = i;
      ++depth;
    } else if (c == '}') {
      if (depth == 0) continue;
      --depth;
      if (depth == 0 && start != std::string::npos) {
        nlohmann::json j = nlohmann::json::parse(completion.substr(start, i - start + 1), nullptr,
                                                 /*allow_exceptions=*/false);
        if (!j.is_discarded() && j.is_object() && j.contains("summary") && j["summary"].is_string() &&
            j.contains("entities") && j["entities"].is_array()) {
          EntityExtraction extraction;
          extraction.doc_id = doc_id;
          extraction.summary = j["summary"].get<std::string>();
          std::set<std::string> seen;
          for (const auto& e : j["entities"]) {
            if (!e.is_string()) continue;
            std::string entity = trim(e.get<std::string>());
            if (entity.empty()) continue;
            if (seen.insert(lower(entity)).second) extraction.entities.push_back(entity);
          }
          if (extraction.entities.empty()) {
            throw ParseError("entity extraction for doc '" + doc_id + "' has no entities");
          }
          return extraction;
        }
        start = std::string::npos;
      }
    }
  }
  throw ParseError("no JSON object with summary/entities found in completion for doc '" + doc_id + "'");
}

std::vector<std::pair<std::string, std::string>> eg_entity_pairs(const std::vector<std::string>& entities,
                                                                 int budget_pairs, std::uint64_t seed) {
  if (entities.size() < 2) {
    throw ValidationError("entity pair sampling needs at least 2 entities, got " +
                          std::to_string(entities.size()));
  }
  if (budget_pairs < 0) throw ValidationError("budget_pairs must be non-negative");
  std::vector<std::pair<std::string, std::string>> all;
  for (std::size_t i = 0; i < entities.size(); ++i) {
    for (std::size_t j = i + 1; j < entities.size(); ++j) {
      all.emplace_back(entities[i], entities[j]);
    }
  }
  auto perm = shuffled_indices(all.size(), seed);
  std::vector<std::pair<std::string, std::string>> out;
  out.reserve(static_cast<std::size_t>(budget_pairs));
  for (int t = 0; t < budget_pairs; ++t) {
    out.push_back(all[perm[static_cast<std::size_t>(t) % perm.size()]]);
  }
  return out;
}

std::vector<QAPair> generate_qa_pairs(GenSession& session, const Document& doc, int pass) {
  if (doc.text.empty()) throw ValidationError("document '" + doc.id + "' has empty text");
  std::string request_id = "qa_pairs:" + doc.id + ":" + std::to_string(pass) + ":" +
                           std::to_string(session.seed);
  ChatRequest req = make_request(session, request_id, prompts::qa_generation(doc.text), profiles::QA_GEN);
  ChatResponse res = session.backend->complete(req);
  std::vector<QAPair> pairs = parse_qa_pairs(single_text(res), doc.id);
  if (pairs.empty()) {
    throw ParseError("no question-answer pairs parsed for doc '" + doc.id + "'");
  }
  return pairs;
}

SynthRecord generate_qa_response(GenSession& session, const Document& doc, const std::string& question,
                                 int item_index) {
  if (question.empty()) throw ValidationError("question must be non-empty");
  std::string request_id = "qa_response:" + doc.id + ":" + std::to_string(item_index);
  ChatRequest req =
      make_request(session, request_id, prompts::qa_response(doc.text, question), profiles::QA_GEN);
  ChatResponse res = session.backend->complete(req);
  std::string completion = single_text(res);
  if (trim(completion).empty()) {
    throw ParseError("empty completion for question on doc '" + doc.id + "'");
  }
  SynthRecord record;
  record.record_id = "QA:" + doc.id + ":" + std::to_string(item_index);
  record.kind = RecordKind::QA;
  record.method = Method::QA;
  record.doc_id = doc.id;
  record.generator_model = session.model;
  record.text = "Question: " + question + "\n" + completion;
  if (completion.find("Explanation:") == std::string::npos) {
    record.provenance.notes.push_back("no_explanation");
  }
  record.token_count = session.tokenizer->count(record.text);
  return record;
}

namespace {

SynthRecord make_doc_record(GenSession& session, const Document& doc, Method method, std::string text,
                            int item_index) {
  SynthRecord record;
  record.record_id = method_name(method) + ":" + doc.id + ":" + std::to_string(item_index);
  record.kind = RecordKind::DOC;
  record.method = method;
  record.doc_id = doc.id;
  record.generator_model = session.model;
  record.text = std::move(text);
  record.token_count = session.tokenizer->count(record.text);
  return record;
}

}  // namespace

SynthRecord wrap_rephrase(GenSession& session, const Document& doc, int item_index) {
  if (doc.text.empty()) throw ValidationError("document '" + doc.id + "' has empty text");
  std::string request_id = "wrap:" + doc.id + ":" + std::to_string(item_index);
  ChatRequest req = make_request(session, request_id, prompts::wrap_rephrase(doc.text), profiles::DOC_GEN);
  ChatResponse res = session.backend->complete(req);
  std::string completion = single_text(res);
  if (trim(completion).empty()) throw ParseError("empty rephrasing for doc '" + doc.id + "'");
  return make_doc_record(session, doc, Method::WRAP, completion, item_index);
}

EntityExtraction eg_extract_entities(GenSession& session, const Document& doc) {
  if (doc.text.empty()) throw ValidationError("document '" + doc.id + "' has empty text");
  std::string last_error;
  for (int attempt = 0; attempt <= session.json_retries; ++attempt) {
    std::string request_id = "eg_extract:" + doc.id + ":" + std::to_string(attempt);
    ChatRequest req = make_request(session, request_id, prompts::eg_extract(doc.text), profiles::DOC_GEN);
    ChatResponse res = session.backend->complete(req);
    try {
      return parse_entity_extraction(single_text(res), doc.id);
    } catch (const ParseError& e) {
      last_error = e.what();
    }
  }
  throw ParseError("entity extraction failed for doc '" + doc.id + "' after " +
                   std::to_string(session.json_retries + 1) + " attempts: " + last_error);
}

SynthRecord eg_link_entities(GenSession& session, const Document& doc, const std::string& entity1,
                             const std::string& entity2, int item_index) {
  if (doc.text.empty()) throw ValidationError("document '" + doc.id + "' has empty text");
  if (entity1.empty() || entity2.empty()) throw ValidationError("entities must be non-empty");
  if (lower(entity1) == lower(entity2)) {
    throw ValidationError("entity pair must be distinct, got '" + entity1 + "' twice");
  }
  std::string request_id = "eg_link:" + doc.id + ":" + std::to_string(item_index);
  ChatRequest req =
      make_request(session, request_id, prompts::eg_link(doc.text, entity1, entity2), profiles::DOC_GEN);
  ChatResponse res = session.backend->complete(req);
  std::string completion = single_text(res);
  if (trim(completion).empty()) throw ParseError("empty linking document for doc '" + doc.id + "'");
  SynthRecord record = make_doc_record(session, doc, Method::EG, completion, item_index);
  record.provenance.entity_pair = std::make_pair(entity1, entity2);
  return record;
}

std::vector<Strategy> ar_generate_strategies(GenSession& session, const Document& doc) {
  if (doc.text.empty()) throw ValidationError("document '" + doc.id + "' has empty text");
  std::string request_id = "ar_strategies:" + doc.id;
  ChatRequest req = make_request(session, request_id, prompts::ar_strategy(doc.text), profiles::DOC_GEN);
  ChatResponse res = session.backend->complete(req);
  std::vector<Strategy> strategies = parse_strategies(single_text(res), doc.id);
  if (strategies.empty()) throw ParseError("no strategies parsed for doc '" + doc.id + "'");
  return strategies;
}

SynthRecord ar_rewrite(GenSession& session, const Document& doc, const Strategy& strategy,
                       int item_index) {
  if (doc.text.empty()) throw ValidationError("document '" + doc.id + "' has empty text");
  if (trim(strategy.text).empty()) throw ValidationError("strategy text must be non-empty");
  std::string request_id = "ar_rewrite:" + doc.id + ":" + std::to_string(item_index);
  ChatRequest req = make_request(session, request_id, prompts::ar_rewrite(strategy.text, doc.text),
                                 profiles::DOC_GEN);
  ChatResponse res = session.backend->complete(req);
  std::string completion = single_text(res);
  if (trim(completion).empty()) throw ParseError("empty rewrite for doc '" + doc.id + "'");
  SynthRecord record = make_doc_record(session, doc, Method::AR, completion, item_index);
  record.provenance.strategy_ordinal = strategy.ordinal;
  record.provenance.strategy_text = strategy.text;
  return record;
}

SynthRecord focal_rewrite(GenSession& session, const Document& doc, const Strategy& strategy,
                          const std::string& question, int item_index) {
  if (doc.text.empty()) throw ValidationError("document '" + doc.id + "' has empty text");
  if (trim(strategy.text).empty()) throw ValidationError("strategy text must be non-empty");
  if (trim(question).empty()) throw ValidationError("focal question must be non-empty");
  std::string request_id = "focal:" + doc.id + ":" + std::to_string(item_index);
  ChatRequest req = make_request(
      session, request_id, prompts::focal_rewrite(doc.text, strategy.text, question), profiles::DOC_GEN);
  ChatResponse res = session.backend->complete(req);
  std::string completion = single_text(res);
  if (trim(completion).empty()) throw ParseError("empty focal rewrite for doc '" + doc.id + "'");
  SynthRecord record = make_doc_record(session, doc, Method::AR_FOCAL, completion, item_index);
  record.provenance.strategy_ordinal = strategy.ordinal;
  record.provenance.strategy_text = strategy.text;
  record.provenance.focal_question = question;
  return record;
}

// ---------------------------------------------------------------------------
// Budgeted generation
// ---------------------------------------------------------------------------

namespace {

struct DocState {
  std::vector<std::string> questions;
  int question_passes = 0;
  std::vector<Strategy> strategies;
  std::optional<EntityExtraction> extraction;
  std::vector<std::pair<std::string, std::string>> pairs;
  int next_item = 0;
  bool active = true;
};

struct ItemStatus {
  std::string id;
  std::string status;  // done | failed
  std::int64_t tokens = 0;
  std::string error;
};

struct BudgetState {
  std::vector<ItemStatus> items;
  std::map<std::string, std::size_t> item_index;  // id -> position in items
  std::vector<SynthRecord> records;
  std::int64_t total_tokens = 0;
  std::deque<bool> window;  // recent outcomes, true = failed
  int window_failures = 0;
};

nlohmann::json prereq_to_json(const std::map<std::string, DocState>& states) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [doc_id, state] : states) {
    nlohmann::json d = nlohmann::json::object();
    if (!state.questions.empty()) {
      d["questions"] = state.questions;
      d["question_passes"] = state.question_passes;
    }
    if (!state.strategies.empty()) {
      nlohmann::json arr = nlohmann::json::array();
      for (const auto& s : state.strategies) arr.push_back(s.text);
      d["strategies"] = arr;
    }
    if (state.extraction) {
      d["summary"] = state.extraction->summary;
      d["entities"] = state.extraction->entities;
    }
    if (!d.empty()) j[doc_id] = d;
  }
  return j;
}

void prereq_from_json(const nlohmann::json& j, std::map<std::string, DocState>& states) {
  for (const auto& [doc_id, d] : j.items()) {
    DocState& state = states[doc_id];
    if (d.contains("questions")) {
      state.questions = d["questions"].get<std::vector<std::string>>();
      state.question_passes = d.value("question_passes", 1);
    }
    if (d.contains("strategies")) {
      int ordinal = 0;
      for (const auto& s : d["strategies"]) {
        state.strategies.push_back({doc_id, ordinal++, s.get<std::string>()});
      }
    }
    if (d.contains("entities")) {
      EntityExtraction extraction;
      extraction.doc_id = doc_id;
      extraction.summary = d.value("summary", "");
      extraction.entities = d["entities"].get<std::vector<std::string>>();
      state.extraction = extraction;
    }
  }
}

class BudgetRunner {
 public:
  BudgetRunner(GenSession& session, const Corpus& corpus, Method method, std::int64_t budget,
               const BudgetOptions& options)
      : session_(session), corpus_(corpus), method_(method), budget_(budget), options_(options) {
    if (budget_ <= 0) throw ValidationError("token_budget must be positive");
    if (!options_.manifest_path.empty() && options_.records_path.empty()) {
      throw ValidationError("a manifest requires records_path to be set");
    }
    prereq_path_ = options_.prereq_cache_path;
    if (prereq_path_.empty() && !options_.manifest_path.empty()) {
      prereq_path_ = options_.manifest_path + ".prereq";
    }
  }

  std::vector<SynthRecord> run() {
    resume_if_possible();
    bool done = state_.total_tokens >= budget_;
    while (!done) {
      std::vector<WaveItem> wave = build_wave();
      if (wave.empty()) {
        throw SynthError("generation stalled: no document can produce items for method " +
                         method_name(method_) + " (" + std::to_string(state_.total_tokens) + "/" +
                         std::to_string(budget_) + " tokens)");
      }
      std::vector<ChatRequest> requests;
      std::vector<std::size_t> dispatch_index(wave.size(), SIZE_MAX);
      for (std::size_t i = 0; i < wave.size(); ++i) {
        if (!wave[i].completed) {
          dispatch_index[i] = requests.size();
          requests.push_back(wave[i].request);
        }
      }
      BatchOptions batch;
      batch.max_in_flight = options_.max_in_flight;
      std::vector<BatchItem> responses = run_batch(*session_.backend, requests, batch);

      for (std::size_t i = 0; i < wave.size() && !done; ++i) {
        WaveItem& item = wave[i];
        if (item.completed) continue;  // replayed from a previous run
        const BatchItem& result = responses[dispatch_index[i]];
        if (!result.ok()) {
          record_failure(item.id, result.error);
          continue;
        }
        try {
          SynthRecord record = finalize(item, *result.response);
          record_success(std::move(record));
        } catch (const SynthError& e) {
          record_failure(item.id, e.what());
          continue;
        }
        if (state_.total_tokens >= budget_) done = true;
        if (options_.interrupt_after_items > 0 &&
            static_cast<int>(state_.records.size()) >= options_.interrupt_after_items) {
          return state_.records;  // simulated crash: manifest stays incomplete
        }
      }
    }
    write_manifest(/*completed=*/true);
    return state_.records;
  }

 private:
  struct WaveItem {
    std::string id;
    std::size_t doc_index = 0;
    int k = 0;
    ChatRequest request;
    // Conditioning needed to finalize the parsed record.
    std::optional<std::string> question;
    std::optional<Strategy> strategy;
    std::optional<std::pair<std::string, std::string>> entity_pair;
    bool completed = false;  // already present in the resumed record set
  };

  DocState& doc_state(const Document& doc) { return states_[doc.id]; }

  void deactivate(const Document& doc, const std::string& item_id, const std::string& reason) {
    states_[doc.id].active = false;
    record_failure(item_id, reason);
  }

  // Prerequisite fetches go through the backend directly; they are cached in
  // the prereq file so resumed runs see identical conditioning.
  bool ensure_questions(const Document& doc, int needed_index) {
    DocState& state = doc_state(doc);
    while (static_cast<int>(state.questions.size()) <= needed_index) {
      std::size_t before = state.questions.size();
      try {
        for (const auto& pair : generate_qa_pairs(session_, doc, state.question_passes)) {
          state.questions.push_back(pair.question);
        }
      } catch (const SynthError&) {
        return false;
      }
      ++state.question_passes;
      if (state.questions.size() == before) return false;
      save_prereqs();
    }
    return true;
  }

  bool ensure_strategies(const Document& doc) {
    DocState& state = doc_state(doc);
    if (!state.strategies.empty()) return true;
    try {
      state.strategies = ar_generate_strategies(session_, doc);
    } catch (const SynthError&) {
      return false;
    }
    save_prereqs();
    return true;
  }

  bool ensure_pairs(const Document& doc) {
    DocState& state = doc_state(doc);
    if (!state.pairs.empty()) return true;
    if (!state.extraction) {
      try {
        state.extraction = eg_extract_entities(session_, doc);
      } catch (const SynthError&) {
        return false;
      }
      save_prereqs();
    }
    if (state.extraction->entities.size() < 2) return false;
    std::size_t count = state.extraction->entities.size();
    int all_pairs = static_cast<int>(count * (count - 1) / 2);
    state.pairs = eg_entity_pairs(state.extraction->entities, all_pairs,
                                  derive_seed(session_.seed, "eg_pairs:" + doc.id));
    return true;
  }

  std::vector<WaveItem> build_wave() {
    std::vector<WaveItem> wave;
    for (std::size_t d = 0; d < corpus_.documents.size(); ++d) {
      const Document& doc = corpus_.documents[d];
      DocState& state = doc_state(doc);
      if (!state.active) continue;
      int k = state.next_item;
      std::string id = method_name(method_) + ":" + doc.id + ":" + std::to_string(k);

      WaveItem item;
      item.id = id;
      item.doc_index = d;
      item.k = k;

      if (auto it = state_.item_index.find(id); it != state_.item_index.end()) {
        // Item already settled by a previous (interrupted) run.
        state.next_item++;
        if (state_.items[it->second].status == "done") {
          item.completed = true;
          wave.push_back(std::move(item));
        }
        continue;
      }

      switch (method_) {
        case Method::QA: {
          if (!ensure_questions(doc, k)) {
            deactivate(doc, id, "no questions available");
            continue;
          }
          item.question = state.questions[static_cast<std::size_t>(k)];
          item.request = make_request(session_, "qa_response:" + doc.id + ":" + std::to_string(k),
                                      prompts::qa_response(doc.text, *item.question), profiles::QA_GEN);
          break;
        }
        case Method::WRAP: {
          item.request = make_request(session_, "wrap:" + doc.id + ":" + std::to_string(k),
                                      prompts::wrap_rephrase(doc.text), profiles::DOC_GEN);
          break;
        }
        case Method::EG: {
          if (!ensure_pairs(doc)) {
            deactivate(doc, id, "entity extraction failed or yielded fewer than 2 entities");
            continue;
          }
          const auto& pair = state.pairs[static_cast<std::size_t>(k) % state.pairs.size()];
          item.entity_pair = pair;
          item.request =
              make_request(session_, "eg_link:" + doc.id + ":" + std::to_string(k),
                           prompts::eg_link(doc.text, pair.first, pair.second), profiles::DOC_GEN);
          break;
        }
        case Method::AR: {
          if (!ensure_strategies(doc)) {
            deactivate(doc, id, "no strategies parsed");
            continue;
          }
          const Strategy& strategy =
              state.strategies[static_cast<std::size_t>(k) % state.strategies.size()];
          item.strategy = strategy;
          item.request = make_request(session_, "ar_rewrite:" + doc.id + ":" + std::to_string(k),
                                      prompts::ar_rewrite(strategy.text, doc.text), profiles::DOC_GEN);
          break;
        }
        case Method::AR_FOCAL: {
          if (!ensure_strategies(doc) || !ensure_questions(doc, 0)) {
            deactivate(doc, id, "missing strategies or questions");
            continue;
          }
          int s_count = static_cast<int>(state.strategies.size());
          int q_count = static_cast<int>(state.questions.size());
          int i = k % s_count;
          int pass = k / s_count;
          const Strategy& strategy = state.strategies[static_cast<std::size_t>(i)];
          const std::string& question =
              state.questions[static_cast<std::size_t>((i + pass) % q_count)];
          item.strategy = strategy;
          item.question = question;
          item.request = make_request(session_, "focal:" + doc.id + ":" + std::to_string(k),
                                      prompts::focal_rewrite(doc.text, strategy.text, question),
                                      profiles::DOC_GEN);
          break;
        }
      }
      state.next_item++;
      wave.push_back(std::move(item));
    }
    return wave;
  }

  SynthRecord finalize(const WaveItem& item, const ChatResponse& response) {
    const Document& doc = corpus_.documents[item.doc_index];
    std::string completion = single_text(response);
    if (trim(completion).empty()) throw ParseError("empty completion for item '" + item.id + "'");

    SynthRecord record;
    record.record_id = item.id;
    record.doc_id = doc.id;
    record.generator_model = session_.model;
    record.method = method_;
    record.kind = method_ == Method::QA ? RecordKind::QA : RecordKind::DOC;
    if (method_ == Method::QA) {
      record.text = "Question: " + *item.question + "\n" + completion;
      if (completion.find("Explanation:") == std::string::npos) {
        record.provenance.notes.push_back("no_explanation");
      }
    } else {
      record.text = completion;
      if (item.strategy) {
        record.provenance.strategy_ordinal = item.strategy->ordinal;
        record.provenance.strategy_text = item.strategy->text;
      }
      if (item.entity_pair) record.provenance.entity_pair = *item.entity_pair;
      if (item.question && method_ == Method::AR_FOCAL) record.provenance.focal_question = *item.question;
    }
    record.token_count = session_.tokenizer->count(record.text);
    return record;
  }

  void push_outcome(bool failed) {
    state_.window.push_back(failed);
    if (failed) ++state_.window_failures;
    while (static_cast<int>(state_.window.size()) > options_.fail_window) {
      if (state_.window.front()) --state_.window_failures;
      state_.window.pop_front();
    }
    if (static_cast<int>(state_.window.size()) >= options_.fail_window &&
        state_.window_failures > options_.fail_fraction * static_cast<double>(state_.window.size())) {
      write_manifest(false);
      throw SynthError("generation aborted: " + std::to_string(state_.window_failures) + " of last " +
                       std::to_string(state_.window.size()) + " items failed");
    }
  }

  void record_success(SynthRecord record) {
    state_.total_tokens += record.token_count;
    ItemStatus status{record.record_id, "done", record.token_count, ""};
    state_.item_index[record.record_id] = state_.items.size();
    state_.items.push_back(status);
    append_record(record);
    state_.records.push_back(std::move(record));
    push_outcome(false);
    write_manifest(false);
  }

  void record_failure(const std::string& id, const std::string& error) {
    ItemStatus status{id, "failed", 0, error};
    state_.item_index[id] = state_.items.size();
    state_.items.push_back(status);
    push_outcome(true);
    write_manifest(false);
  }

  void append_record(const SynthRecord& record) {
    if (options_.records_path.empty()) return;
    std::ofstream out(options_.records_path, std::ios::binary | std::ios::app);
    if (!out) throw IoError("cannot append to records file: " + options_.records_path);
    out << record_to_json_line(record) << "\n";
  }

  std::string records_file_hash() const {
    if (options_.records_path.empty() || !std::filesystem::exists(options_.records_path)) {
      return content_hash("");
    }
    return content_hash(read_file(options_.records_path));
  }

  void write_manifest(bool completed) {
    if (options_.manifest_path.empty()) return;
    nlohmann::json j;
    j["method"] = method_name(method_);
    j["seed"] = session_.seed;
    j["budget"] = budget_;
    j["generator_model"] = session_.model;
    j["total_tokens"] = state_.total_tokens;
    j["completed"] = completed;
    nlohmann::json items = nlohmann::json::array();
    for (const auto& item : state_.items) {
      nlohmann::json e;
      e["id"] = item.id;
      e["status"] = item.status;
      e["tokens"] = item.tokens;
      if (!item.error.empty()) e["error"] = item.error;
      items.push_back(e);
    }
    j["items"] = items;
    nlohmann::json counts;
    counts["records"] = state_.records.size();
    counts["failed"] = state_.items.size() - state_.records.size();
    counts["tokens"] = state_.total_tokens;
    counts["malformed_rate"] =
        state_.items.empty()
            ? 0.0
            : static_cast<double>(state_.items.size() - state_.records.size()) /
                  static_cast<double>(state_.items.size());
    j["counts"] = counts;
    j["records_hash"] = records_file_hash();
    write_file(options_.manifest_path, j.dump(2) + "\n");
  }

  void save_prereqs() {
    if (prereq_path_.empty()) return;
    write_file(prereq_path_, prereq_to_json(states_).dump(2) + "\n");
  }

  void resume_if_possible() {
    if (options_.manifest_path.empty()) return;
    if (!std::filesystem::exists(options_.manifest_path)) {
      // No manifest means no resumable run; a leftover records file would be
      // appended to, so start clean.
      if (!options_.records_path.empty()) std::filesystem::remove(options_.records_path);
      return;
    }
    nlohmann::json j = nlohmann::json::parse(read_file(options_.manifest_path));
    if (j.value("method", "") != method_name(method_) || j.value("seed", std::uint64_t{0}) != session_.seed ||
        j.value("budget", std::int64_t{0}) != budget_) {
      throw ValidationError("manifest at " + options_.manifest_path +
                            " belongs to a different run (method/seed/budget mismatch)");
    }
    if (j.value("records_hash", "") != records_file_hash()) {
      throw ValidationError("records file does not match manifest hash; refusing to resume from " +
                            options_.records_path);
    }
    for (const auto& e : j.at("items")) {
      ItemStatus item;
      item.id = e.at("id").get<std::string>();
      item.status = e.at("status").get<std::string>();
      item.tokens = e.value("tokens", std::int64_t{0});
      item.error = e.value("error", "");
      state_.item_index[item.id] = state_.items.size();
      state_.items.push_back(item);
      push_outcome(item.status == "failed");
    }
    state_.total_tokens = j.value("total_tokens", std::int64_t{0});
    if (!options_.records_path.empty() && std::filesystem::exists(options_.records_path)) {
      state_.records = load_records(options_.records_path);
    }
    if (!prereq_path_.empty() && std::filesystem::exists(prereq_path_)) {
      prereq_from_json(nlohmann::json::parse(read_file(prereq_path_)), states_);
    }
  }

  GenSession& session_;
  const Corpus& corpus_;
  Method method_;
  std::int64_t budget_;
  BudgetOptions options_;
  std::string prereq_path_;
  std::map<std::string, DocState> states_;
  BudgetState state_;
};

}  // namespace

std::vector<SynthRecord> generate_until_budget(GenSession& session, const Corpus& corpus, Method method,
                                               std::int64_t token_budget, const BudgetOptions& options) {
  if (session.backend == nullptr || session.tokenizer == nullptr) {
    throw ValidationError("generation session needs a backend and a tokenizer");
  }
  if (corpus.documents.empty()) throw ValidationError("corpus has no documents");
  BudgetRunner runner(session, corpus, method, token_budget, options);
  return runner.run();
}

}  // namespace synthkit
