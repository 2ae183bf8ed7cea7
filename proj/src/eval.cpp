#include "synthkit/eval.hpp"

#include <algorithm>
#include <cmath>

#include <httplib.h>
#include <json.hpp>

#include "synthkit/errors.hpp"
#include "synthkit/prompts.hpp"
#include "synthkit/scaling.hpp"
#include "synthkit/util.hpp"

namespace synthkit {

void validate_item(const MCQAItem& item) {
  if (item.options.size() < 2 || item.options.size() > 5) {
    throw ValidationError("item '" + item.item_id + "' must have 2-5 options, has " +
                          std::to_string(item.options.size()));
  }
  for (std::size_t i = 0; i < item.options.size(); ++i) {
    char expected = static_cast<char>('A' + i);
    if (item.options[i].letter != expected) {
      throw ValidationError("item '" + item.item_id + "' option " + std::to_string(i) +
                            " must carry letter " + std::string(1, expected));
    }
  }
  char last = static_cast<char>('A' + item.options.size() - 1);
  if (item.gold < 'A' || item.gold > last) {
    throw ValidationError("item '" + item.item_id + "' gold letter '" + std::string(1, item.gold) +
                          "' is not among its options");
  }
}

std::string render_options_block(const MCQAItem& item) {
  std::string block;
  for (std::size_t i = 0; i < item.options.size(); ++i) {
    if (i > 0) block.push_back('\n');
    block += std::string(1, item.options[i].letter) + ". " + item.options[i].text;
  }
  return block;
}

std::string render_mcqa_prompt(const MCQAItem& item) {
  validate_item(item);
  return prompts::mcqa(item.question, render_options_block(item));
}

std::optional<char> parse_answer(const std::string& completion) {
  std::optional<std::string> answer_line;
  for (const auto& raw : split_lines(completion)) {
    std::string line = trim(raw);
    if (line.rfind("Answer:", 0) == 0) answer_line = line;
  }
  if (!answer_line) return std::nullopt;

  std::string_view rest(*answer_line);
  rest.remove_prefix(std::string("Answer:").size());
  std::size_t i = 0;
  auto ignorable = [](char c) {
    return c == ' ' || c == '\t' || c == '[' || c == ']' || c == '(' || c == ')' || c == '{' ||
           c == '}' || c == '*' || c == '"' || c == '\'';
  };
  while (i < rest.size() && ignorable(rest[i])) ++i;
  if (i >= rest.size()) return std::nullopt;
  char letter = rest[i];
  if (letter < 'A' || letter > 'E') return std::nullopt;
  // "Answer: Because" must not read as B: the letter has to stand alone.
  if (i + 1 < rest.size() && std::isalnum(static_cast<unsigned char>(rest[i + 1]))) return std::nullopt;
  return letter;
}

EvalResult evaluate_mcqa(const std::vector<MCQAItem>& items, const std::string& model, Backend& backend,
                         int n, int max_in_flight, const std::vector<std::string>* context_prompts) {
  if (n < 1) throw ValidationError("sample count n must be >= 1");
  if (items.empty()) throw ValidationError("no items to evaluate");
  if (context_prompts != nullptr && context_prompts->size() != items.size()) {
    throw ValidationError("context prompt count does not match item count");
  }

  std::vector<ChatRequest> requests;
  requests.reserve(items.size());
  SamplingProfile profile = profiles::EVAL;
  profile.n = n;
  for (std::size_t i = 0; i < items.size(); ++i) {
    validate_item(items[i]);
    ChatRequest req;
    req.request_id = "eval:" + items[i].item_id;
    req.model = model;
    req.prompt = context_prompts ? (*context_prompts)[i] : render_mcqa_prompt(items[i]);
    req.profile = profile;
    requests.push_back(std::move(req));
  }

  BatchOptions batch;
  batch.max_in_flight = max_in_flight;
  batch.strict = true;
  std::vector<BatchItem> responses = run_batch(backend, requests, batch);

  EvalResult result;
  std::vector<std::vector<bool>> per_sample(items.size());
  std::int64_t total_correct = 0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const ChatResponse& response = *responses[i].response;
    ItemScore score;
    score.item_id = items[i].item_id;
    score.n_samples = n;
    per_sample[i].resize(static_cast<std::size_t>(n), false);
    for (int s = 0; s < n; ++s) {
      auto letter = parse_answer(response.texts[static_cast<std::size_t>(s)]);
      bool correct = letter.has_value() && *letter == items[i].gold;
      per_sample[i][static_cast<std::size_t>(s)] = correct;
      if (correct) ++score.n_correct;
    }
    total_correct += score.n_correct;
    result.per_item.push_back(score);
  }
  result.mean_accuracy =
      static_cast<double>(total_correct) / (static_cast<double>(items.size()) * static_cast<double>(n));

  if (n >= 2) {
    RunPoint runs;
    runs.tokens = 1;
    for (int s = 0; s < n; ++s) {
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

RagIndex build_rag_index(const Corpus& corpus, Backend& backend, const std::string& embedding_model,
                         const Tokenizer& tokenizer, int chunk_tokens, int overlap_tokens) {
  if (corpus.documents.empty()) throw ValidationError("cannot index an empty corpus");
  RagIndex index;
  for (const auto& doc : corpus.documents) {
    for (auto& chunk : chunk_document(doc, chunk_tokens, overlap_tokens, tokenizer)) {
      index.chunks.push_back(std::move(chunk));
    }
  }
  std::vector<std::string> texts;
  texts.reserve(index.chunks.size());
  for (const auto& chunk : index.chunks) texts.push_back(chunk.text);
  index.vectors = backend.embed(embedding_model, texts).vectors;
  return index;
}

void save_rag_index(const RagIndex& index, const std::string& base_path) {
  nlohmann::json j;
  j["dim"] = index.vectors.empty() ? 0 : index.vectors.front().size();
  nlohmann::json chunks = nlohmann::json::array();
  for (const auto& chunk : index.chunks) {
    chunks.push_back({{"doc_id", chunk.doc_id},
                      {"index", chunk.index},
                      {"text", chunk.text},
                      {"token_count", chunk.token_count}});
  }
  j["chunks"] = chunks;
  write_file(base_path + ".json", j.dump() + "\n");

  std::string raw;
  for (const auto& row : index.vectors) {
    for (double v : row) {
      float f = static_cast<float>(v);
      char buf[sizeof(float)];
      std::memcpy(buf, &f, sizeof(float));
      raw.append(buf, sizeof(float));
    }
  }
  write_file(base_path + ".f32", raw);
}

RagIndex load_rag_index(const std::string& base_path) {
  nlohmann::json j = nlohmann::json::parse(read_file(base_path + ".json"));
  RagIndex index;
  for (const auto& c : j.at("chunks")) {
    Chunk chunk;
    chunk.doc_id = c.at("doc_id").get<std::string>();
    chunk.index = c.at("index").get<int>();
    chunk.text = c.at("text").get<std::string>();
    chunk.token_count = c.at("token_count").get<std::int64_t>();
    index.chunks.push_back(std::move(chunk));
  }
  const std::size_t dim = j.at("dim").get<std::size_t>();
  std::string raw = read_file(base_path + ".f32");
  if (raw.size() != index.chunks.size() * dim * sizeof(float)) {
    throw ValidationError("rag index vector file size mismatch for " + base_path);
  }
  const char* ptr = raw.data();
  index.vectors.assign(index.chunks.size(), std::vector<double>(dim));
  for (auto& row : index.vectors) {
    for (auto& v : row) {
      float f;
      std::memcpy(&f, ptr, sizeof(float));
      ptr += sizeof(float);
      v = static_cast<double>(f);
    }
  }
  return index;
}

namespace {

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw ValidationError("cosine of vectors with different dimensions");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

// Shared rank rule: score descending, then (doc_id, index) ascending.
std::vector<std::size_t> ranked_order(const std::vector<double>& scores,
                                      const std::vector<Chunk>& chunks) {
  std::vector<std::size_t> order(scores.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    if (chunks[a].doc_id != chunks[b].doc_id) return chunks[a].doc_id < chunks[b].doc_id;
    return chunks[a].index < chunks[b].index;
  });
  return order;
}

}  // namespace

std::vector<Chunk> retrieve(const RagIndex& index, const std::string& query, Backend& backend,
                            const std::string& embedding_model, int k1) {
  if (index.chunks.empty()) throw ValidationError("rag index is empty");
  if (k1 < 1) throw ValidationError("k1 must be >= 1");
  std::vector<double> query_vec = backend.embed(embedding_model, {query}).vectors.front();
  std::vector<double> scores(index.chunks.size());
  for (std::size_t i = 0; i < index.chunks.size(); ++i) scores[i] = cosine(query_vec, index.vectors[i]);
  auto order = ranked_order(scores, index.chunks);
  std::size_t keep = std::min<std::size_t>(static_cast<std::size_t>(k1), order.size());
  std::vector<Chunk> out;
  out.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) out.push_back(index.chunks[order[i]]);
  return out;
}

std::vector<double> EmbeddingCosineScorer::score(const std::string& query,
                                                 const std::vector<std::string>& documents) {
  std::vector<std::string> inputs;
  inputs.reserve(documents.size() + 1);
  inputs.push_back(query);
  for (const auto& d : documents) inputs.push_back(d);
  auto vectors = backend_.embed(model_, inputs).vectors;
  std::vector<double> scores(documents.size());
  for (std::size_t i = 0; i < documents.size(); ++i) scores[i] = cosine(vectors.front(), vectors[i + 1]);
  return scores;
}

HttpRerankScorer::HttpRerankScorer(std::string url, RetryPolicy retry)
    : url_(std::move(url)), retry_(retry) {}

std::vector<double> HttpRerankScorer::score(const std::string& query,
                                            const std::vector<std::string>& documents) {
  EndpointConfig config;
  config.url = url_;
  config.retry = retry_;
  // The rerank wire contract is one POST of {query, documents[]} returning
  // {scores[]}; reuse the backend's retrying POST via a throwaway client.
  auto scheme_end = url_.find("://");
  if (scheme_end == std::string::npos) throw ValidationError("rerank url missing scheme: " + url_);
  auto path_start = url_.find('/', scheme_end + 3);
  std::string base = path_start == std::string::npos ? url_ : url_.substr(0, path_start);
  std::string path = path_start == std::string::npos ? "/rerank" : url_.substr(path_start);

  nlohmann::json body;
  body["query"] = query;
  body["documents"] = documents;
  std::string payload = body.dump();

  std::string last_error;
  Rng rng(fnv1a64(payload));
  for (int attempt = 1; attempt <= retry_.max_attempts; ++attempt) {
    httplib::Client client(base);
    auto res = client.Post(path, payload, "application/json");
    if (res && res->status == 200) {
      try {
        auto scores = nlohmann::json::parse(res->body).at("scores").get<std::vector<double>>();
        if (scores.size() != documents.size()) {
          throw GatewayError("rerank returned " + std::to_string(scores.size()) + " scores for " +
                             std::to_string(documents.size()) + " documents");
        }
        return scores;
      } catch (const nlohmann::json::exception& e) {
        throw GatewayError(std::string("malformed rerank response: ") + e.what());
      }
    }
    if (res && res->status < 500 && res->status != 429) {
      throw GatewayError("rerank failed: HTTP " + std::to_string(res->status));
    }
    last_error = res ? "HTTP " + std::to_string(res->status)
                     : "connection error: " + httplib::to_string(res.error());
    if (attempt < retry_.max_attempts) {
      double delay = retry_.initial_delay_ms * std::pow(retry_.factor, attempt - 1);
      delay *= 1.0 + retry_.jitter * (2.0 * rng.next_double() - 1.0);
      std::this_thread::sleep_for(std::chrono::milliseconds(static_cast<std::int64_t>(delay)));
    }
  }
  throw GatewayError("rerank failed after " + std::to_string(retry_.max_attempts) +
                     " attempts; last error: " + last_error);
}

std::vector<Chunk> rerank(const std::string& query, const std::vector<Chunk>& candidates,
                          RerankScorer& scorer, int k2) {
  if (k2 < 1) throw ValidationError("k2 must be >= 1");
  if (candidates.empty()) return {};
  std::vector<std::string> texts;
  texts.reserve(candidates.size());
  for (const auto& c : candidates) texts.push_back(c.text);
  std::vector<double> scores = scorer.score(query, texts);
  auto order = ranked_order(scores, candidates);
  std::size_t keep = std::min<std::size_t>(static_cast<std::size_t>(k2), order.size());
  std::vector<Chunk> out;
  out.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) out.push_back(candidates[order[i]]);
  return out;
}

namespace {

std::string context_header(const std::vector<Chunk>& chunks) {
  if (chunks.empty()) return "[no retrieved context]\n\n";
  std::string ctx;
  for (const auto& chunk : chunks) {
    ctx += chunk.text;
    ctx += "\n\n";
  }
  return ctx;
}

}  // namespace

std::string render_rag_prompt(const std::vector<Chunk>& chunks, const MCQAItem& item) {
  return context_header(chunks) + render_mcqa_prompt(item);
}

std::string render_rag_prompt(const std::vector<Chunk>& chunks, const std::string& question) {
  return context_header(chunks) + prompts::free_form(question);
}

JudgeVerdict parse_judge_verdict(const std::string& completion) {
  JudgeVerdict verdict;
  verdict.rationale = completion;

  std::optional<std::string> verdict_line;
  for (const auto& raw : split_lines(completion)) {
    std::string line = trim(raw);
    if (line.rfind("Verdict:", 0) == 0) verdict_line = line;
  }
  if (!verdict_line) {
    verdict.correct = false;
    verdict.parsed = false;
    return verdict;
  }
  std::string value = trim(verdict_line->substr(std::string("Verdict:").size()));
  std::string upper;
  for (char c : value) upper += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  while (!upper.empty() && (upper.front() == '[' || upper.front() == '(')) upper.erase(upper.begin());
  verdict.correct = upper.rfind("CORRECT", 0) == 0;  // INCORRECT does not match this prefix
  verdict.parsed = true;
  return verdict;
}

JudgeVerdict judge_freeform(const std::string& question, const std::string& gold,
                            const std::string& model_answer, Backend& backend,
                            const std::string& judge_model, const std::string& item_id) {
  if (gold.empty()) throw ValidationError("judging requires a non-empty gold answer");
  ChatRequest req;
  req.request_id = "judge:" + item_id;
  req.model = judge_model;
  req.prompt = prompts::judge(question, gold, model_answer);
  req.profile = profiles::EVAL;
  req.profile.n = 1;
  ChatResponse response = backend.complete(req);

  JudgeVerdict verdict = parse_judge_verdict(response.texts.empty() ? "" : response.texts.front());
  verdict.item_id = item_id;
  return verdict;
}

}  // namespace synthkit
