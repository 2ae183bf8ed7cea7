#include "synthkit/corpus.hpp"

#include <filesystem>
#include <fstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "synthkit/errors.hpp"
#include "synthkit/util.hpp"

namespace synthkit {

const Document* Corpus::find(const std::string& doc_id) const {
  for (const auto& doc : documents) {
    if (doc.id == doc_id) return &doc;
  }
  return nullptr;
}

Corpus load_corpus(const std::string& path, const Tokenizer& tokenizer, const std::string& domain) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open corpus file: " + path);

  Corpus corpus;
  corpus.name = std::filesystem::path(path).stem().string();
  corpus.domain = domain;

  std::unordered_set<std::string> seen_ids;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("corpus line " + std::to_string(line_no) + " is not valid JSON: " + e.what());
    }
    for (const char* field : {"id", "title", "text"}) {
      if (!j.contains(field) || !j[field].is_string()) {
        throw ValidationError("corpus line " + std::to_string(line_no) + " missing required field '" +
                              field + "'");
      }
    }
    Document doc;
    doc.id = j["id"].get<std::string>();
    doc.title = j["title"].get<std::string>();
    doc.text = j["text"].get<std::string>();
    if (doc.id.empty()) {
      throw ValidationError("corpus line " + std::to_string(line_no) + " has empty id");
    }
    if (doc.text.empty()) {
      throw ValidationError("corpus line " + std::to_string(line_no) + " has empty text");
    }
    if (!seen_ids.insert(doc.id).second) {
      throw ValidationError("duplicate document id '" + doc.id + "' at line " + std::to_string(line_no));
    }
    if (j.contains("metadata")) {
      if (!j["metadata"].is_object()) {
        throw ValidationError("corpus line " + std::to_string(line_no) + " metadata must be an object");
      }
      for (const auto& [k, v] : j["metadata"].items()) {
        if (!v.is_string()) {
          throw ValidationError("corpus line " + std::to_string(line_no) + " metadata value for '" + k +
                                "' must be a string");
        }
        doc.metadata[k] = v.get<std::string>();
      }
    }
    doc.token_count = tokenizer.count(doc.text);
    corpus.total_tokens += doc.token_count;
    corpus.documents.push_back(std::move(doc));
  }
  if (corpus.documents.empty()) throw ValidationError("corpus file has no documents: " + path);
  return corpus;
}

void save_corpus(const Corpus& corpus, const std::string& path) {
  std::string out;
  for (const auto& doc : corpus.documents) {
    nlohmann::json j;
    j["id"] = doc.id;
    j["title"] = doc.title;
    j["text"] = doc.text;
    if (!doc.metadata.empty()) j["metadata"] = doc.metadata;
    j["token_count"] = doc.token_count;
    out += j.dump();
    out.push_back('\n');
  }
  write_file(path, out);
}

std::vector<Chunk> chunk_document(const Document& doc, int chunk_tokens, int overlap_tokens,
                                  const Tokenizer& tokenizer) {
  if (overlap_tokens < 0 || chunk_tokens <= overlap_tokens) {
    throw ValidationError("chunk_tokens must exceed overlap_tokens (got chunk=" +
                          std::to_string(chunk_tokens) + ", overlap=" + std::to_string(overlap_tokens) +
                          ")");
  }
  std::vector<std::string> tokens = tokenizer.tokenize(doc.text);
  std::vector<Chunk> chunks;
  const std::size_t n = tokens.size();
  const std::size_t stride = static_cast<std::size_t>(chunk_tokens - overlap_tokens);
  int index = 0;
  for (std::size_t start = 0; start < n; start += stride) {
    std::size_t len = std::min<std::size_t>(static_cast<std::size_t>(chunk_tokens), n - start);
    std::span<const std::string> window(tokens.data() + start, len);
    Chunk chunk;
    chunk.doc_id = doc.id;
    chunk.index = index++;
    chunk.text = tokenizer.join(window);
    chunk.token_count = static_cast<std::int64_t>(len);
    chunks.push_back(std::move(chunk));
  }
  return chunks;
}

}  // namespace synthkit
