#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "synthkit/tokenizer.hpp"

namespace synthkit {

struct Document {
  std::string id;
  std::string title;
  std::string text;
  std::map<std::string, std::string> metadata;
  std::int64_t token_count = 0;
};

struct Corpus {
  std::string name;
  std::string domain;
  std::vector<Document> documents;
  std::int64_t total_tokens = 0;

  const Document* find(const std::string& doc_id) const;
};

struct Chunk {
  std::string doc_id;
  int index = 0;
  std::string text;
  std::int64_t token_count = 0;
};

// Reads line-delimited JSON ({id, title, text, metadata?}), populating token
// counts. Errors name the offending line.
Corpus load_corpus(const std::string& path, const Tokenizer& tokenizer, const std::string& domain = "");

void save_corpus(const Corpus& corpus, const std::string& path);

// Sliding token windows of size chunk_tokens with the given overlap; the last
// window may be shorter. Requires chunk_tokens > overlap_tokens >= 0.
std::vector<Chunk> chunk_document(const Document& doc, int chunk_tokens, int overlap_tokens,
                                  const Tokenizer& tokenizer);

}  // namespace synthkit
