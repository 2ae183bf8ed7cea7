#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace synthkit {

// Token counts everywhere in the toolkit are relative to one of these.
class Tokenizer {
 public:
  virtual ~Tokenizer() = default;

  virtual std::string name() const = 0;
  virtual std::vector<std::string> tokenize(std::string_view text) const = 0;
  // Inverse of tokenize up to the tokenizer's equivalence: re-tokenizing the
  // joined string yields the same token sequence.
  virtual std::string join(std::span<const std::string> tokens) const = 0;

  std::int64_t count(std::string_view text) const {
    return static_cast<std::int64_t>(tokenize(text).size());
  }
};

// Reference tokenizer: splits on maximal whitespace runs, joins with single
// spaces. Deterministic and model-free; used by all tests.
class WhitespaceTokenizer final : public Tokenizer {
 public:
  std::string name() const override { return "whitespace"; }
  std::vector<std::string> tokenize(std::string_view text) const override;
  std::string join(std::span<const std::string> tokens) const override;
};

// Byte-level BPE loaded from a tokenizer-definition file (JSON with
// model.vocab and model.merges, tokenizer.json style). Token strings are the
// decoded byte spans, so join() is plain concatenation and round-trips
// exactly.
class BpeTokenizer final : public Tokenizer {
 public:
  static std::unique_ptr<BpeTokenizer> load(const std::string& path);

  std::string name() const override { return name_; }
  std::vector<std::string> tokenize(std::string_view text) const override;
  std::string join(std::span<const std::string> tokens) const override;

 private:
  struct Rule {
    std::uint32_t rank;
    std::uint32_t result;
  };

  BpeTokenizer() = default;
  std::uint32_t intern(const std::string& encoded);

  std::string name_;
  std::vector<std::string> sym_bytes_;  // decoded raw bytes per symbol
  std::unordered_map<std::string, std::uint32_t> sym_ids_;
  std::unordered_map<std::uint64_t, Rule> rules_;
  std::array<std::string, 256> byte_enc_;  // raw byte -> encoded UTF-8 char
};

// "whitespace" or a path to a tokenizer-definition file.
std::unique_ptr<Tokenizer> make_tokenizer(const std::string& spec);

}  // namespace synthkit
