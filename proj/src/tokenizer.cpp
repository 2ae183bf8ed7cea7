#include "synthkit/tokenizer.hpp"

#include <cctype>
#include <limits>

#include <json.hpp>

#include "synthkit/errors.hpp"
#include "synthkit/util.hpp"

namespace synthkit {

namespace {

bool is_ws(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::string encode_codepoint(std::uint32_t cp) {
  std::string out;
  if (cp <= 0x7F) {
    out.push_back(static_cast<char>(cp));
  } else if (cp <= 0x7FF) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
  return out;
}

// GPT-2 style byte<->unicode table: printable latin-1 bytes map to
// themselves, the rest are shifted past 0x100 so every byte has a visible
// stand-in character.
std::array<std::string, 256> build_byte_encoder() {
  std::array<std::uint32_t, 256> cp{};
  std::array<bool, 256> direct{};
  auto mark = [&](int lo, int hi) {
    for (int b = lo; b <= hi; ++b) {
      cp[static_cast<std::size_t>(b)] = static_cast<std::uint32_t>(b);
      direct[static_cast<std::size_t>(b)] = true;
    }
  };
  mark('!', '~');
  mark(0xA1, 0xAC);
  mark(0xAE, 0xFF);
  std::uint32_t next = 0;
  for (int b = 0; b < 256; ++b) {
    if (!direct[static_cast<std::size_t>(b)]) {
      cp[static_cast<std::size_t>(b)] = 256 + next;
      ++next;
    }
  }
  std::array<std::string, 256> enc;
  for (int b = 0; b < 256; ++b) enc[static_cast<std::size_t>(b)] = encode_codepoint(cp[static_cast<std::size_t>(b)]);
  return enc;
}

std::uint64_t pair_key(std::uint32_t a, std::uint32_t b) {
  return (static_cast<std::uint64_t>(a) << 32) | b;
}

// Lossless pre-tokenization: words keep one leading space, longer whitespace
// runs keep the excess as their own piece. Concatenating pieces restores the
// input byte-for-byte.
std::vector<std::string_view> pretokenize(std::string_view text) {
  std::vector<std::string_view> pieces;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    if (is_ws(text[i])) {
      std::size_t j = i;
      while (j < n && is_ws(text[j])) ++j;
      if (j < n) {
        if (j - i > 1) pieces.push_back(text.substr(i, j - i - 1));
        std::size_t k = j;
        while (k < n && !is_ws(text[k])) ++k;
        pieces.push_back(text.substr(j - 1, k - (j - 1)));
        i = k;
      } else {
        pieces.push_back(text.substr(i, j - i));
        i = j;
      }
    } else {
      std::size_t k = i;
      while (k < n && !is_ws(text[k])) ++k;
      pieces.push_back(text.substr(i, k - i));
      i = k;
    }
  }
  return pieces;
}

}  // namespace

std::vector<std::string> WhitespaceTokenizer::tokenize(std::string_view text) const {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_ws(text[i])) ++i;
    std::size_t start = i;
    while (i < text.size() && !is_ws(text[i])) ++i;
    if (i > start) tokens.emplace_back(text.substr(start, i - start));
  }
  return tokens;
}

std::string WhitespaceTokenizer::join(std::span<const std::string> tokens) const {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

std::uint32_t BpeTokenizer::intern(const std::string& encoded) {
  auto it = sym_ids_.find(encoded);
  if (it != sym_ids_.end()) return it->second;
  std::uint32_t id = static_cast<std::uint32_t>(sym_bytes_.size());
  sym_ids_.emplace(encoded, id);
  // Decode the byte-level characters back to raw bytes.
  static const auto enc = build_byte_encoder();
  std::string raw;
  std::size_t i = 0;
  while (i < encoded.size()) {
    bool matched = false;
    for (std::size_t len : {std::size_t{1}, std::size_t{2}}) {
      if (i + len > encoded.size()) continue;
      std::string_view cand(encoded.data() + i, len);
      for (int b = 0; b < 256; ++b) {
        if (enc[static_cast<std::size_t>(b)] == cand) {
          raw.push_back(static_cast<char>(b));
          i += len;
          matched = true;
          break;
        }
      }
      if (matched) break;
    }
    if (!matched) {
      // Unknown character in the symbol table; keep it verbatim.
      raw.push_back(encoded[i]);
      ++i;
    }
  }
  sym_bytes_.push_back(std::move(raw));
  return id;
}

std::unique_ptr<BpeTokenizer> BpeTokenizer::load(const std::string& path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("tokenizer definition is not valid JSON: " + path + ": " + e.what());
  }
  if (!doc.contains("model") || !doc["model"].contains("vocab") || !doc["model"].contains("merges")) {
    throw ValidationError("tokenizer definition missing model.vocab/model.merges: " + path);
  }

  auto tok = std::unique_ptr<BpeTokenizer>(new BpeTokenizer());
  tok->name_ = "bpe:" + path;
  tok->byte_enc_ = build_byte_encoder();
  for (const auto& e : tok->byte_enc_) tok->intern(e);
  for (const auto& [symbol, id] : doc["model"]["vocab"].items()) {
    (void)id;
    tok->intern(symbol);
  }

  std::uint32_t rank = 0;
  for (const auto& merge : doc["model"]["merges"]) {
    std::string left, right;
    if (merge.is_string()) {
      std::string line = merge.get<std::string>();
      auto pos = line.find(' ');
      if (pos == std::string::npos || pos + 1 >= line.size()) continue;
      left = line.substr(0, pos);
      right = line.substr(pos + 1);
    } else if (merge.is_array() && merge.size() == 2) {
      left = merge[0].get<std::string>();
      right = merge[1].get<std::string>();
    } else {
      continue;
    }
    std::uint32_t l = tok->intern(left);
    std::uint32_t r = tok->intern(right);
    std::uint32_t m = tok->intern(left + right);
    tok->rules_.emplace(pair_key(l, r), Rule{rank, m});
    ++rank;
  }
  return tok;
}

std::vector<std::string> BpeTokenizer::tokenize(std::string_view text) const {
  std::vector<std::string> out;
  for (std::string_view piece : pretokenize(text)) {
    std::vector<std::uint32_t> syms;
    syms.reserve(piece.size());
    for (unsigned char b : piece) {
      auto it = sym_ids_.find(byte_enc_[b]);
      syms.push_back(it->second);
    }
    while (syms.size() >= 2) {
      std::uint32_t best_rank = std::numeric_limits<std::uint32_t>::max();
      std::uint32_t best_left = 0, best_right = 0, best_result = 0;
      for (std::size_t i = 0; i + 1 < syms.size(); ++i) {
        auto it = rules_.find(pair_key(syms[i], syms[i + 1]));
        if (it != rules_.end() && it->second.rank < best_rank) {
          best_rank = it->second.rank;
          best_left = syms[i];
          best_right = syms[i + 1];
          best_result = it->second.result;
        }
      }
      if (best_rank == std::numeric_limits<std::uint32_t>::max()) break;
      std::vector<std::uint32_t> merged;
      merged.reserve(syms.size());
      for (std::size_t i = 0; i < syms.size();) {
        if (i + 1 < syms.size() && syms[i] == best_left && syms[i + 1] == best_right) {
          merged.push_back(best_result);
          i += 2;
        } else {
          merged.push_back(syms[i]);
          ++i;
        }
      }
      syms.swap(merged);
    }
    for (std::uint32_t s : syms) out.push_back(sym_bytes_[s]);
  }
  return out;
}

std::string BpeTokenizer::join(std::span<const std::string> tokens) const {
  std::string out;
  for (const auto& t : tokens) out += t;
  return out;
}

std::unique_ptr<Tokenizer> make_tokenizer(const std::string& spec) {
  if (spec.empty() || spec == "whitespace") return std::make_unique<WhitespaceTokenizer>();
  return BpeTokenizer::load(spec);
}

}  // namespace synthkit
