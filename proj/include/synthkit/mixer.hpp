#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "synthkit/corpus.hpp"
#include "synthkit/generators.hpp"
#include "synthkit/tokenizer.hpp"

namespace synthkit {

inline const std::string kEodToken = "<|endofdoc|>";

struct MixComponent {
  std::string label;
  double weight = 1.0;  // must be positive; normalized internally
};

// Ratios are interpreted over tokens by default; record-count interpretation
// is available for callers that want instance-based mixing.
enum class MixUnit { Tokens, Records };

struct MixSpec {
  std::vector<MixComponent> components;
  double replay_fraction = 0.0;  // in [0, 1)
  std::int64_t total_token_budget = 0;
  std::uint64_t seed = 0;
  MixUnit unit = MixUnit::Tokens;
};

struct TrainingRecord {
  std::string text;  // metadata-framed
  std::int64_t token_count = 0;
  std::string source;
};

struct PackedSequence {
  std::vector<std::string> segments;  // exactly seq_len tokens
  std::vector<std::int64_t> eod_positions;
};

// Frames a generated record with its source-document metadata: records with a
// learning strategy use the strategy/apply/output layout, QA records lead
// with a line naming the document, and documents without metadata fall back
// to the title.
TrainingRecord format_record(const SynthRecord& record, const Document& doc, const Tokenizer& tokenizer);

// Draws records per component in seeded shuffled order until each component's
// token share of the budget is reached (shares are token-based, not
// record-based). Replay records are raw corpus passages.
std::vector<TrainingRecord> build_mixture(const std::map<std::string, std::vector<TrainingRecord>>& sources,
                                          const MixSpec& spec, const Corpus* replay_corpus);

// Per-component target token shares implied by a spec, keyed by label
// ("replay" for the replay share).
std::map<std::string, double> mixture_targets(const MixSpec& spec);

// Shuffles records, joins their token streams with a single EOD token and
// splits into consecutive seq_len windows; the final partial window is
// dropped. Records may span window boundaries.
std::vector<PackedSequence> pack_sequences(const std::vector<TrainingRecord>& records, int seq_len,
                                           std::uint64_t seed, const Tokenizer& tokenizer,
                                           const std::string& eod_token = kEodToken);

void export_training_file(const std::vector<PackedSequence>& sequences, const std::string& path,
                          int seq_len, const std::string& eod_token = kEodToken);
std::vector<PackedSequence> load_training_file(const std::string& path);

}  // namespace synthkit
