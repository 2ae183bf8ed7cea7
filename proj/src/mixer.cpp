#include "synthkit/mixer.hpp"

#include <algorithm>

#include <json.hpp>

#include "synthkit/errors.hpp"
#include "synthkit/util.hpp"

namespace synthkit {

namespace {

// "10-K" of AcmeCo -> doc_name from metadata (title as fallback), owner from
// company then author. Empty owner drops the " of X" clause.
std::pair<std::string, std::string> doc_name_and_owner(const Document& doc) {
  std::string name = doc.title;
  if (auto it = doc.metadata.find("doc_name"); it != doc.metadata.end()) name = it->second;
  std::string owner;
  if (auto it = doc.metadata.find("company"); it != doc.metadata.end()) {
    owner = it->second;
  } else if (auto it2 = doc.metadata.find("author"); it2 != doc.metadata.end()) {
    owner = it2->second;
  }
  return {name, owner};
}

std::string document_clause(const Document& doc) {
  auto [name, owner] = doc_name_and_owner(doc);
  std::string clause = "document \"" + name + "\"";
  if (!owner.empty()) clause += " of " + owner;
  return clause;
}

}  // namespace

TrainingRecord format_record(const SynthRecord& record, const Document& doc, const Tokenizer& tokenizer) {
  if (record.doc_id != doc.id) {
    throw ValidationError("record '" + record.record_id + "' does not belong to document '" + doc.id +
                          "'");
  }
  std::string text;
  if (record.kind == RecordKind::QA) {
    text = "The following question is about the " + document_clause(doc) + ".\n\n" + record.text;
  } else if (record.provenance.strategy_text.has_value()) {
    text = "Here's a learning strategy.\n" + *record.provenance.strategy_text +
           "\n\nApply this strategy to the " + document_clause(doc) +
           ".\n\nOutput: " + record.text;
  } else {
    text = "The following is based on the " + document_clause(doc) + ".\n\n" + record.text;
  }
  TrainingRecord out;
  out.text = std::move(text);
  out.token_count = tokenizer.count(out.text);
  out.source = method_name(record.method);
  return out;
}

std::map<std::string, double> mixture_targets(const MixSpec& spec) {
  if (spec.components.empty()) throw ValidationError("mix spec has no components");
  if (spec.total_token_budget <= 0) throw ValidationError("total_token_budget must be positive");
  if (spec.replay_fraction < 0.0 || spec.replay_fraction >= 1.0) {
    throw ValidationError("replay_fraction must be in [0, 1)");
  }
  double weight_sum = 0.0;
  for (const auto& c : spec.components) {
    if (c.weight <= 0.0) throw ValidationError("component '" + c.label + "' has non-positive weight");
    weight_sum += c.weight;
  }
  std::map<std::string, double> targets;
  double synth_budget = (1.0 - spec.replay_fraction) * static_cast<double>(spec.total_token_budget);
  for (const auto& c : spec.components) {
    targets[c.label] = c.weight / weight_sum * synth_budget;
  }
  if (spec.replay_fraction > 0.0) {
    targets["replay"] = spec.replay_fraction * static_cast<double>(spec.total_token_budget);
  }
  return targets;
}

namespace {

void draw_component(const std::string& label, const std::vector<TrainingRecord>& pool, double share,
                    MixUnit unit, std::uint64_t seed, std::vector<TrainingRecord>& out) {
  auto order = shuffled_indices(pool.size(), seed);
  double used = 0.0;
  for (std::size_t i = 0; i < order.size() && used < share; ++i) {
    const TrainingRecord& record = pool[order[i]];
    out.push_back(record);
    out.back().source = label;
    used += unit == MixUnit::Tokens ? static_cast<double>(record.token_count) : 1.0;
  }
  if (used < share) {
    throw ValidationError("source '" + label + "' exhausted: " +
                          std::to_string(static_cast<std::int64_t>(share - used)) + " " +
                          (unit == MixUnit::Tokens ? "tokens" : "records") + " short of its " +
                          std::to_string(static_cast<std::int64_t>(share)) + " share");
  }
}

}  // namespace

std::vector<TrainingRecord> build_mixture(const std::map<std::string, std::vector<TrainingRecord>>& sources,
                                          const MixSpec& spec, const Corpus* replay_corpus) {
  auto targets = mixture_targets(spec);
  if (spec.replay_fraction > 0.0 && replay_corpus == nullptr) {
    throw ValidationError("replay_fraction > 0 requires a replay corpus");
  }

  std::vector<TrainingRecord> mixture;
  for (const auto& component : spec.components) {
    auto it = sources.find(component.label);
    if (it == sources.end()) {
      throw ValidationError("mix component '" + component.label + "' has no source records");
    }
    draw_component(component.label, it->second, targets.at(component.label), spec.unit,
                   derive_seed(spec.seed, "mix:" + component.label), mixture);
  }
  if (spec.replay_fraction > 0.0) {
    std::vector<TrainingRecord> replay_pool;
    replay_pool.reserve(replay_corpus->documents.size());
    for (const auto& doc : replay_corpus->documents) {
      // Replay passages imitate pretraining data: no metadata frame.
      replay_pool.push_back({doc.text, doc.token_count, "replay"});
    }
    draw_component("replay", replay_pool, targets.at("replay"), spec.unit,
                   derive_seed(spec.seed, "mix:replay"), mixture);
  }
  return mixture;
}

std::vector<PackedSequence> pack_sequences(const std::vector<TrainingRecord>& records, int seq_len,
                                           std::uint64_t seed, const Tokenizer& tokenizer,
                                           const std::string& eod_token) {
  if (seq_len < 2) throw ValidationError("seq_len must be at least 2");
  if (records.empty()) throw ValidationError("cannot pack an empty record list");

  auto order = shuffled_indices(records.size(), seed);
  std::vector<std::string> stream;
  std::vector<std::int64_t> eod_positions;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (i > 0) {
      eod_positions.push_back(static_cast<std::int64_t>(stream.size()));
      stream.push_back(eod_token);
    }
    for (auto& token : tokenizer.tokenize(records[order[i]].text)) {
      stream.push_back(std::move(token));
    }
  }

  std::vector<PackedSequence> sequences;
  std::size_t full_windows = stream.size() / static_cast<std::size_t>(seq_len);
  sequences.reserve(full_windows);
  std::size_t eod_cursor = 0;
  for (std::size_t w = 0; w < full_windows; ++w) {
    std::size_t begin = w * static_cast<std::size_t>(seq_len);
    std::size_t end = begin + static_cast<std::size_t>(seq_len);
    PackedSequence seq;
    seq.segments.assign(stream.begin() + static_cast<std::ptrdiff_t>(begin),
                        stream.begin() + static_cast<std::ptrdiff_t>(end));
    while (eod_cursor < eod_positions.size() &&
           eod_positions[eod_cursor] < static_cast<std::int64_t>(end)) {
      seq.eod_positions.push_back(eod_positions[eod_cursor] - static_cast<std::int64_t>(begin));
      ++eod_cursor;
    }
    sequences.push_back(std::move(seq));
  }
  return sequences;
}

void export_training_file(const std::vector<PackedSequence>& sequences, const std::string& path,
                          int seq_len, const std::string& eod_token) {
  std::string out;
  nlohmann::json header;
  header["format"] = "synthkit.packed.v1";
  header["seq_len"] = seq_len;
  header["eod_token"] = eod_token;
  header["sequences"] = sequences.size();
  out += header.dump();
  out.push_back('\n');
  for (const auto& seq : sequences) {
    nlohmann::json j;
    j["segments"] = seq.segments;
    j["eod_positions"] = seq.eod_positions;
    out += j.dump();
    out.push_back('\n');
  }
  write_file(path, out);
}

std::vector<PackedSequence> load_training_file(const std::string& path) {
  auto lines = split_lines(read_file(path));
  if (lines.empty()) throw ValidationError("training file has no header: " + path);
  nlohmann::json header = nlohmann::json::parse(lines.front());
  if (header.value("format", "") != "synthkit.packed.v1") {
    throw ValidationError("unrecognized training file format in " + path);
  }
  std::vector<PackedSequence> sequences;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    nlohmann::json j = nlohmann::json::parse(lines[i]);
    PackedSequence seq;
    seq.segments = j.at("segments").get<std::vector<std::string>>();
    seq.eod_positions = j.at("eod_positions").get<std::vector<std::int64_t>>();
    sequences.push_back(std::move(seq));
  }
  if (sequences.size() != header.value("sequences", sequences.size())) {
    throw ValidationError("training file sequence count does not match header: " + path);
  }
  return sequences;
}

}  // namespace synthkit
