#pragma once

// File formats and model persistence.
//
// Model file ("RSE1"):
//   bytes 0..3   magic "RSE1"
//   bytes 4..11  header length L, uint64 little-endian
//   next L bytes UTF-8 JSON header: format_version, vocab_size, d_in, d,
//                max_len, vocab, relations, config, payload_bytes,
//                payload_fnv1a64 (hex string)
//   payload      float64 little-endian, row-major: embedding table (|V| x d_in),
//                projection weight (d_in x d), projection bias (d),
//                relation rows (R x d)
//
// Triples: JSONL, one object per line with "head", "relation", "tail" and an
// optional "hard_neg". Scored pairs: TSV sent1<TAB>sent2<TAB>gold.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rse/evaluation.hpp"
#include "rse/model.hpp"
#include "rse/relation_model.hpp"
#include "rse/training.hpp"

namespace rse {

inline constexpr std::uint32_t kModelFormatVersion = 1;

struct ModelArtifact {
  std::uint32_t format_version = kModelFormatVersion;
  Model model;
  TrainConfig config;

  bool operator==(const ModelArtifact&) const = default;
};

// Writes to a sibling temp file and renames it into place.
void save_model(const ModelArtifact& artifact, const std::filesystem::path& path);

// Throws CorruptArtifact for any structural problem and Io when unreadable.
ModelArtifact load_model(const std::filesystem::path& path);

// Blank lines are skipped; `line_numbers` receives the source line of each triple.
std::vector<SentenceTriple> read_triples_jsonl(std::istream& in,
                                               std::vector<std::size_t>* line_numbers = nullptr);
std::vector<SentenceTriple> read_triples_jsonl(const std::filesystem::path& path,
                                               std::vector<std::size_t>* line_numbers = nullptr);
void write_triples_jsonl(std::ostream& out, std::span<const SentenceTriple> triples);

std::vector<ScoredPair> read_scored_pairs(std::istream& in);
std::vector<ScoredPair> read_scored_pairs(const std::filesystem::path& path);
void write_scored_pairs(std::ostream& out, std::span<const ScoredPair> pairs);

void write_link_queries_jsonl(std::ostream& out, std::span<const LinkQuery> queries);

// key=value lines (TrainConfig field names), '#' comments. Unknown keys and
// malformed values throw Config with the line number.
TrainConfig parse_config(std::istream& in, TrainConfig base = {});
TrainConfig read_config(const std::filesystem::path& path, TrainConfig base = {});
void write_config(std::ostream& out, const TrainConfig& cfg);
// Applies one key=value setting.
void apply_config_value(TrainConfig& cfg, std::string_view key, std::string_view value);

// "name=w,name=w"
ScoreWeights parse_weights(std::string_view text);

void write_train_log(std::ostream& out, std::span<const TrainLogRecord> log);

// Fixed 6-decimal rendering used by every report.
std::string format_decimal(double value);

// Replaces `path` atomically with `contents`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace rse
