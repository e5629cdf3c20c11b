#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "pdalign/toyworld.hpp"

namespace pdalign {

enum class PromptStyle { Coco, Cub };

PromptStyle prompt_style_from_string(const std::string& s);
std::string to_string(PromptStyle style);

enum class FilterState { Accepted, Truncated, Rejected };

struct FilterStatus {
  FilterState state = FilterState::Accepted;
  // Rejection reason ("contains-include", ...) or truncation rule
  // ("q-marker", "note-marker"). Empty for plain accepted.
  std::string detail;

  bool usable() const { return state != FilterState::Rejected; }
  bool operator==(const FilterStatus&) const = default;
};

// "accepted" | "truncated(rule)" | "rejected(reason)"
std::string to_string(const FilterStatus& status);
FilterStatus filter_status_from_string(const std::string& s);

struct ComparisonRecord {
  std::string id_a;
  std::string id_b;
  std::string caption_a;
  std::string caption_b;
  std::string difference_text;  // empty for rejected records
  std::string source;           // "llm" | "synthetic"
  FilterStatus filter_status;

  bool operator==(const ComparisonRecord&) const = default;
};

struct FilterResult {
  bool accepted = false;
  std::string text;    // cleaned text when accepted
  std::string reason;  // rejection reason otherwise
  std::string rule;    // first truncation rule applied, if any

  FilterStatus status() const;
};

// Cleaning rules for raw model output (which the client has already
// capped at the first 80 tokens):
//   - reject if it contains "#include" or "#define"
//   - reject if it contains 8 consecutive newline characters
//   - cut at the first "Q:" / "Note:" marker, earliest first, re-checking
//     until neither remains
//   - trim whitespace; reject when nothing is left
std::string filter_generation_clean(const std::string& raw);  // convenience
FilterResult filter_generation(const std::string& raw);

using IdPair = std::pair<std::string, std::string>;

// Uniformly samples n_source ids without replacement, then emits all
// n_source*(n_source-1) ordered pairs, lexicographic by sampled index.
std::vector<IdPair> sample_pairs(const std::vector<std::string>& ids,
                                 std::size_t n_source, std::uint64_t seed);

// Few-shot prompt asking for the visual difference between two captioned
// images, with the captions substituted verbatim (no escaping).
std::string build_prompt(PromptStyle style, const std::string& caption_a,
                         const std::string& caption_b);

class GenerationClient;

struct GenerateOptions {
  PromptStyle style = PromptStyle::Coco;
  int max_tokens = 80;
  unsigned max_inflight = 1;
};

using CaptionMap = std::unordered_map<std::string, std::string>;

// One record per input pair, in input order regardless of completion
// arrival order. Transport failures become rejected(transport) records;
// the run continues.
std::vector<ComparisonRecord> generate_dataset(
    GenerationClient& client, const std::vector<IdPair>& pairs,
    const CaptionMap& captions, const GenerateOptions& options);

// Same assembly path with difference texts from the attribute oracle
// instead of a model. Items must carry slot-ordered attribute lists.
std::vector<ComparisonRecord> generate_dataset_oracle(
    const std::vector<WorldItemRecord>& items,
    const std::vector<IdPair>& pairs);
std::vector<ComparisonRecord> generate_dataset_oracle(
    const ToyWorld& world, const std::vector<IdPair>& pairs);

// JSONL persistence; accepted_only keeps records whose status is usable
// (accepted or truncated), the set used for training.
std::string records_jsonl(const std::vector<ComparisonRecord>& records,
                          bool accepted_only = false);
void write_records(const std::vector<ComparisonRecord>& records,
                   const std::filesystem::path& path,
                   bool accepted_only = false);
std::vector<ComparisonRecord> read_records(
    const std::filesystem::path& path);

}  // namespace pdalign
