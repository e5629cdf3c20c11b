#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "pdalign/comparisons.hpp"
#include "pdalign/inference.hpp"
#include "pdalign/table.hpp"

namespace pdalign {

enum class TaskStyle { Attribute, Size, Color, Llm };

TaskStyle task_style_from_string(const std::string& s);
std::string to_string(TaskStyle style);

// One evaluation pair: a difference text whose "first ..." clause
// describes one of the two items. gold records which item that is; a
// correct model answers gold via diff_classify.
struct TaskPair {
  std::string id_i;
  std::string id_j;
  std::string difference_text;
  PairSide gold = PairSide::First;
};

struct DifferenceTask {
  TaskStyle style = TaskStyle::Attribute;
  std::vector<TaskPair> pairs;
};

struct AttrItem {
  std::string id;
  std::vector<std::string> attributes;  // slot-ordered value names
};

// Pairs of items with differing attributes; the text is the attribute
// difference template rendered in a random direction. excluded attribute
// values are dropped from both lists (pairs whose visible difference
// vanishes are resampled).
DifferenceTask build_attribute_task(const std::vector<AttrItem>& items,
                                    std::size_t n_pairs, std::uint64_t seed,
                                    const std::set<std::string>& excluded = {});

// One item from each group per pair, presentation order and text
// direction randomized. Group names: the larger-object group first.
DifferenceTask build_size_task(const std::vector<std::string>& larger_ids,
                               const std::vector<std::string>& smaller_ids,
                               std::size_t n_pairs, std::uint64_t seed);

// Same for two color groups, e.g. ("yellow", yellow_ids, "blue", blue_ids).
DifferenceTask build_color_task(const std::string& color_first,
                                const std::vector<std::string>& first_ids,
                                const std::string& color_second,
                                const std::vector<std::string>& second_ids,
                                std::size_t n_pairs, std::uint64_t seed);

// Pairs and texts drawn from usable comparison records (e.g. LLM output);
// presentation order randomized against the record direction.
DifferenceTask build_llm_task(const std::vector<ComparisonRecord>& records,
                              std::size_t n_pairs, std::uint64_t seed);

struct DifferenceEvalResult {
  double accuracy = 0.0;
  std::vector<PairSide> predictions;
};

// diff_classify per pair with f_diff = encoder(difference_text); accuracy
// is the fraction matching gold. Missing ids throw DataError.
DifferenceEvalResult eval_difference(const DifferenceTask& task,
                                     const EmbeddingTable& images,
                                     const TextEncoderFn& encoder);

struct LocalizationRow {
  std::string class_b;
  std::string class_a;
  double d_fwd = 0.0;  // d(f_B - f_A, f_{B-A})
  double d_rev = 0.0;  // d(f_A - f_B, f_{B-A})
};

// One row per class difference; both classes must be present in the bank
// (DataError otherwise). d_fwd + d_rev = 2 up to rounding.
std::vector<LocalizationRow> localization_report(
    const PromptBank& bank, const std::vector<ClassDifference>& diffs);

// (mean, stderr) with stderr = sample standard deviation / sqrt(n);
// a single value has stderr 0. Empty input throws ConfigError.
std::pair<double, double> accuracy_mean_stderr(
    const std::vector<double>& per_seed);

struct EvalReport {
  std::string task;  // free-form label, e.g. "difference/attribute"
  std::vector<double> per_seed;
  double mean = 0.0;
  double stderr_mean = 0.0;

  // Classification mode.
  std::vector<std::string> classes;
  ConfusionMatrix confusion;

  // Localization mode.
  std::vector<LocalizationRow> localization;
  double mean_d_fwd = 0.0;
  double mean_d_rev = 0.0;

  std::string to_json() const;
  static EvalReport from_json(const std::string& text);
};

void write_report(const EvalReport& report,
                  const std::filesystem::path& path);
EvalReport read_report(const std::filesystem::path& path);

// Plain-text rendering: one row per measurement, mean +/- stderr.
std::string render_report_table(const EvalReport& report);

// Re-samples the task per seed (seed_base + s) and aggregates.
EvalReport run_difference_eval(
    const std::function<DifferenceTask(std::uint64_t)>& build,
    const EmbeddingTable& images, const TextEncoderFn& encoder,
    std::size_t n_seeds, std::uint64_t seed_base, const std::string& label);

struct ZeroshotEvalResult {
  double accuracy = 0.0;
  ConfusionMatrix confusion;
};

// labeled: (item id, class name); every label must exist in the bank.
ZeroshotEvalResult eval_zeroshot(
    const std::vector<std::pair<std::string, std::string>>& labeled,
    const EmbeddingTable& images, const PromptBank& bank);

}  // namespace pdalign
