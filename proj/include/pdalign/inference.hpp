#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pdalign/embedding.hpp"

namespace pdalign {

// Text -> unit-norm embedding. Stubs and the ground-truth world encoder
// plug in here alongside the trained encoder.
using TextEncoderFn = std::function<Vec(const std::string&)>;

enum class BankKind { Standard, Extended, ComparativeUpdated };

BankKind bank_kind_from_string(const std::string& s);
std::string to_string(BankKind kind);

struct PromptEntry {
  std::string class_name;
  std::string prompt;
  Vec embedding;  // unit norm
};

struct PromptBank {
  BankKind kind = BankKind::Standard;
  std::vector<PromptEntry> entries;

  std::optional<std::size_t> find(const std::string& class_name) const;
};

PromptBank make_prompt_bank(
    BankKind kind,
    const std::vector<std::pair<std::string, std::string>>& class_prompts,
    const TextEncoderFn& encoder);

struct Classification {
  std::size_t index = 0;
  std::string class_name;
  std::vector<double> scores;  // cosine similarity per bank entry
};

// Argmax of cosine similarity; ties break toward the lowest class index.
// Throws ConfigError on an empty bank.
Classification zeroshot_classify(const Vec& image, const PromptBank& bank);

enum class PairSide { First, Second };

std::string to_string(PairSide side);

// "first" iff (g_i - g_j) . f_diff >= 0; the >= makes ties land on first.
PairSide diff_classify(const Vec& g_i, const Vec& g_j, const Vec& f_diff);

// Blended class prompt  alpha * f_a + (1 - alpha) * (f_b - f_bma),
// re-normalized so downstream cosine classification sees a direction.
// Throws ConfigError when alpha is outside [0, 1].
Vec comparative_prompt(const Vec& f_a, const Vec& f_b, const Vec& f_bma,
                       double alpha);

// Square matrix of prediction counts: at(true_class, predicted_class).
class ConfusionMatrix {
 public:
  ConfusionMatrix() = default;
  explicit ConfusionMatrix(std::size_t classes)
      : classes_(classes), counts_(classes * classes, 0) {}

  std::size_t classes() const { return classes_; }
  std::uint64_t& at(std::size_t i, std::size_t j) {
    return counts_[i * classes_ + j];
  }
  std::uint64_t at(std::size_t i, std::size_t j) const {
    return counts_[i * classes_ + j];
  }
  const std::vector<std::uint64_t>& counts() const { return counts_; }

 private:
  std::size_t classes_ = 0;
  std::vector<std::uint64_t> counts_;
};

// Unordered pairs {a, b} ranked by confusion[a][b] + confusion[b][a]
// descending, ties lexicographic by (a, b); returns min(k, #pairs) pairs.
// Throws ConfigError when k is zero or the bank has fewer than 2 classes.
std::vector<std::pair<std::size_t, std::size_t>> select_confused_pairs(
    const ConfusionMatrix& confusion, std::size_t k);

// A text description of the difference between class_b and class_a, with
// its embedding f_{B-A}.
struct ClassDifference {
  std::string class_b;
  std::string class_a;
  std::string difference_text;
  Vec embedding;  // unit norm; empty until encoded
};

// For each selected pair, updates whichever directional corrections are
// available in diffs (both when both are). The result is marked
// comparative-updated; prompt texts are unchanged.
PromptBank apply_comparative_prompts(
    const PromptBank& bank, const std::vector<ClassDifference>& diffs,
    const std::vector<std::pair<std::size_t, std::size_t>>& pairs,
    double alpha);

// Prompt bank file: JSONL of {class, prompt, kind}. Standard and extended
// banks are re-encoded on load; comparative-updated banks carry an
// additional "embedding" field because their vectors are not derivable
// from text alone.
std::string prompt_bank_jsonl(const PromptBank& bank);
void write_prompt_bank(const PromptBank& bank,
                       const std::filesystem::path& path);
PromptBank read_prompt_bank(const std::filesystem::path& path,
                            const TextEncoderFn& encoder);

// Class-difference file: JSONL of {class_b, class_a, difference_text}.
std::string class_differences_jsonl(const std::vector<ClassDifference>& diffs);
void write_class_differences(const std::vector<ClassDifference>& diffs,
                             const std::filesystem::path& path);
std::vector<ClassDifference> read_class_differences(
    const std::filesystem::path& path, const TextEncoderFn& encoder);

}  // namespace pdalign
