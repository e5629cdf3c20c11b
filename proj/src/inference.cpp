#include "pdalign/inference.hpp"

#include <algorithm>
#include <nlohmann/json.hpp>

#include "pdalign/errors.hpp"
#include "pdalign/io_util.hpp"

namespace pdalign {

BankKind bank_kind_from_string(const std::string& s) {
  if (s == "standard") return BankKind::Standard;
  if (s == "extended") return BankKind::Extended;
  if (s == "comparative-updated") return BankKind::ComparativeUpdated;
  throw ConfigError("unknown bank kind: " + s);
}

std::string to_string(BankKind kind) {
  switch (kind) {
    case BankKind::Standard:
      return "standard";
    case BankKind::Extended:
      return "extended";
    case BankKind::ComparativeUpdated:
      return "comparative-updated";
  }
  throw Error("bad bank kind");
}

std::optional<std::size_t> PromptBank::find(
    const std::string& class_name) const {
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].class_name == class_name) return i;
  }
  return std::nullopt;
}

PromptBank make_prompt_bank(
    BankKind kind,
    const std::vector<std::pair<std::string, std::string>>& class_prompts,
    const TextEncoderFn& encoder) {
  PromptBank bank;
  bank.kind = kind;
  bank.entries.reserve(class_prompts.size());
  for (const auto& [name, prompt] : class_prompts) {
    if (bank.find(name)) throw DataError("duplicate class in bank: " + name);
    bank.entries.push_back({name, prompt, normalize(encoder(prompt))});
  }
  return bank;
}

std::string to_string(PairSide side) {
  return side == PairSide::First ? "first" : "second";
}

Classification zeroshot_classify(const Vec& image, const PromptBank& bank) {
  if (bank.entries.empty()) throw ConfigError("empty prompt bank");
  Classification out;
  out.scores.reserve(bank.entries.size());
  for (const auto& entry : bank.entries) {
    out.scores.push_back(cosine_similarity(image, entry.embedding));
  }
  // Strict > keeps the lowest index on ties.
  std::size_t best = 0;
  for (std::size_t i = 1; i < out.scores.size(); ++i) {
    if (out.scores[i] > out.scores[best]) best = i;
  }
  out.index = best;
  out.class_name = bank.entries[best].class_name;
  return out;
}

PairSide diff_classify(const Vec& g_i, const Vec& g_j, const Vec& f_diff) {
  const Vec diff = subtract(g_i, g_j);
  return dot(diff, f_diff) >= 0.0 ? PairSide::First : PairSide::Second;
}

Vec comparative_prompt(const Vec& f_a, const Vec& f_b, const Vec& f_bma,
                       double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw ConfigError("alpha must be in [0, 1]");
  }
  require_same_dim(f_a, f_b);
  require_same_dim(f_a, f_bma);
  Vec out(f_a.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = alpha * f_a[i] + (1.0 - alpha) * (f_b[i] - f_bma[i]);
  }
  return normalize(out);
}

std::vector<std::pair<std::size_t, std::size_t>> select_confused_pairs(
    const ConfusionMatrix& confusion, std::size_t k) {
  if (k == 0) throw ConfigError("k must be >= 1");
  const std::size_t n = confusion.classes();
  if (n < 2) throw ConfigError("need at least 2 classes");

  struct Scored {
    std::uint64_t score;
    std::size_t a, b;
  };
  std::vector<Scored> scored;
  scored.reserve(n * (n - 1) / 2);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      scored.push_back({confusion.at(a, b) + confusion.at(b, a), a, b});
    }
  }
  std::sort(scored.begin(), scored.end(), [](const Scored& l, const Scored& r) {
    if (l.score != r.score) return l.score > r.score;
    if (l.a != r.a) return l.a < r.a;
    return l.b < r.b;
  });

  std::vector<std::pair<std::size_t, std::size_t>> out;
  const std::size_t take = std::min(k, scored.size());
  out.reserve(take);
  for (std::size_t i = 0; i < take; ++i) {
    out.emplace_back(scored[i].a, scored[i].b);
  }
  return out;
}

PromptBank apply_comparative_prompts(
    const PromptBank& bank, const std::vector<ClassDifference>& diffs,
    const std::vector<std::pair<std::size_t, std::size_t>>& pairs,
    double alpha) {
  const auto find_diff = [&](const std::string& b,
                             const std::string& a) -> const ClassDifference* {
    for (const auto& d : diffs) {
      if (d.class_b == b && d.class_a == a) return &d;
    }
    return nullptr;
  };

  PromptBank out = bank;
  out.kind = BankKind::ComparativeUpdated;
  for (const auto& [ia, ib] : pairs) {
    if (ia >= bank.entries.size() || ib >= bank.entries.size()) {
      throw DataError("confused pair index out of range");
    }
    const auto& name_a = bank.entries[ia].class_name;
    const auto& name_b = bank.entries[ib].class_name;
    // f_a' needs the difference of B relative to A; f_b' the reverse.
    if (const auto* d = find_diff(name_b, name_a)) {
      out.entries[ia].embedding =
          comparative_prompt(bank.entries[ia].embedding,
                             bank.entries[ib].embedding, d->embedding, alpha);
    }
    if (const auto* d = find_diff(name_a, name_b)) {
      out.entries[ib].embedding =
          comparative_prompt(bank.entries[ib].embedding,
                             bank.entries[ia].embedding, d->embedding, alpha);
    }
  }
  return out;
}

std::string prompt_bank_jsonl(const PromptBank& bank) {
  std::string out;
  for (const auto& entry : bank.entries) {
    nlohmann::json j;
    j["class"] = entry.class_name;
    j["prompt"] = entry.prompt;
    j["kind"] = to_string(bank.kind);
    if (bank.kind == BankKind::ComparativeUpdated) {
      j["embedding"] = entry.embedding;
    }
    out += j.dump();
    out += '\n';
  }
  return out;
}

void write_prompt_bank(const PromptBank& bank,
                       const std::filesystem::path& path) {
  write_file_atomic(path, prompt_bank_jsonl(bank));
}

PromptBank read_prompt_bank(const std::filesystem::path& path,
                            const TextEncoderFn& encoder) {
  const std::string bytes = read_file(path);
  PromptBank bank;
  bool first = true;
  std::size_t start = 0;
  std::size_t line_no = 0;
  while (start < bytes.size()) {
    std::size_t end = bytes.find('\n', start);
    if (end == std::string::npos) end = bytes.size();
    ++line_no;
    const std::string_view line(bytes.data() + start, end - start);
    start = end + 1;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      const auto kind = bank_kind_from_string(j.at("kind").get<std::string>());
      if (first) {
        bank.kind = kind;
        first = false;
      } else if (kind != bank.kind) {
        throw FormatError("mixed bank kinds in one file");
      }
      PromptEntry entry;
      entry.class_name = j.at("class").get<std::string>();
      entry.prompt = j.at("prompt").get<std::string>();
      if (j.contains("embedding")) {
        entry.embedding = j.at("embedding").get<Vec>();
        entry.embedding = normalize(entry.embedding);
      } else {
        entry.embedding = normalize(encoder(entry.prompt));
      }
      if (bank.find(entry.class_name)) {
        throw FormatError("duplicate class in bank: " + entry.class_name);
      }
      bank.entries.push_back(std::move(entry));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("bank line " + std::to_string(line_no) + ": " +
                        e.what());
    }
  }
  return bank;
}

std::string class_differences_jsonl(
    const std::vector<ClassDifference>& diffs) {
  std::string out;
  for (const auto& d : diffs) {
    nlohmann::json j;
    j["class_b"] = d.class_b;
    j["class_a"] = d.class_a;
    j["difference_text"] = d.difference_text;
    out += j.dump();
    out += '\n';
  }
  return out;
}

void write_class_differences(const std::vector<ClassDifference>& diffs,
                             const std::filesystem::path& path) {
  write_file_atomic(path, class_differences_jsonl(diffs));
}

std::vector<ClassDifference> read_class_differences(
    const std::filesystem::path& path, const TextEncoderFn& encoder) {
  const std::string bytes = read_file(path);
  std::vector<ClassDifference> out;
  std::size_t start = 0;
  std::size_t line_no = 0;
  while (start < bytes.size()) {
    std::size_t end = bytes.find('\n', start);
    if (end == std::string::npos) end = bytes.size();
    ++line_no;
    const std::string_view line(bytes.data() + start, end - start);
    start = end + 1;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      ClassDifference d;
      d.class_b = j.at("class_b").get<std::string>();
      d.class_a = j.at("class_a").get<std::string>();
      d.difference_text = j.at("difference_text").get<std::string>();
      d.embedding = normalize(encoder(d.difference_text));
      out.push_back(std::move(d));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("class differences line " + std::to_string(line_no) +
                        ": " + e.what());
    }
  }
  return out;
}

}  // namespace pdalign
