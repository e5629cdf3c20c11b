#include "pdalign/evaluate.hpp"

#include <cmath>
#include <nlohmann/json.hpp>
#include <sstream>

#include "pdalign/errors.hpp"
#include "pdalign/io_util.hpp"
#include "pdalign/rng.hpp"
#include "pdalign/toyworld.hpp"

namespace pdalign {

namespace {

// Emits (i, j, text-for-one-direction, gold). The text truthfully
// describes either (i, j) or (j, i); gold records which.
TaskPair make_pair(DetRng& rng, const std::string& id_one,
                   const std::string& id_two,
                   const std::function<std::string(bool)>& text_for_forward) {
  TaskPair pair;
  const bool swap_items = rng.next_coin();
  pair.id_i = swap_items ? id_two : id_one;
  pair.id_j = swap_items ? id_one : id_two;
  // forward = text describes (id_i, id_j) as presented.
  const bool forward = rng.next_coin();
  pair.gold = forward ? PairSide::First : PairSide::Second;
  pair.difference_text = text_for_forward(forward != swap_items);
  return pair;
}

}  // namespace

TaskStyle task_style_from_string(const std::string& s) {
  if (s == "attribute") return TaskStyle::Attribute;
  if (s == "size") return TaskStyle::Size;
  if (s == "color") return TaskStyle::Color;
  if (s == "llm") return TaskStyle::Llm;
  throw ConfigError("unknown task style: " + s);
}

std::string to_string(TaskStyle style) {
  switch (style) {
    case TaskStyle::Attribute:
      return "attribute";
    case TaskStyle::Size:
      return "size";
    case TaskStyle::Color:
      return "color";
    case TaskStyle::Llm:
      return "llm";
  }
  throw Error("bad task style");
}

DifferenceTask build_attribute_task(const std::vector<AttrItem>& items,
                                    std::size_t n_pairs, std::uint64_t seed,
                                    const std::set<std::string>& excluded) {
  if (items.size() < 2) throw ConfigError("need at least 2 items");
  // Exclusion applies per slot comparison: a slot where either value is
  // excluded contributes nothing to the rendered difference.
  const auto difference = [&](const std::vector<std::string>& a,
                              const std::vector<std::string>& b) {
    if (a.size() != b.size()) {
      throw DataError("attribute slot count mismatch");
    }
    std::vector<std::string> first, second;
    for (std::size_t s = 0; s < a.size(); ++s) {
      if (a[s] == b[s]) continue;
      if (excluded.count(a[s]) || excluded.count(b[s])) continue;
      first.push_back(a[s]);
      second.push_back(b[s]);
    }
    return std::pair{first, second};
  };

  DetRng rng(seed);
  DifferenceTask task;
  task.style = TaskStyle::Attribute;
  task.pairs.reserve(n_pairs);
  const std::size_t max_draws = 64 * std::max<std::size_t>(n_pairs, 1);
  std::size_t draws = 0;
  while (task.pairs.size() < n_pairs) {
    if (++draws > max_draws) {
      throw ConfigError("could not sample differing attribute pairs");
    }
    const std::size_t a = rng.next_below(items.size());
    std::size_t b = rng.next_below(items.size() - 1);
    if (b >= a) ++b;
    const auto [first, second] =
        difference(items[a].attributes, items[b].attributes);
    if (first.empty()) continue;
    task.pairs.push_back(make_pair(
        rng, items[a].id, items[b].id, [&](bool one_first) {
          return one_first ? oracle_difference_attrs(first, second)
                           : oracle_difference_attrs(second, first);
        }));
  }
  return task;
}

namespace {

DifferenceTask build_group_task(
    TaskStyle style, const std::vector<std::string>& first_group,
    const std::vector<std::string>& second_group, std::size_t n_pairs,
    std::uint64_t seed, const std::string& text_first_from_group_one,
    const std::string& text_first_from_group_two) {
  if (first_group.empty() || second_group.empty()) {
    throw ConfigError("both groups must be nonempty");
  }
  DetRng rng(seed);
  DifferenceTask task;
  task.style = style;
  task.pairs.reserve(n_pairs);
  for (std::size_t p = 0; p < n_pairs; ++p) {
    const auto& one = first_group[rng.next_below(first_group.size())];
    const auto& two = second_group[rng.next_below(second_group.size())];
    task.pairs.push_back(
        make_pair(rng, one, two, [&](bool one_first) -> std::string {
          return one_first ? text_first_from_group_one
                           : text_first_from_group_two;
        }));
  }
  return task;
}

}  // namespace

DifferenceTask build_size_task(const std::vector<std::string>& larger_ids,
                               const std::vector<std::string>& smaller_ids,
                               std::size_t n_pairs, std::uint64_t seed) {
  return build_group_task(
      TaskStyle::Size, larger_ids, smaller_ids, n_pairs, seed,
      "The first image contains a larger animal, while the second contains "
      "a smaller animal",
      "The first image contains a smaller animal, while the second contains "
      "a larger animal");
}

DifferenceTask build_color_task(const std::string& color_first,
                                const std::vector<std::string>& first_ids,
                                const std::string& color_second,
                                const std::vector<std::string>& second_ids,
                                std::size_t n_pairs, std::uint64_t seed) {
  return build_group_task(
      TaskStyle::Color, first_ids, second_ids, n_pairs, seed,
      "The first flower is " + color_first + ", while the second is " +
          color_second,
      "The first flower is " + color_second + ", while the second is " +
          color_first);
}

DifferenceTask build_llm_task(const std::vector<ComparisonRecord>& records,
                              std::size_t n_pairs, std::uint64_t seed) {
  std::vector<const ComparisonRecord*> usable;
  for (const auto& rec : records) {
    if (rec.filter_status.usable()) usable.push_back(&rec);
  }
  if (usable.empty()) throw ConfigError("no usable records for llm task");

  DetRng rng(seed);
  DifferenceTask task;
  task.style = TaskStyle::Llm;
  task.pairs.reserve(n_pairs);
  for (std::size_t p = 0; p < n_pairs; ++p) {
    const auto& rec = *usable[rng.next_below(usable.size())];
    TaskPair pair;
    // The record text describes (id_a, id_b); flip presentation at random.
    const bool swap_items = rng.next_coin();
    pair.id_i = swap_items ? rec.id_b : rec.id_a;
    pair.id_j = swap_items ? rec.id_a : rec.id_b;
    pair.gold = swap_items ? PairSide::Second : PairSide::First;
    pair.difference_text = rec.difference_text;
    task.pairs.push_back(std::move(pair));
  }
  return task;
}

DifferenceEvalResult eval_difference(const DifferenceTask& task,
                                     const EmbeddingTable& images,
                                     const TextEncoderFn& encoder) {
  DifferenceEvalResult result;
  result.predictions.reserve(task.pairs.size());
  std::size_t correct = 0;
  for (const auto& pair : task.pairs) {
    const Vec g_i = images.vec_for(pair.id_i);
    const Vec g_j = images.vec_for(pair.id_j);
    const Vec f = encoder(pair.difference_text);
    const PairSide pred = diff_classify(g_i, g_j, f);
    result.predictions.push_back(pred);
    if (pred == pair.gold) ++correct;
  }
  result.accuracy =
      task.pairs.empty() ? 0.0 : double(correct) / double(task.pairs.size());
  return result;
}

std::vector<LocalizationRow> localization_report(
    const PromptBank& bank, const std::vector<ClassDifference>& diffs) {
  std::vector<LocalizationRow> rows;
  rows.reserve(diffs.size());
  for (const auto& d : diffs) {
    const auto ib = bank.find(d.class_b);
    const auto ia = bank.find(d.class_a);
    if (!ib || !ia) {
      throw DataError("class missing from bank: " +
                      (ib ? d.class_a : d.class_b));
    }
    const Vec fwd = subtract(bank.entries[*ib].embedding,
                             bank.entries[*ia].embedding);
    LocalizationRow row;
    row.class_b = d.class_b;
    row.class_a = d.class_a;
    row.d_fwd = cosine_distance(fwd, d.embedding);
    row.d_rev = cosine_distance(scale(fwd, -1.0), d.embedding);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::pair<double, double> accuracy_mean_stderr(
    const std::vector<double>& per_seed) {
  if (per_seed.empty()) throw ConfigError("no values to aggregate");
  double mean = 0.0;
  for (double v : per_seed) mean += v;
  mean /= double(per_seed.size());
  if (per_seed.size() == 1) return {mean, 0.0};
  double ss = 0.0;
  for (double v : per_seed) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / double(per_seed.size() - 1));
  return {mean, sd / std::sqrt(double(per_seed.size()))};
}

std::string EvalReport::to_json() const {
  nlohmann::json j;
  j["task"] = task;
  j["per_seed"] = per_seed;
  j["mean"] = mean;
  j["stderr"] = stderr_mean;
  if (!classes.empty()) {
    j["classes"] = classes;
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < confusion.classes(); ++i) {
      nlohmann::json row = nlohmann::json::array();
      for (std::size_t k = 0; k < confusion.classes(); ++k) {
        row.push_back(confusion.at(i, k));
      }
      rows.push_back(row);
    }
    j["confusion"] = rows;
  }
  if (!localization.empty()) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : localization) {
      rows.push_back({{"class_b", row.class_b},
                      {"class_a", row.class_a},
                      {"d_fwd", row.d_fwd},
                      {"d_rev", row.d_rev}});
    }
    j["localization"] = rows;
    j["mean_d_fwd"] = mean_d_fwd;
    j["mean_d_rev"] = mean_d_rev;
  }
  return j.dump(2) + "\n";
}

EvalReport EvalReport::from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    EvalReport report;
    report.task = j.at("task").get<std::string>();
    report.per_seed = j.at("per_seed").get<std::vector<double>>();
    report.mean = j.at("mean").get<double>();
    report.stderr_mean = j.at("stderr").get<double>();
    if (j.contains("classes")) {
      report.classes = j.at("classes").get<std::vector<std::string>>();
      report.confusion = ConfusionMatrix(report.classes.size());
      const auto& rows = j.at("confusion");
      for (std::size_t i = 0; i < report.classes.size(); ++i) {
        for (std::size_t k = 0; k < report.classes.size(); ++k) {
          report.confusion.at(i, k) = rows.at(i).at(k).get<std::uint64_t>();
        }
      }
    }
    if (j.contains("localization")) {
      for (const auto& row : j.at("localization")) {
        report.localization.push_back({row.at("class_b").get<std::string>(),
                                       row.at("class_a").get<std::string>(),
                                       row.at("d_fwd").get<double>(),
                                       row.at("d_rev").get<double>()});
      }
      report.mean_d_fwd = j.at("mean_d_fwd").get<double>();
      report.mean_d_rev = j.at("mean_d_rev").get<double>();
    }
    return report;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad report json: ") + e.what());
  }
}

void write_report(const EvalReport& report,
                  const std::filesystem::path& path) {
  write_file_atomic(path, report.to_json());
}

EvalReport read_report(const std::filesystem::path& path) {
  return EvalReport::from_json(read_file(path));
}

std::string render_report_table(const EvalReport& report) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(2);
  out << report.task << "\n";
  if (!report.per_seed.empty()) {
    out << "  accuracy: " << 100.0 * report.mean << " +/- "
        << 100.0 * report.stderr_mean << "  (" << report.per_seed.size()
        << " seeds)\n";
  }
  if (!report.localization.empty()) {
    out << "  pair                                comparison  reverse\n";
    for (const auto& row : report.localization) {
      std::string name = row.class_b + " vs " + row.class_a;
      if (name.size() < 36) name.resize(36, ' ');
      out << "  " << name << row.d_fwd << "        " << row.d_rev << "\n";
    }
    out << "  mean                                " << report.mean_d_fwd
        << "        " << report.mean_d_rev << "\n";
  }
  return out.str();
}

EvalReport run_difference_eval(
    const std::function<DifferenceTask(std::uint64_t)>& build,
    const EmbeddingTable& images, const TextEncoderFn& encoder,
    std::size_t n_seeds, std::uint64_t seed_base, const std::string& label) {
  if (n_seeds == 0) throw ConfigError("need at least one seed");
  EvalReport report;
  report.task = label;
  report.per_seed.reserve(n_seeds);
  for (std::size_t s = 0; s < n_seeds; ++s) {
    const auto task = build(seed_base + s);
    report.per_seed.push_back(eval_difference(task, images, encoder).accuracy);
  }
  const auto [mean, se] = accuracy_mean_stderr(report.per_seed);
  report.mean = mean;
  report.stderr_mean = se;
  return report;
}

ZeroshotEvalResult eval_zeroshot(
    const std::vector<std::pair<std::string, std::string>>& labeled,
    const EmbeddingTable& images, const PromptBank& bank) {
  ZeroshotEvalResult result;
  result.confusion = ConfusionMatrix(bank.entries.size());
  std::size_t correct = 0;
  for (const auto& [id, label] : labeled) {
    const auto truth = bank.find(label);
    if (!truth) throw DataError("label not in bank: " + label);
    const auto pred = zeroshot_classify(images.vec_for(id), bank);
    result.confusion.at(*truth, pred.index) += 1;
    if (pred.index == *truth) ++correct;
  }
  result.accuracy =
      labeled.empty() ? 0.0 : double(correct) / double(labeled.size());
  return result;
}

}  // namespace pdalign
