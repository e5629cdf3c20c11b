#include "pdalign/comparisons.hpp"

#include <atomic>
#include <mutex>
#include <nlohmann/json.hpp>
#include <thread>

#include "pdalign/errors.hpp"
#include "pdalign/generation_client.hpp"
#include "pdalign/io_util.hpp"
#include "pdalign/rng.hpp"

namespace pdalign {

namespace {

// U+201C / U+201D, the quote characters used around captions in the
// few-shot prompts.
constexpr const char* kLq = "“";
constexpr const char* kRq = "”";

std::string coco_question(const std::string& a, const std::string& b) {
  return std::string("Q: What is the visual difference between an image "
                     "captioned with ") +
         kLq + a + kRq + " and an image captioned with " + kLq + b + kRq +
         "?\nA:";
}

std::string cub_question(const std::string& a, const std::string& b) {
  return std::string("Q: What is the visual difference between an image "
                     "with a description of ") +
         kLq + a + kRq + " and an image with a description of " + kLq + b +
         kRq + "?\nA:";
}

std::string trim(const std::string& s) {
  const char* ws = " \t\n\r\f\v";
  const auto first = s.find_first_not_of(ws);
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(ws);
  return s.substr(first, last - first + 1);
}

}  // namespace

PromptStyle prompt_style_from_string(const std::string& s) {
  if (s == "coco") return PromptStyle::Coco;
  if (s == "cub") return PromptStyle::Cub;
  throw ConfigError("unknown prompt style: " + s);
}

std::string to_string(PromptStyle style) {
  return style == PromptStyle::Coco ? "coco" : "cub";
}

std::string to_string(const FilterStatus& status) {
  switch (status.state) {
    case FilterState::Accepted:
      return "accepted";
    case FilterState::Truncated:
      return "truncated(" + status.detail + ")";
    case FilterState::Rejected:
      return "rejected(" + status.detail + ")";
  }
  throw Error("bad filter state");
}

FilterStatus filter_status_from_string(const std::string& s) {
  if (s == "accepted") return {FilterState::Accepted, ""};
  for (const auto& [prefix, state] :
       {std::pair{std::string("truncated("), FilterState::Truncated},
        std::pair{std::string("rejected("), FilterState::Rejected}}) {
    if (s.rfind(prefix, 0) == 0 && s.back() == ')') {
      return {state, s.substr(prefix.size(), s.size() - prefix.size() - 1)};
    }
  }
  throw FormatError("bad filter status: " + s);
}

FilterStatus FilterResult::status() const {
  if (!accepted) return {FilterState::Rejected, reason};
  if (!rule.empty()) return {FilterState::Truncated, rule};
  return {FilterState::Accepted, ""};
}

FilterResult filter_generation(const std::string& raw) {
  FilterResult result;
  if (raw.find("#include") != std::string::npos) {
    result.reason = "contains-include";
    return result;
  }
  if (raw.find("#define") != std::string::npos) {
    result.reason = "contains-define";
    return result;
  }
  if (raw.find("\n\n\n\n\n\n\n\n") != std::string::npos) {
    result.reason = "repeated-newlines";
    return result;
  }

  std::string text = raw;
  for (;;) {
    const auto q = text.find("Q:");
    const auto note = text.find("Note:");
    if (q == std::string::npos && note == std::string::npos) break;
    // Earliest marker wins, then re-check the remaining prefix.
    if (note == std::string::npos || (q != std::string::npos && q < note)) {
      text.erase(q);
      if (result.rule.empty()) result.rule = "q-marker";
    } else {
      text.erase(note);
      if (result.rule.empty()) result.rule = "note-marker";
    }
  }
  text = trim(text);
  if (text.empty()) {
    result.rule.clear();
    result.reason = "empty-after-clean";
    return result;
  }
  result.accepted = true;
  result.text = text;
  return result;
}

std::string filter_generation_clean(const std::string& raw) {
  const auto result = filter_generation(raw);
  if (!result.accepted) {
    throw DataError("generation rejected: " + result.reason);
  }
  return result.text;
}

std::vector<IdPair> sample_pairs(const std::vector<std::string>& ids,
                                 std::size_t n_source, std::uint64_t seed) {
  if (n_source > ids.size()) {
    throw ConfigError("n_source " + std::to_string(n_source) +
                      " exceeds available ids " + std::to_string(ids.size()));
  }
  DetRng rng(seed);
  std::vector<std::size_t> indices(ids.size());
  for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = i;
  // Partial Fisher-Yates: the first n_source slots are a uniform sample
  // without replacement.
  for (std::size_t i = 0; i < n_source; ++i) {
    const std::size_t j = i + rng.next_below(indices.size() - i);
    std::swap(indices[i], indices[j]);
  }

  std::vector<IdPair> pairs;
  pairs.reserve(n_source * (n_source > 0 ? n_source - 1 : 0));
  for (std::size_t i = 0; i < n_source; ++i) {
    for (std::size_t j = 0; j < n_source; ++j) {
      if (i == j) continue;
      pairs.emplace_back(ids[indices[i]], ids[indices[j]]);
    }
  }
  return pairs;
}

std::string build_prompt(PromptStyle style, const std::string& caption_a,
                         const std::string& caption_b) {
  if (caption_a.empty() || caption_b.empty()) {
    throw DataError("captions must be nonempty");
  }
  if (style == PromptStyle::Coco) {
    return coco_question("a photo of a black, small cat",
                         "a photo of a large, white dog") +
           " The cat is smaller and is the color black, while the dog is "
           "larger and is white.\n" +
           coco_question("a photo of a large, white dog",
                         "a photo of a black, small cat") +
           " The dog is larger and is the color white, while the cat is "
           "smaller and black.\n" +
           coco_question("a photo of a house", "a photo of an airport") +
           " The house contains furniture and homely decorations, while the "
           "airport is much larger and a public space.\n" +
           coco_question("a photo of an airport", "a photo of a house") +
           " The airport contains travelers and airplanes and is a public "
           "space, while the house is smaller and is a private space.\n" +
           coco_question(caption_a, caption_b);
  }
  return cub_question("a grey bird with small wings and a yellow beak",
                      "a blue bird with large wings and a brown beak") +
         " Difference in color and size of the wings. One is grey and has "
         "small wings and a yellow beak, while the other is blue and has "
         "large wings and a brown beak.\n" +
         cub_question("a brown bird with an orange beak",
                      " a black bird with yellow beak") +
         " The color of the body and the beaks. One has a brown body and "
         "orange beak, while the other is black with a yellow beak.\n" +
         cub_question(caption_a, caption_b);
}

std::vector<ComparisonRecord> generate_dataset(
    GenerationClient& client, const std::vector<IdPair>& pairs,
    const CaptionMap& captions, const GenerateOptions& options) {
  if (pairs.empty()) throw ConfigError("no pairs to generate");

  const auto caption_of = [&](const std::string& id) -> const std::string& {
    const auto it = captions.find(id);
    if (it == captions.end()) throw DataError("no caption for id: " + id);
    if (it->second.empty()) throw DataError("empty caption for id: " + id);
    return it->second;
  };
  // Validate before spending any requests.
  for (const auto& [a, b] : pairs) {
    caption_of(a);
    caption_of(b);
  }

  std::vector<GenerationResult> raw(pairs.size());
  const auto fetch = [&](std::size_t k) {
    const std::string prompt = build_prompt(
        options.style, caption_of(pairs[k].first), caption_of(pairs[k].second));
    raw[k] = client.complete(prompt, options.max_tokens);
  };

  const unsigned workers =
      std::min<std::size_t>(std::max(1u, options.max_inflight), pairs.size());
  if (workers <= 1) {
    for (std::size_t k = 0; k < pairs.size(); ++k) fetch(k);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        try {
          for (;;) {
            const std::size_t k = next.fetch_add(1);
            if (k >= pairs.size()) return;
            fetch(k);
          }
        } catch (...) {
          const std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
  }

  // Post-processing is sequential in input order, so record order never
  // depends on completion arrival order.
  std::vector<ComparisonRecord> records;
  records.reserve(pairs.size());
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    ComparisonRecord rec;
    rec.id_a = pairs[k].first;
    rec.id_b = pairs[k].second;
    rec.caption_a = caption_of(rec.id_a);
    rec.caption_b = caption_of(rec.id_b);
    rec.source = "llm";
    if (!raw[k].ok) {
      rec.filter_status = {FilterState::Rejected, "transport"};
    } else {
      const auto filtered = filter_generation(raw[k].text);
      rec.filter_status = filtered.status();
      if (filtered.accepted) rec.difference_text = filtered.text;
    }
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<ComparisonRecord> generate_dataset_oracle(
    const std::vector<WorldItemRecord>& items,
    const std::vector<IdPair>& pairs) {
  if (pairs.empty()) throw ConfigError("no pairs to generate");
  std::unordered_map<std::string, const WorldItemRecord*> by_id;
  by_id.reserve(items.size());
  for (const auto& item : items) by_id[item.id] = &item;
  const auto lookup = [&](const std::string& id) -> const WorldItemRecord& {
    const auto it = by_id.find(id);
    if (it == by_id.end()) throw DataError("unknown item id: " + id);
    return *it->second;
  };

  std::vector<ComparisonRecord> records;
  records.reserve(pairs.size());
  for (const auto& [ida, idb] : pairs) {
    const auto& a = lookup(ida);
    const auto& b = lookup(idb);
    ComparisonRecord rec;
    rec.id_a = ida;
    rec.id_b = idb;
    rec.caption_a = a.caption;
    rec.caption_b = b.caption;
    rec.source = "synthetic";
    const auto filtered =
        filter_generation(oracle_difference_attrs(a.attributes, b.attributes));
    rec.filter_status = filtered.status();
    if (filtered.accepted) rec.difference_text = filtered.text;
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<ComparisonRecord> generate_dataset_oracle(
    const ToyWorld& world, const std::vector<IdPair>& pairs) {
  std::vector<WorldItemRecord> items;
  items.reserve(world.items().size());
  for (const auto& item : world.items()) {
    items.push_back(
        {item.id, attribute_names(item.attributes), item.caption});
  }
  return generate_dataset_oracle(items, pairs);
}

std::string records_jsonl(const std::vector<ComparisonRecord>& records,
                          bool accepted_only) {
  std::string out;
  for (const auto& rec : records) {
    if (accepted_only && !rec.filter_status.usable()) continue;
    nlohmann::json j;
    j["id_a"] = rec.id_a;
    j["id_b"] = rec.id_b;
    j["caption_a"] = rec.caption_a;
    j["caption_b"] = rec.caption_b;
    j["difference_text"] = rec.difference_text;
    j["source"] = rec.source;
    j["filter_status"] = to_string(rec.filter_status);
    out += j.dump();
    out += '\n';
  }
  return out;
}

void write_records(const std::vector<ComparisonRecord>& records,
                   const std::filesystem::path& path, bool accepted_only) {
  write_file_atomic(path, records_jsonl(records, accepted_only));
}

std::vector<ComparisonRecord> read_records(
    const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  std::vector<ComparisonRecord> out;
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
      ComparisonRecord rec;
      rec.id_a = j.at("id_a").get<std::string>();
      rec.id_b = j.at("id_b").get<std::string>();
      rec.caption_a = j.at("caption_a").get<std::string>();
      rec.caption_b = j.at("caption_b").get<std::string>();
      rec.difference_text = j.at("difference_text").get<std::string>();
      rec.source = j.at("source").get<std::string>();
      rec.filter_status =
          filter_status_from_string(j.at("filter_status").get<std::string>());
      if (rec.filter_status.usable() && rec.difference_text.empty()) {
        throw FormatError("accepted record with empty difference_text");
      }
      out.push_back(std::move(rec));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("records line " + std::to_string(line_no) + ": " +
                        e.what());
    }
  }
  return out;
}

}  // namespace pdalign
