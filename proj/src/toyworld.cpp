#include "pdalign/toyworld.hpp"

#include <nlohmann/json.hpp>

#include "pdalign/errors.hpp"
#include "pdalign/io_util.hpp"
#include "pdalign/rng.hpp"

namespace pdalign {

namespace {

constexpr std::array<const char*, 12> kKindNames = {
    "cat",    "dog",  "bird", "fish", "horse", "sheep",
    "rabbit", "frog", "deer", "fox",  "owl",   "bear"};

std::size_t feature_count(std::uint32_t n_kinds) {
  return kSizeNames.size() + kColorNames.size() + n_kinds;
}

}  // namespace

std::string kind_name(std::uint32_t kind_index) {
  if (kind_index < kKindNames.size()) return kKindNames[kind_index];
  return "species-" + std::to_string(kind_index);
}

ToyWorld::ToyWorld(ToyWorldConfig config, std::vector<ToyItem> items,
                   std::vector<Vec> mixing_columns)
    : config_(config),
      items_(std::move(items)),
      mixing_columns_(std::move(mixing_columns)) {}

const ToyItem& ToyWorld::item_for(const std::string& id) const {
  for (const auto& item : items_) {
    if (item.id == id) return item;
  }
  throw DataError("unknown item id: " + id);
}

EmbeddingTable ToyWorld::image_table() const {
  std::vector<std::string> ids;
  std::vector<float> data;
  ids.reserve(items_.size());
  data.reserve(items_.size() * config_.dim);
  for (const auto& item : items_) {
    ids.push_back(item.id);
    for (double x : item.image_embedding) {
      data.push_back(static_cast<float>(x));
    }
  }
  return EmbeddingTable(std::move(ids), std::move(data), config_.dim, true);
}

std::size_t ToyWorld::feature_index(std::size_t slot,
                                    std::uint32_t value) const {
  switch (slot) {
    case 0:
      return value;
    case 1:
      return kSizeNames.size() + value;
    case 2:
      return kSizeNames.size() + kColorNames.size() + value;
    default:
      throw DataError("bad slot index");
  }
}

Vec ToyWorld::attribute_embedding(
    const std::array<std::uint32_t, 3>& attrs) const {
  Vec acc(config_.dim, 0.0);
  for (std::size_t slot = 0; slot < kSlotCount; ++slot) {
    const Vec& col = mixing_columns_[feature_index(slot, attrs[slot])];
    for (std::uint32_t d = 0; d < config_.dim; ++d) acc[d] += col[d];
  }
  return normalize(acc);
}

Vec ToyWorld::attribute_direction(const std::array<std::uint32_t, 3>& a,
                                  const std::array<std::uint32_t, 3>& b) const {
  Vec acc(config_.dim, 0.0);
  for (std::size_t slot = 0; slot < kSlotCount; ++slot) {
    if (a[slot] == b[slot]) continue;
    const Vec& ca = mixing_columns_[feature_index(slot, a[slot])];
    const Vec& cb = mixing_columns_[feature_index(slot, b[slot])];
    for (std::uint32_t d = 0; d < config_.dim; ++d) {
      acc[d] += ca[d] - cb[d];
    }
  }
  return acc;
}

std::vector<std::string> ToyWorld::kind_names() const {
  std::vector<std::string> out;
  out.reserve(config_.n_kinds);
  for (std::uint32_t k = 0; k < config_.n_kinds; ++k) {
    out.push_back(kind_name(k));
  }
  return out;
}

std::size_t ToyWorld::feature_for_name(const std::string& name) const {
  for (std::size_t v = 0; v < kSizeNames.size(); ++v) {
    if (name == kSizeNames[v]) return feature_index(0, v);
  }
  for (std::size_t v = 0; v < kColorNames.size(); ++v) {
    if (name == kColorNames[v]) return feature_index(1, v);
  }
  for (std::uint32_t v = 0; v < config_.n_kinds; ++v) {
    if (name == kind_name(v)) return feature_index(2, v);
  }
  throw DataError("unknown attribute value: " + name);
}

Vec ToyWorld::oracle_encode_text(const std::string& text) const {
  const std::string prefix = "The first image has attributes of ";
  const std::string sep = ", while the second image has attributes of ";

  const auto split_list = [](const std::string& s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start < s.size()) {
      std::size_t end = s.find(", ", start);
      if (end == std::string::npos) end = s.size();
      out.push_back(s.substr(start, end - start));
      start = end + 2;
    }
    return out;
  };

  if (text.rfind(prefix, 0) == 0) {
    const auto sep_pos = text.find(sep, prefix.size());
    if (sep_pos == std::string::npos) {
      throw DataError("malformed difference text: " + text);
    }
    Vec acc(config_.dim, 0.0);
    for (const auto& name :
         split_list(text.substr(prefix.size(), sep_pos - prefix.size()))) {
      const Vec& col = mixing_columns_[feature_for_name(name)];
      for (std::uint32_t d = 0; d < config_.dim; ++d) acc[d] += col[d];
    }
    for (const auto& name : split_list(text.substr(sep_pos + sep.size()))) {
      const Vec& col = mixing_columns_[feature_for_name(name)];
      for (std::uint32_t d = 0; d < config_.dim; ++d) acc[d] -= col[d];
    }
    return normalize(acc);
  }

  const std::string caption_prefix = "a photo of a ";
  if (text.rfind(caption_prefix, 0) == 0) {
    const std::string rest = text.substr(caption_prefix.size());
    const auto comma = rest.find(", ");
    const auto space = rest.find(' ', comma == std::string::npos
                                           ? 0
                                           : comma + 2);
    if (comma == std::string::npos || space == std::string::npos) {
      throw DataError("malformed caption: " + text);
    }
    const std::string size_name = rest.substr(0, comma);
    const std::string color_name = rest.substr(comma + 2, space - comma - 2);
    const std::string kind = rest.substr(space + 1);
    Vec acc(config_.dim, 0.0);
    for (const auto& name : {size_name, color_name, kind}) {
      const Vec& col = mixing_columns_[feature_for_name(name)];
      for (std::uint32_t d = 0; d < config_.dim; ++d) acc[d] += col[d];
    }
    return normalize(acc);
  }

  return mixing_columns_[feature_for_name(text)];
}

std::string caption_for(const std::array<std::uint32_t, 3>& attrs,
                        std::uint32_t n_kinds) {
  if (attrs[0] >= kSizeNames.size() || attrs[1] >= kColorNames.size() ||
      attrs[2] >= n_kinds) {
    throw DataError("attribute value out of range");
  }
  return std::string("a photo of a ") + kSizeNames[attrs[0]] + ", " +
         kColorNames[attrs[1]] + " " + kind_name(attrs[2]);
}

ToyWorld generate_world(const ToyWorldConfig& config) {
  if (config.n_items == 0) throw ConfigError("n_items must be >= 1");
  if (config.n_kinds == 0) throw ConfigError("n_kinds must be >= 1");
  if (!(config.noise_sigma >= 0.0 && config.noise_sigma < 1.0)) {
    throw ConfigError("noise_sigma must be in [0, 1)");
  }
  const std::size_t features = feature_count(config.n_kinds);
  if (config.dim < features) {
    throw ConfigError("dim too small: need at least " +
                      std::to_string(features) + " for " +
                      std::to_string(config.n_kinds) + " kinds");
  }

  DetRng rng(config.seed);

  // Orthonormal mixing columns via Gram-Schmidt over seeded gaussians.
  std::vector<Vec> columns(features, Vec(config.dim));
  for (auto& col : columns) {
    for (auto& x : col) x = rng.next_gaussian();
  }
  for (std::size_t c = 0; c < features; ++c) {
    for (std::size_t p = 0; p < c; ++p) {
      const double proj = dot(columns[c], columns[p]);
      for (std::uint32_t d = 0; d < config.dim; ++d) {
        columns[c][d] -= proj * columns[p][d];
      }
    }
    const double n = l2_norm(columns[c]);
    if (n < 1e-10) throw NumericalError("degenerate mixing matrix draw");
    for (auto& x : columns[c]) x /= n;
  }

  std::vector<ToyItem> items;
  items.reserve(config.n_items);
  for (std::uint32_t i = 0; i < config.n_items; ++i) {
    ToyItem item;
    char buf[16];
    std::snprintf(buf, sizeof(buf), "item-%04u", i);
    item.id = buf;
    item.attributes = {
        static_cast<std::uint32_t>(rng.next_below(kSizeNames.size())),
        static_cast<std::uint32_t>(rng.next_below(kColorNames.size())),
        static_cast<std::uint32_t>(rng.next_below(config.n_kinds))};
    item.caption = caption_for(item.attributes, config.n_kinds);

    Vec emb(config.dim, 0.0);
    const std::size_t fs[3] = {
        item.attributes[0],
        kSizeNames.size() + item.attributes[1],
        kSizeNames.size() + kColorNames.size() + item.attributes[2]};
    for (std::size_t f : fs) {
      for (std::uint32_t d = 0; d < config.dim; ++d) {
        emb[d] += columns[f][d];
      }
    }
    // Noise is drawn before normalization so rows stay unit-norm.
    for (std::uint32_t d = 0; d < config.dim; ++d) {
      emb[d] += config.noise_sigma * rng.next_gaussian();
    }
    item.image_embedding = normalize(emb);
    items.push_back(std::move(item));
  }

  return ToyWorld(config, std::move(items), std::move(columns));
}

std::vector<std::string> attribute_names(
    const std::array<std::uint32_t, 3>& attrs) {
  return {kSizeNames[attrs[0]], kColorNames[attrs[1]], kind_name(attrs[2])};
}

std::string oracle_difference_attrs(const std::vector<std::string>& a,
                                    const std::vector<std::string>& b) {
  if (a.size() != b.size()) {
    throw DataError("attribute slot count mismatch");
  }
  std::string first;
  std::string second;
  for (std::size_t slot = 0; slot < a.size(); ++slot) {
    if (a[slot] == b[slot]) continue;
    if (!first.empty()) first += ", ";
    first += a[slot];
    if (!second.empty()) second += ", ";
    second += b[slot];
  }
  if (first.empty()) return kNoDifferenceText;
  return "The first image has attributes of " + first +
         ", while the second image has attributes of " + second;
}

std::string oracle_difference(const ToyItem& a, const ToyItem& b) {
  return oracle_difference_attrs(attribute_names(a.attributes),
                                 attribute_names(b.attributes));
}

std::string world_jsonl(const ToyWorld& world) {
  std::string out;
  for (const auto& item : world.items()) {
    nlohmann::json j;
    j["id"] = item.id;
    j["attributes"] = attribute_names(item.attributes);
    j["caption"] = item.caption;
    out += j.dump();
    out += '\n';
  }
  return out;
}

void write_world_jsonl(const ToyWorld& world,
                       const std::filesystem::path& path) {
  write_file_atomic(path, world_jsonl(world));
}

std::vector<WorldItemRecord> read_world_jsonl(
    const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  std::vector<WorldItemRecord> out;
  std::size_t start = 0;
  std::size_t line_no = 0;
  while (start < bytes.size()) {
    std::size_t end = bytes.find('\n', start);
    if (end == std::string::npos) end = bytes.size();
    ++line_no;
    const std::string_view line(bytes.data() + start, end - start);
    start = end + 1;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("world dump line " + std::to_string(line_no) + ": " +
                        e.what());
    }
    WorldItemRecord rec;
    try {
      rec.id = j.at("id").get<std::string>();
      rec.attributes = j.at("attributes").get<std::vector<std::string>>();
      rec.caption = j.at("caption").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("world dump line " + std::to_string(line_no) + ": " +
                        e.what());
    }
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace pdalign
