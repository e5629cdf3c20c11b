#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pdalign/embedding.hpp"
#include "pdalign/table.hpp"

namespace pdalign {

// Synthetic attribute universe: every item has one value per slot
// (size, color, kind), a templated caption, and an image embedding
// normalize(G * onehot(attributes) + sigma * noise) where G has
// orthonormal columns. With sigma = 0 the embedding geometry is exact,
// which is what makes the closed-form oracles in the tests possible.

struct ToyWorldConfig {
  std::uint32_t n_items = 100;
  std::uint32_t n_kinds = 4;
  std::uint32_t dim = 16;
  double noise_sigma = 0.05;  // in [0, 1)
  std::uint64_t seed = 7;
};

struct ToyItem {
  std::string id;
  // Value index per slot: [size, color, kind].
  std::array<std::uint32_t, 3> attributes{};
  std::string caption;
  Vec image_embedding;  // unit norm
};

inline constexpr std::size_t kSlotCount = 3;
inline constexpr std::array<const char*, 2> kSizeNames = {"small", "large"};
inline constexpr std::array<const char*, 6> kColorNames = {
    "red", "blue", "yellow", "green", "white", "black"};

// Kind value index -> display name ("cat", "dog", ... then "species-N").
std::string kind_name(std::uint32_t kind_index);

// Returned when two items share every attribute.
inline constexpr const char* kNoDifferenceText =
    "The two images have the same attributes";

class ToyWorld {
 public:
  ToyWorld(ToyWorldConfig config, std::vector<ToyItem> items,
           std::vector<Vec> mixing_columns);

  const ToyWorldConfig& config() const { return config_; }
  const std::vector<ToyItem>& items() const { return items_; }
  const ToyItem& item_for(const std::string& id) const;

  // Image embeddings rounded to the 32-bit interchange precision.
  EmbeddingTable image_table() const;

  // Ground truth for oracles: the orthonormal mixing columns, one per
  // one-hot attribute value (sizes, then colors, then kinds).
  const std::vector<Vec>& mixing_columns() const { return mixing_columns_; }
  std::size_t feature_index(std::size_t slot, std::uint32_t value) const;

  // normalize(G * onehot(attrs)): the noiseless image embedding.
  Vec attribute_embedding(const std::array<std::uint32_t, 3>& attrs) const;

  // G * (onehot(a) - onehot(b)): the exact difference direction at sigma=0.
  Vec attribute_direction(const std::array<std::uint32_t, 3>& a,
                          const std::array<std::uint32_t, 3>& b) const;

  std::vector<std::string> kind_names() const;

  // Closed-form text encoder over the ground-truth mixing space. Handles
  // the attribute-difference template (exact difference direction), item
  // captions (noiseless image embedding), and bare attribute value names
  // (the mixing column). Anything else, including the no-difference
  // sentinel, throws DataError. With sigma = 0 this encoder makes
  // difference-based classification exact.
  Vec oracle_encode_text(const std::string& text) const;

 private:
  std::size_t feature_for_name(const std::string& name) const;

  ToyWorldConfig config_;
  std::vector<ToyItem> items_;
  std::vector<Vec> mixing_columns_;
};

// Deterministic for a fixed seed. Throws ConfigError when dim is smaller
// than the number of one-hot features or noise_sigma is out of range.
ToyWorld generate_world(const ToyWorldConfig& config);

std::string caption_for(const std::array<std::uint32_t, 3>& attrs,
                        std::uint32_t n_kinds);

// Slot-ordered attribute value names for an item ([size, color, kind]).
std::vector<std::string> attribute_names(
    const std::array<std::uint32_t, 3>& attrs);

// "The first image has attributes of {A1}, while the second image has
// attributes of {A2}" where A1 holds a's values not shared with b and A2
// vice versa, in slot order. Equal attribute vectors yield
// kNoDifferenceText. Swapping arguments swaps the two lists.
std::string oracle_difference(const ToyItem& a, const ToyItem& b);

// Same template over plain slot-value lists (used when the world is
// ingested from a dump rather than generated in-process). Throws
// DataError when the slot counts differ.
std::string oracle_difference_attrs(const std::vector<std::string>& a,
                                    const std::vector<std::string>& b);

// World dump: one JSON object per line with fields id, attributes
// (slot-ordered value strings), caption.
struct WorldItemRecord {
  std::string id;
  std::vector<std::string> attributes;
  std::string caption;
};

std::string world_jsonl(const ToyWorld& world);
void write_world_jsonl(const ToyWorld& world,
                       const std::filesystem::path& path);
std::vector<WorldItemRecord> read_world_jsonl(
    const std::filesystem::path& path);

}  // namespace pdalign
