#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "pdalign/embedding.hpp"

namespace pdalign {

// Read-only table of named embeddings. Storage is 32-bit row-major,
// matching the on-disk format; row_vec() widens to double for arithmetic.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;

  // Validates that ids are unique, data has count*dim entries, and (when
  // the normalized flag is set) every row is unit-norm within 1e-6.
  // Throws DataError on violation.
  EmbeddingTable(std::vector<std::string> ids, std::vector<float> data,
                 std::uint32_t dim, bool normalized);

  std::size_t count() const { return ids_.size(); }
  std::uint32_t dim() const { return dim_; }
  bool normalized() const { return normalized_; }
  const std::vector<std::string>& ids() const { return ids_; }
  const std::vector<float>& data() const { return data_; }

  std::span<const float> row(std::size_t i) const;
  Vec row_vec(std::size_t i) const;

  std::optional<std::size_t> find(const std::string& id) const;

  // row_vec by id; throws DataError when missing.
  Vec vec_for(const std::string& id) const;

 private:
  std::vector<std::string> ids_;
  std::vector<float> data_;
  std::uint32_t dim_ = 0;
  bool normalized_ = false;
  std::unordered_map<std::string, std::size_t> index_;
};

// Embedding table file format "EMBT", version 1, little-endian:
//
//   magic "EMBT" (4) | version u32 | count u32 | dim u32 | flags u32
//   count x (id_len u16 | id bytes)
//   count x dim float32, row-major
//
// flags bit 0: rows are unit-normalized.
EmbeddingTable read_table(const std::filesystem::path& path);
void write_table(const EmbeddingTable& table, const std::filesystem::path& path);

// In-memory codec used by the file functions and by tests.
std::string serialize_table(const EmbeddingTable& table);
EmbeddingTable parse_table(std::string_view bytes);

}  // namespace pdalign
