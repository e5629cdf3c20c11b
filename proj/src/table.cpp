#include "pdalign/table.hpp"

#include <cmath>
#include <cstring>
#include <limits>
#include <unordered_set>

#include "pdalign/errors.hpp"
#include "pdalign/io_util.hpp"

namespace pdalign {

namespace {

constexpr char kMagic[4] = {'E', 'M', 'B', 'T'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kFlagNormalized = 1u << 0;
constexpr std::uint32_t kKnownFlags = kFlagNormalized;
constexpr double kUnitNormTol = 1e-6;

}  // namespace

EmbeddingTable::EmbeddingTable(std::vector<std::string> ids,
                               std::vector<float> data, std::uint32_t dim,
                               bool normalized)
    : ids_(std::move(ids)),
      data_(std::move(data)),
      dim_(dim),
      normalized_(normalized) {
  if (data_.size() != ids_.size() * static_cast<std::size_t>(dim_)) {
    throw DataError("table data size does not match count*dim");
  }
  index_.reserve(ids_.size());
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (!index_.emplace(ids_[i], i).second) {
      throw DataError("duplicate id in table: " + ids_[i]);
    }
  }
  if (normalized_) {
    for (std::size_t i = 0; i < ids_.size(); ++i) {
      double acc = 0.0;
      for (std::uint32_t d = 0; d < dim_; ++d) {
        const double x = data_[i * dim_ + d];
        acc += x * x;
      }
      if (std::abs(std::sqrt(acc) - 1.0) > kUnitNormTol) {
        throw DataError("normalized flag set but row " + std::to_string(i) +
                        " has norm " + std::to_string(std::sqrt(acc)));
      }
    }
  }
}

std::span<const float> EmbeddingTable::row(std::size_t i) const {
  return {data_.data() + i * dim_, dim_};
}

Vec EmbeddingTable::row_vec(std::size_t i) const {
  Vec out(dim_);
  for (std::uint32_t d = 0; d < dim_; ++d) out[d] = data_[i * dim_ + d];
  return out;
}

std::optional<std::size_t> EmbeddingTable::find(const std::string& id) const {
  const auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Vec EmbeddingTable::vec_for(const std::string& id) const {
  const auto idx = find(id);
  if (!idx) throw DataError("id not found in table: " + id);
  return row_vec(*idx);
}

std::string serialize_table(const EmbeddingTable& table) {
  if (table.count() > std::numeric_limits<std::uint32_t>::max()) {
    throw DataError("table too large for format");
  }
  std::string out;
  out.append(kMagic, 4);
  put_u32_le(out, kVersion);
  put_u32_le(out, static_cast<std::uint32_t>(table.count()));
  put_u32_le(out, table.dim());
  put_u32_le(out, table.normalized() ? kFlagNormalized : 0u);
  for (const auto& id : table.ids()) {
    if (id.size() > std::numeric_limits<std::uint16_t>::max()) {
      throw DataError("id too long for format: " + id.substr(0, 32) + "...");
    }
    put_u16_le(out, static_cast<std::uint16_t>(id.size()));
    out.append(id);
  }
  for (float v : table.data()) put_f32_le(out, v);
  return out;
}

EmbeddingTable parse_table(std::string_view bytes) {
  ByteReader r(bytes);
  const std::string magic = r.take_bytes(4);
  if (std::memcmp(magic.data(), kMagic, 4) != 0) {
    throw FormatError("bad magic: expected EMBT");
  }
  const std::uint32_t version = r.take_u32_le();
  if (version != kVersion) {
    throw FormatError("unsupported version: " + std::to_string(version));
  }
  const std::uint32_t count = r.take_u32_le();
  const std::uint32_t dim = r.take_u32_le();
  const std::uint32_t flags = r.take_u32_le();
  if ((flags & ~kKnownFlags) != 0) {
    throw FormatError("unknown flags: " + std::to_string(flags));
  }
  if (dim != 0 &&
      count > std::numeric_limits<std::uint64_t>::max() / 4 / dim) {
    throw FormatError("count/dim overflow");
  }

  std::vector<std::string> ids;
  ids.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint16_t len = r.take_u16_le();
    ids.push_back(r.take_bytes(len));
  }

  const std::uint64_t payload =
      static_cast<std::uint64_t>(count) * dim * 4;
  if (r.remaining() < payload) {
    throw FormatError("payload shorter than declared count*dim");
  }
  if (r.remaining() > payload) {
    throw FormatError("trailing bytes after payload");
  }
  std::vector<float> data;
  data.reserve(static_cast<std::size_t>(count) * dim);
  for (std::uint64_t i = 0; i < static_cast<std::uint64_t>(count) * dim; ++i) {
    data.push_back(r.take_f32_le());
  }

  try {
    return EmbeddingTable(std::move(ids), std::move(data), dim,
                          (flags & kFlagNormalized) != 0);
  } catch (const DataError& e) {
    // Invariant violations in file content are format errors to callers.
    throw FormatError(e.what());
  }
}

EmbeddingTable read_table(const std::filesystem::path& path) {
  return parse_table(read_file(path));
}

void write_table(const EmbeddingTable& table,
                 const std::filesystem::path& path) {
  write_file_atomic(path, serialize_table(table));
}

}  // namespace pdalign
