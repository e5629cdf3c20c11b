#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace pdalign {

// Whole-file read; throws FormatError when the file cannot be opened.
std::string read_file(const std::filesystem::path& path);

// Write via temp file + rename so readers never observe partial output.
void write_file_atomic(const std::filesystem::path& path,
                       std::string_view bytes);

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

// Little-endian scalar packing used by the binary formats.
void put_u16_le(std::string& out, std::uint16_t v);
void put_u32_le(std::string& out, std::uint32_t v);
void put_u64_le(std::string& out, std::uint64_t v);
void put_f32_le(std::string& out, float v);
void put_f64_le(std::string& out, double v);

// Cursor over a byte buffer; every take_* throws FormatError on underrun.
class ByteReader {
 public:
  explicit ByteReader(std::string_view bytes) : bytes_(bytes) {}

  std::uint16_t take_u16_le();
  std::uint32_t take_u32_le();
  std::uint64_t take_u64_le();
  float take_f32_le();
  double take_f64_le();
  std::string take_bytes(std::size_t n);
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  const unsigned char* need(std::size_t n);

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

// Reproducibility record written next to command outputs when --manifest
// is set. The timestamp is confined to the "timestamp" field so that
// everything else is byte-stable across reruns.
void write_manifest(const std::filesystem::path& manifest_path,
                    const std::string& command,
                    const std::map<std::string, std::string>& config,
                    const std::vector<std::filesystem::path>& inputs,
                    const std::vector<std::filesystem::path>& outputs);

}  // namespace pdalign
