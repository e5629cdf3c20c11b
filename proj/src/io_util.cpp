#include "pdalign/io_util.hpp"

#include <openssl/evp.h>

#include <unistd.h>

#include <atomic>
#include <chrono>
#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>

#include "pdalign/errors.hpp"

namespace pdalign {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open file: " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  if (in.bad()) throw FormatError("read failed: " + path.string());
  return bytes;
}

void write_file_atomic(const std::filesystem::path& path,
                       std::string_view bytes) {
  static std::atomic<std::uint64_t> counter{0};
  const auto dir = path.parent_path();
  if (!dir.empty()) std::filesystem::create_directories(dir);
  const auto tmp = path.string() + ".tmp-" + std::to_string(::getpid()) +
                   "-" + std::to_string(counter.fetch_add(1));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot open for write: " + tmp);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw FormatError("write failed: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(),
                 nullptr) != 1) {
    throw Error("sha256 failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

std::string sha256_file(const std::filesystem::path& path) {
  return sha256_hex(read_file(path));
}

void put_u16_le(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u32_le(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) {
    out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
}

void put_u64_le(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
}

void put_f32_le(std::string& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32_le(out, bits);
}

void put_f64_le(std::string& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64_le(out, bits);
}

const unsigned char* ByteReader::need(std::size_t n) {
  if (bytes_.size() - pos_ < n) {
    throw FormatError("truncated payload: need " + std::to_string(n) +
                      " bytes, have " + std::to_string(bytes_.size() - pos_));
  }
  const auto* p =
      reinterpret_cast<const unsigned char*>(bytes_.data()) + pos_;
  pos_ += n;
  return p;
}

std::uint16_t ByteReader::take_u16_le() {
  const auto* p = need(2);
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t ByteReader::take_u32_le() {
  const auto* p = need(4);
  return static_cast<std::uint32_t>(p[0]) |
         (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint64_t ByteReader::take_u64_le() {
  const auto* p = need(8);
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

float ByteReader::take_f32_le() {
  const std::uint32_t bits = take_u32_le();
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

double ByteReader::take_f64_le() {
  const std::uint64_t bits = take_u64_le();
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

std::string ByteReader::take_bytes(std::size_t n) {
  const auto* p = need(n);
  return std::string(reinterpret_cast<const char*>(p), n);
}

void write_manifest(const std::filesystem::path& manifest_path,
                    const std::string& command,
                    const std::map<std::string, std::string>& config,
                    const std::vector<std::filesystem::path>& inputs,
                    const std::vector<std::filesystem::path>& outputs) {
  nlohmann::json j;
  j["command"] = command;
  j["config"] = config;
  nlohmann::json in = nlohmann::json::object();
  for (const auto& p : inputs) in[p.string()] = sha256_file(p);
  j["inputs"] = in;
  nlohmann::json out = nlohmann::json::object();
  for (const auto& p : outputs) out[p.string()] = sha256_file(p);
  j["outputs"] = out;
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm_utc{};
  gmtime_r(&t, &tm_utc);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  j["timestamp"] = buf;
  write_file_atomic(manifest_path, j.dump(2) + "\n");
}

}  // namespace pdalign
