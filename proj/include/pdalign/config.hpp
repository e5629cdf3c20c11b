#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace pdalign {

struct ConfigEntry {
  const char* key;
  const char* default_value;
  const char* description;
};

// Every tunable in one place; defaults are the documented ones.
const std::vector<ConfigEntry>& config_registry();

// Flat key=value configuration with [section] grouping in files. Merge
// order: built-in defaults, then file values, then PDALIGN_* environment
// variables, then explicit set() calls (CLI flags). Unknown keys are
// errors everywhere.
class RunConfig {
 public:
  static RunConfig defaults();

  void load_file(const std::filesystem::path& path);
  void apply_env();
  void set(const std::string& key, const std::string& value);

  const std::string& get(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;
  std::uint32_t get_u32(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  void require_known(const std::string& key, const std::string& where) const;

  std::map<std::string, std::string> values_;
};

// "train.lr" -> "PDALIGN_TRAIN_LR"
std::string env_name_for_key(const std::string& key);

}  // namespace pdalign
