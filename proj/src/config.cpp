#include "pdalign/config.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>

#include "pdalign/errors.hpp"

namespace pdalign {

const std::vector<ConfigEntry>& config_registry() {
  static const std::vector<ConfigEntry> entries = {
      {"world.n_items", "100", "number of items in a generated world"},
      {"world.n_kinds", "4", "number of kind classes"},
      {"world.dim", "16", "embedding dimension"},
      {"world.sigma", "0.05", "image-embedding noise level, in [0,1)"},
      {"world.seed", "7", "world generation seed"},

      {"pipeline.style", "coco", "prompt style: coco or cub"},
      {"pipeline.n_source", "10", "items sampled before pair expansion"},
      {"pipeline.client", "oracle", "difference source: http or oracle"},
      {"pipeline.max_inflight", "1", "max concurrent generation requests"},
      {"pipeline.max_tokens", "80", "completion token cap per request"},
      {"pipeline.seed", "7", "pair sampling seed"},
      {"pipeline.http_url", "http://127.0.0.1:8080/complete",
       "completion endpoint"},
      {"pipeline.http_prompt_field", "prompt", "request prompt field name"},
      {"pipeline.http_max_tokens_field", "max_tokens",
       "request token-cap field name"},
      {"pipeline.http_completion_field", "completion",
       "response completion field name"},
      {"pipeline.retries", "3", "max attempts per request"},
      {"pipeline.backoff_ms", "1000", "initial retry backoff (doubles)"},

      {"encoder.vocab", "4096", "hashed vocabulary size"},
      {"encoder.token_dim", "32", "token embedding width"},
      {"encoder.hidden_dim", "64", "projection hidden width"},

      {"train.loss", "contrastive", "training loss: contrastive or mse"},
      {"train.tau", "1.0", "contrastive temperature"},
      {"train.lr", "0.01", "learning rate"},
      {"train.gamma", "0.9", "exponential LR decay per epoch"},
      {"train.epochs", "20", "training epochs"},
      {"train.batch", "512", "batch size"},
      {"train.seed", "0", "init + shuffle seed"},

      {"eval.style", "attribute", "difference task style"},
      {"eval.n_pairs", "200", "pairs per evaluation seed"},
      {"eval.n_seeds", "5", "number of evaluation seeds"},
      {"eval.seed", "100", "base evaluation seed"},
      {"eval.split", "val", "labeled split for confusion: val, test, all"},
      {"eval.label_slot", "2", "attribute slot used as class label"},
      {"eval.exclude_attributes", "",
       "comma-separated attribute values to hide from attribute tasks"},
      {"eval.color_first", "yellow", "first color group for color tasks"},
      {"eval.color_second", "blue", "second color group for color tasks"},

      {"comp.alpha", "0.9", "comparative prompting blend weight"},
      {"comp.k", "3", "number of confused pairs to update"},

      {"run.workers", "1", "worker threads for parallel sections"},
  };
  return entries;
}

RunConfig RunConfig::defaults() {
  RunConfig config;
  for (const auto& entry : config_registry()) {
    config.values_[entry.key] = entry.default_value;
  }
  return config;
}

void RunConfig::require_known(const std::string& key,
                              const std::string& where) const {
  if (!values_.count(key)) {
    throw ConfigError("unknown config key '" + key + "' (" + where + ")");
  }
}

void RunConfig::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open config file: " + path.string());
  std::string line;
  std::string section;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    // Strip whitespace and skip blanks/comments.
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t\r");
    std::string body = line.substr(first, last - first + 1);
    if (body[0] == '#' || body[0] == ';') continue;

    const std::string where =
        path.filename().string() + ":" + std::to_string(line_no);
    if (body.front() == '[') {
      if (body.back() != ']' || body.size() < 3) {
        throw ConfigError("malformed section header (" + where + ")");
      }
      section = body.substr(1, body.size() - 2);
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("expected key=value (" + where + ")");
    }
    std::string key = body.substr(0, eq);
    std::string value = body.substr(eq + 1);
    const auto trim = [](std::string& s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t");
      s = (b == std::string::npos) ? "" : s.substr(b, e - b + 1);
    };
    trim(key);
    trim(value);
    if (key.empty()) throw ConfigError("empty key (" + where + ")");
    if (!section.empty() && key.find('.') == std::string::npos) {
      key = section + "." + key;
    }
    require_known(key, where);
    values_[key] = value;
  }
}

std::string env_name_for_key(const std::string& key) {
  std::string out = "PDALIGN_";
  for (char c : key) {
    out.push_back(c == '.' ? '_'
                           : static_cast<char>(std::toupper(
                                 static_cast<unsigned char>(c))));
  }
  return out;
}

void RunConfig::apply_env() {
  for (const auto& entry : config_registry()) {
    const std::string name = env_name_for_key(entry.key);
    if (const char* value = std::getenv(name.c_str())) {
      values_[entry.key] = value;
    }
  }
}

void RunConfig::set(const std::string& key, const std::string& value) {
  require_known(key, "set");
  values_[key] = value;
}

const std::string& RunConfig::get(const std::string& key) const {
  require_known(key, "get");
  return values_.at(key);
}

std::uint64_t RunConfig::get_u64(const std::string& key) const {
  const std::string& s = get(key);
  try {
    std::size_t pos = 0;
    const unsigned long long v = std::stoull(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "' is not an integer: " + s);
  }
}

std::uint32_t RunConfig::get_u32(const std::string& key) const {
  const std::uint64_t v = get_u64(key);
  if (v > 0xffffffffull) {
    throw ConfigError("config key '" + key + "' out of range");
  }
  return static_cast<std::uint32_t>(v);
}

double RunConfig::get_double(const std::string& key) const {
  const std::string& s = get(key);
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "' is not a number: " + s);
  }
}

bool RunConfig::get_bool(const std::string& key) const {
  const std::string& s = get(key);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError("config key '" + key + "' is not a boolean: " + s);
}

}  // namespace pdalign
