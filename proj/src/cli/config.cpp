#include "lilxing/cli/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace lilxing::cli {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_real(const std::string& key, const std::string& text) {
  const std::string s = trim(text);
  double value = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(value)) {
    throw ConfigError("invalid value for '" + key + "': '" + text + "'");
  }
  return value;
}

std::uint64_t parse_count(const std::string& key, const std::string& text) {
  const std::string s = trim(text);
  // Accept 1e6-style counts as long as they are whole numbers.
  const double v = parse_real(key, s);
  if (v < 0 || v != std::floor(v) || v > 1e18) {
    throw ConfigError("invalid value for '" + key + "': '" + text + "' is not a count");
  }
  return static_cast<std::uint64_t>(v);
}

int parse_int(const std::string& key, const std::string& text) {
  const std::uint64_t v = parse_count(key, text);
  if (v > 1000000) throw ConfigError("invalid value for '" + key + "': '" + text + "' too large");
  return static_cast<int>(v);
}

bool parse_bool(const std::string& key, const std::string& text) {
  std::string s = trim(text);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "true" || s == "on" || s == "yes" || s == "1") return true;
  if (s == "false" || s == "off" || s == "no" || s == "0") return false;
  throw ConfigError("invalid value for '" + key + "': '" + text + "' is not a boolean");
}

}  // namespace

const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys = {
      "command", "t", "t_list", "eps", "eps_list", "sigma0", "model", "theta", "beta",
      "n", "seed", "workers", "grid_octaves", "points_per_octave", "bridge_correction",
      "out", "input", "rel_tol", "c1", "octaves_per_bin"};
  return keys;
}

std::vector<double> parse_real_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_real(key, item));
  if (out.empty()) throw ConfigError("invalid value for '" + key + "': empty list");
  return out;
}

void set_model(ExperimentConfig& cfg, const std::string& text) {
  const std::string s = trim(text);
  const auto open = s.find('(');
  std::string name = s.substr(0, open);
  if (open != std::string::npos) {
    if (s.back() != ')') throw ConfigError("invalid value for 'model': '" + text + "'");
    const double p = parse_real("model", s.substr(open + 1, s.size() - open - 2));
    if (name == "ou") {
      cfg.theta = p;
    } else if (name == "state_vol") {
      cfg.beta = p;
    } else {
      throw ConfigError("invalid value for 'model': '" + text + "' takes no parameter");
    }
  }
  if (name != "bm" && name != "constant" && name != "ou" && name != "state_vol") {
    throw ConfigError("invalid value for 'model': '" + text +
                      "' (expected bm, constant, ou(theta) or state_vol(beta))");
  }
  cfg.model = name;
}

KeyValues read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  KeyValues values;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key = value, got '" +
                        line + "'");
    }
    std::string key = trim(line.substr(0, eq));
    std::replace(key.begin(), key.end(), '-', '_');
    const auto& keys = known_keys();
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      throw ConfigError("unknown config key '" + key + "' in " + path);
    }
    values[key] = trim(line.substr(eq + 1));
  }
  return values;
}

void apply(ExperimentConfig& cfg, const KeyValues& values) {
  for (const auto& [key, value] : values) {
    if (key == "command") {
      cfg.command = value;
    } else if (key == "t" || key == "t_list") {
      cfg.t_list = parse_real_list(key, value);
    } else if (key == "eps" || key == "eps_list") {
      cfg.epsilon_list = parse_real_list(key, value);
    } else if (key == "sigma0") {
      cfg.sigma0 = parse_real(key, value);
    } else if (key == "model") {
      set_model(cfg, value);
    } else if (key == "theta") {
      cfg.theta = parse_real(key, value);
    } else if (key == "beta") {
      cfg.beta = parse_real(key, value);
    } else if (key == "n") {
      cfg.n = parse_count(key, value);
    } else if (key == "seed") {
      cfg.seed = parse_count(key, value);
    } else if (key == "workers") {
      cfg.workers = parse_int(key, value);
    } else if (key == "grid_octaves") {
      cfg.grid_octaves = parse_int(key, value);
    } else if (key == "points_per_octave") {
      cfg.points_per_octave = parse_int(key, value);
    } else if (key == "bridge_correction") {
      cfg.bridge_correction = parse_bool(key, value);
    } else if (key == "out") {
      cfg.out = value;
    } else if (key == "input") {
      cfg.input = value;
    } else if (key == "rel_tol") {
      cfg.rel_tol = parse_real(key, value);
    } else if (key == "c1") {
      cfg.c1 = parse_real(key, value);
    } else if (key == "octaves_per_bin") {
      cfg.octaves_per_bin = parse_int(key, value);
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
}

void validate(const ExperimentConfig& cfg) {
  for (double t : cfg.t_list) {
    if (!(t > 0)) throw ConfigError("invalid value for 't': times must be positive");
  }
  for (double e : cfg.epsilon_list) {
    if (!(e > 0)) throw ConfigError("invalid value for 'eps': must be positive");
  }
  if (!(cfg.sigma0 > 0)) throw ConfigError("invalid value for 'sigma0': must be positive");
  if (!(cfg.theta >= 0)) throw ConfigError("invalid value for 'theta': must be nonnegative");
  if (!(cfg.beta >= 0)) throw ConfigError("invalid value for 'beta': must be nonnegative");
  if (cfg.workers < 1) throw ConfigError("invalid value for 'workers': must be at least 1");
  if (cfg.grid_octaves && *cfg.grid_octaves < 1) {
    throw ConfigError("invalid value for 'grid_octaves': must be at least 1");
  }
  if (cfg.points_per_octave && *cfg.points_per_octave < 1) {
    throw ConfigError("invalid value for 'points_per_octave': must be at least 1");
  }
  if (!(cfg.rel_tol > 0 && cfg.rel_tol < 1)) throw ConfigError("invalid value for 'rel_tol'");
  if (!(cfg.c1 > 0)) throw ConfigError("invalid value for 'c1': must be positive");
  if (cfg.octaves_per_bin < 1) throw ConfigError("invalid value for 'octaves_per_bin'");
}

}  // namespace lilxing::cli
