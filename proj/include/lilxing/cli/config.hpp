#pragma once

// Experiment configuration for the lil-xing runner. A config file holds one
// experiment as `key = value` lines; '#' starts a comment. Every key can also
// be set by the matching command-line flag, which takes precedence.

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace lilxing::cli {

/// Raised for anything the user got wrong in a config file or on the command
/// line; the runner maps it to exit status 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  std::string command;
  std::vector<double> t_list;
  std::vector<double> epsilon_list;
  double sigma0 = 1.0;
  std::string model = "bm";  // bm | constant | ou | state_vol
  double theta = 1.0;
  double beta = 0.1;
  std::uint64_t n = 100000;
  std::optional<std::uint64_t> seed;
  int workers = 1;
  // Unset means the subcommand's default grid.
  std::optional<int> grid_octaves;
  std::optional<int> points_per_octave;
  bool bridge_correction = true;
  std::string out;    // CSV, or SVG for `plot`; empty means stdout
  std::string input;  // CSV read by `plot`

  // Tolerance and diagnostic overrides, config-file only.
  double rel_tol = 1e-8;
  double c1 = 1.0;
  int octaves_per_bin = 1;
};

/// Raw key/value pairs; a key repeated in a file keeps its last value.
using KeyValues = std::map<std::string, std::string>;

/// Reads a config file. Unknown keys, malformed lines and unreadable files
/// throw ConfigError naming the offending key or line.
KeyValues read_config_file(const std::string& path);

/// Applies key/value pairs on top of cfg, validating every value.
void apply(ExperimentConfig& cfg, const KeyValues& values);

/// The keys accepted in config files.
const std::vector<std::string>& known_keys();

/// Parses "1e-6", "1e-3,1e-5" and similar lists of positive reals.
std::vector<double> parse_real_list(const std::string& key, const std::string& text);

/// Normalises "ou(2)" to model "ou" with theta 2, "state_vol(0.3)" likewise.
void set_model(ExperimentConfig& cfg, const std::string& text);

/// Checks ranges that do not depend on the subcommand.
void validate(const ExperimentConfig& cfg);

}  // namespace lilxing::cli
