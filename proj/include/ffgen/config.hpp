#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ffgen/ode.hpp"
#include "ffgen/trainer.hpp"
#include "ffgen/trajectory.hpp"
#include "ffgen/verify.hpp"

namespace ffgen::cli {

// Everything a subcommand needs; every field maps to exactly one config key.
struct RunConfig {
  std::optional<std::uint64_t> seed;
  std::string outdir = "out";
  unsigned threads = 1;

  trajectory::TrajectorySpec spec;
  ode::SolverConfig solver;
  trainer::TrainConfig train;

  std::string dataset = "ring8";  // builtin name or CSV path
  std::size_t dataset_size = 10000;
  std::size_t dataset_dim = 0;  // 0: builtin default
  std::size_t heldout_size = 1000;

  std::string checkpoint;  // sample: input; train: written to <outdir>/checkpoint.txt
  std::size_t samples = 1000;
  std::string reference = "ring8";  // sample report: builtin name or CSV path
  std::size_t projections = 200;
  std::size_t energy_points = 2000;
  bool plot = true;
  bool record_wall_time = false;

  std::size_t on_min = 1;
  std::size_t on_max = 12;
  std::vector<std::uint64_t> seeds = {0, 1, 2};

  std::vector<std::string> families = {"linear", "gaussian_bridge"};
  double divergence_g = 1.0;
  std::vector<double> divergence_times = {0.1, 0.25, 0.5, 0.75, 1.0};
  std::size_t divergence_n = 1000;

  verify::VerifyConfig verify;
};

// All problems found while building a RunConfig, reported together.
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

struct KeyInfo {
  std::string name;
  std::string help;
};

// Every accepted key in documentation order.
const std::vector<KeyInfo>& config_keys();

// `key = value` lines, '#' starts a comment. Unknown keys, malformed values
// and out-of-range values are collected into a single ConfigError.
using Overrides = std::map<std::string, std::string>;
RunConfig parse_config_text(std::string_view text, const Overrides& overrides = {});
RunConfig parse_config(const std::optional<std::filesystem::path>& path, const Overrides& overrides = {});

// Cross-field checks and file existence; `needs` lists keys the subcommand
// requires (e.g. "seed", "checkpoint").
void validate_for(const RunConfig& cfg, const std::vector<std::string>& needs);

// Canonical `key = value` dump of every key, in config_keys() order.
std::string resolved_text(const RunConfig& cfg);

bool is_builtin_dataset(std::string_view name);

}  // namespace ffgen::cli
