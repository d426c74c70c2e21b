#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bhvqe/engine.hpp"

namespace bhvqe {

// Flag-level overrides applied on top of the config file. Flags always win.
struct CliOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> shots;
  std::optional<int> threads;
};

// Parsed and validated command configs. `resolved` echoes every effective
// value (defaults filled in, overrides applied) and is embedded verbatim in
// each output file, so results stay self-describing.

struct EdConfig {
  BHModel model;                // U is set per sweep point from lambda
  std::vector<double> lambdas;  // ascending
  std::string csv_name;
  std::string json_name;
  nlohmann::json resolved;
};

struct ScanConfig {
  BHModel model;  // n_bosons/U overridden per cell
  AnsatzSpec ansatz;
  InitialStatePrep prep;
  OptimizerConfig optimizer;
  std::vector<int> bosons;      // ascending
  std::vector<double> lambdas;  // ascending
  int max_layers = 1;
  int restarts = 5;
  double success_threshold = 0.99;
  std::uint64_t seed = 0;
  int threads = 1;
  std::string csv_name;
  nlohmann::json resolved;
};

struct VqeConfig {
  ExperimentSpec spec;          // per-cell model/layers/seed filled at run time
  std::vector<int> bosons;      // ascending
  std::vector<int> layers;      // ascending
  std::vector<double> lambdas;  // ascending
  int threads = 1;
  std::string csv_name;
  std::string json_name;
  nlohmann::json resolved;
};

// Reads a config file into a JSON document. The canonical format is YAML
// (any extension but .json); files ending in .json are parsed as JSON.
// Throws config_error with file/line diagnostics on parse failure.
nlohmann::json load_config_document(const std::filesystem::path& path);

// Schema-check and resolve a document. Unknown keys anywhere are rejected
// with the offending key path. All throw config_error.
EdConfig parse_ed_config(const std::filesystem::path& path,
                         const CliOverrides& overrides = {});
ScanConfig parse_scan_config(const std::filesystem::path& path,
                             const CliOverrides& overrides = {});
VqeConfig parse_vqe_config(const std::filesystem::path& path, bool sampled,
                           const CliOverrides& overrides = {});

// Command bodies. Each writes its output files under out_dir (created if
// missing) and returns the paths written. Rerunning with the same config
// and seed reproduces every CSV byte for byte.
std::vector<std::filesystem::path> cmd_ed(
    const EdConfig& config, const std::filesystem::path& out_dir);
std::vector<std::filesystem::path> cmd_scan(
    const ScanConfig& config, const std::filesystem::path& out_dir);
std::vector<std::filesystem::path> cmd_vqe(
    const VqeConfig& config, const std::filesystem::path& out_dir);
std::vector<std::filesystem::path> cmd_vqe_sampled(
    const VqeConfig& config, const std::filesystem::path& out_dir);

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;

// Full front end: parses argv-style arguments (program name excluded),
// dispatches to the command bodies, prints written paths to `out`, and maps
// failures to exit codes: 0 success, 2 bad flags or config, 3 runtime.
int cli_main(const std::vector<std::string>& args, std::ostream& out,
             std::ostream& err);

}  // namespace bhvqe
