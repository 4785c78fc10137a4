#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "nsctl/galerkin.hpp"
#include "nsctl/schema.hpp"

namespace nsctl::app {

enum class Command { saturate, closure, simulate, steer, extend_verify, sphere_closure, export_table };

std::optional<Command> parse_command(std::string_view name);
const char* to_string(Command c);
std::vector<std::string> command_names();

enum ExitCode : int { exit_ok = 0, exit_validation = 1, exit_numerical = 2, exit_inconclusive = 3 };

struct RunRequest {
  Command command = Command::saturate;
  std::string config_path;
  std::string out_dir;                // empty: config "output_dir", else "."
  std::optional<std::uint64_t> seed;  // overrides the config seed
};

struct RunReport {
  int exit_code = exit_ok;
  std::vector<std::string> files;  // outputs written, in order
  nlohmann::json summary;          // short machine-readable result
  nlohmann::json error;            // null on success
};

// Runs one subcommand. Never throws; failures land in `error` and the exit
// code.
RunReport run(const RunRequest& request);

// Config rejected by the schema or by semantic checks.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string message, std::vector<SchemaIssue> issues = {})
      : std::runtime_error(std::move(message)), issues_(std::move(issues)) {}
  const std::vector<SchemaIssue>& issues() const { return issues_; }

 private:
  std::vector<SchemaIssue> issues_;
};

struct LoadedConfig {
  nlohmann::json doc;
  std::string sha256;  // of the raw config bytes
  std::uint64_t seed = 0;
  std::filesystem::path out_dir;
};

LoadedConfig load_config(const std::filesystem::path& path, const std::optional<std::uint64_t>& seed,
                         const std::string& out_dir);
// Parses and schema-validates a config document given as text.
nlohmann::json parse_config(std::string_view text);

std::string sha256_hex(std::string_view bytes);
// 17 significant digits, locale independent.
std::string format_double(double v);
// Writes to a temporary sibling and renames it over `path`.
void write_atomic(const std::filesystem::path& path, std::string_view content);

// Structure table and Galerkin system described by a validated config.
std::shared_ptr<const StructureTable> build_table(const nlohmann::json& cfg);
GalerkinSystem build_system(const nlohmann::json& cfg, std::shared_ptr<const StructureTable> table);
// Label -> value map over the system's state coordinates.
std::vector<double> state_from_map(const GalerkinSystem& sys, const nlohmann::json& map, const char* what);

// Trajectory CSV text: comment line, header `t,q_<label>...,E,Z`, one row per sample.
std::string trajectory_csv(const GalerkinSystem& sys, const Trajectory& traj, const std::string& comment);

}  // namespace nsctl::app
