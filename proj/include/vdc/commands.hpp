#ifndef VDC_COMMANDS_HPP
#define VDC_COMMANDS_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace vdc {

inline constexpr const char* kToolVersion = "0.1.0";

// Serialized result of one CLI command: the full configuration echo plus
// every emitted metric, so a run can be reproduced from the record alone.
struct RunRecord {
  std::string command;
  nlohmann::json config;
  std::uint64_t seed = 0;
  std::map<std::string, double> metrics;
  std::map<std::string, double> timings;  // seconds
  std::vector<std::string> artifact_paths;
  std::vector<std::string> notes;
  std::string tool_version = kToolVersion;
  std::string timestamp;

  nlohmann::json to_json() const;
  static RunRecord from_json(const nlohmann::json& j);
};

struct CommandOptions {
  std::string out_dir = ".";
  std::string format = "json";  // json | csv
  int threads = 1;
};

// One entry point per CLI subcommand; `config` carries the
// subcommand-specific settings (see README for the schemas). Each call is
// deterministic given (config, seed).
RunRecord cmd_zoo_gen(const nlohmann::json& config, std::uint64_t seed,
                      const CommandOptions& opt);
RunRecord cmd_fit(const nlohmann::json& config, std::uint64_t seed,
                  const CommandOptions& opt);
RunRecord cmd_loglik(const nlohmann::json& config, std::uint64_t seed,
                     const CommandOptions& opt);
RunRecord cmd_sample(const nlohmann::json& config, std::uint64_t seed,
                     const CommandOptions& opt);
RunRecord cmd_mi(const nlohmann::json& config, std::uint64_t seed,
                 const CommandOptions& opt);
RunRecord cmd_tc(const nlohmann::json& config, std::uint64_t seed,
                 const CommandOptions& opt);
RunRecord cmd_tc_scaling(const nlohmann::json& config, std::uint64_t seed,
                         const CommandOptions& opt);
RunRecord cmd_bench_bivariate(const nlohmann::json& config, std::uint64_t seed,
                              const CommandOptions& opt);
RunRecord cmd_ipfp_ablation(const nlohmann::json& config, std::uint64_t seed,
                            const CommandOptions& opt);
RunRecord cmd_self_consistency(const nlohmann::json& config, std::uint64_t seed,
                               const CommandOptions& opt);
RunRecord cmd_model_inspect(const nlohmann::json& config, std::uint64_t seed,
                            const CommandOptions& opt);

// Dispatch by command name (used by `vdc rerun` and the determinism check).
RunRecord run_command(const std::string& command, const nlohmann::json& config,
                      std::uint64_t seed, const CommandOptions& opt);

// Re-execute the command stored in a record with its config and seed.
RunRecord rerun_from_record(const RunRecord& record, const CommandOptions& opt);

void write_record(const RunRecord& record, const CommandOptions& opt);

}  // namespace vdc

#endif
