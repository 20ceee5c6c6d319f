#pragma once

#include <cstdint>
#include <iostream>
#include <string>

#include "ips/config.hpp"

namespace ips {

struct CliOptions {
  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t seed = 2026;
  bool deterministic = false;  // omit the generation-time comment from outputs
};

// Subcommand bodies.  Each reads its parameters from the config, writes its
// CSV (and, where applicable, a summary) into the output directory, echoes
// the summary to `log`, and returns the process exit code: 0 iff every
// verification it ran passed.  Configuration problems throw ConfigError;
// parameter validation problems throw before any computation starts.
int cmd_orbits(const Config& config, const CliOptions& options, std::ostream& log);
int cmd_adversary(const Config& config, const CliOptions& options, std::ostream& log);
int cmd_shadow(const Config& config, const CliOptions& options, std::ostream& log);
int cmd_glue_check(const Config& config, const CliOptions& options, std::ostream& log);
int cmd_hypconst(const Config& config, const CliOptions& options, std::ostream& log);

// Command-line driver behind the ips-cli binary.  Subcommands: orbits,
// adversary, shadow, glue-check, hypconst.  Flags: --config <path>,
// --out <dir>, --seed <u64>, --deterministic.  A --seed flag overrides a
// `seed` key in the config; with neither, the master seed is 2026.  Returns
// 0 iff all verifications pass; config and usage errors return 2 before any
// computation.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run_cli(int argc, const char* const* argv);

}  // namespace ips
