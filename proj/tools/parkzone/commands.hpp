#pragma once

#include <ostream>

#include "parkzone/run_config.hpp"

namespace parkzone::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInputError = 2;
inline constexpr int kExitComputeError = 3;

// Each command writes under `config.out` and returns a process exit code.
int cmd_ingest(const RunConfig& config, std::ostream& log);
int cmd_fit(const RunConfig& config, std::ostream& log);
int cmd_report(const RunConfig& config, std::ostream& log);
int cmd_export_geojson(const RunConfig& config, std::ostream& log);
int cmd_synth(const RunConfig& config, std::ostream& log);

/// Full command line entry point: `parkzone <subcommand> [flags]`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace parkzone::cli
