#pragma once

// Command-line front end: configuration, the six commands and the argument parser.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "stackelberg/simulate.hpp"
#include "stackelberg/target.hpp"

namespace stackelberg::cli {

struct RunConfig {
    GameParams params;
    target::GridOptions grid;
    simulate::SimConfig sim;
    std::filesystem::path out_dir = "out";
    /// Layer stride for surface.csv and boundaries.csv.
    int stride = 10;
};

/// {"params": {...}, "grid": {...}, "sim": {...}}; only "params" is required and unknown keys
/// are rejected.
void from_json(const nlohmann::json& j, RunConfig& config);
RunConfig load_config(const std::filesystem::path& path);

struct SimulateOptions {
    std::string kind = "all";
    std::optional<double> gain;
    std::optional<double> y0;
    bool solve = false;
};

struct SweepOptions {
    double x0_min = -1.0;
    double x0_max = 1.0;
    int n = 21;
    bool no_shift = false;
};

// Each command writes its CSVs into config.out_dir and echoes a short summary to log.
void cmd_closed_forms(const RunConfig& config, std::ostream& log);
void cmd_boundaries(const RunConfig& config, std::ostream& log);
void cmd_leader(const RunConfig& config, std::ostream& log);
void cmd_simulate(const RunConfig& config, const SimulateOptions& options, std::ostream& log);
void cmd_sweep(const RunConfig& config, const SweepOptions& options, std::ostream& log);
void cmd_compare(const RunConfig& config, std::ostream& log);

/// Parses args (without the program name) and dispatches. Returns the process exit code:
/// 0 on success, 2 on invalid parameters or configuration, 1 on solver failures, CLI11's
/// code on usage errors.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace stackelberg::cli
