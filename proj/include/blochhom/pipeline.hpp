#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "blochhom/scenario.hpp"

namespace blochhom {

enum class Command { bands, states, effmass, coupling, homogenize, validate, resonant, all };

Command parse_command(std::string_view name);
std::string command_name(Command c);

/// Stage-level requirements of a command (a target state for `coupling`, a
/// [macro] section for `homogenize`, ...). ConfigError before any numerical work.
void check_command(const Scenario& s, Command c);

struct AssumptionCheck {
    bool satisfied = true;
    std::vector<std::string> lines;
};

/// (a1) for the requested states, (a2) for the pair, (a2b) when the pair is resonant.
AssumptionCheck check_assumptions(const Scenario& s);

struct RunSummary {
    std::filesystem::path out_dir;
    std::vector<std::string> artifacts;
    std::vector<std::string> lines;  // human readable highlights
};

/// Runs the stages of `command` in dependency order and writes the artifacts,
/// the plot files and, last, manifest.json. Files listed by a previous manifest
/// in the same directory are removed first. On a stage failure the manifest is
/// written with status "failed" and the error is rethrown.
RunSummary run_pipeline(const Scenario& s, Command command, const std::filesystem::path& out_dir,
                        const std::string& scenario_path = {});

}  // namespace blochhom
