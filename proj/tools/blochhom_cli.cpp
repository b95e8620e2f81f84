#include "blochhom/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace blochhom;

namespace {

int exit_code(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e)) return 2;
    if (dynamic_cast<const NumericalError*>(&e)) return 3;
    if (dynamic_cast<const AssumptionError*>(&e)) return 4;
    return 1;
}

const char* label(int code) {
    switch (code) {
        case 2: return "validation error";
        case 3: return "numerical failure";
        case 4: return "assumption violated";
        default: return "error";
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bloch-wave homogenization: bands, effective masses, couplings, homogenized and fine-scale runs"};
    app.require_subcommand(1);
    std::string scenario_path;
    std::string out_dir;
    bool check_only = false;
    const char* commands[][2] = {
        {"bands", "sample the Bloch bands"},
        {"states", "locate critical points and verify the requested states"},
        {"effmass", "effective-mass tensors from the corrector formula"},
        {"coupling", "golden-rule couplings of the requested pair"},
        {"homogenize", "run the homogenized amplitude system"},
        {"validate", "fine-scale convergence study against the homogenized run"},
        {"resonant", "non-resonance check and resonant chain search"},
        {"all", "every stage the scenario configures"},
    };
    for (const auto& [name, help] : commands) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("--scenario", scenario_path, "scenario file")->required();
        sub->add_option("--out", out_dir, "output directory (overrides [outputs] directory)");
        sub->add_flag("--check-assumptions-only", check_only, "verify (a1)/(a2)/(a2b) and exit 0 or 4");
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    const Command command = parse_command(app.get_subcommands().front()->get_name());

    try {
        const Scenario scenario = load_scenario(scenario_path);
        if (check_only) {
            const auto check = check_assumptions(scenario);
            for (const auto& l : check.lines) std::cout << l << '\n';
            std::cout << (check.satisfied ? "assumptions satisfied" : "assumptions violated") << '\n';
            return check.satisfied ? 0 : 4;
        }
        check_command(scenario, command);
        const std::filesystem::path dir = out_dir.empty() ? scenario.output_directory : out_dir;
        const auto summary = run_pipeline(scenario, command, dir, scenario_path);
        for (const auto& l : summary.lines) std::cout << l << '\n';
        std::cout << "wrote " << summary.artifacts.size() << " files and manifest.json to " << dir.string() << '\n';
        return 0;
    } catch (const std::exception& e) {
        const int code = exit_code(e);
        std::cerr << "blochhom: " << label(code) << ": " << e.what() << '\n';
        return code;
    }
}
