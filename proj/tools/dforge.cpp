#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "dforge/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Second-order effective Hamiltonians for driven cavity-QED models"};
    app.set_version_flag("--version", dforge::kVersion);
    app.require_subcommand(1);

    dforge::DeriveOptions derive;
    std::string project_level, golden;
    auto* derive_cmd = app.add_subcommand("derive", "Print the effective Hamiltonian and its decomposition");
    derive_cmd->add_option("config", derive.config_path, "Scenario file")->required();
    derive_cmd->add_option("--project-level", project_level, "Drop sigma_LL terms after checking L decouples");
    derive_cmd->add_option("--golden", golden, "Compare against a stored canonical expression");
    derive_cmd->add_option("--ground", derive.ground, "Ground level label for the decomposition");
    derive_cmd->add_option("--excited", derive.excited, "Excited level label for the decomposition");

    dforge::SimulateOptions simulate;
    std::string sim_out;
    auto* simulate_cmd = app.add_subcommand("simulate", "Propagate full and/or effective dynamics to CSV");
    simulate_cmd->add_option("config", simulate.config_path, "Scenario file")->required();
    const std::map<std::string, dforge::SimulationMode> modes{{"full", dforge::SimulationMode::full},
                                                              {"effective", dforge::SimulationMode::effective},
                                                              {"both", dforge::SimulationMode::both}};
    simulate_cmd->add_option("--mode", simulate.mode, "full | effective | both")
        ->transform(CLI::CheckedTransformer(modes, CLI::ignore_case));
    simulate_cmd->add_option("--out", sim_out, "CSV output path (stdout when omitted)");
    simulate_cmd->add_flag("--check-convergence", simulate.check_convergence,
                           "Re-run at half the step and fail (exit 3) if amplitudes move by 1e-6 or more");

    dforge::SweepOptions sweep;
    std::string sweep_out;
    auto* sweep_cmd = app.add_subcommand("sweep", "Worst full-vs-effective infidelity across a parameter");
    sweep_cmd->add_option("config", sweep.config_path, "Scenario file")->required();
    sweep_cmd->add_option("--vary", sweep.vary, "key=v1,v2,...")->required();
    sweep_cmd->add_option("--out", sweep_out, "CSV output path (stdout when omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : dforge::exit_code::usage;
    }

    if (*derive_cmd) {
        if (!project_level.empty()) derive.project_level = project_level;
        if (!golden.empty()) derive.golden_path = golden;
        return dforge::cmd_derive(derive, std::cout, std::cerr);
    }
    if (*simulate_cmd) {
        if (!sim_out.empty()) simulate.out_path = sim_out;
        return dforge::cmd_simulate(simulate, std::cout, std::cerr);
    }
    if (!sweep_out.empty()) sweep.out_path = sweep_out;
    return dforge::cmd_sweep(sweep, std::cout, std::cerr);
}
