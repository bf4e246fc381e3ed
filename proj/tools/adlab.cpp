// adlab - batch front-end: run a scenario file or sweep one of its parameters.
#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "adlab/errors.hpp"
#include "adlab/scenario.hpp"

namespace {

int input_failure(const std::exception& e) {
    std::cerr << "adlab: " << e.what() << '\n';
    return 1;
}

std::vector<double> split_values(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != item.size()) throw adlab::Error(adlab::ErrorCode::ParseError, "bad sweep value '" + item + "'");
        out.push_back(v);
    }
    return out;
}

void print_summary(const nlohmann::json& s) {
    const auto& res = s["results"];
    if (res.contains("conditions"))
        for (const auto& [name, rep] : res["conditions"].items())
            std::cout << name << ": " << rep["verdict"].get<std::string>() << " (margin " << rep["margin"].dump()
                      << ")\n";
    if (res.contains("fidelity"))
        std::cout << "min fidelity: " << res["fidelity"]["min"].dump() << " at s=" << res["fidelity"]["s_at_min"].dump()
                  << '\n';
    if (res.contains("perturbation"))
        std::cout << "max |Q|/T: " << res["perturbation"]["maxQ_over_T"].dump() << '\n';
    for (const auto& e : s["errors"])
        std::cout << "error in " << e["analysis"].get<std::string>() << ": " << e["error"].get<std::string>() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"adlab - driven quantum systems, their inverse-evolving duals and adiabatic conditions"};
    app.require_subcommand(1);

    std::string run_file, run_out;
    std::size_t run_grid = 0;
    bool quiet = false;
    auto* run = app.add_subcommand("run", "run one scenario");
    run->add_option("file", run_file, "scenario JSON")->required();
    run->add_option("--out", run_out, "output directory (overrides out_dir)");
    run->add_option("--grid", run_grid, "grid points (overrides grid_points)")->check(CLI::Range(3ul, 1ul << 26));
    run->add_flag("--quiet", quiet, "print nothing on success");

    std::string sweep_file, sweep_param, sweep_values, sweep_out;
    auto* sweep = app.add_subcommand("sweep", "run a scenario once per parameter value");
    sweep->add_option("file", sweep_file, "scenario JSON")->required();
    sweep->add_option("--param", sweep_param, "T, omega0, grid_points or theta_exponent")->required();
    sweep->add_option("--values", sweep_values, "comma-separated values")->required();
    sweep->add_option("--out", sweep_out, "output directory (overrides out_dir)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    if (*run) {
        adlab::Scenario sc;
        try {
            sc = adlab::load_scenario(run_file);
        } catch (const adlab::Error& e) {
            return input_failure(e);
        }
        if (run_grid) sc.grid_points = run_grid;
        if (!run_out.empty()) sc.out_dir = run_out;
        const auto result = adlab::run_scenario(sc);
        if (result.exit_code == 1) {
            for (const auto& e : result.summary["errors"]) std::cerr << "adlab: " << e["message"].get<std::string>() << '\n';
            return 1;
        }
        try {
            adlab::write_outputs(result, sc.out_dir);
        } catch (const adlab::Error& e) {
            return input_failure(e);
        }
        if (!quiet || result.exit_code != 0) print_summary(result.summary);
        return result.exit_code;
    }

    try {
        auto sc = adlab::load_scenario(sweep_file);
        const auto values = split_values(sweep_values);
        if (values.empty()) throw adlab::Error(adlab::ErrorCode::InvalidArgument, "sweep needs at least one value");
        const auto out = sweep_out.empty() ? sc.out_dir : std::filesystem::path(sweep_out);
        const int code = adlab::run_sweep(sc, sweep_param, values, out);
        std::cout << "sweep: " << values.size() << " runs, table in " << (out / "sweep.csv").string() << '\n';
        return code;
    } catch (const adlab::Error& e) {
        return adlab::is_input_error(e.code()) ? input_failure(e) : (std::cerr << "adlab: " << e.what() << '\n', 2);
    }
}
