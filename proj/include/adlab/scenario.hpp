// scenario.hpp - JSON scenario files and the batch runner behind the adlab CLI.
#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace adlab {

inline const std::vector<std::string> kAnalyses = {"propagate",    "amplitudes", "fidelity",      "perturbation",
                                                   "conditions",   "dual_check", "t_dependence", "rl_probe"};

struct ModelSpec {
    std::string kind;  // rotating_spin, chirped_spin, grid_file, dual_of
    std::filesystem::path grid_file;
    std::shared_ptr<const ModelSpec> base;  // for dual_of

    int dual_depth() const { return kind == "dual_of" ? 1 + base->dual_depth() : 0; }
    std::string label() const;
};

struct Tolerances {
    double threshold = 0.05;
    std::optional<double> denom_floor;
    // Midpoint steps per grid cell; default keeps about 2^18 steps in total.
    std::optional<std::size_t> substeps;
    std::vector<double> rl_T_factors = {1.0, 10.0};
    std::optional<std::size_t> rl_min_points;
};

struct Scenario {
    ModelSpec model;
    double omega0 = 1.0;
    std::optional<double> T;
    std::optional<double> omega;  // exactly one of T, omega
    double theta_exponent = 2.0;
    std::size_t grid_points = 0;
    std::size_t initial_eigenstate = 1;  // 1-based as in the file
    std::vector<std::string> analyses;
    Tolerances tolerances;
    std::filesystem::path out_dir = "out";

    double total_time() const;  // T, or 2 pi / omega
    std::size_t substeps() const;
};

// Throws ParseError on malformed or invalid content. Relative grid_file
// paths resolve against base_dir.
Scenario parse_scenario(std::string_view text, const std::filesystem::path& base_dir = {});
// Throws IoError, ParseError.
Scenario load_scenario(const std::filesystem::path& file);

struct RunResult {
    int exit_code = 0;  // 0 ok, 2 physics error, 1 input or I/O error
    nlohmann::json summary;
    std::map<std::string, std::string> files;  // file name -> contents
};

// Runs every requested analysis in memory. Module errors are collected in
// summary["errors"] rather than thrown.
RunResult run_scenario(const Scenario& sc);

// Writes summary.json and the CSVs into sc.out_dir. Throws IoError.
void write_outputs(const RunResult& r, const std::filesystem::path& out_dir);

// param is one of T, omega0, grid_points, theta_exponent. Each value runs
// in out_dir/value_<i>; sweep.csv lands in out_dir. Returns 0 when every
// run succeeded, otherwise the largest run exit code. threads = 0 picks
// ADLAB_THREADS or the core count.
int run_sweep(const Scenario& sc, const std::string& param, const std::vector<double>& values,
              const std::filesystem::path& out_dir, std::size_t threads = 0);

}  // namespace adlab
