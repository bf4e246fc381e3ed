#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "adlab/csv.hpp"
#include "adlab/errors.hpp"
#include "adlab/models.hpp"
#include "adlab/scenario.hpp"
#include "support.hpp"

using namespace adlab;
using namespace adlab::test;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
    static int counter = 0;
    const fs::path p = fs::temp_directory_path() /
                       ("adlab_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++) + "_" + name);
    fs::remove_all(p);
    return p;
}

void write_file(const fs::path& p, const std::string& text) {
    fs::create_directories(p.parent_path());
    std::ofstream(p, std::ios::binary) << text;
}

std::string read_file(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

int cli(const std::string& args) {
    const std::string cmd = std::string(ADLAB_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

ErrorCode parse_code(const std::string& text) {
    try {
        parse_scenario(text);
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("scenario parsed: " << text);
    return ErrorCode::InvalidArgument;
}

const char* kQuickDual = R"({
  "model": {"dual_of": "rotating_spin"},
  "params": {"omega0": 1.0, "T": 628.3185307179587},
  "grid_points": 2048,
  "analyses": ["propagate", "amplitudes", "fidelity", "perturbation", "conditions", "dual_check", "t_dependence"]
})";

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("scenario parsing") {
    const auto sc = parse_scenario(R"({"model": "rotating_spin", "params": {"omega": 0.01}, "grid_points": 3})");
    CHECK(sc.total_time() == doctest::Approx(200 * kPi));
    CHECK(sc.analyses == kAnalyses);
    CHECK(sc.initial_eigenstate == 1);
    CHECK(sc.substeps() >= 1);
    const auto nested = parse_scenario(R"({"model": {"dual_of": {"dual_of": "chirped_spin"}},
                                           "params": {"T": 10, "theta_exponent": 3}, "grid_points": 9,
                                           "analyses": ["conditions", "propagate"]})");
    CHECK(nested.model.dual_depth() == 2);
    CHECK(nested.theta_exponent == 3.0);
    CHECK(nested.analyses.size() == 2);
}

TEST_CASE("invalid scenarios are parse errors") {
    for (const char* text : {
             R"({"model": "rotating_spin", "params": {"T": 1}, "grid_points": 9)",
             R"({"model": "rotating_spin", "params": {"T": 1, "omega": 1}, "grid_points": 9})",
             R"({"model": "rotating_spin", "params": {}, "grid_points": 9})",
             R"({"model": "rotating_spin", "params": {"T": 1}, "grid_points": 2})",
             R"({"model": "rotating_spin", "params": {"T": 1}, "grid_points": 9.5})",
             R"({"model": "rotating_spin", "params": {"T": 1}, "grid_points": 9, "colour": 1})",
             R"({"model": "rotating_spin", "params": {"T": -1}, "grid_points": 9})",
             R"({"model": "spinning_top", "params": {"T": 1}, "grid_points": 9})",
             R"({"model": {"dual_of": {"dual_of": {"dual_of": "rotating_spin"}}}, "params": {"T": 1}, "grid_points": 9})",
             R"({"model": "rotating_spin", "params": {"T": 1}, "grid_points": 9, "analyses": ["tea"]})",
             R"({"model": "rotating_spin", "params": {"T": 1}, "grid_points": 9, "tolerances": {"rtol": 1}})",
         })
        CHECK(parse_code(text) == ErrorCode::ParseError);
}

TEST_CASE("number formatting round-trips") {
    CHECK(format_number(0.1) == "0.10000000000000001");
    CHECK(format_number(-0.0) == "0");
    CHECK(format_number(1.0 / 0.0) == "inf");
    CHECK(format_number(-1.0 / 0.0) == "-inf");
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1e6, 1e6);
    for (int i = 0; i < 1000; ++i) {
        const double v = u(rng) * std::pow(10.0, i % 40 - 20);
        CHECK(std::stod(format_number(v)) == v);
    }
}

TEST_CASE("malformed input exits 1 without outputs") {
    const auto dir = scratch("malformed");
    write_file(dir / "bad.json", "{\"model\": ");
    CHECK(cli("run " + (dir / "bad.json").string() + " --out " + (dir / "out").string()) == 1);
    CHECK_FALSE(fs::exists(dir / "out"));
    CHECK(cli("run " + (dir / "missing.json").string() + " --out " + (dir / "out").string()) == 1);
    write_file(dir / "ok.json", kQuickDual);
    CHECK(cli("run " + (dir / "ok.json").string() + " --frobnicate") == 1);
    CHECK(cli("sweep " + (dir / "ok.json").string() + " --param T --values \"\" --out " + (dir / "sw").string()) == 1);
    CHECK(cli("sweep " + (dir / "ok.json").string() + " --param colour --values 1 --out " + (dir / "sw").string()) == 1);
    CHECK_FALSE(fs::exists(dir / "sw"));
    fs::remove_all(dir);
}

TEST_CASE("constant tabulated Hamiltonian is trivially adiabatic") {
    const auto dir = scratch("constant");
    GridHamiltonian g;
    g.grid = uniform_grid(65);
    g.matrices.assign(65, ComplexMatrix{{0.5, cplx(0.1, 0.2)}, {cplx(0.1, -0.2), -0.5}});
    g.T = 20.0;
    write_file(dir / "tables" / "flat.json", to_json(g));
    write_file(dir / "flat.json", R"({"model": {"grid_file": "tables/flat.json"}, "params": {"T": 20},
        "grid_points": 65, "analyses": ["propagate", "fidelity", "amplitudes", "perturbation", "conditions"]})");
    CHECK(cli("run " + (dir / "flat.json").string() + " --out " + (dir / "out").string()) == 0);
    const auto summary = json::parse(read_file(dir / "out" / "summary.json"));
    CHECK(summary["errors"].empty());
    const auto& r = summary["results"];
    CHECK(r["fidelity"]["min"].get<double>() == doctest::Approx(1.0).epsilon(1e-12));
    for (const char* c : {"traditional", "ye"}) {
        CHECK(r["conditions"][c]["verdict"] == "satisfied");
        CHECK(r["conditions"][c]["margin"].get<double>() <= 1e-12);
    }
    CHECK(r["perturbation"]["maxQ"].get<double>() <= 1e-12);
    for (const char* f : {"propagate.csv", "fidelity.csv", "amplitudes.csv", "perturbation.csv", "conditions.csv"})
        CHECK(fs::exists(dir / "out" / f));
    fs::remove_all(dir);
}

TEST_CASE("physics errors exit 2 and are named in the summary") {
    const auto dir = scratch("physics");
    // T does not match the tabulated T.
    GridHamiltonian g;
    g.grid = uniform_grid(9);
    g.matrices.assign(9, pauli::z());
    g.T = 1.0;
    write_file(dir / "t.json", to_json(g));
    write_file(dir / "s.json", R"({"model": {"grid_file": "t.json"}, "params": {"T": 2}, "grid_points": 9,
        "analyses": ["conditions"]})");
    CHECK(cli("run " + (dir / "s.json").string() + " --out " + (dir / "out").string()) == 2);
    const auto summary = json::parse(read_file(dir / "out" / "summary.json"));
    REQUIRE_FALSE(summary["errors"].empty());
    CHECK(summary["errors"][0]["error"] == "GridMismatch");
    fs::remove_all(dir);
}

TEST_CASE("reruns are byte-identical") {
    const auto dir = scratch("determinism");
    write_file(dir / "quick.json", kQuickDual);
    CHECK(cli("run " + (dir / "quick.json").string() + " --quiet --out " + (dir / "a").string()) == 0);
    CHECK(cli("run " + (dir / "quick.json").string() + " --quiet --out " + (dir / "b").string()) == 0);
    std::size_t files = 0;
    for (const auto& e : fs::directory_iterator(dir / "a")) {
        ++files;
        CHECK(read_file(e.path()) == read_file(dir / "b" / e.path().filename()));
    }
    CHECK(files >= 8);
    // --grid overrides grid_points.
    CHECK(cli("run " + (dir / "quick.json").string() + " --quiet --grid 4096 --out " + (dir / "c").string()) == 0);
    const auto fid = read_file(dir / "c" / "fidelity.csv");
    CHECK(std::count(fid.begin(), fid.end(), '\n') == 4097);
    fs::remove_all(dir);
}

TEST_CASE("bundled scenario") {
    const auto sc = load_scenario(fs::path(ADLAB_SOURCE_DIR) / "scenarios" / "paper_sec3.json");
    const auto r = run_scenario(sc);
    const auto& res = r.summary["results"];
    CHECK(res["conditions"]["traditional"]["verdict"] == "satisfied");
    CHECK(res["conditions"]["ye"]["verdict"] == "violated");
    CHECK(res["fidelity"]["min"].get<double>() <= 1e-6);
    CHECK(std::abs(res["fidelity"]["s_at_min"].get<double>() - 0.5) <= 1e-3);
    CHECK(std::abs(res["tau_21"]["im"].get<double>() + kPi) <= 1e-6);
    CHECK(res["perturbation"]["maxQ_over_T"].get<double>() == doctest::Approx(kPi).epsilon(2e-3));
    // The decay probe refuses the T-dependent dual.
    REQUIRE(r.summary["errors"].size() == 1);
    CHECK(r.summary["errors"][0]["analysis"] == "rl_probe");
    CHECK(r.summary["errors"][0]["error"] == "TIndependenceViolated");
    CHECK(r.exit_code == 2);
}

TEST_CASE("sweep of the base system: traditional margin falls as 1/T") {
    const auto dir = scratch("sweep_a");
    const auto sc = parse_scenario(R"({"model": "rotating_spin", "params": {"T": 1}, "grid_points": 16385,
                                       "analyses": ["conditions"]})");
    const std::vector<double> Ts{20 * kPi, 200 * kPi, 2000 * kPi};
    CHECK(run_sweep(sc, "T", Ts, dir) == 0);
    std::istringstream csv(read_file(dir / "sweep.csv"));
    std::string line;
    std::getline(csv, line);
    CHECK(line == "value,traditional_margin,ye_margin,min_fidelity,maxQ_over_T,maxQ_a,status");
    std::vector<double> margin;
    while (std::getline(csv, line)) {
        std::istringstream row(line);
        std::string value, m;
        std::getline(row, value, ',');
        std::getline(row, m, ',');
        margin.push_back(std::stod(m));
        CHECK(line.substr(line.rfind(',') + 1) == "ok");
    }
    REQUIRE(margin.size() == 3);
    CHECK(margin[0] / margin[1] == doctest::Approx(10.0).epsilon(0.01));
    CHECK(margin[1] / margin[2] == doctest::Approx(10.0).epsilon(0.01));
    for (int i = 0; i < 3; ++i) CHECK(fs::exists(dir / ("value_" + std::to_string(i)) / "summary.json"));
    fs::remove_all(dir);
}

TEST_CASE("sweep keeps going past a failing run") {
    const auto dir = scratch("sweep_fail");
    const auto sc = parse_scenario(R"({"model": "rotating_spin", "params": {"T": 1}, "grid_points": 4097,
                                       "analyses": ["perturbation"]})");
    // The second value under-resolves the oscillation (GridTooCoarse).
    CHECK(run_sweep(sc, "T", {100.0, 1e5, 200.0}, dir, 2) == 2);
    const auto text = read_file(dir / "sweep.csv");
    CHECK(text.find("GridTooCoarse") != std::string::npos);
    CHECK(std::count(text.begin(), text.end(), '\n') == 4);
    CHECK(fs::exists(dir / "value_0" / "perturbation.csv"));
    CHECK(fs::exists(dir / "value_2" / "perturbation.csv"));
    CHECK_THROWS_AS(run_sweep(sc, "T", {}, dir), Error);
    fs::remove_all(dir);
}

}  // TEST_SUITE
