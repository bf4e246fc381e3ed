// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fail.
#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "adlab/conditions.hpp"
#include "adlab/errors.hpp"
#include "adlab/evolve.hpp"
#include "adlab/perturb.hpp"
#include "adlab/scenario.hpp"
#include "support.hpp"

using namespace adlab;
using namespace adlab::test;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances.
constexpr double kTauTol = 1e-6;
constexpr double kMethodTol = 1e-4;
constexpr double kFidelityTol = 1e-6;
constexpr double kAmplitudeTol = 1e-6;
constexpr double kEnvelopeSlack = 1e-4;
constexpr double kQTol = 1e-3;
constexpr double kQRelTol = 5e-3;
constexpr double kMarginTol = 1e-8;
constexpr double kMarginRel = 0.01;
constexpr double kCapFloor = 1e10;
constexpr double kDecayRatio = 0.2;
constexpr double kSlopeLo = -1.3, kSlopeHi = -0.7;
constexpr double kSweepRel = 0.01;
constexpr double kProbeZero = 1e-14;
constexpr double kUnitarityTol = 1e-10;
constexpr double kAntiHermTol = 1e-6;
constexpr double kNormTol = 1e-9;
constexpr double kConvergence = 3.5;
constexpr double kInvolutionTol = 2 * kUnitarityTol;

int failures = 0;

void report(int id, bool ok, const std::string& what, const std::string& detail) {
    std::printf("criterion %2d: %s  %s  [%s]\n", id, ok ? "PASS" : "FAIL", what.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

std::string fmt(const char* f, double a) {
    char buf[96];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

std::string fmt(const char* f, double a, double b) {
    char buf[160];
    std::snprintf(buf, sizeof buf, f, a, b);
    return buf;
}

std::string fmt(const char* f, double a, double b, double c) {
    char buf[200];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

void guarded(int id, const std::string& what, const std::function<void()>& body) {
    try {
        body();
    } catch (const std::exception& e) {
        report(id, false, what, std::string("threw: ") + e.what());
    }
}

std::string read_file(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

SpectralPath spinor_path(const Hamiltonian& h, double T, const Grid& grid,
                         std::optional<CouplingMethod> method = std::nullopt) {
    return align_phases(to_parallel_gauge(decompose_path(h, T, grid, method)), rotating_field_spinors(0.0));
}

constexpr double kT = 200 * kPi;  // omega0 = 1, omega / omega0 = 0.01

void coupling_constant() {
    const Hamiltonian h = rotating_spin({.omega0 = 1.0, .T = kT});
    const auto hf = spinor_path(h, kT, uniform_grid(4097), CouplingMethod::hellmann_feynman);
    const auto fd = coupling_matrix(hf, CouplingMethod::finite_difference);
    double err = 0.0, gap = 0.0;
    for (std::size_t j = 0; j < hf.size(); ++j) {
        err = std::max(err, std::abs(hf.frames[j].tau(1, 0) - cplx(0, -kPi)));
        gap = std::max(gap, std::abs(hf.frames[j].tau(1, 0) - fd.frames[j].tau(1, 0)));
        gap = std::max(gap, std::abs(hf.frames[j].tau(0, 1) - fd.frames[j].tau(0, 1)));
    }
    report(1, err <= kTauTol && gap <= kMethodTol, "tau_21 = -i pi; HF vs FD",
           fmt("max|tau+i pi| = %.3g, max|HF-FD| = %.3g", err, gap));
}

struct DualRun {
    Grid grid = uniform_grid(8192);
    Hamiltonian ha = rotating_spin({.omega0 = 1.0, .T = kT});
    PropagatorTrace ua = propagate_unitary(ha, kT, grid, {.substeps = 32});
    SpectralPath pa = spinor_path(ha, kT, grid);
    SpectralPath pb = dual_path(build_dual(ha, kT, grid, ua.U), kT, grid, pa);
    PropagatorTrace ub = dual_propagator(ua);
    StateTrace sb = apply(ub, pa.frames.front().vectors.column(0));
};

void exact_fidelity(const DualRun& d) {
    const auto fb = fidelity_trace(d.sb, d.pb, 0);
    double worst = 0.0;
    for (std::size_t j = 0; j < d.grid.size(); ++j) {
        const double c = std::cos(kPi * d.grid[j]);
        worst = std::max(worst, std::abs(fb[j] - c * c));
    }
    // 8192 points: s = 0.5 is not a node; interpolate linearly between the neighbours.
    const double x = 0.5 * (d.grid.size() - 1);
    const auto lo = static_cast<std::size_t>(x);
    const double f_half = fb[lo] + (x - lo) * (fb[lo + 1] - fb[lo]);
    report(2, worst <= kFidelityTol && f_half <= kFidelityTol, "dual fidelity = cos^2(pi s)",
           fmt("max|F - cos^2| = %.3g, F(0.5) = %.3g", worst, f_half));
}

void first_order_amplitude(const DualRun& d) {
    const auto fo = simplified_b_first_order(d.pa, 0);
    const auto ab = amplitudes(d.sb, d.pb, kT);
    double lin = 0.0, env = -1.0;
    for (std::size_t j = 0; j < d.grid.size(); ++j) {
        const double s = d.grid[j];
        lin = std::max(lin, std::abs(fo.phi[1][j] - cplx(0.0, kPi * s)));
        const double dev = std::abs(std::abs(fo.phi[1][j]) - std::abs(ab.phi[j][1]));
        const double phase_free = std::abs(fo.phi[1][j] - cplx(0.0, std::sin(kPi * s)));
        env = std::max(env, std::max(dev, phase_free) - (std::pow(kPi * s, 3) / 6 + kEnvelopeSlack));
    }
    report(3, lin <= kAmplitudeTol && env <= 0.0, "phi_2 = i pi s inside the Taylor envelope",
           fmt("max|phi - i pi s| = %.3g, worst envelope excess = %.3g", lin, env));
}

void q_magnitude() {
    const Grid grid = uniform_grid(32769);
    const Hamiltonian ha = rotating_spin({.omega0 = 1.0, .T = kT});
    const auto pa = spinor_path(ha, kT, grid);
    const auto ua = propagate_unitary(ha, kT, grid, {.substeps = 8});
    const auto pb = dual_path(build_dual(ha, kT, grid, ua.U), kT, grid, pa);
    const auto& q = first_order(pb, kT, 1).channel(0).Q;
    const auto approx = q_approx_dual(pa, kT, 1, 0);
    double exact_err = 0.0, approx_err = 0.0, rel = 0.0;
    for (std::size_t j = 0; j < grid.size(); ++j) {
        const double s = grid[j];
        exact_err = std::max(exact_err, std::abs(std::abs(q[j] / kT) - kPi * s));
        approx_err = std::max(approx_err, std::abs(std::abs(approx.Q[j] / kT) - kPi * s));
        if (s >= 0.1) rel = std::max(rel, std::abs(q[j] - approx.Q[j]) / std::abs(approx.Q[j]));
    }
    const cplx end = q.back() / kT;
    report(4, exact_err <= kQTol && approx_err <= kQTol && rel <= kQRelTol, "|Q_21/T| = pi s, exact vs approximate",
           fmt("exact %.3g, approx %.3g, rel %.3g", exact_err, approx_err, rel) +
               fmt(", Q(1)/T = %+.6f%+.6fi (sign recorded)", end.real(), end.imag()));
}

void traditional(const DualRun& d) {
    const auto ra = traditional_condition(d.pa);
    const auto rb = traditional_condition(d.pb);
    const double target = kPi / kT;
    const bool ok = std::abs(ra.margin - rb.margin) <= kMarginTol &&
                    std::abs(ra.margin - target) <= kMarginRel * target && ra.verdict == Verdict::satisfied &&
                    rb.verdict == Verdict::satisfied;
    report(5, ok, "traditional condition satisfied on both systems",
           fmt("margin a = %.10g, margin b = %.10g, pi/T = %.10g", ra.margin, rb.margin, target));
}

void ye(const DualRun& d) {
    const auto ya = ye_condition(d.pa, kT);
    const auto yb = ye_condition(d.pb, kT);
    const double trad = traditional_condition(d.pa).margin;
    const bool ok = std::abs(ya.margin - trad) <= kMarginTol && yb.margin >= kCapFloor && yb.verdict == Verdict::violated;
    report(6, ok, "Ye condition: base = traditional, dual capped and violated",
           fmt("a = %.10g, b = %.3g", ya.margin, yb.margin) + ", verdict b = " + std::string(to_string(yb.verdict)));
}

void decay() {
    const std::vector<double> Ts{100.0, 1000.0};
    const auto t = rl_decay_probe(chirped_spin(1.0, 2.0), 0, 1, Ts);
    const double ratio = t.rows[1].max_Q / t.rows[0].max_Q;
    report(7, ratio <= kDecayRatio && t.slope >= kSlopeLo && t.slope <= kSlopeHi, "Riemann-Lebesgue decay, chirped field",
           fmt("ratio = %.4g, slope = %.4g", ratio, t.slope));
}

void q_growth() {
    const fs::path dir = fs::temp_directory_path() / ("adlab_accept_sweep_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    const auto sc = parse_scenario(R"({"model": {"dual_of": "rotating_spin"}, "params": {"omega0": 1, "T": 1},
                                       "grid_points": 65536, "analyses": ["perturbation"]})");
    const int rc = run_sweep(sc, "T", {20 * kPi, 200 * kPi, 2000 * kPi}, dir);
    std::istringstream csv(read_file(dir / "sweep.csv"));
    std::string line;
    std::getline(csv, line);
    std::vector<double> v;
    while (std::getline(csv, line)) {
        std::istringstream row(line);
        std::string cell;
        for (int c = 0; c < 5; ++c) std::getline(row, cell, ',');
        v.push_back(std::stod(cell));
    }
    fs::remove_all(dir);
    bool ok = rc == 0 && v.size() == 3;
    double spread = 0.0;
    if (ok) {
        const double lo = std::min({v[0], v[1], v[2]}), hi = std::max({v[0], v[1], v[2]});
        spread = (hi - lo) / lo;
        ok = spread <= kSweepRel;
    }
    report(8, ok, "max|Q_21^b|/T constant over T = 20 pi, 200 pi, 2000 pi",
           v.size() == 3 ? fmt("%.6f, %.6f, %.6f", v[0], v[1], v[2]) + fmt(", spread %.3g", spread)
                         : "sweep exit " + std::to_string(rc));
}

void t_probe() {
    const std::vector<double> s = uniform_grid(64);
    const std::vector<double> Ts{200 * kPi, 400 * kPi};
    const double quarter = (2 * kPi / Ts[0]) / 4;
    const double base = probe_T_dependence(rotating_spin({.omega0 = 1.0, .T = Ts[0]}), s, Ts);
    const double analytic = probe_T_dependence(dual_first_order({.omega0 = 1.0, .T = Ts[0]}), s, Ts);
    std::vector<GridHamiltonian> family;
    for (double T : Ts) {
        const Grid grid = uniform_grid(8193);
        std::vector<ComplexMatrix> u;
        for (double x : grid) u.push_back(rotating_spin_U(1.0, T, x));
        family.push_back(build_dual(rotating_spin({.omega0 = 1.0, .T = T}), T, grid, u));
    }
    const double tabulated = probe_T_dependence(family, s);
    report(9, base <= kProbeZero && analytic >= quarter && tabulated >= quarter, "T-dependence probe",
           fmt("H^a %.3g, first-order dual %.4g, tabulated dual %.4g", base, analytic, tabulated) +
               fmt(" (omega/4 = %.4g)", quarter));
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(ADLAB_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void structure(const DualRun& d) {
    double unitarity = 0.0;
    for (const auto& u : d.ua.U) unitarity = std::max(unitarity, unitarity_defect(u));
    for (const auto& u : d.ub.U) unitarity = std::max(unitarity, unitarity_defect(u));

    double anti = 0.0;
    for (const auto* p : {&d.pa, &d.pb})
        for (const auto& f : p->frames)
            for (std::size_t n = 0; n < 2; ++n)
                for (std::size_t k = 0; k < 2; ++k) anti = std::max(anti, std::abs(f.tau(n, k) + std::conj(f.tau(k, n))));

    double norm = 0.0;
    const auto ab = amplitudes(d.sb, d.pb, kT);
    for (const auto& row : ab.phi) norm = std::max(norm, std::abs(std::norm(row[0]) + std::norm(row[1]) - 1.0));

    std::vector<double> err;
    for (std::size_t cells : {4096, 8192, 16384}) {
        const auto u = propagate_unitary(d.ha, kT, uniform_grid(cells + 1));
        err.push_back(max_diff(u.U.back(), rotating_spin_U(1.0, kT, 1.0)));
    }
    const double order = std::min(err[0] / err[1], err[1] / err[2]);

    const Grid g = uniform_grid(4097);
    const auto ua = propagate_unitary(d.ha, kT, g, {.substeps = 8});
    const auto hb = build_dual(d.ha, kT, g, ua.U);
    const auto hc = build_dual(hb, kT, g, dual_propagator(ua).U);
    double involution = 0.0;
    for (std::size_t j = 0; j < g.size(); ++j) involution = std::max(involution, max_diff(hc.matrices[j], d.ha.at(g[j], kT)));

    const fs::path dir = fs::temp_directory_path() / ("adlab_accept_cli_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    const std::string scenario = (fs::path(ADLAB_SOURCE_DIR) / "scenarios" / "paper_sec3.json").string();
    const int rc1 = run_cli("run " + scenario + " --quiet --out " + (dir / "first").string());
    const int rc2 = run_cli("run " + scenario + " --quiet --out " + (dir / "second").string());
    std::size_t files = 0, differing = 0;
    std::size_t hash1 = 0, hash2 = 0;
    if (fs::exists(dir / "first"))
        for (const auto& e : fs::directory_iterator(dir / "first")) {
            ++files;
            const auto a = read_file(e.path()), b = read_file(dir / "second" / e.path().filename());
            hash1 ^= std::hash<std::string>{}(a) + 0x9e3779b97f4a7c15ULL * files;
            hash2 ^= std::hash<std::string>{}(b) + 0x9e3779b97f4a7c15ULL * files;
            if (a != b) ++differing;
        }
    fs::remove_all(dir);
    const bool deterministic = rc1 == rc2 && files > 0 && differing == 0 && hash1 == hash2;

    const bool ok = unitarity <= kUnitarityTol && anti <= kAntiHermTol && norm <= kNormTol && order >= kConvergence &&
                    involution <= kInvolutionTol && deterministic;
    report(10, ok, "structural properties",
           fmt("unitarity %.3g, anti-Hermiticity %.3g, norm %.3g", unitarity, anti, norm) +
               fmt(", halving factor %.3g, involution %.3g", order, involution) + ", reruns " +
               std::to_string(files) + " files " + (deterministic ? "identical" : "DIFFER") + " (exit " +
               std::to_string(rc1) + ")");
}

}  // namespace

int main() {
    guarded(1, "tau_21 = -i pi; HF vs FD", coupling_constant);
    std::unique_ptr<DualRun> d;
    try {
        d = std::make_unique<DualRun>();
    } catch (const std::exception& e) {
        std::printf("dual setup failed: %s\n", e.what());
    }
    if (d) {
        guarded(2, "dual fidelity", [&] { exact_fidelity(*d); });
        guarded(3, "first-order amplitude", [&] { first_order_amplitude(*d); });
    } else {
        report(2, false, "dual fidelity", "no setup");
        report(3, false, "first-order amplitude", "no setup");
    }
    guarded(4, "Q magnitude", q_magnitude);
    if (d) {
        guarded(5, "traditional condition", [&] { traditional(*d); });
        guarded(6, "Ye condition", [&] { ye(*d); });
    } else {
        report(5, false, "traditional condition", "no setup");
        report(6, false, "Ye condition", "no setup");
    }
    guarded(7, "Riemann-Lebesgue decay", decay);
    guarded(8, "Q growth in T", q_growth);
    guarded(9, "T-dependence probe", t_probe);
    if (d)
        guarded(10, "structural properties", [&] { structure(*d); });
    else
        report(10, false, "structural properties", "no setup");
    std::printf("%d of 10 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
