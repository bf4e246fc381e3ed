#include "adlab/scenario.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>
#include <thread>

#include "adlab/conditions.hpp"
#include "adlab/csv.hpp"
#include "adlab/errors.hpp"
#include "adlab/evolve.hpp"
#include "adlab/models.hpp"
#include "adlab/perturb.hpp"
#include "adlab/spectral.hpp"

namespace adlab {

using nlohmann::json;
namespace fs = std::filesystem;

std::string ModelSpec::label() const {
    if (kind == "dual_of") return "dual_of(" + base->label() + ")";
    if (kind == "grid_file") return "grid_file(" + grid_file.string() + ")";
    return kind;
}

double Scenario::total_time() const { return T ? *T : 2.0 * std::numbers::pi / *omega; }

std::size_t Scenario::substeps() const {
    if (tolerances.substeps) return *tolerances.substeps;
    const double cells = static_cast<double>(std::max<std::size_t>(grid_points, 2) - 1);
    return static_cast<std::size_t>(std::clamp(std::ceil(262144.0 / cells), 1.0, 32.0));
}

namespace {

[[noreturn]] void parse_fail(const std::string& what) { throw Error(ErrorCode::ParseError, what); }

double positive_number(const json& j, const char* key) {
    if (!j.is_number()) parse_fail(std::string(key) + " must be a number");
    const double v = j.get<double>();
    if (!(v > 0.0) || !std::isfinite(v)) parse_fail(std::string(key) + " must be positive and finite");
    return v;
}

std::size_t positive_integer(const json& j, const char* key) {
    if (!j.is_number_integer() || j.get<long long>() < 1) parse_fail(std::string(key) + " must be a positive integer");
    return static_cast<std::size_t>(j.get<long long>());
}

void reject_unknown(const json& obj, std::initializer_list<const char*> known, const char* where) {
    for (const auto& [key, value] : obj.items()) {
        bool ok = false;
        for (const char* k : known) ok = ok || key == k;
        if (!ok) parse_fail(std::string("unknown key '") + key + "' in " + where);
    }
}

ModelSpec parse_model(const json& j, const fs::path& base_dir, int depth) {
    ModelSpec m;
    if (j.is_string()) {
        m.kind = j.get<std::string>();
        if (m.kind != "rotating_spin" && m.kind != "chirped_spin") parse_fail("unknown model '" + m.kind + "'");
        return m;
    }
    if (!j.is_object() || j.size() != 1) parse_fail("model must be a name or an object with one of grid_file, dual_of");
    if (j.contains("grid_file")) {
        if (!j["grid_file"].is_string()) parse_fail("grid_file must be a path string");
        m.kind = "grid_file";
        fs::path p = j["grid_file"].get<std::string>();
        m.grid_file = p.is_absolute() || base_dir.empty() ? p : base_dir / p;
        return m;
    }
    if (j.contains("dual_of")) {
        if (depth >= 2) parse_fail("dual_of nesting deeper than 2");
        m.kind = "dual_of";
        m.base = std::make_shared<const ModelSpec>(parse_model(j["dual_of"], base_dir, depth + 1));
        return m;
    }
    parse_fail("model object needs grid_file or dual_of");
}

}  // namespace

Scenario parse_scenario(std::string_view text, const fs::path& base_dir) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        parse_fail(std::string("scenario is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) parse_fail("scenario must be a JSON object");
    reject_unknown(j, {"model", "params", "grid_points", "initial_eigenstate", "analyses", "tolerances", "out_dir"},
                   "scenario");
    Scenario sc;
    if (!j.contains("model")) parse_fail("scenario needs a model");
    sc.model = parse_model(j["model"], base_dir, 0);

    if (!j.contains("params") || !j["params"].is_object()) parse_fail("scenario needs a params object");
    const json& p = j["params"];
    reject_unknown(p, {"omega0", "T", "omega", "theta_exponent"}, "params");
    if (p.contains("omega0")) sc.omega0 = positive_number(p["omega0"], "omega0");
    if (p.contains("T")) sc.T = positive_number(p["T"], "T");
    if (p.contains("omega")) sc.omega = positive_number(p["omega"], "omega");
    if (sc.T.has_value() == sc.omega.has_value()) parse_fail("give exactly one of params.T and params.omega");
    if (p.contains("theta_exponent")) sc.theta_exponent = positive_number(p["theta_exponent"], "theta_exponent");

    if (!j.contains("grid_points")) parse_fail("scenario needs grid_points");
    sc.grid_points = positive_integer(j["grid_points"], "grid_points");
    if (sc.grid_points < 3) parse_fail("grid_points must be at least 3");
    if (j.contains("initial_eigenstate")) sc.initial_eigenstate = positive_integer(j["initial_eigenstate"], "initial_eigenstate");

    if (j.contains("analyses")) {
        if (!j["analyses"].is_array()) parse_fail("analyses must be an array of names");
        std::set<std::string> seen;
        for (const auto& a : j["analyses"]) {
            if (!a.is_string()) parse_fail("analysis names must be strings");
            const auto name = a.get<std::string>();
            if (std::find(kAnalyses.begin(), kAnalyses.end(), name) == kAnalyses.end())
                parse_fail("unknown analysis '" + name + "'");
            seen.insert(name);
        }
        for (const auto& name : kAnalyses)
            if (seen.count(name)) sc.analyses.push_back(name);
    } else {
        sc.analyses = kAnalyses;
    }

    if (j.contains("tolerances")) {
        const json& t = j["tolerances"];
        if (!t.is_object()) parse_fail("tolerances must be an object");
        reject_unknown(t, {"threshold", "denom_floor", "substeps", "rl_T_factors", "rl_min_points"}, "tolerances");
        if (t.contains("threshold")) {
            sc.tolerances.threshold = positive_number(t["threshold"], "threshold");
            if (sc.tolerances.threshold >= 1.0) parse_fail("threshold must be below 1");
        }
        if (t.contains("denom_floor")) sc.tolerances.denom_floor = positive_number(t["denom_floor"], "denom_floor");
        if (t.contains("substeps")) sc.tolerances.substeps = positive_integer(t["substeps"], "substeps");
        if (t.contains("rl_T_factors")) {
            if (!t["rl_T_factors"].is_array() || t["rl_T_factors"].size() < 2)
                parse_fail("rl_T_factors must list at least two factors");
            sc.tolerances.rl_T_factors.clear();
            for (const auto& f : t["rl_T_factors"]) sc.tolerances.rl_T_factors.push_back(positive_number(f, "rl_T_factors"));
        }
        if (t.contains("rl_min_points")) sc.tolerances.rl_min_points = positive_integer(t["rl_min_points"], "rl_min_points");
    }
    if (j.contains("out_dir")) {
        if (!j["out_dir"].is_string()) parse_fail("out_dir must be a string");
        sc.out_dir = j["out_dir"].get<std::string>();
    }
    return sc;
}

Scenario load_scenario(const fs::path& file) {
    std::ifstream in(file);
    if (!in) throw Error(ErrorCode::IoError, "cannot read scenario " + file.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str(), file.parent_path());
}

namespace {

// A model realised on the scenario grid. Duals carry U = U_base^dagger.
struct System {
    std::shared_ptr<const Hamiltonian> h;
    std::shared_ptr<const System> base;
    std::optional<PropagatorTrace> U;
};

std::shared_ptr<const System> build_system(const ModelSpec& m, const Scenario& sc, double T, const Grid& grid,
                                           std::map<std::string, GridHamiltonian>& files) {
    auto sys = std::make_shared<System>();
    if (m.kind == "rotating_spin") {
        sys->h = std::make_shared<const Hamiltonian>(rotating_spin({sc.omega0, T}));
    } else if (m.kind == "chirped_spin") {
        sys->h = std::make_shared<const Hamiltonian>(chirped_spin(sc.omega0, sc.theta_exponent));
    } else if (m.kind == "grid_file") {
        const auto key = m.grid_file.string();
        if (!files.count(key)) files.emplace(key, load_grid_hamiltonian(key));
        sys->h = std::make_shared<const Hamiltonian>(files.at(key));
    } else {
        auto base = build_system(*m.base, sc, T, grid, files);
        PropagatorTrace ub = base->U ? *base->U
                                     : propagate_unitary(*base->h, T, grid, {.substeps = sc.substeps()});
        sys->h = std::make_shared<const Hamiltonian>(build_dual(*base->h, T, grid, ub.U));
        sys->U = dual_propagator(ub);
        sys->base = std::move(base);
    }
    return sys;
}

SpectralPath system_path(const System& sys, double T, const Grid& grid) {
    if (!sys.base) return to_parallel_gauge(decompose_path(*sys.h, T, grid));
    const auto base = system_path(*sys.base, T, grid);
    return dual_path(*sys.h, T, grid, base);
}

json cplx_json(cplx z) { return {{"re", z.real()}, {"im", z.imag()}}; }

double max_abs(const std::vector<cplx>& v) {
    double m = 0.0;
    for (const auto& z : v) m = std::max(m, std::abs(z));
    return m;
}

struct Context {
    const Scenario& sc;
    double T;
    Grid grid;
    std::map<std::string, GridHamiltonian> files;
    std::shared_ptr<const System> sys;
    std::optional<SpectralPath> path, base_path;
    std::optional<PropagatorTrace> U;
    std::optional<StateTrace> state;
    std::size_t n = 0;

    std::vector<std::size_t> channels() const {
        std::vector<std::size_t> ks;
        for (std::size_t k = 0; k < path->dim(); ++k)
            if (k != n) ks.push_back(k);
        return ks;
    }

    const PropagatorTrace& propagator() {
        if (!U) U = sys->U ? *sys->U : propagate_unitary(*sys->h, T, grid, {.substeps = sc.substeps()});
        return *U;
    }
    const StateTrace& psi() {
        if (!state) state = apply(propagator(), path->frames.front().vectors.column(n));
        return *state;
    }
};

void analysis_propagate(Context& c, json& out, RunResult& r) {
    const auto& u = c.propagator();
    const auto& st = c.psi();
    const std::size_t N = c.sys->h->dim();
    std::vector<std::string> header{"s", "norm", "unitarity_defect"};
    for (std::size_t i = 0; i < N; ++i) {
        header.push_back("psi_re_" + std::to_string(i + 1));
        header.push_back("psi_im_" + std::to_string(i + 1));
    }
    CsvWriter csv(header);
    double worst_u = 0.0, worst_norm = 0.0;
    for (std::size_t j = 0; j < c.grid.size(); ++j) {
        const double d = unitarity_defect(u.U[j]);
        const double nrm = st.psi[j].norm();
        worst_u = std::max(worst_u, d);
        worst_norm = std::max(worst_norm, std::abs(nrm - 1.0));
        std::vector<double> row{c.grid[j], nrm, d};
        for (std::size_t i = 0; i < N; ++i) {
            row.push_back(st.psi[j][i].real());
            row.push_back(st.psi[j][i].imag());
        }
        csv.row(row);
    }
    out = {{"max_unitarity_defect", worst_u},
           {"max_norm_error", worst_norm},
           {"route", c.sys->U ? "dual_identity" : "midpoint"},
           {"substeps", c.sys->U ? 0 : c.sc.substeps()}};
    r.files["propagate.csv"] = csv.str();
}

void analysis_fidelity(Context& c, json& out, RunResult& r) {
    const auto f = fidelity_trace(c.psi(), *c.path, c.n);
    CsvWriter csv({"s", "fidelity"});
    std::size_t at_min = 0, at_half = 0;
    for (std::size_t j = 0; j < f.size(); ++j) {
        csv.row({c.grid[j], f[j]});
        if (f[j] < f[at_min]) at_min = j;
        if (std::abs(c.grid[j] - 0.5) < std::abs(c.grid[at_half] - 0.5)) at_half = j;
    }
    out = {{"min", f[at_min]}, {"s_at_min", c.grid[at_min]}, {"at_half", f[at_half]}, {"s_half", c.grid[at_half]},
           {"final", f.back()}};
    r.files["fidelity.csv"] = csv.str();
}

void analysis_amplitudes(Context& c, json& out, RunResult& r) {
    const auto amps = amplitudes(c.psi(), *c.path, c.T);
    const auto f = fidelity_trace(c.psi(), *c.path, c.n);
    double worst = 0.0, leak = 0.0;
    for (const auto& row : amps.phi) {
        double total = 0.0;
        for (std::size_t i = 0; i < row.size(); ++i) {
            total += std::norm(row[i]);
            if (i != c.n) leak = std::max(leak, std::abs(row[i]));
        }
        worst = std::max(worst, std::abs(total - 1.0));
    }
    out = {{"max_probability_error", worst}, {"max_transition_amplitude", leak}};
    r.files["amplitudes.csv"] = trace_csv(amps, f);
}

void analysis_perturbation(Context& c, json& out, RunResult& r, json& warnings) {
    const auto sol = first_order(*c.path, c.T, c.n);
    double qmax = 0.0, pmax = 0.0;
    json channels = json::array();
    for (const auto& ch : sol.channels) {
        qmax = std::max(qmax, max_abs(ch.Q));
        pmax = std::max(pmax, max_abs(ch.P));
        channels.push_back({{"n", c.n + 1},
                            {"k", ch.k + 1},
                            {"maxQ", max_abs(ch.Q)},
                            {"maxP", max_abs(ch.P)},
                            {"Q_end_over_T", cplx_json(ch.Q.back() / c.T)},
                            {"max_phi", max_abs(ch.phi)}});
        const std::string name = sol.channels.size() == 1
                                     ? "perturbation.csv"
                                     : "perturbation_" + std::to_string(c.n + 1) + "_" + std::to_string(ch.k + 1) + ".csv";
        r.files[name] = first_order_csv(sol, ch.k);
    }
    out = {{"maxQ_over_T", qmax / c.T}, {"maxQ", qmax}, {"maxP", pmax}, {"channels", channels}};

    if (!c.base_path) {
        out["maxQ_a"] = qmax;
        return;
    }
    const auto& pa = *c.base_path;
    const auto sol_a = first_order(pa, c.T, c.n);
    double qa = 0.0;
    for (const auto& ch : sol_a.channels) qa = std::max(qa, max_abs(ch.Q));
    out["maxQ_a"] = qa;

    const auto simple = simplified_b_first_order(pa, c.n);
    json dual = json::array();
    for (std::size_t k : c.channels()) {
        json entry{{"n", c.n + 1}, {"k", k + 1}, {"simplified_phi_end", cplx_json(simple.phi[k].back())}};
        const auto q = q_approx_dual(pa, c.T, c.n, k);
        entry["q_approx_end_over_T"] = cplx_json(q.Q.back() / c.T);
        entry["q_approx_max_over_T"] = max_abs(q.Q) / c.T;
        for (const auto& w : q.warnings) warnings.push_back("perturbation: " + w);
        try {
            const auto pq = pq_ratio(pa, c.T, c.n, k);
            entry["pq_ratio_end"] = pq.ratio.back();
            entry["q_dominant"] = pq.q_dominant;
        } catch (const Error& e) {
            entry["pq_ratio_error"] = std::string(e.name());
        }
        dual.push_back(std::move(entry));
    }
    out["dual"] = std::move(dual);
}

void analysis_conditions(Context& c, json& out, RunResult& r) {
    std::vector<ConditionReport> reports;
    reports.push_back(traditional_condition(*c.path, c.sc.tolerances.threshold));
    reports.push_back(ye_condition(*c.path, c.T, c.sc.tolerances.threshold, c.sc.tolerances.denom_floor));
    if (c.base_path)
        reports.push_back(ye_condition_dual_form(*c.base_path, c.sc.tolerances.threshold, c.sc.tolerances.denom_floor));
    std::ostringstream csv;
    csv << "condition,margin,threshold,verdict,n,k,s\n";
    for (const auto& rep : reports) {
        out[rep.condition] = json::parse(to_json(rep));
        csv << rep.condition << ',' << format_number(rep.margin) << ',' << format_number(rep.threshold) << ','
            << to_string(rep.verdict) << ',' << rep.n + 1 << ',' << rep.k + 1 << ',' << format_number(rep.s) << '\n';
    }
    r.files["conditions.csv"] = csv.str();
}

void analysis_dual_check(Context& c, json& out, RunResult& r) {
    if (!c.base_path) throw Error(ErrorCode::InvalidArgument, "dual_check needs a dual_of model");
    const auto& pa = *c.base_path;
    const auto& pb = *c.path;
    const auto& ub = c.propagator();
    const PropagatorTrace ua = c.sys->base->U ? *c.sys->base->U : dual_propagator(ub);
    const std::size_t N = pa.dim();
    CsvWriter csv({"s", "spectrum_residual", "coupling_residual", "ratio_residual", "inverse_residual"});
    double spec = 0.0, coup = 0.0, ratio = 0.0, inv = 0.0;
    std::vector<std::vector<double>> phase(N);
    for (std::size_t n = 0; n < N; ++n) phase[n] = cumulative_trapezoid(c.grid, pa.energy_series(n));
    for (std::size_t j = 0; j < c.grid.size(); ++j) {
        double sr = 0.0, cr = 0.0, rr = 0.0;
        for (std::size_t n = 0; n < N; ++n) {
            sr = std::max(sr, std::abs(pb.frames[j].energies[n] + pa.frames[j].energies[n]));
            for (std::size_t k = 0; k < N; ++k) {
                if (k == n) continue;
                const cplx pred = pa.frames[j].tau(n, k) * std::polar(1.0, -c.T * (phase[n][j] - phase[k][j]));
                cr = std::max(cr, std::abs(pb.frames[j].tau(n, k) - pred));
                const double ab = std::abs(pb.frames[j].tau(n, k) / pb.frames[j].gap(n, k));
                const double aa = std::abs(pa.frames[j].tau(n, k) / pa.frames[j].gap(n, k));
                rr = std::max(rr, std::abs(ab - aa));
            }
        }
        const double ir = (ub.U[j] * ua.U[j] - ComplexMatrix::identity(N)).max_abs();
        spec = std::max(spec, sr);
        coup = std::max(coup, cr);
        ratio = std::max(ratio, rr);
        inv = std::max(inv, ir);
        csv.row({c.grid[j], sr, cr, rr, ir});
    }
    out = {{"spectrum_residual", spec}, {"coupling_residual", coup}, {"ratio_residual", ratio}, {"inverse_residual", inv}};
    // Direct integration of the tabulated dual Hamiltonian, for comparison only.
    try {
        const auto direct = propagate_unitary(*c.sys->h, c.T, c.grid, {.substeps = c.sc.substeps()});
        double diff = 0.0;
        for (std::size_t j = 0; j < c.grid.size(); ++j) diff = std::max(diff, (direct.U[j] - ub.U[j]).max_abs());
        out["direct_propagation_difference"] = diff;
    } catch (const Error& e) {
        out["direct_propagation_error"] = std::string(e.name());
    }
    r.files["dual_check.csv"] = csv.str();
}

void analysis_t_dependence(Context& c, json& out, RunResult& r) {
    const double T2 = 2.0 * c.T;
    double value = 0.0;
    if (c.sys->base) {
        // Each table lives at its own T; the sample points are grid nodes.
        std::vector<GridHamiltonian> tables;
        for (double t : {c.T, T2}) {
            const auto sys = build_system(c.sc.model, c.sc, t, c.grid, c.files);
            tables.push_back(*sys->h->grid());
        }
        const Grid samples = uniform_grid(std::min<std::size_t>(64, c.grid.size()));
        std::vector<double> nodes;
        for (double s : samples) nodes.push_back(c.grid[tables.front().nearest(s).index]);
        value = probe_T_dependence(tables, nodes);
    } else {
        const auto h = *c.sys->h;
        const std::vector<double> ts{c.T, T2};
        value = probe_T_dependence([&](double) { return h; }, uniform_grid(64), ts);
    }
    out = {{"T1", c.T}, {"T2", T2}, {"probe", value}};
    std::ostringstream csv;
    csv << "T1,T2,probe\n" << format_number(c.T) << ',' << format_number(T2) << ',' << format_number(value) << '\n';
    r.files["t_dependence.csv"] = csv.str();
}

void analysis_rl_probe(Context& c, json& out, RunResult& r) {
    std::vector<double> ts;
    for (double f : c.sc.tolerances.rl_T_factors) ts.push_back(f * c.T);
    const std::size_t min_points = c.sc.tolerances.rl_min_points.value_or(c.sc.grid_points);
    std::size_t k = c.channels().front();
    DecayTable table;
    if (c.sys->base) {
        // The dual family is rebuilt per T on a grid fine enough to propagate.
        table = rl_decay_probe(
            [&](double t) {
                const double hmax = c.sys->base->h->at(0.0, t).max_abs();
                const auto needed = static_cast<std::size_t>(std::ceil(t * hmax / 0.1)) + 1;
                const Grid g = uniform_grid(std::max(c.sc.grid_points, needed));
                return *build_system(c.sc.model, c.sc, t, g, c.files)->h;
            },
            c.n, k, ts, min_points);
    } else {
        const auto h = *c.sys->h;
        table = rl_decay_probe([&](double) { return h; }, c.n, k, ts, min_points);
    }
    json rows = json::array();
    std::ostringstream csv;
    csv << "T,points,max_Q\n";
    for (const auto& row : table.rows) {
        rows.push_back({{"T", row.T}, {"points", row.points}, {"max_Q", row.max_Q}});
        csv << format_number(row.T) << ',' << row.points << ',' << format_number(row.max_Q) << '\n';
    }
    out = {{"rows", rows}, {"decays", table.decays}, {"n", c.n + 1}, {"k", k + 1}};
    if (std::isfinite(table.slope)) out["slope"] = table.slope;
    r.files["rl_probe.csv"] = csv.str();
}

}  // namespace

RunResult run_scenario(const Scenario& sc) {
    RunResult r;
    json errors = json::array();
    json warnings = json::array();
    json results = json::object();
    bool input_error = false, physics_error = false;

    auto record = [&](const std::string& analysis, const std::exception& e) {
        const auto* err = dynamic_cast<const Error*>(&e);
        const std::string name = err ? std::string(err->name()) : "InternalError";
        (err && is_input_error(err->code()) ? input_error : physics_error) = true;
        errors.push_back({{"analysis", analysis}, {"error", name}, {"message", e.what()}});
    };

    Context c{sc, sc.total_time(), uniform_grid(sc.grid_points), {}, nullptr, {}, {}, {}, {}, 0};
    bool ready = false;
    try {
        c.sys = build_system(sc.model, sc, c.T, c.grid, c.files);
        if (sc.initial_eigenstate > c.sys->h->dim())
            throw Error(ErrorCode::InvalidArgument, "initial_eigenstate exceeds the model dimension");
        c.n = sc.initial_eigenstate - 1;
        c.path = system_path(*c.sys, c.T, c.grid);
        if (c.sys->base) c.base_path = system_path(*c.sys->base, c.T, c.grid);
        ready = true;
        if (c.path->dim() >= 2) {
            results["tau_21"] = cplx_json(c.path->frames.front().tau(1, 0));
            if (c.base_path) results["tau_21_base"] = cplx_json(c.base_path->frames.front().tau(1, 0));
        }
    } catch (const std::exception& e) {
        record("setup", e);
    }

    if (ready) {
        for (const auto& name : sc.analyses) {
            json out = json::object();
            try {
                if (name == "propagate") analysis_propagate(c, out, r);
                else if (name == "fidelity") analysis_fidelity(c, out, r);
                else if (name == "amplitudes") analysis_amplitudes(c, out, r);
                else if (name == "perturbation") analysis_perturbation(c, out, r, warnings);
                else if (name == "conditions") analysis_conditions(c, out, r);
                else if (name == "dual_check") analysis_dual_check(c, out, r);
                else if (name == "t_dependence") analysis_t_dependence(c, out, r);
                else if (name == "rl_probe") analysis_rl_probe(c, out, r);
                results[name] = std::move(out);
            } catch (const std::exception& e) {
                record(name, e);
            }
        }
    }

    json scenario{{"model", sc.model.label()},
                  {"omega0", sc.omega0},
                  {"T", c.T},
                  {"grid_points", sc.grid_points},
                  {"initial_eigenstate", sc.initial_eigenstate},
                  {"analyses", sc.analyses},
                  {"threshold", sc.tolerances.threshold},
                  {"substeps", sc.substeps()}};
    if (sc.model.kind == "chirped_spin") scenario["theta_exponent"] = sc.theta_exponent;
    r.summary = {{"scenario", scenario}, {"results", results}, {"errors", errors}, {"warnings", warnings}};
    r.exit_code = input_error ? 1 : (physics_error ? 2 : 0);
    return r;
}

void write_outputs(const RunResult& r, const fs::path& out_dir) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create " + out_dir.string() + ": " + ec.message());
    auto write = [&](const std::string& name, const std::string& text) {
        std::ofstream f(out_dir / name, std::ios::binary);
        f << text;
        if (!f) throw Error(ErrorCode::IoError, "cannot write " + (out_dir / name).string());
    };
    for (const auto& [name, text] : r.files) write(name, text);
    write("summary.json", r.summary.dump(2) + "\n");
}

namespace {

double pick(const json& j, std::initializer_list<const char*> keys) {
    const json* cur = &j;
    for (const char* k : keys) {
        if (!cur->is_object() || !cur->contains(k)) return std::numeric_limits<double>::quiet_NaN();
        cur = &(*cur)[k];
    }
    return cur->is_number() ? cur->get<double>() : std::numeric_limits<double>::quiet_NaN();
}

std::size_t worker_count(std::size_t requested, std::size_t jobs) {
    std::size_t n = requested;
    if (n == 0) {
        if (const char* env = std::getenv("ADLAB_THREADS")) {
            char* end = nullptr;
            const long v = std::strtol(env, &end, 10);
            if (end != env && v > 0) n = static_cast<std::size_t>(v);
        }
    }
    if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
    return std::max<std::size_t>(1, std::min(n, jobs));
}

}  // namespace

int run_sweep(const Scenario& sc, const std::string& param, const std::vector<double>& values, const fs::path& out_dir,
              std::size_t threads) {
    if (values.empty()) throw Error(ErrorCode::InvalidArgument, "sweep needs at least one value");
    if (param != "T" && param != "omega0" && param != "grid_points" && param != "theta_exponent")
        throw Error(ErrorCode::InvalidArgument, "cannot sweep '" + param + "'");
    std::vector<Scenario> runs;
    for (double v : values) {
        if (!(v > 0.0) || !std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "sweep values must be positive");
        Scenario s = sc;
        if (param == "T") {
            s.T = v;
            s.omega.reset();
        } else if (param == "omega0") {
            s.omega0 = v;
        } else if (param == "theta_exponent") {
            s.theta_exponent = v;
        } else {
            if (v != std::floor(v) || v < 3) throw Error(ErrorCode::InvalidArgument, "grid_points values must be integers >= 3");
            s.grid_points = static_cast<std::size_t>(v);
        }
        s.out_dir = out_dir / ("value_" + std::to_string(runs.size()));
        runs.push_back(std::move(s));
    }

    struct Row {
        json summary;
        int code = 0;
        std::string status;
    };
    std::vector<Row> rows(runs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < runs.size(); i = next++) {
            try {
                auto res = run_scenario(runs[i]);
                write_outputs(res, runs[i].out_dir);
                rows[i].summary = std::move(res.summary);
                rows[i].code = res.exit_code;
                const auto& errs = rows[i].summary["errors"];
                rows[i].status = errs.empty() ? "ok" : errs.front()["error"].get<std::string>();
            } catch (const Error& e) {
                rows[i].code = is_input_error(e.code()) ? 1 : 2;
                rows[i].status = std::string(e.name());
            }
        }
    };
    const std::size_t n_workers = worker_count(threads, runs.size());
    std::vector<std::thread> pool;
    for (std::size_t w = 1; w < n_workers; ++w) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    std::ostringstream csv;
    csv << "value,traditional_margin,ye_margin,min_fidelity,maxQ_over_T,maxQ_a,status\n";
    int code = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const json& res = rows[i].summary.is_object() ? rows[i].summary["results"] : json();
        csv << format_number(values[i]) << ',' << format_number(pick(res, {"conditions", "traditional", "margin"}))
            << ',' << format_number(pick(res, {"conditions", "ye", "margin"})) << ','
            << format_number(pick(res, {"fidelity", "min"})) << ','
            << format_number(pick(res, {"perturbation", "maxQ_over_T"})) << ','
            << format_number(pick(res, {"perturbation", "maxQ_a"})) << ',' << rows[i].status << '\n';
        code = std::max(code, rows[i].code);
    }
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    std::ofstream f(out_dir / "sweep.csv", std::ios::binary);
    f << csv.str();
    if (!f) throw Error(ErrorCode::IoError, "cannot write " + (out_dir / "sweep.csv").string());
    return code;
}

}  // namespace adlab
