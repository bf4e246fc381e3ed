#include "adlab/conditions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "json.hpp"

#include "adlab/errors.hpp"
#include "adlab/perturb.hpp"

namespace adlab {

std::string_view to_string(Verdict v) noexcept {
    switch (v) {
        case Verdict::satisfied: return "satisfied";
        case Verdict::violated: return "violated";
        case Verdict::indeterminate: return "indeterminate";
    }
    return "indeterminate";
}

Verdict verdict_for(double margin, double threshold) {
    if (margin <= threshold) return Verdict::satisfied;
    if (margin >= 1.0) return Verdict::violated;
    return Verdict::indeterminate;
}

std::string to_json(const ConditionReport& r) {
    nlohmann::json j;
    j["condition"] = r.condition;
    j["margin"] = r.margin;
    j["threshold"] = r.threshold;
    j["verdict"] = std::string(to_string(r.verdict));
    j["worst"] = {{"n", r.n + 1}, {"k", r.k + 1}, {"s", r.s}};
    j["notes"] = r.notes;
    return j.dump();
}

namespace {

std::string band_note(double threshold) {
    return "bands: satisfied <= " + std::to_string(threshold) + ", violated >= 1";
}

void finish(ConditionReport& r) {
    r.verdict = verdict_for(r.margin, r.threshold);
    std::string note = band_note(r.threshold);
    if (r.divergent)
        note += "; divergent: denominator below floor at s=" + std::to_string(r.s) + " (margin reported as 1e12)";
    r.notes = note;
}

void offer(ConditionReport& r, double m, std::size_t n, std::size_t k, double s) {
    if (m > r.margin) {
        r.margin = m;
        r.n = n;
        r.k = k;
        r.s = s;
    }
}

// d arg z / ds with null points reported as zero slope.
std::vector<double> phase_rate(const Grid& s, std::span<const cplx> z) {
    const auto phase = unwrap_phase(z);
    double zmax = 0.0;
    for (const auto& v : z) zmax = std::max(zmax, std::abs(v));
    std::vector<double> rate(s.size(), 0.0);
    if (zmax == 0.0) return rate;
    // Differentiate each run of non-null points separately.
    std::size_t a = 0;
    while (a < s.size()) {
        if (std::abs(z[a]) <= 1e-12 * zmax) {
            ++a;
            continue;
        }
        std::size_t b = a;
        while (b < s.size() && std::abs(z[b]) > 1e-12 * zmax) ++b;
        const std::size_t len = b - a;
        if (len >= 3) {
            const auto d = differentiate(std::span(s).subspan(a, len), std::span(phase).subspan(a, len));
            std::copy(d.begin(), d.end(), rate.begin() + static_cast<std::ptrdiff_t>(a));
        } else if (len == 2) {
            const double d = (phase[a + 1] - phase[a]) / (s[a + 1] - s[a]);
            rate[a] = rate[a + 1] = d;
        }
        a = b;
    }
    return rate;
}

void require_parallel(const SpectralPath& path, const char* what) {
    if (path.gauge != Gauge::parallel)
        throw Error(ErrorCode::InvalidArgument, std::string(what) + ": path must be in the parallel gauge");
}

}  // namespace

std::vector<double> unwrap_phase(std::span<const cplx> z, double null_tol) {
    double zmax = 0.0;
    for (const auto& v : z) zmax = std::max(zmax, std::abs(v));
    std::vector<double> out(z.size(), 0.0);
    bool have = false;
    double last = 0.0;
    for (std::size_t j = 0; j < z.size(); ++j) {
        if (zmax == 0.0 || std::abs(z[j]) <= null_tol * zmax) {
            out[j] = last;
            continue;
        }
        const double a = std::arg(z[j]);
        if (!have) {
            last = a;
            have = true;
        } else {
            const double step = wrap_angle(a - last);
            if (std::abs(step) > 0.99 * std::numbers::pi)
                throw Error(ErrorCode::PhaseUnwrapFailed,
                            "phase step " + std::to_string(step) + " rad at index " + std::to_string(j) +
                                " is ambiguous; refine the grid");
            last += step;
        }
        out[j] = last;
    }
    return out;
}

ConditionReport traditional_condition(const SpectralPath& path, double threshold) {
    require_parallel(path, "traditional_condition");
    ConditionReport r;
    r.condition = "traditional";
    r.threshold = threshold;
    const auto ratios = adiabatic_ratios(path);
    const std::size_t N = path.dim();
    for (std::size_t j = 0; j < path.size(); ++j)
        for (std::size_t n = 0; n < N; ++n)
            for (std::size_t k = 0; k < N; ++k)
                if (k != n) offer(r, std::abs(ratios.A[j](n, k)) / path.T, n, k, path.frames[j].s);
    finish(r);
    return r;
}

ConditionReport ye_condition(const SpectralPath& path, double T, double threshold, std::optional<double> denom_floor) {
    require_parallel(path, "ye_condition");
    ConditionReport r;
    r.condition = "ye";
    r.threshold = threshold;
    const std::size_t N = path.dim();
    const Grid s = path.grid();
    for (std::size_t n = 0; n < N; ++n)
        for (std::size_t k = 0; k < N; ++k) {
            if (k == n) continue;
            const auto tau = path.tau_series(n, k);
            const auto rate = phase_rate(s, tau);
            for (std::size_t j = 0; j < s.size(); ++j) {
                const double mag = std::abs(tau[j]);
                if (mag == 0.0) continue;
                const double tg = T * path.frames[j].gap(n, k);
                const double denom = tg - rate[j];
                const double floor = denom_floor.value_or(1e-8 * std::max(std::abs(tg), 1.0));
                if (std::abs(denom) < floor) {
                    r.divergent = true;
                    offer(r, kDivergentMargin, n, k, s[j]);
                    continue;
                }
                offer(r, mag / std::abs(denom), n, k, s[j]);
            }
        }
    finish(r);
    return r;
}

ConditionReport ye_condition_dual_form(const SpectralPath& path_a, double threshold,
                                       std::optional<double> denom_floor) {
    require_parallel(path_a, "ye_condition_dual_form");
    ConditionReport r;
    r.condition = "ye_dual_form";
    r.threshold = threshold;
    const std::size_t N = path_a.dim();
    const Grid s = path_a.grid();
    for (std::size_t n = 0; n < N; ++n)
        for (std::size_t k = 0; k < N; ++k) {
            if (k == n) continue;
            const auto tau = path_a.tau_series(n, k);
            const auto rate = phase_rate(s, tau);
            for (std::size_t j = 0; j < s.size(); ++j) {
                const double mag = std::abs(tau[j]);
                if (mag == 0.0) continue;
                const double tg = path_a.T * path_a.frames[j].gap(n, k);
                const double floor = denom_floor.value_or(1e-8 * std::max(std::abs(tg), 1.0));
                if (std::abs(rate[j]) < floor) {
                    r.divergent = true;
                    offer(r, kDivergentMargin, n, k, s[j]);
                    continue;
                }
                offer(r, mag / std::abs(rate[j]), n, k, s[j]);
            }
        }
    finish(r);
    return r;
}

DecayTable rl_decay_probe(const std::function<Hamiltonian(double T)>& family, std::size_t n, std::size_t k,
                          std::span<const double> T_list, std::size_t min_points) {
    if (T_list.size() < 2) throw Error(ErrorCode::InsufficientSamples, "rl_decay_probe: need at least 2 T values");
    for (double t : T_list)
        if (!(t > 0.0)) throw Error(ErrorCode::InvalidArgument, "rl_decay_probe: T values must be positive");
    // One member per T; rebuilding a family can be expensive.
    std::vector<Hamiltonian> members;
    for (double t : T_list) members.push_back(family(t));
    auto member = [&](double t) {
        const auto pos = static_cast<std::size_t>(std::find(T_list.begin(), T_list.end(), t) - T_list.begin());
        return members.at(pos);
    };
    const Grid probe_s = uniform_grid(64);
    const double drift = probe_T_dependence(member, probe_s, T_list);
    double scale = 0.0;
    for (double s : probe_s) scale = std::max(scale, members.front().at(s, T_list[0]).max_abs());
    if (drift > 1e-12 * std::max(scale, 1.0))
        throw Error(ErrorCode::TIndependenceViolated,
                    "Hamiltonian changes with T (probe " + std::to_string(drift) + "); the decay argument needs H(s)");

    DecayTable table;
    for (std::size_t i = 0; i < T_list.size(); ++i) {
        const double T = T_list[i];
        const Hamiltonian& h = members[i];
        // Largest gap from a coarse pass sets the resolution.
        const auto coarse = decompose_path(h, T, uniform_grid(257));
        double gmax = 0.0;
        for (const auto& f : coarse.frames) gmax = std::max(gmax, std::abs(f.gap(n, k)));
        const auto needed = static_cast<std::size_t>(std::ceil(T * gmax / 0.1)) + 1;
        const std::size_t points = std::max({min_points, needed, std::size_t{3}});
        const auto path = to_parallel_gauge(decompose_path(h, T, uniform_grid(points)));
        const auto sol = first_order(path, T, n);
        double qmax = 0.0;
        for (const auto& q : sol.channel(k).Q) qmax = std::max(qmax, std::abs(q));
        table.rows.push_back({T, points, qmax});
    }

    const double first = table.rows.front().max_Q;
    const double last = table.rows.back().max_Q;
    table.decays = last <= 0.5 * first;
    bool positive = true;
    for (const auto& row : table.rows) positive = positive && row.max_Q > 0.0;
    if (!positive) {
        table.slope = std::numeric_limits<double>::quiet_NaN();
        return table;
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double m = static_cast<double>(table.rows.size());
    for (const auto& row : table.rows) {
        const double x = std::log(row.T), y = std::log(row.max_Q);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double den = m * sxx - sx * sx;
    table.slope = den == 0.0 ? std::numeric_limits<double>::quiet_NaN() : (m * sxy - sx * sy) / den;
    return table;
}

DecayTable rl_decay_probe(const DrivenHamiltonian& h, std::size_t n, std::size_t k, std::span<const double> T_list,
                          std::size_t min_points) {
    const Hamiltonian handle(h);
    return rl_decay_probe([&](double) { return handle; }, n, k, T_list, min_points);
}

}  // namespace adlab
