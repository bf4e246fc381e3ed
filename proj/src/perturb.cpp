#include "adlab/perturb.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "adlab/csv.hpp"
#include "adlab/errors.hpp"

namespace adlab {

const FirstOrderChannel& FirstOrderSolution::channel(std::size_t k) const {
    for (const auto& c : channels)
        if (c.k == k) return c;
    throw Error(ErrorCode::InvalidArgument, "no first-order channel for level " + std::to_string(k + 1));
}

namespace {

void require_parallel(const SpectralPath& path, const char* what) {
    if (path.gauge != Gauge::parallel)
        throw Error(ErrorCode::InvalidArgument, std::string(what) + ": path must be in the parallel gauge");
}

void require_levels(const SpectralPath& path, std::size_t n, std::size_t k, const char* what) {
    if (n >= path.dim() || k >= path.dim() || n == k)
        throw Error(ErrorCode::InvalidArgument, std::string(what) + ": need two distinct levels in range");
}

std::vector<double> gap_series(const SpectralPath& path, std::size_t n, std::size_t k) {
    std::vector<double> g(path.size());
    for (std::size_t j = 0; j < path.size(); ++j) g[j] = path.frames[j].gap(n, k);
    return g;
}

// T |g| ds must stay below 0.5 on every cell for the trapezoid rule to see the oscillation.
void check_resolution(const Grid& s, const std::vector<double>& g, double T, const char* what) {
    for (std::size_t j = 0; j + 1 < s.size(); ++j) {
        const double cell = T * std::max(std::abs(g[j]), std::abs(g[j + 1])) * (s[j + 1] - s[j]);
        if (cell > 0.5)
            throw Error(ErrorCode::GridTooCoarse, std::string(what) + ": T|g|ds = " + std::to_string(cell) +
                                                      " at s=" + std::to_string(s[j]) + " (limit 0.5)");
    }
}

std::vector<cplx> ratio_series(const SpectralPath& path, std::size_t n, std::size_t k) {
    std::vector<cplx> a(path.size());
    double scale = 1.0;
    for (const auto& f : path.frames)
        for (double e : f.energies) scale = std::max(scale, std::abs(e));
    for (std::size_t j = 0; j < path.size(); ++j) {
        const double g = path.frames[j].gap(n, k);
        if (std::abs(g) < 1e-9 * scale)
            throw Error(ErrorCode::GapTooSmall, "|g_" + std::to_string(n + 1) + std::to_string(k + 1) +
                                                    "| below floor at s=" + std::to_string(path.frames[j].s));
        a[j] = path.frames[j].tau(n, k) / g;
    }
    return a;
}

std::vector<cplx> dynamic_phase(const Grid& s, const std::vector<double>& g, double T) {
    const auto phi = cumulative_trapezoid(s, g);
    std::vector<cplx> out(s.size());
    for (std::size_t j = 0; j < s.size(); ++j) out[j] = std::polar(1.0, -T * phi[j]);
    return out;
}

}  // namespace

FirstOrderSolution first_order(const SpectralPath& path, double T, std::size_t n) {
    require_parallel(path, "first_order");
    if (n >= path.dim()) throw Error(ErrorCode::InvalidArgument, "first_order: initial level out of range");
    if (!(T > 0.0)) throw Error(ErrorCode::InvalidArgument, "first_order: T must be positive");
    FirstOrderSolution sol;
    sol.n = n;
    sol.T = T;
    sol.grid = path.grid();
    const Grid& s = sol.grid;
    for (std::size_t k = 0; k < path.dim(); ++k) {
        if (k == n) continue;
        const auto g = gap_series(path, n, k);
        check_resolution(s, g, T, "first_order");
        const auto a = ratio_series(path, n, k);
        const auto da = differentiate(s, a);
        const auto e = dynamic_phase(s, g, T);
        std::vector<cplx> integrand(s.size());
        for (std::size_t j = 0; j < s.size(); ++j) integrand[j] = e[j] * da[j];

        FirstOrderChannel ch;
        ch.k = k;
        ch.Q = cumulative_trapezoid(s, integrand);
        ch.P.resize(s.size());
        ch.phi.resize(s.size());
        for (std::size_t j = 0; j < s.size(); ++j) {
            ch.P[j] = a[0] - a[j] * e[j];
            ch.phi[j] = (kI / T) * (ch.P[j] + ch.Q[j]);
        }
        sol.channels.push_back(std::move(ch));
    }
    return sol;
}

AmplitudeSeries simplified_b_first_order(const SpectralPath& path_a, std::size_t n) {
    require_parallel(path_a, "simplified_b_first_order");
    if (n >= path_a.dim()) throw Error(ErrorCode::InvalidArgument, "simplified_b_first_order: level out of range");
    AmplitudeSeries out;
    out.grid = path_a.grid();
    out.phi.resize(path_a.dim());
    for (std::size_t k = 0; k < path_a.dim(); ++k) {
        if (k == n) {
            out.phi[k].assign(path_a.size(), cplx{1.0});
            continue;
        }
        const auto integral = cumulative_trapezoid(out.grid, path_a.tau_series(n, k));
        out.phi[k].resize(path_a.size());
        for (std::size_t j = 0; j < path_a.size(); ++j) out.phi[k][j] = -integral[j];
    }
    return out;
}

QApprox q_approx_dual(const SpectralPath& path_a, double T, std::size_t n, std::size_t k) {
    require_parallel(path_a, "q_approx_dual");
    require_levels(path_a, n, k, "q_approx_dual");
    QApprox out;
    const auto tau = path_a.tau_series(n, k);
    const auto integral = cumulative_trapezoid(path_a.grid(), tau);
    out.Q.resize(tau.size());
    for (std::size_t j = 0; j < tau.size(); ++j) out.Q[j] = kI * T * integral[j];

    double amax = 0.0, tmin = std::numeric_limits<double>::infinity(), tmax = 0.0;
    const auto a = ratio_series(path_a, n, k);
    for (std::size_t j = 0; j < tau.size(); ++j) {
        amax = std::max(amax, std::abs(a[j]));
        tmin = std::min(tmin, std::abs(tau[j]));
        tmax = std::max(tmax, std::abs(tau[j]));
    }
    if (amax / T > 0.05)
        out.warnings.push_back("base path fails the traditional condition: max|A|/T = " + std::to_string(amax / T));
    if (!(tmin > 1e-6 * tmax) || tmax == 0.0)
        out.warnings.push_back("|tau_" + std::to_string(n + 1) + std::to_string(k + 1) +
                               "| is not bounded away from zero (min " + std::to_string(tmin) + ")");
    return out;
}

PQRatio pq_ratio(const SpectralPath& path_a, double T, std::size_t n, std::size_t k) {
    require_parallel(path_a, "pq_ratio");
    require_levels(path_a, n, k, "pq_ratio");
    const auto a = ratio_series(path_a, n, k);
    const auto integral = cumulative_trapezoid(path_a.grid(), path_a.tau_series(n, k));
    PQRatio out;
    out.ratio.resize(a.size());
    for (std::size_t j = 0; j < a.size(); ++j) {
        const cplx denom = a[0] + a[j];
        if (std::abs(denom) < 1e-12)
            throw Error(ErrorCode::DivisionGuard,
                        "|A(0) + A(s)| below 1e-12 at s=" + std::to_string(path_a.frames[j].s));
        out.ratio[j] = std::abs(1.0 - (T / denom) * kI * integral[j]);
        out.q_dominant = out.q_dominant || out.ratio[j] > 10.0;
    }
    return out;
}

std::vector<cplx> dA_b_ds(const SpectralPath& path_a, double T, std::size_t n, std::size_t k) {
    require_parallel(path_a, "dA_b_ds");
    require_levels(path_a, n, k, "dA_b_ds");
    const Grid s = path_a.grid();
    const auto g = gap_series(path_a, n, k);
    check_resolution(s, g, T, "dA_b_ds");
    const auto a = ratio_series(path_a, n, k);
    const auto da = differentiate(s, a);
    const auto e = dynamic_phase(s, g, T);
    std::vector<cplx> out(s.size());
    for (std::size_t j = 0; j < s.size(); ++j) out[j] = e[j] * (kI * T * path_a.frames[j].tau(n, k) - da[j]);
    return out;
}

std::string first_order_csv(const FirstOrderSolution& sol, std::size_t k) {
    const auto& ch = sol.channel(k);
    CsvWriter csv({"s", "P_re", "P_im", "Q_re", "Q_im", "phi_re", "phi_im", "ratio"});
    for (std::size_t j = 0; j < sol.grid.size(); ++j) {
        const double p = std::abs(ch.P[j]);
        const double q = std::abs(ch.Q[j]);
        const double r = p > 0.0 ? q / p : (q > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
        csv.row({sol.grid[j], ch.P[j].real(), ch.P[j].imag(), ch.Q[j].real(), ch.Q[j].imag(), ch.phi[j].real(),
                 ch.phi[j].imag(), r});
    }
    return csv.str();
}

}  // namespace adlab
