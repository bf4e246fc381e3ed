#include "adlab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "adlab/csv.hpp"
#include "adlab/errors.hpp"

namespace adlab {

Grid SpectralPath::grid() const {
    Grid g;
    g.reserve(frames.size());
    for (const auto& f : frames) g.push_back(f.s);
    return g;
}

std::vector<cplx> SpectralPath::tau_series(std::size_t n, std::size_t k) const {
    std::vector<cplx> out;
    out.reserve(frames.size());
    for (const auto& f : frames) out.push_back(f.tau(n, k));
    return out;
}

std::vector<double> SpectralPath::energy_series(std::size_t n) const {
    std::vector<double> out;
    out.reserve(frames.size());
    for (const auto& f : frames) out.push_back(f.energies[n]);
    return out;
}

namespace {

cplx column_inner(const ComplexMatrix& a, std::size_t ca, const ComplexMatrix& b, std::size_t cb) {
    cplx acc{};
    for (std::size_t r = 0; r < a.dim(); ++r) acc += std::conj(a(r, ca)) * b(r, cb);
    return acc;
}

void scale_column(ComplexMatrix& m, std::size_t c, cplx f) {
    for (std::size_t r = 0; r < m.dim(); ++r) m(r, c) *= f;
}

// Labels stay in ascending order: without crossings the sorted order is the
// only continuous labelling. The overlaps only guard against frames that
// share no direction at all.
void check_continuity(const SpectralFrame& prev, const SpectralFrame& next) {
    const std::size_t N = prev.energies.size();
    for (std::size_t n = 0; n < N; ++n) {
        double best = 0.0;
        for (std::size_t m = 0; m < N; ++m)
            best = std::max(best, std::abs(column_inner(prev.vectors, n, next.vectors, m)));
        if (best < 0.5)
            throw Error(ErrorCode::ContinuityLost, "level " + std::to_string(n + 1) + " lost between s=" +
                                                       std::to_string(prev.s) + " and s=" + std::to_string(next.s) +
                                                       " (overlap " + std::to_string(best) + ")");
    }
}

// Cumulative connection phase per level; its s-derivative is -i tau_nn.
std::vector<std::vector<double>> connection_phases(const SpectralPath& path) {
    const auto inc = transport_increments(path);
    std::vector<std::vector<double>> out(inc.size());
    for (std::size_t n = 0; n < inc.size(); ++n) {
        out[n].assign(path.size(), 0.0);
        for (std::size_t j = 0; j + 1 < path.size(); ++j) out[n][j + 1] = out[n][j] + inc[n][j];
    }
    return out;
}

void fill_diagonal(SpectralPath& path) {
    const std::size_t N = path.dim();
    if (path.size() < 3) {
        for (auto& f : path.frames)
            for (std::size_t n = 0; n < N; ++n) f.tau(n, n) = 0.0;
        return;
    }
    const auto phases = connection_phases(path);
    const Grid s = path.grid();
    for (std::size_t n = 0; n < N; ++n) {
        const auto d = differentiate(s, phases[n]);
        for (std::size_t j = 0; j < path.size(); ++j) path.frames[j].tau(n, n) = kI * d[j];
    }
}

void fill_off_diagonal_hf(SpectralPath& path) {
    const std::size_t N = path.dim();
    for (auto& f : path.frames) {
        if (!f.dH) throw Error(ErrorCode::MissingDerivative, "Hellmann-Feynman coupling needs dH/ds");
        double scale = 0.0;
        for (double e : f.energies) scale = std::max(scale, std::abs(e));
        const double floor = 1e-9 * std::max(scale, 1e-300);
        for (std::size_t n = 0; n < N; ++n) {
            const ComplexVector vn = f.vectors.column(n);
            const ComplexVector dvn = *f.dH * vn;
            for (std::size_t k = 0; k < N; ++k) {
                if (k == n) continue;
                const double g = f.gap(n, k);
                if (std::abs(g) <= floor)
                    throw Error(ErrorCode::DegenerateSpectrum, "levels " + std::to_string(n + 1) + "," +
                                                                   std::to_string(k + 1) +
                                                                   " degenerate at s=" + std::to_string(f.s));
                cplx num{};
                for (std::size_t r = 0; r < N; ++r) num += std::conj(f.vectors(r, k)) * dvn[r];
                f.tau(n, k) = num / g;
            }
        }
    }
}

void fill_off_diagonal_fd(SpectralPath& path) {
    const std::size_t N = path.dim();
    const std::size_t M = path.size();
    if (M < 3) throw Error(ErrorCode::InsufficientSamples, "finite-difference coupling needs at least 3 points");
    std::vector<cplx> dv(N);
    for (std::size_t j = 0; j < M; ++j) {
        const std::size_t c = j == 0 ? 1 : (j == M - 1 ? M - 2 : j);
        const std::size_t idx[3] = {c - 1, c, c + 1};
        const auto w = derivative_weights(path.frames[j].s, path.frames[idx[0]].s, path.frames[idx[1]].s,
                                          path.frames[idx[2]].s);
        const double weights[3] = {w.w0, w.w1, w.w2};
        const auto& here = path.frames[j].vectors;
        for (std::size_t n = 0; n < N; ++n) {
            std::fill(dv.begin(), dv.end(), cplx{});
            for (int i = 0; i < 3; ++i) {
                const auto& other = path.frames[idx[i]].vectors;
                // Local phase lock onto the vector at s_j removes the gauge's own phase drift.
                const cplx ov = column_inner(here, n, other, n);
                const cplx lock = ov == cplx{} ? cplx{1.0} : std::conj(ov) / std::abs(ov);
                for (std::size_t r = 0; r < N; ++r) dv[r] += weights[i] * lock * other(r, n);
            }
            for (std::size_t k = 0; k < N; ++k) {
                if (k == n) continue;
                cplx acc{};
                for (std::size_t r = 0; r < N; ++r) acc += std::conj(here(r, k)) * dv[r];
                path.frames[j].tau(n, k) = acc;
            }
        }
    }
}

// Multiplies level n at s_j by e^{i theta[n][j]}:
// vectors rotate, off-diagonal tau picks up e^{i(theta_n - theta_k)}.
void rephase(SpectralPath& path, const std::vector<std::vector<double>>& theta) {
    const std::size_t N = path.dim();
    for (std::size_t j = 0; j < path.size(); ++j) {
        auto& f = path.frames[j];
        for (std::size_t n = 0; n < N; ++n) scale_column(f.vectors, n, std::polar(1.0, theta[n][j]));
        for (std::size_t n = 0; n < N; ++n)
            for (std::size_t k = 0; k < N; ++k)
                if (k != n) f.tau(n, k) *= std::polar(1.0, theta[n][j] - theta[k][j]);
    }
}

}  // namespace

SpectralPath decompose_path(const Hamiltonian& h, double T, const Grid& grid, std::optional<CouplingMethod> method) {
    if (grid.empty()) throw Error(ErrorCode::InsufficientSamples, "decompose_path: empty grid");
    for (std::size_t j = 1; j < grid.size(); ++j)
        if (!(grid[j] > grid[j - 1])) throw Error(ErrorCode::InvalidArgument, "decompose_path: grid must ascend");
    const CouplingMethod m =
        method.value_or(h.has_derivative() ? CouplingMethod::hellmann_feynman : CouplingMethod::finite_difference);
    const bool want_dh = m == CouplingMethod::hellmann_feynman;
    if (want_dh && !h.has_derivative())
        throw Error(ErrorCode::MissingDerivative, "Hellmann-Feynman coupling needs dH/ds on the model");

    SpectralPath path;
    path.T = T;
    path.gauge = Gauge::raw;
    path.method = m;
    path.frames.reserve(grid.size());
    const std::size_t N = h.dim();
    for (std::size_t j = 0; j < grid.size(); ++j) {
        SpectralFrame f;
        f.s = grid[j];
        auto eig = hermitian_eigh(h.at(grid[j], T), {.assert_nondegenerate = true, .gap_floor = std::nullopt});
        f.energies = std::move(eig.eigenvalues);
        f.vectors = std::move(eig.eigenvectors);
        f.tau = ComplexMatrix(N);
        if (want_dh) f.dH = h.derivative(grid[j], T);
        if (j > 0) check_continuity(path.frames.back(), f);
        path.frames.push_back(std::move(f));
    }
    if (path.size() >= 3 || m == CouplingMethod::hellmann_feynman) return coupling_matrix(std::move(path), m);
    return path;
}

SpectralPath coupling_matrix(SpectralPath path, CouplingMethod method) {
    if (method == CouplingMethod::hellmann_feynman)
        fill_off_diagonal_hf(path);
    else
        fill_off_diagonal_fd(path);
    fill_diagonal(path);
    path.method = method;
    return path;
}

std::vector<std::vector<double>> transport_increments(const SpectralPath& path) {
    const std::size_t N = path.dim();
    const std::size_t M = path.size();
    std::vector<std::vector<double>> inc(N, std::vector<double>(M > 0 ? M - 1 : 0, 0.0));
    if (M < 2) return inc;
    for (std::size_t n = 0; n < N; ++n) {
        std::vector<cplx> ov(M - 1);
        for (std::size_t j = 0; j + 1 < M; ++j)
            ov[j] = column_inner(path.frames[j].vectors, n, path.frames[j + 1].vectors, n);
        // Per-triangle geometric rate c from arg B = c h1 h2 (h1 + h2) / 2.
        std::vector<double> rate(M, 0.0);
        std::vector<bool> has(M, false);
        for (std::size_t j = 1; j + 1 < M; ++j) {
            const double h1 = path.frames[j].s - path.frames[j - 1].s;
            const double h2 = path.frames[j + 1].s - path.frames[j].s;
            const cplx back = column_inner(path.frames[j + 1].vectors, n, path.frames[j - 1].vectors, n);
            const double b = std::arg(ov[j - 1] * ov[j] * back);
            rate[j] = 2.0 * b / (h1 * h2 * (h1 + h2));
            has[j] = true;
        }
        for (std::size_t j = 0; j + 1 < M; ++j) {
            double c = 0.0;
            int count = 0;
            for (std::size_t t : {j, j + 1}) {
                if (!has[t]) continue;
                c += rate[t];
                ++count;
            }
            if (count) c /= count;
            const double h = path.frames[j + 1].s - path.frames[j].s;
            inc[n][j] = std::arg(ov[j]) + c * h * h * h / 6.0;
        }
    }
    return inc;
}

SpectralPath to_parallel_gauge(SpectralPath path) {
    const std::size_t N = path.dim();
    const std::size_t M = path.size();
    if (M == 0) return path;
    const auto inc = transport_increments(path);
    std::vector<std::vector<double>> theta(N, std::vector<double>(M, 0.0));
    for (std::size_t n = 0; n < N; ++n)
        for (std::size_t j = 0; j + 1 < M; ++j) theta[n][j + 1] = theta[n][j] - inc[n][j];
    rephase(path, theta);

    // What is left of tau_nn is roundoff; integrate it away and zero the diagonal.
    if (M >= 3) {
        fill_diagonal(path);
        const Grid s = path.grid();
        for (std::size_t n = 0; n < N; ++n) {
            std::vector<double> rate(M);
            for (std::size_t j = 0; j < M; ++j) rate[j] = path.frames[j].tau(n, n).imag();
            const auto corr = cumulative_trapezoid(s, rate);
            for (std::size_t j = 0; j < M; ++j) theta[n][j] = -corr[j];
        }
        rephase(path, theta);
    }
    for (auto& f : path.frames)
        for (std::size_t n = 0; n < N; ++n) f.tau(n, n) = 0.0;
    path.gauge = Gauge::parallel;
    return path;
}

namespace {

double richardson_derivative(const std::function<double(double)>& f, double s) {
    constexpr double h = 1e-3;
    const double d1 = (f(s + h) - f(s - h)) / (2.0 * h);
    const double d2 = (f(s + 0.5 * h) - f(s - 0.5 * h)) / h;
    return (4.0 * d2 - d1) / 3.0;
}

}  // namespace

SpectralPath gauge_transform(SpectralPath path, std::span<const std::function<double(double)>> theta) {
    const std::size_t N = path.dim();
    if (theta.size() != N) throw Error(ErrorCode::InvalidArgument, "gauge_transform: need one phase per level");
    std::vector<std::vector<double>> values(N, std::vector<double>(path.size()));
    for (std::size_t n = 0; n < N; ++n) {
        if (!theta[n]) throw Error(ErrorCode::InvalidArgument, "gauge_transform: empty phase function");
        for (std::size_t j = 0; j < path.size(); ++j) {
            const double s = path.frames[j].s;
            values[n][j] = theta[n](s);
            path.frames[j].tau(n, n) += kI * richardson_derivative(theta[n], s);
        }
    }
    rephase(path, values);
    path.gauge = Gauge::custom;
    return path;
}

SpectralPath align_phases(SpectralPath path, const ComplexMatrix& reference) {
    const std::size_t N = path.dim();
    if (path.size() == 0) return path;
    if (reference.dim() != N) throw Error(ErrorCode::InvalidArgument, "align_phases: reference dimension mismatch");
    std::vector<std::vector<double>> theta(N, std::vector<double>(path.size()));
    for (std::size_t n = 0; n < N; ++n) {
        const cplx c = column_inner(reference, n, path.frames.front().vectors, n);
        if (std::abs(c) < 0.5)
            throw Error(ErrorCode::InvalidArgument,
                        "align_phases: reference column " + std::to_string(n + 1) + " does not match its level");
        std::fill(theta[n].begin(), theta[n].end(), -std::arg(c));
    }
    rephase(path, theta);
    return path;
}

SpectralPath permute_levels(SpectralPath path, const std::vector<std::size_t>& order) {
    const std::size_t N = path.dim();
    std::vector<bool> seen(N, false);
    if (order.size() != N) throw Error(ErrorCode::InvalidArgument, "permute_levels: order has the wrong length");
    for (std::size_t o : order) {
        if (o >= N || seen[o]) throw Error(ErrorCode::InvalidArgument, "permute_levels: not a permutation");
        seen[o] = true;
    }
    for (auto& f : path.frames) {
        std::vector<double> e(N);
        ComplexMatrix v(N), t(N);
        for (std::size_t a = 0; a < N; ++a) {
            e[a] = f.energies[order[a]];
            for (std::size_t r = 0; r < N; ++r) v(r, a) = f.vectors(r, order[a]);
            for (std::size_t b = 0; b < N; ++b) t(a, b) = f.tau(order[a], order[b]);
        }
        f.energies = std::move(e);
        f.vectors = std::move(v);
        f.tau = std::move(t);
    }
    return path;
}

SpectralPath mirror_levels(SpectralPath path) {
    std::vector<std::size_t> order(path.dim());
    for (std::size_t n = 0; n < order.size(); ++n) order[n] = order.size() - 1 - n;
    return permute_levels(std::move(path), order);
}

SpectralPath dual_path(const Hamiltonian& dual, double T, const Grid& grid, const SpectralPath& base_path) {
    if (base_path.size() == 0) throw Error(ErrorCode::InvalidArgument, "dual_path: empty base path");
    auto path = decompose_path(dual, T, grid);
    const std::size_t N = path.dim();
    if (base_path.dim() != N) throw Error(ErrorCode::InvalidArgument, "dual_path: dimension mismatch");
    const auto& e0 = path.frames.front().energies;
    const auto& base_e0 = base_path.frames.front().energies;
    std::vector<std::size_t> order(N);
    std::vector<bool> used(N, false);
    for (std::size_t n = 0; n < N; ++n) {
        std::size_t best = N;
        for (std::size_t m = 0; m < N; ++m)
            if (!used[m] && (best == N || std::abs(e0[m] + base_e0[n]) < std::abs(e0[best] + base_e0[n]))) best = m;
        order[n] = best;
        used[best] = true;
    }
    path = permute_levels(std::move(path), order);
    path = align_phases(std::move(path), base_path.frames.front().vectors);
    return to_parallel_gauge(std::move(path));
}

RatioTable adiabatic_ratios(const SpectralPath& path, std::optional<double> gap_floor) {
    if (path.gauge != Gauge::parallel)
        throw Error(ErrorCode::InvalidArgument, "adiabatic_ratios: path must be in the parallel gauge");
    const std::size_t N = path.dim();
    RatioTable out;
    out.grid = path.grid();
    out.A.reserve(path.size());
    for (const auto& f : path.frames) {
        double scale = 1.0;
        for (double e : f.energies) scale = std::max(scale, std::abs(e));
        const double floor = gap_floor.value_or(1e-9 * scale);
        ComplexMatrix a(N);
        for (std::size_t n = 0; n < N; ++n)
            for (std::size_t k = 0; k < N; ++k) {
                if (k == n) continue;
                const double g = f.gap(n, k);
                if (std::abs(g) < floor)
                    throw Error(ErrorCode::GapTooSmall, "|g_" + std::to_string(n + 1) + std::to_string(k + 1) +
                                                            "| below floor at s=" + std::to_string(f.s));
                a(n, k) = f.tau(n, k) / g;
            }
        out.A.push_back(std::move(a));
    }
    return out;
}

std::string path_csv(const SpectralPath& path) {
    const std::size_t N = path.dim();
    std::vector<std::string> header{"s"};
    for (std::size_t n = 0; n < N; ++n) header.push_back("E" + std::to_string(n + 1));
    for (std::size_t n = 0; n < N; ++n)
        for (std::size_t k = 0; k < N; ++k) {
            const std::string tag = std::to_string(n + 1) + "_" + std::to_string(k + 1);
            header.push_back("tau_re_" + tag);
            header.push_back("tau_im_" + tag);
        }
    for (std::size_t n = 0; n < N; ++n)
        for (std::size_t k = 0; k < N; ++k)
            if (k != n) header.push_back("A_abs_" + std::to_string(n + 1) + "_" + std::to_string(k + 1));
    CsvWriter csv(header);
    std::vector<double> row;
    for (const auto& f : path.frames) {
        row.clear();
        row.push_back(f.s);
        for (double e : f.energies) row.push_back(e);
        for (std::size_t n = 0; n < N; ++n)
            for (std::size_t k = 0; k < N; ++k) {
                row.push_back(f.tau(n, k).real());
                row.push_back(f.tau(n, k).imag());
            }
        for (std::size_t n = 0; n < N; ++n)
            for (std::size_t k = 0; k < N; ++k) {
                if (k == n) continue;
                const double g = f.gap(n, k);
                row.push_back(g == 0.0 ? std::numeric_limits<double>::infinity() : std::abs(f.tau(n, k) / g));
            }
        csv.row(row);
    }
    return csv.str();
}

}  // namespace adlab
