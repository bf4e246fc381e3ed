#include "adlab/evolve.hpp"

#include <cmath>

#include "json.hpp"

#include "adlab/csv.hpp"
#include "adlab/errors.hpp"

namespace adlab {

PropagatorTrace propagate_unitary(const Hamiltonian& h, double T, const Grid& grid, const PropagateOptions& opts) {
    if (grid.empty()) throw Error(ErrorCode::InsufficientSamples, "propagate: empty grid");
    if (!(T > 0.0)) throw Error(ErrorCode::InvalidArgument, "propagate: T must be positive");
    if (opts.substeps == 0) throw Error(ErrorCode::InvalidArgument, "propagate: substeps must be positive");
    PropagatorTrace out;
    out.T = T;
    out.grid = grid;
    out.U.reserve(grid.size());
    ComplexMatrix u = ComplexMatrix::identity(h.dim());
    out.U.push_back(u);
    const double m = static_cast<double>(opts.substeps);
    for (std::size_t j = 0; j + 1 < grid.size(); ++j) {
        const double ds = (grid[j + 1] - grid[j]) / m;
        if (!(ds > 0.0)) throw Error(ErrorCode::InvalidArgument, "propagate: grid must ascend");
        for (std::size_t i = 0; i < opts.substeps; ++i) {
            const double mid = grid[j] + (static_cast<double>(i) + 0.5) * ds;
            const ComplexMatrix hm = h.interpolate(mid, T);
            const double phase = T * hm.max_abs() * ds;
            if (opts.check_step && phase > 0.1 * (1.0 + 1e-12))
                throw Error(ErrorCode::StepTooCoarse, "step phase " + std::to_string(phase) + " rad at s=" +
                                                          std::to_string(mid) + " exceeds 0.1; refine the grid");
            u = unitary_step(hm, T * ds) * u;
        }
        const double drift = unitarity_defect(u);
        if (!(drift <= opts.unitarity_tol))
            throw Error(ErrorCode::NonUnitaryDrift,
                        "unitarity defect " + std::to_string(drift) + " at s=" + std::to_string(grid[j + 1]));
        // One Newton-Schulz polar step removes the roundoff that otherwise
        // accumulates coherently over slowly varying paths.
        u = 0.5 * (u * (3.0 * ComplexMatrix::identity(u.dim()) - u.adjoint() * u));
        out.U.push_back(u);
    }
    return out;
}

StateTrace apply(const PropagatorTrace& u, const ComplexVector& psi0) {
    if (std::abs(psi0.norm() - 1.0) > 1e-10) throw Error(ErrorCode::InvalidArgument, "initial state must be normalized");
    if (!u.U.empty() && psi0.size() != u.U.front().dim())
        throw Error(ErrorCode::InvalidArgument, "initial state dimension mismatch");
    StateTrace st;
    st.T = u.T;
    st.grid = u.grid;
    st.psi.reserve(u.U.size());
    for (const auto& m : u.U) st.psi.push_back(m * psi0);
    return st;
}

Propagation propagate(const Hamiltonian& h, double T, const Grid& grid, const ComplexVector& psi0,
                      const PropagateOptions& opts) {
    if (psi0.size() != h.dim()) throw Error(ErrorCode::InvalidArgument, "initial state dimension mismatch");
    if (std::abs(psi0.norm() - 1.0) > 1e-10) throw Error(ErrorCode::InvalidArgument, "initial state must be normalized");
    Propagation p;
    p.propagator = propagate_unitary(h, T, grid, opts);
    p.state = apply(p.propagator, psi0);
    return p;
}

PropagatorTrace dual_propagator(const PropagatorTrace& ua) {
    PropagatorTrace ub;
    ub.T = ua.T;
    ub.grid = ua.grid;
    ub.U.reserve(ua.U.size());
    for (const auto& m : ua.U) ub.U.push_back(m.adjoint());
    return ub;
}

PropagatorFn midpoint_propagator(PropagateOptions opts) {
    return [opts](const Hamiltonian& h, double T, const Grid& grid) { return propagate_unitary(h, T, grid, opts).U; };
}

namespace {

void require_same_grid(const StateTrace& state, const SpectralPath& path) {
    if (state.psi.size() != path.size() || !same_grid(state.grid, path.grid()))
        throw Error(ErrorCode::GridMismatch, "state and spectral path live on different grids");
}

}  // namespace

AmplitudeTrace amplitudes(const StateTrace& state, const SpectralPath& path, double T) {
    require_same_grid(state, path);
    if (path.gauge != Gauge::parallel)
        throw Error(ErrorCode::InvalidArgument, "amplitudes: path must be in the parallel gauge");
    const std::size_t N = path.dim();
    const Grid s = path.grid();
    std::vector<std::vector<double>> phase(N);
    for (std::size_t n = 0; n < N; ++n) phase[n] = cumulative_trapezoid(s, path.energy_series(n));
    AmplitudeTrace out;
    out.grid = s;
    out.phi.resize(path.size(), std::vector<cplx>(N));
    for (std::size_t j = 0; j < path.size(); ++j)
        for (std::size_t n = 0; n < N; ++n)
            out.phi[j][n] =
                std::polar(1.0, T * phase[n][j]) * inner(path.frames[j].vectors.column(n), state.psi[j]);
    return out;
}

std::vector<double> fidelity_trace(const StateTrace& state, const SpectralPath& path, std::size_t n) {
    require_same_grid(state, path);
    if (n >= path.dim()) throw Error(ErrorCode::InvalidArgument, "fidelity_trace: level out of range");
    std::vector<double> f(path.size());
    for (std::size_t j = 0; j < path.size(); ++j)
        f[j] = std::norm(inner(path.frames[j].vectors.column(n), state.psi[j]));
    return f;
}

std::string trace_csv(const AmplitudeTrace& amps, const std::vector<double>& fidelity) {
    if (fidelity.size() != amps.grid.size()) throw Error(ErrorCode::GridMismatch, "trace_csv: length mismatch");
    const std::size_t N = amps.phi.empty() ? 0 : amps.phi.front().size();
    std::vector<std::string> header{"s", "fidelity"};
    for (std::size_t n = 0; n < N; ++n) header.push_back("phi_abs_" + std::to_string(n + 1));
    for (std::size_t n = 0; n < N; ++n) {
        header.push_back("phi_re_" + std::to_string(n + 1));
        header.push_back("phi_im_" + std::to_string(n + 1));
    }
    CsvWriter csv(header);
    std::vector<double> row;
    for (std::size_t j = 0; j < amps.grid.size(); ++j) {
        row.assign({amps.grid[j], fidelity[j]});
        for (const auto& p : amps.phi[j]) row.push_back(std::abs(p));
        for (const auto& p : amps.phi[j]) {
            row.push_back(p.real());
            row.push_back(p.imag());
        }
        csv.row(row);
    }
    return csv.str();
}

std::string to_json(const PropagatorTrace& u) {
    nlohmann::json j;
    j["grid"] = u.grid;
    j["T"] = u.T;
    auto mats = nlohmann::json::array();
    for (const auto& m : u.U) {
        auto arr = nlohmann::json::array();
        for (std::size_t r = 0; r < m.dim(); ++r)
            for (std::size_t c = 0; c < m.dim(); ++c) arr.push_back({m(r, c).real(), m(r, c).imag()});
        mats.push_back(std::move(arr));
    }
    j["U"] = std::move(mats);
    return j.dump();
}

}  // namespace adlab
