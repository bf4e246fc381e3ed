// spectral.hpp - instantaneous eigenbases along an s-grid: label continuity,
// gauge fixing (parallel transport), the coupling matrix tau and A = tau / g.
#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "adlab/grid.hpp"
#include "adlab/linalg.hpp"
#include "adlab/models.hpp"

namespace adlab {

struct SpectralFrame {
    double s = 0.0;
    std::vector<double> energies;
    ComplexMatrix vectors;              // column n is |E_n(s)>
    ComplexMatrix tau;                  // tau(n, k) = <E_k | d/ds E_n>
    std::optional<ComplexMatrix> dH;    // dH/ds when the model supplies it

    double gap(std::size_t n, std::size_t k) const { return energies[n] - energies[k]; }
};

enum class Gauge { raw, parallel, custom };
enum class CouplingMethod { finite_difference, hellmann_feynman };

struct SpectralPath {
    double T = 0.0;
    std::vector<SpectralFrame> frames;
    Gauge gauge = Gauge::raw;
    CouplingMethod method = CouplingMethod::finite_difference;

    std::size_t dim() const { return frames.empty() ? 0 : frames.front().energies.size(); }
    std::size_t size() const { return frames.size(); }
    Grid grid() const;
    // tau_nk(s_j) over the path.
    std::vector<cplx> tau_series(std::size_t n, std::size_t k) const;
    std::vector<double> energy_series(std::size_t n) const;
};

// Eigendecomposition at every grid point. Levels are ascending at every
// point, which is the continuous labelling of a spectrum without crossings.
// tau is filled with
// `method`, defaulting to Hellmann-Feynman when H has dH/ds.
// Throws DegenerateSpectrum, ContinuityLost (best overlap below 0.5).
SpectralPath decompose_path(const Hamiltonian& h, double T, const Grid& grid,
                            std::optional<CouplingMethod> method = std::nullopt);

// Recomputes tau for the current gauge. Off-diagonal entries come from
// finite differences of the vectors or from <E_k|dH|E_n> / (E_n - E_k); the
// diagonal always comes from the discrete connection phases.
// Throws MissingDerivative, DegenerateSpectrum, InsufficientSamples.
SpectralPath coupling_matrix(SpectralPath path, CouplingMethod method);

// Phase increments of each level between neighbouring points with the
// third-order geometric correction from three-point Bargmann invariants.
// result[n][j] covers s_j -> s_{j+1}.
std::vector<std::vector<double>> transport_increments(const SpectralPath& path);

// Rephases so tau_nn = 0 along the path, keeping the vectors at s_0 as they are.
SpectralPath to_parallel_gauge(SpectralPath path);

// |E_n> -> e^{i Theta_n(s)} |E_n>, tau -> e^{i(Theta_n - Theta_k)} tau + i Theta_n' delta_nk.
// theta must hold one function per level.
SpectralPath gauge_transform(SpectralPath path, std::span<const std::function<double(double)>> theta);

// Constant per-level phases so <reference_n | E_n(s_0)> is real positive.
// reference columns are matched level by level. Throws InvalidArgument when
// a reference column is nearly orthogonal to its level.
SpectralPath align_phases(SpectralPath path, const ComplexMatrix& reference);

// New level n is old level order[n].
SpectralPath permute_levels(SpectralPath path, const std::vector<std::size_t>& order);

// Reverses the level order (n -> N-1-n). A dual path built from an ascending
// decomposition lists the levels of its base in reverse order; mirroring puts
// them back on the base's labels.
SpectralPath mirror_levels(SpectralPath path);

// Parallel-gauge path of a dual system on its base's labels: level n has
// E_n = -E_n^base and shares the base's vector at s_0.
SpectralPath dual_path(const Hamiltonian& dual, double T, const Grid& grid, const SpectralPath& base_path);

struct RatioTable {
    Grid grid;
    std::vector<ComplexMatrix> A;  // A(n, k) = tau_nk / g_nk, zero diagonal
};

// Requires the parallel gauge (InvalidArgument otherwise).
// Throws GapTooSmall when |g_nk| < gap_floor (default 1e-9 * max(1, max|E|)).
RatioTable adiabatic_ratios(const SpectralPath& path, std::optional<double> gap_floor = std::nullopt);

// Header s,E1,...,tau_re_n_k,tau_im_n_k,...,A_abs_n_k,... with 1-based labels.
std::string path_csv(const SpectralPath& path);

}  // namespace adlab
