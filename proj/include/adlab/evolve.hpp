// evolve.hpp - exponential-midpoint propagation of i d/ds psi = T H(s) psi,
// dual propagators, and projections onto an instantaneous eigenbasis.
#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "adlab/grid.hpp"
#include "adlab/linalg.hpp"
#include "adlab/models.hpp"
#include "adlab/spectral.hpp"

namespace adlab {

struct PropagatorTrace {
    double T = 0.0;
    Grid grid;
    std::vector<ComplexMatrix> U;  // U(s_0) = I
};

struct StateTrace {
    double T = 0.0;
    Grid grid;
    std::vector<ComplexVector> psi;
};

struct Propagation {
    PropagatorTrace propagator;
    StateTrace state;
};

struct PropagateOptions {
    // Midpoint steps per grid cell. Grid tables are interpolated linearly
    // inside a cell.
    std::size_t substeps = 1;
    // Enforce ds <= 0.1 / (T max|H_ij|) per step (StepTooCoarse).
    bool check_step = true;
    double unitarity_tol = 1e-10;
};

// U(s_{j+1}) = exp(-i T H(s_mid) ds) U(s_j).
// Throws StepTooCoarse, NonUnitaryDrift, InvalidArgument.
PropagatorTrace propagate_unitary(const Hamiltonian& h, double T, const Grid& grid, const PropagateOptions& opts = {});
Propagation propagate(const Hamiltonian& h, double T, const Grid& grid, const ComplexVector& psi0,
                      const PropagateOptions& opts = {});

// psi(s_j) = U(s_j) psi0. Throws InvalidArgument unless |psi0| = 1.
StateTrace apply(const PropagatorTrace& u, const ComplexVector& psi0);

// U^b(s_j) = U^a(s_j)^dagger.
PropagatorTrace dual_propagator(const PropagatorTrace& ua);

// Adapter for build_dual.
PropagatorFn midpoint_propagator(PropagateOptions opts = {});

struct AmplitudeTrace {
    Grid grid;
    std::vector<std::vector<cplx>> phi;  // phi[j][n]
};

// phi_n(s) = e^{i T int_0^s E_n} <E_n(s)|psi(s)>, trapezoid phase integral.
// Requires a parallel-gauge path on the state's grid (GridMismatch,
// InvalidArgument otherwise).
AmplitudeTrace amplitudes(const StateTrace& state, const SpectralPath& path, double T);

// F(s_j) = |<E_n(s_j)|psi(s_j)>|^2. Throws GridMismatch.
std::vector<double> fidelity_trace(const StateTrace& state, const SpectralPath& path, std::size_t n);

// s,fidelity,phi_abs_1..N,phi_re_1,phi_im_1,...  (1-based labels)
std::string trace_csv(const AmplitudeTrace& amps, const std::vector<double>& fidelity);

// Same layout as GridHamiltonian JSON with "U" in place of "matrices".
std::string to_json(const PropagatorTrace& u);

}  // namespace adlab
