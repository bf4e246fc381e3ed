// models.hpp - driven Hamiltonians H(s, T): closures, tabulated grids, the
// rotating-field spin-1/2 family and the inverse-evolving dual construction.
#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "adlab/grid.hpp"
#include "adlab/linalg.hpp"

namespace adlab {

// H(s, T) in energy units, s = t/T in [0, 1].
struct DrivenHamiltonian {
    std::size_t dim = 0;
    std::function<ComplexMatrix(double s, double T)> eval;
    std::function<ComplexMatrix(double s, double T)> deriv;  // dH/ds, may be empty
    std::string label;
};

// Hamiltonian tabulated on an s-grid at one total time T.
struct GridHamiltonian {
    Grid grid;
    std::vector<ComplexMatrix> matrices;
    std::vector<ComplexMatrix> derivatives;  // dH/ds per node; empty when unknown
    double T = 0.0;

    std::size_t dim() const { return matrices.empty() ? 0 : matrices.front().dim(); }

    struct Lookup {
        std::size_t index;
        double error_bound;  // width of the grid cell containing s
    };
    // Nearest node to s.
    Lookup nearest(double s) const;

    // Throws InvalidArgument / NotHermitian on a malformed table.
    void validate() const;
};

// Value handle over either representation. Copies are cheap.
class Hamiltonian {
public:
    Hamiltonian(DrivenHamiltonian h);
    Hamiltonian(GridHamiltonian h);

    std::size_t dim() const;
    std::string label() const;
    bool has_derivative() const;
    bool is_grid() const { return grid_ != nullptr; }
    const GridHamiltonian* grid() const { return grid_.get(); }

    // Grid tables answer with the nearest node and require T to match the
    // table's T.
    ComplexMatrix at(double s, double T) const;
    ComplexMatrix derivative(double s, double T) const;  // throws MissingDerivative
    // Like at(), but grid tables interpolate linearly between nodes. Used by
    // the propagator for cell midpoints.
    ComplexMatrix interpolate(double s, double T) const;

private:
    std::shared_ptr<const DrivenHamiltonian> driven_;
    std::shared_ptr<const GridHamiltonian> grid_;
};

struct RotatingSpinParams {
    double omega0 = 1.0;  // field coupling (energy)
    double T = 1.0;       // total time; one field revolution, omega = 2 pi / T

    double omega() const;
    void validate() const;  // throws InvalidArgument
    // omega/omega0 below 0.1.
    bool adiabatic_regime() const;
};

// H^a(s) = -(omega0/2) [[0, e^{-2 pi i s}], [e^{2 pi i s}, 0]], independent of T.
DrivenHamiltonian rotating_spin(const RotatingSpinParams& params);

// Same field with phase 2 pi theta(s), theta(s) = pi s^p.
DrivenHamiltonian chirped_spin(double omega0, double theta_exponent = 2.0);

// Field angle of chirped_spin at s.
double chirp_angle(double s, double theta_exponent);

// Parallel-transported eigenspinors of -(omega0/2)[[0, e^{-i a}], [e^{i a}, 0]]
// as columns, ascending energy: column 0 = (e^{-ia/2}, e^{ia/2})/sqrt2 at
// -omega0/2, column 1 = (e^{-ia/2}, -e^{ia/2})/sqrt2 at +omega0/2.
ComplexMatrix rotating_field_spinors(double angle);

// First-order analytic dual of rotating_spin (valid for omega/omega0 < 0.1):
// omega/2 + (omega0/2) sz - (omega/2)[[cos w0Ts, i sin w0Ts], [-i sin w0Ts, -cos w0Ts]]
// with omega = 2 pi / T taken from the evaluation T. Throws RegimeViolation.
DrivenHamiltonian dual_first_order(const RotatingSpinParams& params);

// Returns U(s_j) for every grid point, U(0) = I.
using PropagatorFn =
    std::function<std::vector<ComplexMatrix>(const Hamiltonian& h, double T, const Grid& grid)>;

// H^b(s) = -U^a(s)^dagger H^a(s) U^a(s) on the grid. When the base supplies
// dH/ds the table also carries dH^b/ds = -U^dagger (dH^a/ds) U.
// Throws DegenerateSpectrum, PropagationFailed.
GridHamiltonian build_dual(const Hamiltonian& base, double T, const Grid& grid,
                           const PropagatorFn& propagate);
GridHamiltonian build_dual(const Hamiltonian& base, double T, const Grid& grid,
                           std::span<const ComplexMatrix> base_propagator);

// max over s_samples and T pairs of max|H(s,T1) - H(s,T2)|.
// Throws InsufficientSamples with fewer than 2 distinct T values.
double probe_T_dependence(const std::function<Hamiltonian(double T)>& family,
                          std::span<const double> s_samples, std::span<const double> T_samples);
double probe_T_dependence(const DrivenHamiltonian& h, std::span<const double> s_samples,
                          std::span<const double> T_samples);
// One table per T; each table is evaluated at its own T.
double probe_T_dependence(std::span<const GridHamiltonian> family, std::span<const double> s_samples);

// {"grid": [s...], "matrices": [[[re,im],...],...], "T": number}; matrices
// are row-major. An optional "derivatives" array has the same layout.
std::string to_json(const GridHamiltonian& h);
GridHamiltonian grid_hamiltonian_from_json(std::string_view text);
GridHamiltonian load_grid_hamiltonian(const std::string& path);

}  // namespace adlab
