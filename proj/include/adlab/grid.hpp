// grid.hpp - normalized-time grids and the quadrature / differencing rules
// shared by the spectral, evolution and perturbation modules.
#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace adlab {

using Grid = std::vector<double>;

// n >= 2 equally spaced points on [0, 1], endpoints included.
Grid uniform_grid(std::size_t n);

bool is_uniform(std::span<const double> grid, double rel_tol = 1e-9);
bool same_grid(std::span<const double> a, std::span<const double> b);

// Weights of the 3-point derivative at x for samples at x0, x1, x2.
struct Stencil3 {
    double w0, w1, w2;
};
Stencil3 derivative_weights(double x, double x0, double x1, double x2);

// Second-order derivative on the grid: centered in the interior,
// one-sided 3-point at the ends. Requires at least 3 points.
std::vector<double> differentiate(std::span<const double> grid, std::span<const double> f);
std::vector<std::complex<double>> differentiate(std::span<const double> grid,
                                                std::span<const std::complex<double>> f);

// Cumulative composite trapezoid, result[0] = 0.
std::vector<double> cumulative_trapezoid(std::span<const double> grid, std::span<const double> f);
std::vector<std::complex<double>> cumulative_trapezoid(std::span<const double> grid,
                                                       std::span<const std::complex<double>> f);

// Principal value of an angle in (-pi, pi].
double wrap_angle(double a);

}  // namespace adlab
