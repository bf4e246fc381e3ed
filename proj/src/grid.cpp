#include "adlab/grid.hpp"

#include <cmath>
#include <numbers>

#include "adlab/errors.hpp"

namespace adlab {

Grid uniform_grid(std::size_t n) {
    if (n < 2) throw Error(ErrorCode::InvalidArgument, "uniform_grid: need at least 2 points");
    Grid g(n);
    const double h = 1.0 / static_cast<double>(n - 1);
    for (std::size_t j = 0; j < n; ++j) g[j] = static_cast<double>(j) * h;
    g.back() = 1.0;
    return g;
}

bool is_uniform(std::span<const double> grid, double rel_tol) {
    if (grid.size() < 3) return true;
    const double h = (grid.back() - grid.front()) / static_cast<double>(grid.size() - 1);
    for (std::size_t j = 1; j < grid.size(); ++j)
        if (std::abs((grid[j] - grid[j - 1]) - h) > rel_tol * h) return false;
    return true;
}

bool same_grid(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) return false;
    for (std::size_t j = 0; j < a.size(); ++j)
        if (std::abs(a[j] - b[j]) > 1e-14) return false;
    return true;
}

Stencil3 derivative_weights(double x, double x0, double x1, double x2) {
    // Derivative of the Lagrange interpolant through (x0, x1, x2) at x.
    return {((x - x1) + (x - x2)) / ((x0 - x1) * (x0 - x2)),
            ((x - x0) + (x - x2)) / ((x1 - x0) * (x1 - x2)),
            ((x - x0) + (x - x1)) / ((x2 - x0) * (x2 - x1))};
}

namespace {

template <class T>
std::vector<T> differentiate_impl(std::span<const double> s, std::span<const T> f) {
    const std::size_t n = s.size();
    if (f.size() != n) throw Error(ErrorCode::GridMismatch, "differentiate: size mismatch");
    if (n < 3) throw Error(ErrorCode::InsufficientSamples, "differentiate: need at least 3 points");
    std::vector<T> d(n);
    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t c = j == 0 ? 1 : (j == n - 1 ? n - 2 : j);
        const auto w = derivative_weights(s[j], s[c - 1], s[c], s[c + 1]);
        d[j] = w.w0 * f[c - 1] + w.w1 * f[c] + w.w2 * f[c + 1];
    }
    return d;
}

template <class T>
std::vector<T> trapezoid_impl(std::span<const double> s, std::span<const T> f) {
    if (f.size() != s.size()) throw Error(ErrorCode::GridMismatch, "cumulative_trapezoid: size mismatch");
    std::vector<T> out(s.size(), T{});
    for (std::size_t j = 1; j < s.size(); ++j) out[j] = out[j - 1] + 0.5 * (s[j] - s[j - 1]) * (f[j] + f[j - 1]);
    return out;
}

}  // namespace

std::vector<double> differentiate(std::span<const double> grid, std::span<const double> f) {
    return differentiate_impl(grid, f);
}

std::vector<std::complex<double>> differentiate(std::span<const double> grid,
                                                std::span<const std::complex<double>> f) {
    return differentiate_impl(grid, f);
}

std::vector<double> cumulative_trapezoid(std::span<const double> grid, std::span<const double> f) {
    return trapezoid_impl(grid, f);
}

std::vector<std::complex<double>> cumulative_trapezoid(std::span<const double> grid,
                                                       std::span<const std::complex<double>> f) {
    return trapezoid_impl(grid, f);
}

double wrap_angle(double a) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    a = std::remainder(a, two_pi);
    if (a <= -std::numbers::pi) a += two_pi;
    return a;
}

}  // namespace adlab
