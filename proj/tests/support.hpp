// Shared helpers for the adlab tests: oracles that do not go through the
// library, random Hermitian generators and small comparisons.
#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "adlab/linalg.hpp"

namespace adlab::test {

inline constexpr double kPi = std::numbers::pi;

inline Eigen::MatrixXcd to_eigen(const ComplexMatrix& m) {
    Eigen::MatrixXcd e(m.dim(), m.dim());
    for (std::size_t r = 0; r < m.dim(); ++r)
        for (std::size_t c = 0; c < m.dim(); ++c) e(r, c) = m(r, c);
    return e;
}

inline ComplexMatrix from_eigen(const Eigen::MatrixXcd& e) {
    ComplexMatrix m(static_cast<std::size_t>(e.rows()));
    for (Eigen::Index r = 0; r < e.rows(); ++r)
        for (Eigen::Index c = 0; c < e.cols(); ++c) m(r, c) = e(r, c);
    return m;
}

inline double max_diff(const ComplexMatrix& a, const ComplexMatrix& b) { return (a - b).max_abs(); }

inline ComplexMatrix random_hermitian(std::mt19937_64& rng, std::size_t n, double scale = 1.0) {
    std::normal_distribution<double> g(0.0, scale);
    ComplexMatrix h(n);
    for (std::size_t r = 0; r < n; ++r) {
        h(r, r) = g(rng);
        for (std::size_t c = r + 1; c < n; ++c) {
            h(r, c) = {g(rng), g(rng)};
            h(c, r) = std::conj(h(r, c));
        }
    }
    return h;
}

// Rotating-spin propagator in closed form. In the frame turning with the
// field, H is constant: H_rot = -(w0/2) sx - (w/2) sz, so
// U(t) = exp(-i w t sz / 2) exp(-i t H_rot) with w t = 2 pi s.
inline ComplexMatrix rotating_spin_U(double omega0, double T, double s) {
    using namespace std::complex_literals;
    const double w = 2.0 * kPi / T;
    const double t = T * s;
    const double big = std::hypot(omega0, w);
    const double c = std::cos(big * t / 2.0), sn = std::sin(big * t / 2.0);
    // exp(-i t H_rot) = cos(Wt/2) + i sin(Wt/2) (w0 sx + w sz) / W
    const std::complex<double> a = c + 1i * sn * w / big;
    const std::complex<double> d = c - 1i * sn * w / big;
    const std::complex<double> b = 1i * sn * omega0 / big;
    const std::complex<double> r0 = std::exp(-1i * w * t / 2.0), r1 = std::exp(1i * w * t / 2.0);
    return ComplexMatrix{{r0 * a, r0 * b}, {r1 * b, r1 * d}};
}

inline ComplexVector normalized(ComplexVector v) {
    const double n = v.norm();
    for (std::size_t i = 0; i < v.size(); ++i) v[i] /= n;
    return v;
}

}  // namespace adlab::test
