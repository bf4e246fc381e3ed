// perturb.hpp - first-order amplitudes and their boundary (P) and oscillatory
// integral (Q) parts, plus the dual-system shortcuts built from a base path.
//
// Level indices are 0-based here; exporters print 1-based labels.
#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "adlab/spectral.hpp"

namespace adlab {

struct FirstOrderChannel {
    std::size_t k = 0;
    std::vector<cplx> P, Q, phi;
};

struct FirstOrderSolution {
    std::size_t n = 0;  // initial level
    double T = 0.0;
    Grid grid;
    std::vector<FirstOrderChannel> channels;  // one per k != n, ascending k

    const FirstOrderChannel& channel(std::size_t k) const;
};

// With Phi = T int_0^s g_nk:
//   P_nk = A_nk(0) - A_nk(s) e^{-i Phi}
//   Q_nk = int_0^s e^{-i Phi} dA_nk/ds'   (trapezoid, central-difference dA)
//   phi_k = (i/T)(P + Q)
// Requires the parallel gauge. Throws GapTooSmall, GridTooCoarse
// (T |g| ds > 0.5 on some cell), InvalidArgument.
FirstOrderSolution first_order(const SpectralPath& path, double T, std::size_t n);

struct AmplitudeSeries {
    Grid grid;
    std::vector<std::vector<cplx>> phi;  // phi[k][j]
};

// Dual system to first order from the base path alone:
// phi_k^b(s) = delta_nk - int_0^s tau_nk^a. Requires the parallel gauge.
AmplitudeSeries simplified_b_first_order(const SpectralPath& path_a, std::size_t n);

struct QApprox {
    std::vector<cplx> Q;
    std::vector<std::string> warnings;  // unmet sufficient conditions
};

// Q_nk^b(s) ~ i T int_0^s tau_nk^a. Computed even when its preconditions
// fail; each failed one adds a warning.
QApprox q_approx_dual(const SpectralPath& path_a, double T, std::size_t n, std::size_t k);

struct PQRatio {
    std::vector<double> ratio;
    bool q_dominant = false;  // some ratio above 10
};

// |1 - T / (A_nk(0) + A_nk(s)) * i int_0^s tau_nk| on the base path.
// Throws DivisionGuard when |A(0) + A(s)| < 1e-12.
PQRatio pq_ratio(const SpectralPath& path_a, double T, std::size_t n, std::size_t k);

// dA_nk^b/ds = e^{-i T int g_nk^a} (i T tau_nk^a - d(tau_nk^a / g_nk^a)/ds),
// with A^b on the base's labels. Throws GridTooCoarse.
std::vector<cplx> dA_b_ds(const SpectralPath& path_a, double T, std::size_t n, std::size_t k);

// s,P_re,P_im,Q_re,Q_im,phi_re,phi_im,ratio  with ratio = |Q| / |P|.
std::string first_order_csv(const FirstOrderSolution& sol, std::size_t k);

}  // namespace adlab
