// conditions.hpp - adiabatic condition reports: the traditional |A_nk| << T
// test, the phase-corrected (Ye) variant, its dual-system form, and the
// large-T decay probe for the oscillatory Q term.
#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "adlab/models.hpp"
#include "adlab/spectral.hpp"

namespace adlab {

enum class Verdict { satisfied, violated, indeterminate };

std::string_view to_string(Verdict v) noexcept;

// satisfied when margin <= threshold, violated when margin >= 1.
Verdict verdict_for(double margin, double threshold);

inline constexpr double kDefaultThreshold = 0.05;
// Reported margin when a denominator vanishes.
inline constexpr double kDivergentMargin = 1e12;

struct ConditionReport {
    std::string condition;  // "traditional", "ye" or "ye_dual_form"
    double margin = 0.0;
    double threshold = kDefaultThreshold;
    Verdict verdict = Verdict::satisfied;
    // Worst offender, 0-based levels; JSON output is 1-based.
    std::size_t n = 0, k = 0;
    double s = 0.0;
    bool divergent = false;
    std::string notes;
};

// {"condition","margin","threshold","verdict","worst":{"n","k","s"},"notes"}
std::string to_json(const ConditionReport& r);

// margin = max_{n != k, s} |A_nk(s)| / T. Requires the parallel gauge.
ConditionReport traditional_condition(const SpectralPath& path, double threshold = kDefaultThreshold);

// margin = max |tau_nk| / |T g_nk - d arg tau_nk / ds|. When the
// denominator is below denom_floor (default 1e-8 max(T|g_nk|, 1)) and
// tau_nk != 0 the margin is kDivergentMargin. Throws PhaseUnwrapFailed.
ConditionReport ye_condition(const SpectralPath& path, double T, double threshold = kDefaultThreshold,
                             std::optional<double> denom_floor = std::nullopt);

// Dual system judged from its base: margin = max |tau_nk^a| / |d arg tau_nk^a / ds|,
// same floor and capping rule, with T taken from the path.
ConditionReport ye_condition_dual_form(const SpectralPath& path_a, double threshold = kDefaultThreshold,
                                       std::optional<double> denom_floor = std::nullopt);

// Continuous arg of a complex series. Points with |z| <= null_tol * max|z|
// carry no phase and are bridged. Throws PhaseUnwrapFailed when a step
// between neighbours is within 1% of pi.
std::vector<double> unwrap_phase(std::span<const cplx> z, double null_tol = 1e-12);

struct DecayRow {
    double T = 0.0;
    std::size_t points = 0;
    double max_Q = 0.0;
};

struct DecayTable {
    std::vector<DecayRow> rows;
    double slope = 0.0;   // least-squares d log max|Q| / d log T (nan if some max|Q| is 0)
    bool decays = false;  // last max|Q| <= 0.5 x first
};

// max_s |Q_nk(s, T)| along a T ladder. The grid for each T has at least
// min_points points and keeps T |g| ds <= 0.1. Throws TIndependenceViolated
// when the family changes with T, InsufficientSamples with fewer than 2 T values.
DecayTable rl_decay_probe(const std::function<Hamiltonian(double T)>& family, std::size_t n, std::size_t k,
                          std::span<const double> T_list, std::size_t min_points = 1025);
DecayTable rl_decay_probe(const DrivenHamiltonian& h, std::size_t n, std::size_t k, std::span<const double> T_list,
                          std::size_t min_points = 1025);

}  // namespace adlab
