#include "adlab/models.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "json.hpp"

#include "adlab/errors.hpp"

namespace adlab {

using std::numbers::pi;

GridHamiltonian::Lookup GridHamiltonian::nearest(double s) const {
    if (grid.empty()) throw Error(ErrorCode::InvalidArgument, "GridHamiltonian: empty grid");
    const auto it = std::lower_bound(grid.begin(), grid.end(), s);
    std::size_t idx = static_cast<std::size_t>(it - grid.begin());
    if (idx == grid.size()) {
        idx = grid.size() - 1;
    } else if (idx > 0 && std::abs(grid[idx - 1] - s) <= std::abs(grid[idx] - s)) {
        --idx;
    }
    double width = 0.0;
    if (grid.size() > 1) {
        const std::size_t lo = (idx > 0 && s < grid[idx]) ? idx - 1 : idx;
        const std::size_t hi = std::min(lo + 1, grid.size() - 1);
        width = grid[hi] - grid[std::min(lo, hi - 1)];
    }
    return {idx, width};
}

void GridHamiltonian::validate() const {
    if (grid.empty() || matrices.size() != grid.size())
        throw Error(ErrorCode::InvalidArgument, "GridHamiltonian: need one matrix per grid point");
    if (!derivatives.empty() && derivatives.size() != grid.size())
        throw Error(ErrorCode::InvalidArgument, "GridHamiltonian: need one derivative per grid point");
    if (!(T > 0.0)) throw Error(ErrorCode::InvalidArgument, "GridHamiltonian: T must be positive");
    for (std::size_t j = 0; j < grid.size(); ++j) {
        if (grid[j] < 0.0 || grid[j] > 1.0 || (j > 0 && grid[j] <= grid[j - 1]))
            throw Error(ErrorCode::InvalidArgument, "GridHamiltonian: grid must ascend within [0, 1]");
        if (matrices[j].dim() != dim())
            throw Error(ErrorCode::InvalidArgument, "GridHamiltonian: inconsistent dimensions");
        require_hermitian(matrices[j], "GridHamiltonian");
    }
}

Hamiltonian::Hamiltonian(DrivenHamiltonian h) {
    if (h.dim == 0 || !h.eval) throw Error(ErrorCode::InvalidArgument, "DrivenHamiltonian: missing dim or eval");
    driven_ = std::make_shared<const DrivenHamiltonian>(std::move(h));
}

Hamiltonian::Hamiltonian(GridHamiltonian h) {
    h.validate();
    grid_ = std::make_shared<const GridHamiltonian>(std::move(h));
}

std::size_t Hamiltonian::dim() const { return driven_ ? driven_->dim : grid_->dim(); }

std::string Hamiltonian::label() const { return driven_ ? driven_->label : std::string("grid"); }

bool Hamiltonian::has_derivative() const {
    return driven_ ? static_cast<bool>(driven_->deriv) : !grid_->derivatives.empty();
}

namespace {

void check_table_T(const GridHamiltonian& g, double T) {
    if (std::abs(T - g.T) > 1e-9 * std::max(1.0, std::abs(g.T)))
        throw Error(ErrorCode::GridMismatch, "grid Hamiltonian built at T=" + std::to_string(g.T) +
                                                 " queried at T=" + std::to_string(T));
}

}  // namespace

ComplexMatrix Hamiltonian::at(double s, double T) const {
    if (driven_) return driven_->eval(s, T);
    check_table_T(*grid_, T);
    return grid_->matrices[grid_->nearest(s).index];
}

ComplexMatrix Hamiltonian::derivative(double s, double T) const {
    if (!has_derivative()) throw Error(ErrorCode::MissingDerivative, "model has no analytic dH/ds");
    if (driven_) return driven_->deriv(s, T);
    check_table_T(*grid_, T);
    return grid_->derivatives[grid_->nearest(s).index];
}

ComplexMatrix Hamiltonian::interpolate(double s, double T) const {
    if (driven_) return driven_->eval(s, T);
    check_table_T(*grid_, T);
    const auto& g = grid_->grid;
    if (g.size() == 1 || s <= g.front()) return grid_->matrices.front();
    if (s >= g.back()) return grid_->matrices.back();
    const auto hi = static_cast<std::size_t>(std::upper_bound(g.begin(), g.end(), s) - g.begin());
    const std::size_t lo = hi - 1;
    const double f = (s - g[lo]) / (g[hi] - g[lo]);
    return (1.0 - f) * grid_->matrices[lo] + f * grid_->matrices[hi];
}

double RotatingSpinParams::omega() const { return 2.0 * pi / T; }

void RotatingSpinParams::validate() const {
    if (!(omega0 > 0.0) || !std::isfinite(omega0))
        throw Error(ErrorCode::InvalidArgument, "omega0 must be positive");
    if (!(T > 0.0) || !std::isfinite(T)) throw Error(ErrorCode::InvalidArgument, "T must be positive");
}

bool RotatingSpinParams::adiabatic_regime() const { return omega() / omega0 < 0.1; }

namespace {

ComplexMatrix rotating_field(double omega0, double angle) {
    const cplx e = std::polar(1.0, angle);
    return {{0.0, -0.5 * omega0 * std::conj(e)}, {-0.5 * omega0 * e, 0.0}};
}

// d/ds of rotating_field when the angle advances at rate angle_rate.
ComplexMatrix rotating_field_rate(double omega0, double angle, double angle_rate) {
    const cplx e = std::polar(1.0, angle);
    return {{0.0, 0.5 * omega0 * kI * angle_rate * std::conj(e)}, {-0.5 * omega0 * kI * angle_rate * e, 0.0}};
}

}  // namespace

DrivenHamiltonian rotating_spin(const RotatingSpinParams& params) {
    params.validate();
    const double w0 = params.omega0;
    DrivenHamiltonian h;
    h.dim = 2;
    h.label = "rotating_spin";
    h.eval = [w0](double s, double) { return rotating_field(w0, 2.0 * pi * s); };
    h.deriv = [w0](double s, double) { return rotating_field_rate(w0, 2.0 * pi * s, 2.0 * pi); };
    return h;
}

double chirp_angle(double s, double theta_exponent) {
    return 2.0 * pi * pi * std::pow(s, theta_exponent);
}

DrivenHamiltonian chirped_spin(double omega0, double theta_exponent) {
    if (!(omega0 > 0.0)) throw Error(ErrorCode::InvalidArgument, "omega0 must be positive");
    if (!(theta_exponent >= 1.0))
        throw Error(ErrorCode::InvalidArgument, "theta_exponent must be >= 1 for a differentiable chirp");
    const double p = theta_exponent;
    DrivenHamiltonian h;
    h.dim = 2;
    h.label = "chirped_spin";
    h.eval = [omega0, p](double s, double) { return rotating_field(omega0, chirp_angle(s, p)); };
    h.deriv = [omega0, p](double s, double) {
        const double rate = 2.0 * pi * pi * p * std::pow(s, p - 1.0);
        return rotating_field_rate(omega0, chirp_angle(s, p), rate);
    };
    return h;
}

ComplexMatrix rotating_field_spinors(double angle) {
    const double r = std::sqrt(0.5);
    const cplx a = std::polar(r, -0.5 * angle);
    const cplx b = std::polar(r, 0.5 * angle);
    return {{a, a}, {b, -b}};
}

DrivenHamiltonian dual_first_order(const RotatingSpinParams& params) {
    params.validate();
    if (!params.adiabatic_regime())
        throw Error(ErrorCode::RegimeViolation, "first-order dual needs omega/omega0 < 0.1");
    const double w0 = params.omega0;
    DrivenHamiltonian h;
    h.dim = 2;
    h.label = "dual_first_order";
    h.eval = [w0](double s, double T) {
        const double w = 2.0 * pi / T;
        if (!(w / w0 < 0.1)) throw Error(ErrorCode::RegimeViolation, "first-order dual needs omega/omega0 < 0.1");
        const double c = std::cos(w0 * T * s);
        const double sn = std::sin(w0 * T * s);
        return ComplexMatrix{{0.5 * w + 0.5 * w0 - 0.5 * w * c, -0.5 * w * kI * sn},
                             {0.5 * w * kI * sn, 0.5 * w - 0.5 * w0 + 0.5 * w * c}};
    };
    h.deriv = [w0](double s, double T) {
        const double w = 2.0 * pi / T;
        const double k = w0 * T;
        const double c = std::cos(k * s);
        const double sn = std::sin(k * s);
        return ComplexMatrix{{0.5 * w * k * sn, -0.5 * w * kI * k * c}, {0.5 * w * kI * k * c, -0.5 * w * k * sn}};
    };
    return h;
}

GridHamiltonian build_dual(const Hamiltonian& base, double T, const Grid& grid, const PropagatorFn& propagate) {
    if (!propagate) throw Error(ErrorCode::InvalidArgument, "build_dual: no propagator");
    const auto u = propagate(base, T, grid);
    return build_dual(base, T, grid, u);
}

GridHamiltonian build_dual(const Hamiltonian& base, double T, const Grid& grid,
                           std::span<const ComplexMatrix> base_propagator) {
    if (base_propagator.size() != grid.size())
        throw Error(ErrorCode::PropagationFailed, "build_dual: propagator returned the wrong number of points");
    GridHamiltonian out;
    out.grid = grid;
    out.T = T;
    out.matrices.reserve(grid.size());
    const bool with_deriv = base.has_derivative();
    if (with_deriv) out.derivatives.reserve(grid.size());

    for (std::size_t j = 0; j < grid.size(); ++j) {
        const auto& u = base_propagator[j];
        if (u.dim() != base.dim() || !u.is_finite() || unitarity_defect(u) > 1e-8)
            throw Error(ErrorCode::PropagationFailed, "build_dual: propagator is not unitary");
        const ComplexMatrix ha = base.at(grid[j], T);
        hermitian_eigh(ha, {.assert_nondegenerate = true, .gap_floor = std::nullopt});
        const ComplexMatrix ud = u.adjoint();
        ComplexMatrix hb = -1.0 * (ud * ha * u);
        hb = 0.5 * (hb + hb.adjoint());
        out.matrices.push_back(std::move(hb));
        if (with_deriv) {
            ComplexMatrix db = -1.0 * (ud * base.derivative(grid[j], T) * u);
            out.derivatives.push_back(0.5 * (db + db.adjoint()));
        }
    }
    return out;
}

double probe_T_dependence(const std::function<Hamiltonian(double T)>& family, std::span<const double> s_samples,
                          std::span<const double> T_samples) {
    std::vector<double> ts(T_samples.begin(), T_samples.end());
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
    if (ts.size() < 2) throw Error(ErrorCode::InsufficientSamples, "probe_T_dependence: need two distinct T values");
    if (s_samples.empty()) throw Error(ErrorCode::InsufficientSamples, "probe_T_dependence: no s samples");

    std::vector<Hamiltonian> members;
    members.reserve(ts.size());
    for (double t : ts) members.push_back(family(t));

    double worst = 0.0;
    for (double s : s_samples) {
        std::vector<ComplexMatrix> values;
        values.reserve(ts.size());
        for (std::size_t i = 0; i < ts.size(); ++i) values.push_back(members[i].at(s, ts[i]));
        for (std::size_t a = 0; a < values.size(); ++a)
            for (std::size_t b = a + 1; b < values.size(); ++b)
                worst = std::max(worst, (values[a] - values[b]).max_abs());
    }
    return worst;
}

double probe_T_dependence(const DrivenHamiltonian& h, std::span<const double> s_samples,
                          std::span<const double> T_samples) {
    const Hamiltonian handle(h);
    return probe_T_dependence([&](double) { return handle; }, s_samples, T_samples);
}

double probe_T_dependence(std::span<const GridHamiltonian> family, std::span<const double> s_samples) {
    std::vector<double> ts;
    std::vector<Hamiltonian> members;
    for (const auto& g : family) {
        if (std::find(ts.begin(), ts.end(), g.T) != ts.end())
            throw Error(ErrorCode::InvalidArgument, "probe_T_dependence: one table per T");
        ts.push_back(g.T);
        members.emplace_back(g);
    }
    return probe_T_dependence(
        [&](double t) {
            const auto pos = static_cast<std::size_t>(std::find(ts.begin(), ts.end(), t) - ts.begin());
            return members.at(pos);
        },
        s_samples, ts);
}

namespace {

nlohmann::json matrix_to_json(const ComplexMatrix& m) {
    auto arr = nlohmann::json::array();
    for (std::size_t r = 0; r < m.dim(); ++r)
        for (std::size_t c = 0; c < m.dim(); ++c) arr.push_back({m(r, c).real(), m(r, c).imag()});
    return arr;
}

ComplexMatrix matrix_from_json(const nlohmann::json& j) {
    if (!j.is_array()) throw Error(ErrorCode::ParseError, "matrix must be an array of [re, im] pairs");
    const auto n = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(j.size()))));
    if (n == 0 || n * n != j.size()) throw Error(ErrorCode::ParseError, "matrix entry count is not a square");
    ComplexMatrix m(n);
    for (std::size_t i = 0; i < j.size(); ++i) {
        const auto& e = j[i];
        if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number())
            throw Error(ErrorCode::ParseError, "matrix entries must be [re, im] numbers");
        m(i / n, i % n) = cplx(e[0].get<double>(), e[1].get<double>());
    }
    return m;
}

}  // namespace

std::string to_json(const GridHamiltonian& h) {
    nlohmann::json j;
    j["grid"] = h.grid;
    auto mats = nlohmann::json::array();
    for (const auto& m : h.matrices) mats.push_back(matrix_to_json(m));
    j["matrices"] = std::move(mats);
    if (!h.derivatives.empty()) {
        auto ders = nlohmann::json::array();
        for (const auto& m : h.derivatives) ders.push_back(matrix_to_json(m));
        j["derivatives"] = std::move(ders);
    }
    j["T"] = h.T;
    return j.dump();
}

GridHamiltonian grid_hamiltonian_from_json(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string("grid Hamiltonian JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("grid") || !j.contains("matrices") || !j.contains("T"))
        throw Error(ErrorCode::ParseError, "grid Hamiltonian JSON needs grid, matrices and T");
    GridHamiltonian h;
    try {
        h.grid = j.at("grid").get<std::vector<double>>();
        h.T = j.at("T").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string("grid Hamiltonian JSON: ") + e.what());
    }
    for (const auto& m : j.at("matrices")) h.matrices.push_back(matrix_from_json(m));
    if (j.contains("derivatives"))
        for (const auto& m : j.at("derivatives")) h.derivatives.push_back(matrix_from_json(m));
    h.validate();
    return h;
}

GridHamiltonian load_grid_hamiltonian(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open grid file " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return grid_hamiltonian_from_json(buf.str());
}

}  // namespace adlab
