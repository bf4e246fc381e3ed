#include "adlab/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "adlab/errors.hpp"

namespace adlab {

double ComplexVector::norm() const {
    double acc = 0.0;
    for (const auto& z : data_) acc += std::norm(z);
    return std::sqrt(acc);
}

bool ComplexVector::is_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](const cplx& z) {
        return std::isfinite(z.real()) && std::isfinite(z.imag());
    });
}

cplx inner(const ComplexVector& a, const ComplexVector& b) {
    if (a.size() != b.size()) throw Error(ErrorCode::InvalidArgument, "inner: size mismatch");
    cplx acc{};
    for (std::size_t i = 0; i < a.size(); ++i) acc += std::conj(a[i]) * b[i];
    return acc;
}

ComplexMatrix::ComplexMatrix(std::initializer_list<std::initializer_list<cplx>> rows)
    : n_(rows.size()), data_() {
    data_.reserve(n_ * n_);
    for (const auto& row : rows) {
        if (row.size() != n_) throw Error(ErrorCode::InvalidArgument, "ComplexMatrix: not square");
        data_.insert(data_.end(), row.begin(), row.end());
    }
}

ComplexMatrix ComplexMatrix::identity(std::size_t n) {
    ComplexMatrix m(n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

ComplexMatrix ComplexMatrix::diagonal(std::span<const cplx> d) {
    ComplexMatrix m(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
}

ComplexVector ComplexMatrix::column(std::size_t c) const {
    ComplexVector v(n_);
    for (std::size_t r = 0; r < n_; ++r) v[r] = (*this)(r, c);
    return v;
}

void ComplexMatrix::set_column(std::size_t c, const ComplexVector& v) {
    for (std::size_t r = 0; r < n_; ++r) (*this)(r, c) = v[r];
}

ComplexMatrix ComplexMatrix::adjoint() const {
    ComplexMatrix m(n_);
    for (std::size_t r = 0; r < n_; ++r)
        for (std::size_t c = 0; c < n_; ++c) m(c, r) = std::conj((*this)(r, c));
    return m;
}

ComplexMatrix& ComplexMatrix::operator+=(const ComplexMatrix& o) {
    if (o.n_ != n_) throw Error(ErrorCode::InvalidArgument, "matrix sum: dimension mismatch");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
}

ComplexMatrix& ComplexMatrix::operator-=(const ComplexMatrix& o) {
    if (o.n_ != n_) throw Error(ErrorCode::InvalidArgument, "matrix difference: dimension mismatch");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
}

ComplexMatrix& ComplexMatrix::operator*=(cplx a) {
    for (auto& z : data_) z *= a;
    return *this;
}

double ComplexMatrix::max_abs() const {
    double m = 0.0;
    for (const auto& z : data_) m = std::max(m, std::abs(z));
    return m;
}

bool ComplexMatrix::is_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](const cplx& z) {
        return std::isfinite(z.real()) && std::isfinite(z.imag());
    });
}

ComplexMatrix operator+(ComplexMatrix a, const ComplexMatrix& b) { return a += b; }
ComplexMatrix operator-(ComplexMatrix a, const ComplexMatrix& b) { return a -= b; }
ComplexMatrix operator*(cplx a, ComplexMatrix m) { return m *= a; }

ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b) {
    const std::size_t n = a.dim();
    if (b.dim() != n) throw Error(ErrorCode::InvalidArgument, "matrix product: dimension mismatch");
    ComplexMatrix m(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < n; ++k) {
            const cplx aik = a(i, k);
            for (std::size_t j = 0; j < n; ++j) m(i, j) += aik * b(k, j);
        }
    return m;
}

ComplexVector operator*(const ComplexMatrix& m, const ComplexVector& v) {
    const std::size_t n = m.dim();
    if (v.size() != n) throw Error(ErrorCode::InvalidArgument, "matrix-vector: dimension mismatch");
    ComplexVector out(n);
    for (std::size_t i = 0; i < n; ++i) {
        cplx acc{};
        for (std::size_t j = 0; j < n; ++j) acc += m(i, j) * v[j];
        out[i] = acc;
    }
    return out;
}

cplx sandwich(const ComplexVector& u, const ComplexMatrix& m, const ComplexVector& v) {
    return inner(u, m * v);
}

double hermiticity_defect(const ComplexMatrix& m) {
    double d = 0.0;
    for (std::size_t r = 0; r < m.dim(); ++r)
        for (std::size_t c = r; c < m.dim(); ++c)
            d = std::max(d, std::abs(m(r, c) - std::conj(m(c, r))));
    return d;
}

double unitarity_defect(const ComplexMatrix& u) {
    return (u.adjoint() * u - ComplexMatrix::identity(u.dim())).max_abs();
}

namespace pauli {
ComplexMatrix x() { return {{0.0, 1.0}, {1.0, 0.0}}; }
ComplexMatrix y() { return {{0.0, -kI}, {kI, 0.0}}; }
ComplexMatrix z() { return {{1.0, 0.0}, {0.0, -1.0}}; }
}  // namespace pauli

void require_hermitian(const ComplexMatrix& h, const char* context) {
    if (h.dim() == 0) throw Error(ErrorCode::InvalidArgument, std::string(context) + ": empty matrix");
    if (!h.is_finite()) throw Error(ErrorCode::InvalidArgument, std::string(context) + ": non-finite entries");
    const double scale = h.max_abs();
    if (hermiticity_defect(h) > 1e-12 * scale)
        throw Error(ErrorCode::NotHermitian, std::string(context) + ": matrix is not Hermitian");
}

namespace {

double off_diagonal_norm(const ComplexMatrix& a) {
    double acc = 0.0;
    for (std::size_t r = 0; r < a.dim(); ++r)
        for (std::size_t c = 0; c < a.dim(); ++c)
            if (r != c) acc += std::norm(a(r, c));
    return std::sqrt(acc);
}

// One complex Jacobi rotation annihilating a(p,q). The rotation is the
// product of diag(1, e^{-i phi}) (making a(p,q) real) and a real Givens
// rotation.
void rotate(ComplexMatrix& a, ComplexMatrix& v, std::size_t p, std::size_t q) {
    const cplx apq = a(p, q);
    const double r = std::abs(apq);
    if (r == 0.0) return;
    const cplx phase = apq / r;  // e^{i phi}
    const double app = a(p, p).real();
    const double aqq = a(q, q).real();
    const double theta = (aqq - app) / (2.0 * r);
    const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
    const double c = 1.0 / std::sqrt(t * t + 1.0);
    const double s = t * c;
    const cplx em = std::conj(phase);  // e^{-i phi}
    const std::size_t n = a.dim();

    // A <- A G with G_pp = c, G_pq = s, G_qp = -s e^{-i phi}, G_qq = c e^{-i phi}
    for (std::size_t i = 0; i < n; ++i) {
        const cplx aip = a(i, p), aiq = a(i, q);
        a(i, p) = c * aip - s * em * aiq;
        a(i, q) = s * aip + c * em * aiq;
        const cplx vip = v(i, p), viq = v(i, q);
        v(i, p) = c * vip - s * em * viq;
        v(i, q) = s * vip + c * em * viq;
    }
    // A <- G^dagger A
    for (std::size_t j = 0; j < n; ++j) {
        const cplx apj = a(p, j), aqj = a(q, j);
        a(p, j) = c * apj - s * phase * aqj;
        a(q, j) = s * apj + c * phase * aqj;
    }
    a(p, q) = 0.0;
    a(q, p) = 0.0;
    a(p, p) = a(p, p).real();
    a(q, q) = a(q, q).real();
}

void canonical_phase(ComplexMatrix& v, std::size_t col) {
    const std::size_t n = v.dim();
    double best = 0.0;
    for (std::size_t r = 0; r < n; ++r) best = std::max(best, std::abs(v(r, col)));
    // First entry within roundoff of the largest modulus wins ties.
    std::size_t pick = 0;
    for (std::size_t r = 0; r < n; ++r)
        if (std::abs(v(r, col)) >= best * (1.0 - 1e-12)) {
            pick = r;
            break;
        }
    const cplx z = v(pick, col);
    if (std::abs(z) == 0.0) return;
    const cplx rot = std::conj(z) / std::abs(z);
    for (std::size_t r = 0; r < n; ++r) v(r, col) *= rot;
    v(pick, col) = std::abs(v(pick, col));
}

}  // namespace

HermitianEigenDecomposition hermitian_eigh(const ComplexMatrix& h, const EighOptions& opts) {
    require_hermitian(h, "hermitian_eigh");
    const std::size_t n = h.dim();
    const double scale = h.max_abs();

    ComplexMatrix a = h;
    // Symmetrise away the roundoff-level anti-Hermitian part.
    for (std::size_t r = 0; r < n; ++r) {
        a(r, r) = a(r, r).real();
        for (std::size_t c = r + 1; c < n; ++c) {
            const cplx avg = 0.5 * (a(r, c) + std::conj(a(c, r)));
            a(r, c) = avg;
            a(c, r) = std::conj(avg);
        }
    }
    ComplexMatrix v = ComplexMatrix::identity(n);

    const double target = std::numeric_limits<double>::epsilon() * std::max(scale, 1e-300);
    for (int sweep = 0; sweep < 100; ++sweep) {
        if (off_diagonal_norm(a) <= target) break;
        for (std::size_t p = 0; p + 1 < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q)
                if (std::abs(a(p, q)) > 0.0) rotate(a, v, p, q);
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return a(i, i).real() < a(j, j).real(); });

    HermitianEigenDecomposition out;
    out.eigenvalues.resize(n);
    out.eigenvectors = ComplexMatrix(n);
    for (std::size_t k = 0; k < n; ++k) {
        out.eigenvalues[k] = a(order[k], order[k]).real();
        for (std::size_t r = 0; r < n; ++r) out.eigenvectors(r, k) = v(r, order[k]);
        canonical_phase(out.eigenvectors, k);
    }

    if (opts.assert_nondegenerate) {
        const double floor = opts.gap_floor.value_or(1e-9 * scale);
        for (std::size_t k = 0; k + 1 < n; ++k)
            if (out.eigenvalues[k + 1] - out.eigenvalues[k] <= floor)
                throw Error(ErrorCode::DegenerateSpectrum,
                            "eigenvalue gap " + std::to_string(out.eigenvalues[k + 1] - out.eigenvalues[k]) +
                                " at levels " + std::to_string(k + 1) + "," + std::to_string(k + 2) +
                                " is below the floor " + std::to_string(floor));
    }
    return out;
}

ComplexMatrix unitary_step(const ComplexMatrix& h, double dt) {
    const auto eig = hermitian_eigh(h);
    const std::size_t n = h.dim();
    const auto& v = eig.eigenvectors;
    std::vector<cplx> phases(n);
    for (std::size_t k = 0; k < n; ++k) phases[k] = std::polar(1.0, -eig.eigenvalues[k] * dt);
    ComplexMatrix u(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            cplx acc{};
            for (std::size_t k = 0; k < n; ++k) acc += v(i, k) * phases[k] * std::conj(v(j, k));
            u(i, j) = acc;
        }
    return u;
}

}  // namespace adlab
