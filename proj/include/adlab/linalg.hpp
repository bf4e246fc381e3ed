// linalg.hpp - small dense complex linear algebra (Hermitian eigenproblems,
// unitary exponentials, norms). Sized for the few-level systems adlab targets.
#pragma once

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <optional>
#include <span>
#include <vector>

namespace adlab {

using cplx = std::complex<double>;

inline constexpr cplx kI{0.0, 1.0};

class ComplexVector {
public:
    ComplexVector() = default;
    explicit ComplexVector(std::size_t n) : data_(n, cplx{}) {}
    ComplexVector(std::initializer_list<cplx> values) : data_(values) {}
    explicit ComplexVector(std::vector<cplx> values) : data_(std::move(values)) {}

    std::size_t size() const noexcept { return data_.size(); }
    cplx& operator[](std::size_t i) { return data_[i]; }
    const cplx& operator[](std::size_t i) const { return data_[i]; }
    std::span<const cplx> entries() const noexcept { return data_; }

    double norm() const;
    bool is_finite() const;

private:
    std::vector<cplx> data_;
};

// <a|b>, conjugate-linear in the first argument.
cplx inner(const ComplexVector& a, const ComplexVector& b);

// Square N x N complex matrix, row-major.
class ComplexMatrix {
public:
    ComplexMatrix() = default;
    explicit ComplexMatrix(std::size_t n) : n_(n), data_(n * n, cplx{}) {}
    ComplexMatrix(std::initializer_list<std::initializer_list<cplx>> rows);

    static ComplexMatrix identity(std::size_t n);
    static ComplexMatrix diagonal(std::span<const cplx> d);

    std::size_t dim() const noexcept { return n_; }
    cplx& operator()(std::size_t r, std::size_t c) { return data_[r * n_ + c]; }
    const cplx& operator()(std::size_t r, std::size_t c) const { return data_[r * n_ + c]; }

    ComplexVector column(std::size_t c) const;
    void set_column(std::size_t c, const ComplexVector& v);

    ComplexMatrix adjoint() const;
    ComplexMatrix& operator+=(const ComplexMatrix& o);
    ComplexMatrix& operator-=(const ComplexMatrix& o);
    ComplexMatrix& operator*=(cplx a);

    // Largest entry modulus; this is the "infinity norm" used for every
    // tolerance in adlab.
    double max_abs() const;
    bool is_finite() const;

    friend bool operator==(const ComplexMatrix&, const ComplexMatrix&) = default;

private:
    std::size_t n_ = 0;
    std::vector<cplx> data_;
};

ComplexMatrix operator+(ComplexMatrix a, const ComplexMatrix& b);
ComplexMatrix operator-(ComplexMatrix a, const ComplexMatrix& b);
ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b);
ComplexMatrix operator*(cplx a, ComplexMatrix m);
ComplexVector operator*(const ComplexMatrix& m, const ComplexVector& v);

// <u|M|v>
cplx sandwich(const ComplexVector& u, const ComplexMatrix& m, const ComplexVector& v);

double hermiticity_defect(const ComplexMatrix& m);
double unitarity_defect(const ComplexMatrix& u);  // max|U^dagger U - I|

namespace pauli {
ComplexMatrix x();
ComplexMatrix y();
ComplexMatrix z();
}  // namespace pauli

struct HermitianEigenDecomposition {
    std::vector<double> eigenvalues;  // ascending
    ComplexMatrix eigenvectors;       // orthonormal columns

    ComplexVector vector(std::size_t n) const { return eigenvectors.column(n); }
};

struct EighOptions {
    bool assert_nondegenerate = false;
    // Defaults to 1e-9 * max|H_ij| when unset.
    std::optional<double> gap_floor;
};

// Cyclic Jacobi diagonalisation. Eigenvalues ascending; each eigenvector is
// rephased so its largest-modulus entry is real and positive.
// Throws NotHermitian, DegenerateSpectrum.
HermitianEigenDecomposition hermitian_eigh(const ComplexMatrix& h, const EighOptions& opts = {});

// exp(-i H dt) via the eigendecomposition of H. Throws NotHermitian.
ComplexMatrix unitary_step(const ComplexMatrix& h, double dt);

// Throws NotHermitian when the defect exceeds 1e-12 * max|H_ij|.
void require_hermitian(const ComplexMatrix& h, const char* context);

}  // namespace adlab
