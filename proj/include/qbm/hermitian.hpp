// hermitian.hpp: dense complex matrix helpers, cyclic Jacobi eigensolver for
// Hermitian matrices, and pivoted inversion with a condition estimate.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace qbm {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;
using ComplexVector = Eigen::VectorXcd;

// ------------------------------- errors -------------------------------------

// Jacobi sweeps exhausted before the off-diagonal norm dropped below threshold.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(double residual, int sweeps)
        : std::runtime_error(make_message(residual, sweeps)),
          residual_(residual), sweeps_(sweeps) {}

    double off_diagonal_residual() const noexcept { return residual_; }
    int sweeps() const noexcept { return sweeps_; }

private:
    static std::string make_message(double residual, int sweeps) {
        std::ostringstream os;
        os << "eigendecompose: no convergence after " << sweeps
           << " sweeps (off-diagonal norm " << residual << ")";
        return os.str();
    }
    double residual_;
    int sweeps_;
};

// Matrix too close to singular for the configured condition cap.
class SingularMatrixError : public std::runtime_error {
public:
    explicit SingularMatrixError(double condition)
        : std::runtime_error(make_message(condition)), condition_(condition) {}

    double condition_estimate() const noexcept { return condition_; }

private:
    static std::string make_message(double condition) {
        std::ostringstream os;
        os << "matrix singular to tolerance (condition estimate " << condition << ")";
        return os.str();
    }
    double condition_;
};

// ------------------------------ utilities -----------------------------------

template <class Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            const auto v = m(i, j);
            if constexpr (Eigen::NumTraits<typename Derived::Scalar>::IsComplex) {
                if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
            } else {
                if (!std::isfinite(v)) return false;
            }
        }
    return true;
}

// max_ij |m_ij|
template <class Derived>
double max_abs(const Eigen::MatrixBase<Derived>& m) {
    if (m.size() == 0) return 0.0;
    return m.cwiseAbs().maxCoeff();
}

// ‖m − I‖_max
template <class Derived>
double identity_deviation(const Eigen::MatrixBase<Derived>& m) {
    using Plain = typename Derived::PlainObject;
    return max_abs(m - Plain::Identity(m.rows(), m.cols()));
}

inline ComplexMatrix adjoint(const ComplexMatrix& m) { return m.adjoint(); }

template <class A, class B>
auto matmul(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
    if (a.cols() != b.rows()) throw std::invalid_argument("matmul: inner dimensions differ");
    return (a * b).eval();
}

// --------------------------- HermitianMatrix --------------------------------

// Square complex matrix with h(i,j) == conj(h(j,i)) exactly and finite entries.
class HermitianMatrix {
public:
    explicit HermitianMatrix(ComplexMatrix m) : m_(std::move(m)) {
        if (m_.rows() != m_.cols())
            throw std::invalid_argument("HermitianMatrix: matrix must be square");
        if (m_.rows() == 0)
            throw std::invalid_argument("HermitianMatrix: dimension must be >= 1");
        if (!all_finite(m_))
            throw std::invalid_argument("HermitianMatrix: entries must be finite");
        for (Eigen::Index j = 0; j < m_.cols(); ++j)
            for (Eigen::Index i = j; i < m_.rows(); ++i)
                if (m_(i, j) != std::conj(m_(j, i)))
                    throw std::invalid_argument("HermitianMatrix: matrix is not Hermitian");
    }

    // Builds from the lower triangle; the upper triangle is filled by conjugation.
    static HermitianMatrix from_lower(const ComplexMatrix& lower) {
        ComplexMatrix m = lower;
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            m(j, j) = Complex(m(j, j).real(), 0.0);
            for (Eigen::Index i = j + 1; i < m.rows(); ++i) m(j, i) = std::conj(m(i, j));
        }
        return HermitianMatrix(std::move(m));
    }

    std::size_t dim() const noexcept { return static_cast<std::size_t>(m_.rows()); }
    const ComplexMatrix& matrix() const noexcept { return m_; }
    Complex operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }

private:
    ComplexMatrix m_;
};

// ------------------------ SpectralDecomposition -----------------------------

// h = U diag(eigenvalues) U†, with U(n, nu) = <psi_n|alpha_nu>.
struct SpectralDecomposition {
    RealVector eigenvalues;  // ascending
    ComplexMatrix U;         // unitary, eigenvectors in columns

    std::size_t dim() const noexcept { return static_cast<std::size_t>(eigenvalues.size()); }

    // ‖U†U − I‖_max
    double unitarity_residual() const { return identity_deviation(U.adjoint() * U); }

    // ‖U diag(α) U† − h‖_F / ‖h‖_F (absolute when h = 0)
    double reconstruction_residual(const HermitianMatrix& h) const {
        const ComplexMatrix rebuilt = U * eigenvalues.cast<Complex>().asDiagonal() * U.adjoint();
        const double norm = h.matrix().norm();
        const double diff = (rebuilt - h.matrix()).norm();
        return norm > 0.0 ? diff / norm : diff;
    }

    // ‖hU − Uα‖_max
    double eigen_residual(const HermitianMatrix& h) const {
        return max_abs(h.matrix() * U - U * eigenvalues.cast<Complex>().asDiagonal());
    }
};

struct JacobiOptions {
    int max_sweeps = 100;
    double relative_threshold = 1e-14;  // off-diagonal Frobenius norm / ‖h‖_F
};

namespace detail {

inline double off_diagonal_norm(const ComplexMatrix& a) {
    double sum = 0.0;
    for (Eigen::Index j = 0; j < a.cols(); ++j)
        for (Eigen::Index i = 0; i < a.rows(); ++i)
            if (i != j) sum += std::norm(a(i, j));
    return std::sqrt(sum);
}

// Make the largest-magnitude component of each column real-positive. Ties
// (within relative 1e-10) resolve to the lowest index.
inline void fix_phases(ComplexMatrix& u) {
    for (Eigen::Index col = 0; col < u.cols(); ++col) {
        double largest = 0.0;
        for (Eigen::Index r = 0; r < u.rows(); ++r) largest = std::max(largest, std::abs(u(r, col)));
        if (largest == 0.0) continue;
        Eigen::Index pick = 0;
        for (Eigen::Index r = 0; r < u.rows(); ++r)
            if (std::abs(u(r, col)) >= largest * (1.0 - 1e-10)) {
                pick = r;
                break;
            }
        const Complex phase = std::conj(u(pick, col)) / std::abs(u(pick, col));
        u.col(col) *= phase;
        u(pick, col) = Complex(std::abs(u(pick, col)), 0.0);
    }
}

}  // namespace detail

// Cyclic Jacobi diagonalisation. Each rotation first removes the phase of
// a_pq, then applies a real Givens rotation to the resulting symmetric 2×2
// block. Sweep order is fixed (p ascending, q > p ascending) so the output is
// a deterministic function of the input.
inline SpectralDecomposition eigendecompose(const HermitianMatrix& h, const JacobiOptions& opts = {}) {
    const Eigen::Index n = static_cast<Eigen::Index>(h.dim());
    ComplexMatrix a = h.matrix();
    ComplexMatrix v = ComplexMatrix::Identity(n, n);
    const double threshold = opts.relative_threshold * h.matrix().norm();

    int sweep = 0;
    double off = detail::off_diagonal_norm(a);
    while (off > threshold) {
        if (sweep == opts.max_sweeps) throw ConvergenceError(off, sweep);
        ++sweep;
        for (Eigen::Index p = 0; p < n - 1; ++p) {
            for (Eigen::Index q = p + 1; q < n; ++q) {
                const Complex apq = a(p, q);
                const double mag = std::abs(apq);
                if (mag == 0.0) continue;
                const Complex phase = apq / mag;  // e^{iφ}
                const double app = a(p, p).real();
                const double aqq = a(q, q).real();
                const double theta = (aqq - app) / (2.0 * mag);
                double t;
                if (std::abs(theta) > 1e150) {
                    t = 0.5 / theta;
                } else {
                    t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                }
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                const Complex sp = s * std::conj(phase);  // s e^{-iφ}
                const Complex cp = c * std::conj(phase);  // c e^{-iφ}

                // Columns: a <- a V with V = diag(1, e^{-iφ}) [[c, s], [-s, c]].
                for (Eigen::Index r = 0; r < n; ++r) {
                    const Complex arp = a(r, p);
                    const Complex arq = a(r, q);
                    a(r, p) = c * arp - sp * arq;
                    a(r, q) = s * arp + cp * arq;
                    const Complex vrp = v(r, p);
                    const Complex vrq = v(r, q);
                    v(r, p) = c * vrp - sp * vrq;
                    v(r, q) = s * vrp + cp * vrq;
                }
                // Rows: a <- V† a.
                for (Eigen::Index col = 0; col < n; ++col) {
                    const Complex apc = a(p, col);
                    const Complex aqc = a(q, col);
                    a(p, col) = c * apc - std::conj(sp) * aqc;
                    a(q, col) = s * apc + std::conj(cp) * aqc;
                }
                a(p, q) = Complex(0.0, 0.0);
                a(q, p) = Complex(0.0, 0.0);
                a(p, p) = Complex(a(p, p).real(), 0.0);
                a(q, q) = Complex(a(q, q).real(), 0.0);
            }
        }
        off = detail::off_diagonal_norm(a);
    }

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index x, Eigen::Index y) { return a(x, x).real() < a(y, y).real(); });

    SpectralDecomposition sd;
    sd.eigenvalues.resize(n);
    sd.U.resize(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const auto src = order[static_cast<std::size_t>(k)];
        sd.eigenvalues(k) = a(src, src).real();
        sd.U.col(k) = v.col(src);
    }
    detail::fix_phases(sd.U);
    return sd;
}

// ------------------------------ inversion -----------------------------------

struct LuDiagnostics {
    double condition = 1.0;  // max |pivot| / min |pivot|, +inf for a zero pivot
    int det_sign = 1;        // sign of det, 0 when a pivot vanishes
};

inline LuDiagnostics lu_diagnostics(const Eigen::PartialPivLU<RealMatrix>& lu) {
    const RealVector pivots = lu.matrixLU().diagonal();
    LuDiagnostics d;
    if (pivots.size() == 0) return d;
    const double hi = pivots.cwiseAbs().maxCoeff();
    const double lo = pivots.cwiseAbs().minCoeff();
    d.condition = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
    int sign = static_cast<int>(lu.permutationP().determinant());
    for (Eigen::Index i = 0; i < pivots.size(); ++i) {
        if (pivots(i) == 0.0) {
            sign = 0;
            break;
        }
        if (pivots(i) < 0.0) sign = -sign;
    }
    d.det_sign = sign;
    return d;
}

inline LuDiagnostics lu_diagnostics(const RealMatrix& p) {
    if (p.rows() != p.cols()) throw std::invalid_argument("lu_diagnostics: matrix must be square");
    return lu_diagnostics(Eigen::PartialPivLU<RealMatrix>(p));
}

inline constexpr double kDefaultInverseConditionCap = 1e12;

// Inverse by partial-pivot elimination. Throws SingularMatrixError when the
// pivot-ratio condition estimate exceeds `condition_cap`.
inline RealMatrix invert(const RealMatrix& p, double condition_cap = kDefaultInverseConditionCap) {
    if (p.rows() != p.cols()) throw std::invalid_argument("invert: matrix must be square");
    if (p.rows() == 0) throw std::invalid_argument("invert: empty matrix");
    const Eigen::PartialPivLU<RealMatrix> lu(p);
    const LuDiagnostics d = lu_diagnostics(lu);
    if (!(d.condition <= condition_cap)) throw SingularMatrixError(d.condition);
    return lu.inverse();
}

}  // namespace qbm
