// amplitudes.hpp: one-particle transition amplitudes and their first two time
// derivatives, evaluated in closed form from the spectral decomposition:
//
//   A_nm(t) = <psi_m| e^{-iht} |psi_n> = sum_nu e^{-i alpha_nu t} U(m,nu) conj(U(n,nu))
//
// so A(t) is the transpose of the propagator matrix e^{-iht}.

#pragma once

#include "qbm/hermitian.hpp"

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace qbm {

struct AmplitudeSet {
    double t = 0.0;
    ComplexMatrix A;      // A(n, m) = A_nm(t)
    ComplexMatrix Adot;   // empty unless requested
    ComplexMatrix Addot;  // empty unless requested

    std::size_t dim() const noexcept { return static_cast<std::size_t>(A.rows()); }
    bool has_derivatives() const noexcept { return Adot.size() > 0 && Addot.size() > 0; }

    // ‖A A† − I‖_max
    double unitarity_residual() const { return identity_deviation(A * A.adjoint()); }
};

// Which derivatives to fill; the full-matrix products dominate the cost.
enum class DerivativeOrder { none = 0, first = 1, second = 2 };

namespace detail {

inline bool is_real(const ComplexMatrix& u) { return u.imag().cwiseAbs().maxCoeff() == 0.0; }

// conj(U) diag(f) U^T with f = weights applied to the phase factors.
inline ComplexMatrix spectral_sum(const ComplexMatrix& u, bool real_u, const ComplexVector& f) {
    if (real_u) {
        // U real: the real and imaginary parts are two real products.
        const RealMatrix ur = u.real();
        const RealMatrix re = (ur * f.real().asDiagonal()) * ur.transpose();
        const RealMatrix im = (ur * f.imag().asDiagonal()) * ur.transpose();
        ComplexMatrix out(u.rows(), u.cols());
        out.real() = re;
        out.imag() = im;
        return out;
    }
    return (u.conjugate() * f.asDiagonal()) * u.transpose();
}

}  // namespace detail

inline AmplitudeSet amplitudes_at(const SpectralDecomposition& sd, double t,
                                  DerivativeOrder order = DerivativeOrder::second) {
    if (!std::isfinite(t)) throw std::invalid_argument("amplitudes_at: t must be finite");
    const Eigen::Index n = sd.eigenvalues.size();
    const bool real_u = detail::is_real(sd.U);
    ComplexVector phase(n);
    for (Eigen::Index k = 0; k < n; ++k) phase(k) = std::polar(1.0, -sd.eigenvalues(k) * t);

    AmplitudeSet out;
    out.t = t;
    out.A = t == 0.0 ? ComplexMatrix::Identity(n, n) : detail::spectral_sum(sd.U, real_u, phase);
    if (order == DerivativeOrder::none) return out;

    ComplexVector d1(n);
    for (Eigen::Index k = 0; k < n; ++k) d1(k) = Complex(0.0, -sd.eigenvalues(k)) * phase(k);
    out.Adot = detail::spectral_sum(sd.U, real_u, d1);
    if (order == DerivativeOrder::first) return out;

    ComplexVector d2(n);
    for (Eigen::Index k = 0; k < n; ++k) d2(k) = -sd.eigenvalues(k) * sd.eigenvalues(k) * phase(k);
    out.Addot = detail::spectral_sum(sd.U, real_u, d2);
    return out;
}

// Row 0 of A, Adot, Addot: amplitudes out of the system level, O(N^2).
struct SystemRow {
    double t = 0.0;
    ComplexVector A;      // A_{Omega m}(t), m = 0..N
    ComplexVector Adot;
    ComplexVector Addot;

    Complex survival() const { return A(0); }
};

inline SystemRow system_row_at(const SpectralDecomposition& sd, double t) {
    if (!std::isfinite(t)) throw std::invalid_argument("system_row_at: t must be finite");
    const Eigen::Index n = sd.eigenvalues.size();
    ComplexVector w0(n), w1(n), w2(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const double a = sd.eigenvalues(k);
        const Complex f = std::polar(1.0, -a * t) * std::conj(sd.U(0, k));
        w0(k) = f;
        w1(k) = Complex(0.0, -a) * f;
        w2(k) = -a * a * f;
    }
    SystemRow row;
    row.t = t;
    row.A.noalias() = sd.U * w0;
    if (t == 0.0) {
        row.A.setZero();
        row.A(0) = 1.0;
    }
    row.Adot.noalias() = sd.U * w1;
    row.Addot.noalias() = sd.U * w2;
    return row;
}

inline SystemRow system_row(const AmplitudeSet& amps) {
    if (!amps.has_derivatives()) throw std::invalid_argument("system_row: amplitude set lacks derivatives");
    SystemRow row;
    row.t = amps.t;
    row.A = amps.A.row(0).transpose();
    row.Adot = amps.Adot.row(0).transpose();
    row.Addot = amps.Addot.row(0).transpose();
    return row;
}

// A_{Omega Omega}(t) = sum_nu |U(0,nu)|^2 e^{-i alpha_nu t}
inline Complex survival_amplitude(const SpectralDecomposition& sd, double t) {
    if (!std::isfinite(t)) throw std::invalid_argument("survival_amplitude: t must be finite");
    if (t == 0.0) return Complex(1.0, 0.0);
    Complex sum(0.0, 0.0);
    for (Eigen::Index k = 0; k < sd.eigenvalues.size(); ++k)
        sum += std::norm(sd.U(0, k)) * std::polar(1.0, -sd.eigenvalues(k) * t);
    return sum;
}

// ------------------------------ time grids ----------------------------------

// Points t_k = k * dt for k = 0..K with K = floor(t_max / dt) (tolerant to
// representation error, so t_max = 1, dt = 0.1 yields 11 points).
struct TimeGrid {
    double t_max = 0.0;
    double dt = 1.0;

    TimeGrid() = default;
    TimeGrid(double t_max_, double dt_) : t_max(t_max_), dt(dt_) {
        if (!(std::isfinite(dt) && dt > 0.0)) throw std::invalid_argument("time grid: dt must be > 0");
        if (!(std::isfinite(t_max) && t_max >= dt)) throw std::invalid_argument("time grid: t_max must be >= dt");
    }

    std::size_t size() const {
        return static_cast<std::size_t>(std::floor(t_max / dt * (1.0 + 1e-12) + 1e-9)) + 1;
    }
    double operator[](std::size_t k) const { return static_cast<double>(k) * dt; }

    std::vector<double> points() const {
        std::vector<double> out(size());
        for (std::size_t k = 0; k < out.size(); ++k) out[k] = (*this)[k];
        return out;
    }
};

}  // namespace qbm
