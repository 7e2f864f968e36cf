// langevin.hpp: exact local Langevin equation for the system coordinate
//
//   X(t) = a(t) X(0) + b(t) P(0)/(M Omega) + f(t),   A_{Omega Omega} = a + i b
//   Xddot + Omega^2(t) X + Gamma(t) Xdot = F(t)
//
// Omega^2(t) and Gamma(t) follow from requiring a and b to solve the
// homogeneous equation; the 2x2 system is solved in complex form from A, Adot,
// Addot of the survival amplitude.

#pragma once

#include "qbm/amplitudes.hpp"
#include "qbm/model.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace qbm {

inline constexpr double kDefaultWronskianTolerance = 1e-12;

struct LangevinCoefficients {
    double t = 0.0;
    Complex A, Adot, Addot;  // survival amplitude and derivatives
    double omega_sq = std::numeric_limits<double>::quiet_NaN();
    double gamma = std::numeric_limits<double>::quiet_NaN();
    Complex wronskian_denominator;  // A conj(Adot) − conj(A) Adot = −2i (a bdot − adot b)
    double imag_residue = 0.0;      // largest imaginary part discarded from the ratios
    bool singular = false;

    double a() const { return A.real(); }
    double b() const { return A.imag(); }
};

inline LangevinCoefficients langevin_coefficients(double t, Complex A, Complex Adot, Complex Addot,
                                                  double wronskian_tol = kDefaultWronskianTolerance) {
    LangevinCoefficients c;
    c.t = t;
    c.A = A;
    c.Adot = Adot;
    c.Addot = Addot;
    const Complex den = A * std::conj(Adot) - std::conj(A) * Adot;
    c.wronskian_denominator = den;
    // Im(conj(A) Adot) = a bdot − adot b
    const double wronskian = (std::conj(A) * Adot).imag();
    if (!(std::abs(wronskian) > wronskian_tol * std::abs(A) * std::abs(Adot))) {
        c.singular = true;
        return c;
    }
    const Complex omega_sq = (Adot * std::conj(Addot) - std::conj(Adot) * Addot) / den;
    const Complex gamma = -(A * std::conj(Addot) - std::conj(A) * Addot) / den;
    c.omega_sq = omega_sq.real();
    c.gamma = gamma.real();
    c.imag_residue = std::max(std::abs(omega_sq.imag()), std::abs(gamma.imag()));
    return c;
}

inline LangevinCoefficients langevin_coefficients(const SystemRow& row,
                                                  double wronskian_tol = kDefaultWronskianTolerance) {
    return langevin_coefficients(row.t, row.A(0), row.Adot(0), row.Addot(0), wronskian_tol);
}

inline LangevinCoefficients langevin_coefficients(const AmplitudeSet& amps,
                                                  double wronskian_tol = kDefaultWronskianTolerance) {
    if (!amps.has_derivatives()) throw std::invalid_argument("langevin_coefficients: derivatives required");
    return langevin_coefficients(amps.t, amps.A(0, 0), amps.Adot(0, 0), amps.Addot(0, 0), wronskian_tol);
}

// max(|addot + G adot + W2 a|, |bddot + G bdot + W2 b|) / max(|addot|, |bddot|, |W2|);
// NaN at singular points.
inline double langevin_residual_at(const LangevinCoefficients& c) {
    if (c.singular) return std::numeric_limits<double>::quiet_NaN();
    const Complex r = c.Addot + c.gamma * c.Adot + c.omega_sq * c.A;
    const double scale = std::max({std::abs(c.Addot.real()), std::abs(c.Addot.imag()), std::abs(c.omega_sq)});
    const double worst = std::max(std::abs(r.real()), std::abs(r.imag()));
    if (scale == 0.0) return worst;
    return worst / scale;
}

inline std::vector<double> langevin_residual(std::span<const LangevinCoefficients> series) {
    std::vector<double> out;
    out.reserve(series.size());
    for (const auto& c : series) out.push_back(langevin_residual_at(c));
    return out;
}

// Symmetrised second moment of the inhomogeneous term f(t) of X(t) under the
// uncorrelated initial state <b_m^† b_n> = delta_mn <N_m(0)>:
//
//   C_ff(t, t') = 1/(2 M Omega) sum_{m>=1} Re[A_{Omega m}(t) conj(A_{Omega m}(t'))] (2<N_m(0)> + 1)
//
// Each term is written symmetrically, so C_ff(t, t') == C_ff(t', t) bit for bit.
inline double noise_covariance(const ComplexVector& row_t, const ComplexVector& row_tp,
                               const InitialPopulations& init, const ModelSpec& spec) {
    const Eigen::Index n = static_cast<Eigen::Index>(spec.dim());
    if (row_t.size() != n || row_tp.size() != n || static_cast<Eigen::Index>(init.dim()) != n)
        throw std::invalid_argument("noise_covariance: dimension mismatch");
    double sum = 0.0;
    for (Eigen::Index m = 1; m < n; ++m) {
        const Complex x = row_t(m);
        const Complex y = row_tp(m);
        const double re = x.real() * y.real() + x.imag() * y.imag();
        sum += re * (2.0 * init.occupations(m) + 1.0);
    }
    return sum / (2.0 * spec.mass * spec.Omega);
}

inline double noise_covariance(const SystemRow& at_t, const SystemRow& at_tp, const InitialPopulations& init,
                               const ModelSpec& spec) {
    return noise_covariance(at_t.A, at_tp.A, init, spec);
}

inline double noise_covariance(const AmplitudeSet& at_t, const AmplitudeSet& at_tp, const InitialPopulations& init,
                               const ModelSpec& spec) {
    return noise_covariance(ComplexVector(at_t.A.row(0).transpose()), ComplexVector(at_tp.A.row(0).transpose()),
                            init, spec);
}

}  // namespace qbm
