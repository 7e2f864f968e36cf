// model.hpp: one-particle Hamiltonian h = h0 + v for a system oscillator
// coupled to a discrete bosonic bath, plus presets for baths and populations.
//
// Index 0 is always the system oscillator |Omega>; bath modes are 1..N.

#pragma once

#include "qbm/hermitian.hpp"

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace qbm {

struct ModelSpec {
    double Omega = 1.0;  // system frequency
    double mass = 1.0;   // only enters X and noise normalisation 1/sqrt(2 M Omega)
    double self_shift = 0.0;                // <Omega|v|Omega>
    std::vector<double> bath_frequencies;   // omega_n, n = 1..N
    std::vector<Complex> couplings;         // g_n = <omega_n|v|Omega>
    std::optional<ComplexMatrix> bath_bath; // <omega_n|v|omega_m>; empty means zero
    std::optional<double> density_of_states; // recorded by grid presets

    std::size_t bath_size() const noexcept { return bath_frequencies.size(); }
    std::size_t dim() const noexcept { return bath_size() + 1; }

    // Unperturbed level energy of index n (0 = system).
    double level(std::size_t n) const { return n == 0 ? Omega : bath_frequencies.at(n - 1); }
};

// Throws std::invalid_argument describing the first violated invariant.
inline void validate(const ModelSpec& s) {
    if (!(std::isfinite(s.Omega) && s.Omega > 0.0))
        throw std::invalid_argument("system.omega must be finite and > 0");
    if (!(std::isfinite(s.mass) && s.mass > 0.0))
        throw std::invalid_argument("system.mass must be finite and > 0");
    if (!std::isfinite(s.self_shift)) throw std::invalid_argument("system.v_self must be finite");
    const std::size_t n = s.bath_size();
    if (s.couplings.size() != n)
        throw std::invalid_argument("bath coupling count " + std::to_string(s.couplings.size()) +
                                    " does not match bath size " + std::to_string(n));
    for (std::size_t k = 0; k < n; ++k) {
        // omega = 0 is admitted: the uniform presets include the band edge.
        if (!(std::isfinite(s.bath_frequencies[k]) && s.bath_frequencies[k] >= 0.0))
            throw std::invalid_argument("bath frequency " + std::to_string(k + 1) + " must be finite and >= 0");
        if (!std::isfinite(s.couplings[k].real()) || !std::isfinite(s.couplings[k].imag()))
            throw std::invalid_argument("bath coupling " + std::to_string(k + 1) + " must be finite");
    }
    if (s.bath_bath) {
        const ComplexMatrix& b = *s.bath_bath;
        if (b.rows() != static_cast<Eigen::Index>(n) || b.cols() != static_cast<Eigen::Index>(n))
            throw std::invalid_argument("bath_bath block must be " + std::to_string(n) + "x" + std::to_string(n));
        if (!all_finite(b)) throw std::invalid_argument("bath_bath block must be finite");
        for (Eigen::Index j = 0; j < b.cols(); ++j)
            for (Eigen::Index i = j; i < b.rows(); ++i)
                if (b(i, j) != std::conj(b(j, i)))
                    throw std::invalid_argument("bath_bath block must be Hermitian");
    }
}

inline HermitianMatrix build_hamiltonian(const ModelSpec& s) {
    validate(s);
    const Eigen::Index n = static_cast<Eigen::Index>(s.dim());
    ComplexMatrix h = ComplexMatrix::Zero(n, n);
    h(0, 0) = s.Omega + s.self_shift;
    for (Eigen::Index k = 1; k < n; ++k) {
        const auto idx = static_cast<std::size_t>(k - 1);
        h(k, k) = s.bath_frequencies[idx];
        h(k, 0) = s.couplings[idx];
        h(0, k) = std::conj(s.couplings[idx]);
    }
    if (s.bath_bath) h.bottomRightCorner(n - 1, n - 1) += *s.bath_bath;
    return HermitianMatrix(std::move(h));
}

// Uniform inclusive grid omega_min..omega_max with identical real couplings g
// and no bath-bath interaction. Records rho = (N-1)/(omega_max - omega_min).
inline ModelSpec preset_linear_bath(std::size_t n, double omega_min, double omega_max, double Omega, double g,
                                    double self_shift = 0.0, double mass = 1.0) {
    if (n < 2) throw std::invalid_argument("preset_linear_bath: a uniform grid needs N >= 2");
    if (!(omega_min < omega_max)) throw std::invalid_argument("preset_linear_bath: omega_min must be < omega_max");
    ModelSpec s;
    s.Omega = Omega;
    s.mass = mass;
    s.self_shift = self_shift;
    s.bath_frequencies.resize(n);
    const double step = (omega_max - omega_min) / static_cast<double>(n - 1);
    for (std::size_t k = 0; k < n; ++k) s.bath_frequencies[k] = omega_min + step * static_cast<double>(k);
    s.bath_frequencies.back() = omega_max;
    s.couplings.assign(n, Complex(g, 0.0));
    s.density_of_states = static_cast<double>(n - 1) / (omega_max - omega_min);
    validate(s);
    return s;
}

// Resonant pair Omega = omega_1 with coupling g.
inline ModelSpec preset_two_oscillator(double Omega, double g, double mass = 1.0) {
    ModelSpec s;
    s.Omega = Omega;
    s.mass = mass;
    s.bath_frequencies = {Omega};
    s.couplings = {Complex(g, 0.0)};
    validate(s);
    return s;
}

struct InitialPopulations {
    RealVector occupations;  // <N_m(0)>, index 0 = system

    std::size_t dim() const noexcept { return static_cast<std::size_t>(occupations.size()); }
    double total() const { return occupations.sum(); }
};

inline void validate(const InitialPopulations& p, std::size_t expected_dim) {
    if (p.dim() != expected_dim)
        throw std::invalid_argument("initial occupations: expected " + std::to_string(expected_dim) +
                                    " entries, got " + std::to_string(p.dim()));
    for (Eigen::Index i = 0; i < p.occupations.size(); ++i)
        if (!(std::isfinite(p.occupations(i)) && p.occupations(i) >= 0.0))
            throw std::invalid_argument("initial occupation " + std::to_string(i) + " must be finite and >= 0");
}

// Bose-Einstein bath occupations 1/(e^{beta omega} - 1); beta may be +inf.
inline InitialPopulations preset_thermal_populations(const ModelSpec& s, double beta, double system_occupation = 1.0) {
    if (!(beta > 0.0)) throw std::invalid_argument("thermal populations: beta must be > 0");
    InitialPopulations p;
    p.occupations.resize(static_cast<Eigen::Index>(s.dim()));
    p.occupations(0) = system_occupation;
    for (std::size_t k = 0; k < s.bath_size(); ++k) {
        const double w = s.bath_frequencies[k];
        if (w == 0.0)
            throw std::invalid_argument("thermal populations: bath mode " + std::to_string(k + 1) +
                                        " has zero frequency (divergent occupation)");
        p.occupations(static_cast<Eigen::Index>(k + 1)) = 1.0 / std::expm1(beta * w);
    }
    validate(p, s.dim());
    return p;
}

// System holds `system_occupation` quanta, bath in its vacuum.
inline InitialPopulations preset_system_excited(const ModelSpec& s, double system_occupation = 1.0) {
    InitialPopulations p;
    p.occupations = RealVector::Zero(static_cast<Eigen::Index>(s.dim()));
    p.occupations(0) = system_occupation;
    validate(p, s.dim());
    return p;
}

}  // namespace qbm
