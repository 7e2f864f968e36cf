// golden_rule.hpp: second-order perturbative rates, Wigner-Weisskopf
// constants of the exponential regime, and fits/comparisons that tie them to
// the exact engines.

#pragma once

#include "qbm/amplitudes.hpp"
#include "qbm/master.hpp"
#include "qbm/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace qbm {

// Finite-time delta family 2 sin^2(alpha t/2) / (pi alpha^2 t); unit area,
// peak t/(2 pi) at alpha = 0.
inline double delta_t(double alpha, double t) {
    if (!(t > 0.0)) throw std::invalid_argument("delta_t: t must be > 0");
    const double x = 0.5 * alpha * t;
    const double peak = t / (2.0 * std::numbers::pi);
    if (x == 0.0) return peak;
    const double sinc = std::sin(x) / x;
    return peak * sinc * sinc;
}

struct GoldenRuleRates {
    double t = 0.0;
    RealMatrix Gamma;  // off-diagonal >= 0, symmetric; rows and columns sum to zero
};

// Gamma_nm = 2 pi |v_nm|^2 delta_t(eps_n − eps_m) for n != m with eps the
// unperturbed levels; Gamma_nn = −sum_{m != n} Gamma_nm.
inline GoldenRuleRates golden_rule_rates(const ModelSpec& spec, double t) {
    if (!(t > 0.0)) throw std::invalid_argument("golden_rule_rates: t must be > 0");
    validate(spec);
    const std::size_t n = spec.dim();
    const HermitianMatrix h = build_hamiltonian(spec);
    GoldenRuleRates r;
    r.t = t;
    r.Gamma = RealMatrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const auto ii = static_cast<Eigen::Index>(i), jj = static_cast<Eigen::Index>(j);
            const double coupling = std::norm(h(ii, jj));
            if (coupling == 0.0) continue;
            const double rate = 2.0 * std::numbers::pi * coupling * delta_t(spec.level(i) - spec.level(j), t);
            r.Gamma(ii, jj) = rate;
            r.Gamma(jj, ii) = rate;
        }
    for (Eigen::Index i = 0; i < r.Gamma.rows(); ++i) r.Gamma(i, i) = -r.Gamma.row(i).sum();
    return r;
}

// W_nm(t) = sum_k Gamma_nk (delta_km − Gamma_km t), which reduces to Gamma_nm
// at second order in the coupling.
inline RealMatrix perturbative_master_coefficients(const GoldenRuleRates& r) {
    const auto n = r.Gamma.rows();
    return r.Gamma * (RealMatrix::Identity(n, n) - r.Gamma * r.t);
}

struct PerturbativePrediction {
    double delta_Omega = 0.0;
    double gamma = 0.0;
    std::optional<double> density_of_states;  // rho(Omega) from the local spacing
    double pv_epsilon = 0.0;
    std::vector<std::string> warnings;
};

namespace detail {

struct SortedBath {
    std::vector<double> omegas;
    std::vector<double> weights;  // |g_k|^2
};

// Bath ordered by (omega, |g|^2) so results do not depend on labelling.
inline SortedBath sorted_bath(const ModelSpec& spec) {
    std::vector<std::size_t> idx(spec.bath_size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        const double wa = spec.bath_frequencies[a], wb = spec.bath_frequencies[b];
        if (wa != wb) return wa < wb;
        return std::norm(spec.couplings[a]) < std::norm(spec.couplings[b]);
    });
    SortedBath out;
    for (std::size_t k : idx) {
        out.omegas.push_back(spec.bath_frequencies[k]);
        out.weights.push_back(std::norm(spec.couplings[k]));
    }
    return out;
}

inline std::optional<double> local_spacing(const std::vector<double>& w, std::size_t j) {
    if (w.size() < 2) return std::nullopt;
    double d;
    if (j == 0) d = w[1] - w[0];
    else if (j + 1 == w.size()) d = w[j] - w[j - 1];
    else d = 0.5 * (w[j + 1] - w[j - 1]);
    if (!(d > 0.0)) return std::nullopt;
    return d;
}

}  // namespace detail

// delta_Omega = v_ΩΩ + P sum_k |g_k|^2 / (Omega − omega_k), principal value by
// dropping terms with |Omega − omega_k| < pv_epsilon (default half the local
// spacing). gamma = 2 pi |g(Omega)|^2 rho(Omega) at the bath level nearest Omega.
inline PerturbativePrediction perturbative_prediction(const ModelSpec& spec,
                                                      std::optional<double> pv_epsilon = std::nullopt) {
    validate(spec);
    PerturbativePrediction p;
    p.delta_Omega = spec.self_shift;
    if (spec.bath_size() == 0) {
        p.warnings.push_back("empty bath: no decay channel, gamma = 0");
        return p;
    }
    const detail::SortedBath bath = detail::sorted_bath(spec);
    const double Omega = spec.Omega;
    std::size_t nearest = 0;
    for (std::size_t k = 1; k < bath.omegas.size(); ++k)
        if (std::abs(bath.omegas[k] - Omega) < std::abs(bath.omegas[nearest] - Omega)) nearest = k;
    const std::optional<double> spacing = detail::local_spacing(bath.omegas, nearest);

    p.pv_epsilon = pv_epsilon.value_or(spacing ? 0.5 * *spacing : 0.0);
    double shift = 0.0;
    for (std::size_t k = 0; k < bath.omegas.size(); ++k) {
        const double gap = Omega - bath.omegas[k];
        if (gap == 0.0 || std::abs(gap) < p.pv_epsilon) continue;
        shift += bath.weights[k] / gap;
    }
    p.delta_Omega += shift;

    if (Omega < bath.omegas.front() || Omega > bath.omegas.back()) {
        p.warnings.push_back("Omega lies outside the bath band: no resonant decay channel, gamma = 0");
        return p;
    }
    if (!spacing) {
        p.warnings.push_back("bath level spacing undefined at Omega: gamma = 0");
        return p;
    }
    p.density_of_states = 1.0 / *spacing;
    p.gamma = 2.0 * std::numbers::pi * bath.weights[nearest] * *p.density_of_states;
    return p;
}

// Suggested exponential-regime window: after the initial transient
// (5 / bandwidth) and before half the recurrence time 2 pi / mean spacing.
struct FitWindow {
    double t1 = 0.0;
    double t2 = 0.0;
};

inline std::optional<double> recurrence_time(const ModelSpec& spec) {
    if (spec.bath_size() < 2) return std::nullopt;
    const auto [lo, hi] = std::minmax_element(spec.bath_frequencies.begin(), spec.bath_frequencies.end());
    if (!(*hi > *lo)) return std::nullopt;
    const double spacing = (*hi - *lo) / static_cast<double>(spec.bath_size() - 1);
    return 2.0 * std::numbers::pi / spacing;
}

inline std::optional<double> transient_time(const ModelSpec& spec) {
    if (spec.bath_size() < 2) return std::nullopt;
    const auto [lo, hi] = std::minmax_element(spec.bath_frequencies.begin(), spec.bath_frequencies.end());
    if (!(*hi > *lo)) return std::nullopt;
    return 5.0 / (*hi - *lo);
}

// Empty when the window respects both bounds (bounds that do not exist for
// this bath are skipped).
inline std::vector<std::string> fit_window_issues(const ModelSpec& spec, FitWindow w) {
    std::vector<std::string> issues;
    if (!(w.t1 < w.t2)) issues.push_back("fit window requires t1 < t2");
    if (auto t0 = transient_time(spec); t0 && w.t1 < *t0)
        issues.push_back("fit window starts inside the initial transient (t1 < " + std::to_string(*t0) + ")");
    if (auto tr = recurrence_time(spec); tr && w.t2 > 0.5 * *tr)
        issues.push_back("fit window reaches past half the recurrence time (t2 > " + std::to_string(0.5 * *tr) + ")");
    return issues;
}

inline FitWindow default_fit_window(const ModelSpec& spec, double t_max) {
    FitWindow w{transient_time(spec).value_or(0.0), t_max};
    if (auto tr = recurrence_time(spec)) w.t2 = std::min(w.t2, 0.5 * *tr);
    return w;
}

struct ExponentialFit {
    FitWindow window;
    double gamma_fit = 0.0;  // decay rate of |A|^2, i.e. twice the slope of −log|A|
    double omega_fit = 0.0;  // minus the slope of the unwrapped phase
    double goodness = 0.0;   // max_i |log|A_i| − line_i| / max(1, |line_i|)
    std::size_t points = 0;
};

namespace detail {

struct LineFit {
    double intercept = 0.0;
    double slope = 0.0;
};

inline LineFit least_squares_line(std::span<const double> x, std::span<const double> y) {
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    LineFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    return f;
}

}  // namespace detail

// Fits A(t) ≈ C e^{-i omega t − gamma t / 2} on the supplied samples. The
// phase is unwrapped between consecutive samples, so the grid must resolve
// the oscillation (|omega dt| < pi).
inline ExponentialFit fit_exponential(std::span<const double> times, std::span<const Complex> survival) {
    if (times.size() != survival.size()) throw std::invalid_argument("fit_exponential: series lengths differ");
    if (times.size() < 2) throw std::invalid_argument("fit_exponential: need at least two samples");
    for (std::size_t i = 1; i < times.size(); ++i)
        if (!(times[i] > times[i - 1])) throw std::invalid_argument("fit_exponential: times must increase");

    std::vector<double> log_abs(times.size()), phase(times.size());
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double mag = std::abs(survival[i]);
        if (!(mag >= 1e-12))
            throw std::domain_error("fit_exponential: |A| below 1e-12 at t = " + std::to_string(times[i]));
        log_abs[i] = std::log(mag);
        phase[i] = std::arg(survival[i]);
        if (i > 0) {
            double step = phase[i] - phase[i - 1];
            step -= 2.0 * std::numbers::pi * std::round(step / (2.0 * std::numbers::pi));
            phase[i] = phase[i - 1] + step;
        }
    }
    const detail::LineFit mag_fit = detail::least_squares_line(times, log_abs);
    const detail::LineFit phase_fit = detail::least_squares_line(times, phase);

    ExponentialFit f;
    f.window = {times.front(), times.back()};
    f.points = times.size();
    f.gamma_fit = -2.0 * mag_fit.slope;
    f.omega_fit = -phase_fit.slope;
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double line = mag_fit.intercept + mag_fit.slope * times[i];
        f.goodness = std::max(f.goodness, std::abs(log_abs[i] - line) / std::max(1.0, std::abs(line)));
    }
    return f;
}

// Exact vs golden-rule outflow from the system level. Per time point the
// aggregate off-diagonal rate sum_{n != 0} X_n0 is taken for X = W(t) and
// X = Gamma(t); both are averaged over the window's non-singular points.
struct WComparison {
    FitWindow window;
    double exact_mean = 0.0;
    double golden_mean = 0.0;
    double deviation = 0.0;  // |exact − golden| / |golden|
    std::size_t points = 0;
    std::size_t singular_excluded = 0;
};

class WComparisonAccumulator {
public:
    explicit WComparisonAccumulator(FitWindow window) : window_(window) {}

    bool in_window(double t) const { return t > 0.0 && t >= window_.t1 && t <= window_.t2; }

    void add(const MasterCoefficients& mc, const GoldenRuleRates& rates) {
        if (mc.t != rates.t) throw std::invalid_argument("compare_exact_vs_golden: time mismatch");
        if (!in_window(mc.t)) return;
        if (mc.singular) {
            ++singular_;
            return;
        }
        const auto n = mc.W.rows();
        exact_ += mc.W.col(0).tail(n - 1).sum();
        golden_ += rates.Gamma.col(0).tail(n - 1).sum();
        ++points_;
    }

    WComparison result() const {
        WComparison c;
        c.window = window_;
        c.points = points_;
        c.singular_excluded = singular_;
        if (points_ == 0) {
            c.exact_mean = c.golden_mean = c.deviation = std::numeric_limits<double>::quiet_NaN();
            return c;
        }
        c.exact_mean = exact_ / static_cast<double>(points_);
        c.golden_mean = golden_ / static_cast<double>(points_);
        const double diff = std::abs(c.exact_mean - c.golden_mean);
        if (c.golden_mean != 0.0) c.deviation = diff / std::abs(c.golden_mean);
        else c.deviation = diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
        return c;
    }

private:
    FitWindow window_;
    double exact_ = 0.0;
    double golden_ = 0.0;
    std::size_t points_ = 0;
    std::size_t singular_ = 0;
};

inline WComparison compare_exact_vs_golden(std::span<const MasterCoefficients> exact,
                                           std::span<const GoldenRuleRates> rates, FitWindow window) {
    if (exact.size() != rates.size()) throw std::invalid_argument("compare_exact_vs_golden: series lengths differ");
    WComparisonAccumulator acc(window);
    for (std::size_t k = 0; k < exact.size(); ++k) acc.add(exact[k], rates[k]);
    return acc.result();
}

}  // namespace qbm
