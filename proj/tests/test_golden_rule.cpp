#include "qbm/golden_rule.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

namespace {

using qbm::Complex;
using qbm::RealMatrix;

double trapezoid_delta(double t, double half_width, double step) {
    const int n = static_cast<int>(std::round(2.0 * half_width / step));
    double sum = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double w = (i == 0 || i == n) ? 0.5 : 1.0;
        sum += w * qbm::delta_t(-half_width + i * step, t);
    }
    return sum * step;
}

TEST(DeltaT, PeakEvenAndEnvelope) {
    for (double t : {0.5, 10.0, 300.0}) {
        EXPECT_DOUBLE_EQ(qbm::delta_t(0.0, t), t / (2.0 * std::numbers::pi));
        EXPECT_NEAR(qbm::delta_t(1e-9, t), t / (2.0 * std::numbers::pi), 1e-12 * t);
        for (double a : {0.01, 0.3, 2.0, 17.0}) {
            EXPECT_EQ(qbm::delta_t(a, t), qbm::delta_t(-a, t));
            EXPECT_GE(qbm::delta_t(a, t), 0.0);
            EXPECT_LE(qbm::delta_t(a, t), 2.0 / (std::numbers::pi * a * a * t) + 1e-15);
        }
        // Zeros at alpha t = 2 pi k.
        EXPECT_NEAR(qbm::delta_t(2.0 * std::numbers::pi / t, t), 0.0, 1e-15 * t);
    }
    EXPECT_THROW(qbm::delta_t(1.0, 0.0), std::invalid_argument);
}

// The mass outside |alpha| > L is about 2 / (pi L t) since sin^2 averages to
// 1/2. With L t = 2000 the truncated integral is within 1e-3 of one; with
// L t = 200 the missing tail is 1/(100 pi).
TEST(DeltaT, UnitArea) {
    for (double t : {1.0, 10.0}) {
        EXPECT_NEAR(trapezoid_delta(t, 2000.0 / t, 1e-3 / t), 1.0, 1e-3) << t;
        EXPECT_NEAR(trapezoid_delta(t, 200.0 / t, 1e-3 / t), 1.0 - 1.0 / (100.0 * std::numbers::pi), 2e-5) << t;
    }
}

TEST(GoldenRuleRates, VanishWhenUncoupled) {
    qbm::ModelSpec s;
    s.bath_frequencies = {0.9, 1.1};
    s.couplings = {0.0, 0.0};
    EXPECT_EQ(qbm::max_abs(qbm::golden_rule_rates(s, 5.0).Gamma), 0.0);
}

TEST(GoldenRuleRates, ResonantPairGrowsLinearly) {
    const double g = 0.1;
    for (double t : {1.0, 5.0, 20.0}) {
        const auto r = qbm::golden_rule_rates(qbm::preset_two_oscillator(1.0, g), t);
        EXPECT_NEAR(r.Gamma(0, 1), g * g * t, 1e-15 * t);
        EXPECT_NEAR(r.Gamma(0, 0), -g * g * t, 1e-15 * t);
    }
}

TEST(GoldenRuleRates, SymmetricWithZeroSums) {
    auto spec = qbm::preset_linear_bath(15, 0.5, 1.5, 1.0, 0.03);
    spec.couplings[3] = Complex(0.01, 0.04);
    const auto r = qbm::golden_rule_rates(spec, 12.0);
    EXPECT_EQ(qbm::max_abs(r.Gamma - r.Gamma.transpose()), 0.0);
    EXPECT_LE(r.Gamma.rowwise().sum().cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_LE(r.Gamma.colwise().sum().cwiseAbs().maxCoeff(), 1e-15);
    for (Eigen::Index i = 0; i < r.Gamma.rows(); ++i)
        for (Eigen::Index j = 0; j < r.Gamma.cols(); ++j)
            if (i != j) EXPECT_GE(r.Gamma(i, j), 0.0);
    // Bath levels do not couple among themselves without bath_bath terms.
    EXPECT_EQ(r.Gamma(2, 5), 0.0);
    EXPECT_THROW(qbm::golden_rule_rates(spec, 0.0), std::invalid_argument);
}

TEST(GoldenRuleRates, PerturbativeWAgreesToLeadingOrder) {
    const auto spec = qbm::preset_linear_bath(10, 0.5, 1.5, 1.0, 1e-3);
    const auto r = qbm::golden_rule_rates(spec, 3.0);
    const RealMatrix w = qbm::perturbative_master_coefficients(r);
    EXPECT_LE(qbm::max_abs(w - r.Gamma), 1e-3 * qbm::max_abs(r.Gamma));
    EXPECT_LE(w.colwise().sum().cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Prediction, LinearBathDecayRate) {
    const auto p = qbm::perturbative_prediction(qbm::preset_linear_bath(201, 0.0, 2.0, 1.0, 0.01));
    // 2 pi g^2 rho with rho = 100
    EXPECT_NEAR(p.gamma, 2.0 * std::numbers::pi * 1e-4 * 100.0, 1e-12);
    ASSERT_TRUE(p.density_of_states);
    EXPECT_NEAR(*p.density_of_states, 100.0, 1e-9);
    EXPECT_NEAR(p.pv_epsilon, 0.005, 1e-12);
    EXPECT_TRUE(p.warnings.empty());
    // Symmetric band around Omega: the principal value cancels.
    EXPECT_NEAR(p.delta_Omega, 0.0, 1e-12);
}

TEST(Prediction, SelfShiftAddsDirectly) {
    const auto p = qbm::perturbative_prediction(qbm::preset_linear_bath(201, 0.0, 2.0, 1.0, 0.01, 0.05));
    EXPECT_NEAR(p.delta_Omega, 0.05, 1e-12);
}

TEST(Prediction, PrincipalValueOffCentre) {
    qbm::ModelSpec s;
    s.Omega = 1.0;
    s.bath_frequencies = {0.5, 0.8, 1.6};
    s.couplings = {0.1, 0.2, Complex(0.0, 0.3)};
    const auto p = qbm::perturbative_prediction(s, 0.0);
    EXPECT_NEAR(p.delta_Omega, 0.01 / 0.5 + 0.04 / 0.2 + 0.09 / -0.6, 1e-14);
    // The exclusion radius drops only the level at 0.8.
    EXPECT_NEAR(qbm::perturbative_prediction(s, 0.45).delta_Omega, 0.01 / 0.5 + 0.09 / -0.6, 1e-14);
    EXPECT_NEAR(p.gamma, 2.0 * std::numbers::pi * 0.04 / 0.55, 1e-14);
}

TEST(Prediction, InvariantUnderBathRelabelling) {
    auto spec = qbm::preset_linear_bath(31, 0.2, 1.7, 1.03, 0.02);
    for (std::size_t k = 0; k < spec.couplings.size(); ++k) spec.couplings[k] *= 1.0 + 0.01 * static_cast<double>(k);
    auto shuffled = spec;
    std::reverse(shuffled.bath_frequencies.begin(), shuffled.bath_frequencies.end());
    std::reverse(shuffled.couplings.begin(), shuffled.couplings.end());
    const auto a = qbm::perturbative_prediction(spec), b = qbm::perturbative_prediction(shuffled);
    EXPECT_EQ(a.delta_Omega, b.delta_Omega);
    EXPECT_EQ(a.gamma, b.gamma);
}

TEST(Prediction, WarnsWithoutDecayChannel) {
    auto outside = qbm::preset_linear_bath(11, 0.5, 1.5, 3.0, 0.01);
    const auto p = qbm::perturbative_prediction(outside);
    EXPECT_EQ(p.gamma, 0.0);
    EXPECT_EQ(p.warnings.size(), 1u);

    qbm::ModelSpec empty;
    const auto q = qbm::perturbative_prediction(empty);
    EXPECT_EQ(q.gamma, 0.0);
    EXPECT_EQ(q.warnings.size(), 1u);
}

TEST(FitWindow, DefaultsAndIssues) {
    const auto spec = qbm::preset_linear_bath(201, 0.0, 2.0, 1.0, 0.01);
    EXPECT_NEAR(*qbm::recurrence_time(spec), 200.0 * std::numbers::pi, 1e-9);
    const auto w = qbm::default_fit_window(spec, 1000.0);
    EXPECT_DOUBLE_EQ(w.t1, 2.5);
    EXPECT_NEAR(w.t2, 100.0 * std::numbers::pi, 1e-9);
    EXPECT_TRUE(qbm::fit_window_issues(spec, {10.0, 100.0}).empty());
    EXPECT_EQ(qbm::fit_window_issues(spec, {1.0, 400.0}).size(), 2u);
    EXPECT_EQ(qbm::fit_window_issues(spec, {50.0, 20.0}).size(), 1u);
}

TEST(FitExponential, RecoversSyntheticDecay) {
    std::vector<double> t;
    std::vector<Complex> a;
    for (int k = 0; k <= 400; ++k) {
        t.push_back(5.0 + 0.1 * k);
        a.push_back(0.9 * std::polar(std::exp(-0.025 * t.back()), -1.1 * t.back() + 0.3));
    }
    const auto f = qbm::fit_exponential(t, a);
    EXPECT_NEAR(f.gamma_fit, 0.05, 1e-10);
    EXPECT_NEAR(f.omega_fit, 1.1, 1e-10);
    EXPECT_LE(f.goodness, 1e-10);
    EXPECT_EQ(f.points, 401u);
    EXPECT_EQ(f.window.t1, 5.0);
    EXPECT_EQ(f.window.t2, 45.0);
}

TEST(FitExponential, UncoupledHasNoDecay) {
    qbm::ModelSpec s;
    s.Omega = 1.2;
    s.bath_frequencies = {0.7};
    s.couplings = {0.0};
    const auto sd = qbm::eigendecompose(qbm::build_hamiltonian(s));
    std::vector<double> t;
    std::vector<Complex> a;
    for (int k = 0; k <= 100; ++k) {
        t.push_back(0.2 * k);
        a.push_back(qbm::survival_amplitude(sd, t.back()));
    }
    const auto f = qbm::fit_exponential(t, a);
    EXPECT_NEAR(f.gamma_fit, 0.0, 1e-12);
    EXPECT_NEAR(f.omega_fit, 1.2, 1e-12);
}

TEST(FitExponential, RejectsBadInput) {
    const std::vector<double> t{0.0, 1.0};
    EXPECT_THROW(qbm::fit_exponential(t, std::vector<Complex>{1.0, 1e-13}), std::domain_error);
    EXPECT_THROW(qbm::fit_exponential(t, std::vector<Complex>{1.0}), std::invalid_argument);
    EXPECT_THROW(qbm::fit_exponential(std::vector<double>{1.0, 1.0}, std::vector<Complex>{1.0, 1.0}),
                 std::invalid_argument);
}

std::pair<std::vector<qbm::MasterCoefficients>, std::vector<qbm::GoldenRuleRates>> series(
    const qbm::ModelSpec& spec, const std::vector<double>& times) {
    const auto sd = qbm::eigendecompose(qbm::build_hamiltonian(spec));
    std::vector<qbm::MasterCoefficients> mcs;
    std::vector<qbm::GoldenRuleRates> rates;
    for (double t : times) {
        mcs.push_back(qbm::master_coefficients(
            qbm::transition_probabilities(qbm::amplitudes_at(sd, t, qbm::DerivativeOrder::first))));
        rates.push_back(qbm::golden_rule_rates(spec, t));
    }
    return {mcs, rates};
}

TEST(CompareExactVsGolden, UncoupledAgreesTrivially) {
    qbm::ModelSpec s;
    s.bath_frequencies = {0.7, 1.4};
    s.couplings = {0.0, 0.0};
    const auto [mcs, rates] = series(s, {1.0, 2.0, 3.0});
    const auto c = qbm::compare_exact_vs_golden(mcs, rates, {0.5, 3.0});
    EXPECT_EQ(c.points, 3u);
    EXPECT_EQ(c.deviation, 0.0);
}

// Resonant pair: W = g tan(2gt) ~ 2 g^2 t while Gamma = g^2 t.
TEST(CompareExactVsGolden, ResonantPairIsTwiceGolden) {
    const std::vector<double> times{0.1, 0.2, 0.3, 0.4, 0.5};
    const auto [mcs, rates] = series(qbm::preset_two_oscillator(1.0, 0.1), times);
    const auto c = qbm::compare_exact_vs_golden(mcs, rates, {0.1, 0.5});
    double exact = 0.0, golden = 0.0;
    for (double t : times) {
        exact += 0.1 * std::tan(0.2 * t);
        golden += 0.01 * t;
    }
    EXPECT_NEAR(c.exact_mean / c.golden_mean, exact / golden, 1e-10);
    EXPECT_NEAR(c.exact_mean / c.golden_mean, 2.0, 1e-2);
    EXPECT_EQ(c.points, 5u);
}

TEST(CompareExactVsGolden, ExcludesSingularAndOutOfWindow) {
    const double pole = std::numbers::pi / 0.4;
    const auto [mcs, rates] = series(qbm::preset_two_oscillator(1.0, 0.1), {1.0, pole, 9.0});
    const auto c = qbm::compare_exact_vs_golden(mcs, rates, {0.0, 8.0});
    EXPECT_EQ(c.points, 1u);
    EXPECT_EQ(c.singular_excluded, 1u);
    const auto empty = qbm::compare_exact_vs_golden(mcs, rates, {20.0, 30.0});
    EXPECT_TRUE(std::isnan(empty.deviation));
    EXPECT_THROW(qbm::compare_exact_vs_golden(std::span(mcs).first(2), rates, {0.0, 8.0}), std::invalid_argument);
}

TEST(CompareExactVsGolden, WeakCouplingBathWithinQuarter) {
    std::vector<double> times;
    for (int k = 0; k <= 200; ++k) times.push_back(10.0 + 0.1 * k);
    const auto [mcs, rates] = series(qbm::preset_linear_bath(201, 0.0, 2.0, 1.0, 0.01), times);
    const auto c = qbm::compare_exact_vs_golden(mcs, rates, {10.0, 30.0});
    EXPECT_EQ(c.singular_excluded, 0u);
    EXPECT_LE(c.deviation, 0.25) << "exact " << c.exact_mean << " golden " << c.golden_mean;
}

}  // namespace
