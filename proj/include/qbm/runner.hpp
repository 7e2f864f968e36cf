// runner.hpp: drives the engines over a configured time grid and writes the
// CSV/JSON outputs behind the `qbm` subcommands, plus the built-in validation
// suite.
//
// Output is deterministic: grid points are processed in order, numbers are
// printed with 17 significant digits and flagged points as `nan`.

#pragma once

#include "qbm/amplitudes.hpp"
#include "qbm/config.hpp"
#include "qbm/golden_rule.hpp"
#include "qbm/hermitian.hpp"
#include "qbm/langevin.hpp"
#include "qbm/master.hpp"
#include "qbm/model.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace qbm {

// Output file could not be created or written.
class OutputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline std::string format_number(double x) {
    if (std::isnan(x)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

// Row-oriented CSV sink: header first, comma separated, '\n' line endings.
class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, std::initializer_list<const char*> header)
        : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
        if (!out_) throw OutputError("cannot write '" + path.string() + "'");
        bool first = true;
        for (const char* h : header) {
            if (!first) out_ << ',';
            out_ << h;
            first = false;
        }
        out_ << '\n';
    }

    CsvWriter& num(double x) {
        sep();
        out_ << format_number(x);
        return *this;
    }
    CsvWriter& idx(long long i) {
        sep();
        out_ << i;
        return *this;
    }
    void end() {
        out_ << '\n';
        first_ = true;
    }
    void close() {
        out_.close();
        if (!out_) throw OutputError("error while writing '" + path_.string() + "'");
    }

private:
    void sep() {
        if (!first_) out_ << ',';
        first_ = false;
    }
    std::filesystem::path path_;
    std::ofstream out_;
    bool first_ = true;
};

inline void ensure_out_dir(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (!std::filesystem::is_directory(dir)) throw OutputError("cannot create output directory '" + dir.string() + "'");
}

inline SpectralDecomposition decompose(const RunConfig& cfg) { return eigendecompose(build_hamiltonian(cfg.spec)); }

// ------------------------------ amplitudes ----------------------------------

inline void cmd_amplitudes(const RunConfig& cfg) {
    ensure_out_dir(cfg.out_dir);
    const SpectralDecomposition sd = decompose(cfg);
    CsvWriter amps(cfg.out_dir / "amplitudes.csv", {"t", "n", "m", "re", "im"});
    CsvWriter surv(cfg.out_dir / "survival.csv", {"t", "re", "im", "abs"});
    for (double t : cfg.grid.points()) {
        const AmplitudeSet a = amplitudes_at(sd, t, DerivativeOrder::none);
        for (Eigen::Index n = 0; n < a.A.rows(); ++n)
            for (Eigen::Index m = 0; m < a.A.cols(); ++m) {
                amps.num(t).idx(n).idx(m).num(a.A(n, m).real()).num(a.A(n, m).imag());
                amps.end();
            }
        const Complex s = a.A(0, 0);
        surv.num(t).num(s.real()).num(s.imag()).num(std::abs(s));
        surv.end();
    }
    amps.close();
    surv.close();
}

// -------------------------------- master ------------------------------------

inline MasterSummary cmd_master(const RunConfig& cfg) {
    ensure_out_dir(cfg.out_dir);
    const SpectralDecomposition sd = decompose(cfg);
    CsvWriter pops(cfg.out_dir / "populations.csv", {"t", "n", "population"});
    CsvWriter wcsv(cfg.out_dir / "w_coeffs.csv", {"t", "n", "k", "W"});
    CsvWriter res(cfg.out_dir / "master_residual.csv", {"t", "residual", "balance_residual"});

    const std::vector<double> times = cfg.grid.points();
    MasterOptions opts;
    opts.condition_cap = cfg.tolerances.condition_cap;
    const MasterSummary summary = run_master(sd, times, cfg.init, opts, [&](const MasterPoint& p) {
        const double t = p.tp.t;
        for (Eigen::Index n = 0; n < p.populations.size(); ++n) {
            pops.num(t).idx(n).num(p.populations(n));
            pops.end();
        }
        const Eigen::Index dim = p.tp.P.rows();
        for (Eigen::Index n = 0; n < dim; ++n)
            for (Eigen::Index k = 0; k < dim; ++k) {
                if (p.mc.singular) {
                    wcsv.num(t).idx(n).idx(k).num(std::numeric_limits<double>::quiet_NaN());
                    wcsv.end();
                } else if (p.mc.W(n, k) != 0.0) {
                    wcsv.num(t).idx(n).idx(k).num(p.mc.W(n, k));
                    wcsv.end();
                }
            }
        res.num(t).num(p.residual.local).num(p.residual.balance);
        res.end();
    });
    pops.close();
    wcsv.close();
    res.close();

    std::ofstream report(cfg.out_dir / "singular_points.txt", std::ios::binary | std::ios::trunc);
    if (!report) throw OutputError("cannot write singular_points.txt");
    report << "# master: P(t) singular to condition cap " << format_number(cfg.tolerances.condition_cap)
           << ", or det P(t) changing sign between grid points\n";
    for (std::size_t i = 0; i < summary.singular_times.size(); ++i)
        report << "singular t=" << format_number(summary.singular_times[i])
               << " condition=" << format_number(summary.singular_conditions[i]) << '\n';
    for (const SingularCrossing& c : summary.crossings)
        report << "crossing t_before=" << format_number(c.t_before) << " t_after=" << format_number(c.t_after) << '\n';
    if (!report) throw OutputError("error while writing singular_points.txt");
    return summary;
}

// ------------------------------- langevin -----------------------------------

struct LangevinSummary {
    std::size_t points = 0;
    std::vector<double> singular_times;
    double max_residual = 0.0;      // non-singular points
    double max_imag_residue = 0.0;
    double max_row_norm_error = 0.0;  // | sum_m |A_Ωm|^2 − 1 |
    double max_cov_asymmetry = 0.0;
    double min_cov_diagonal = std::numeric_limits<double>::infinity();
};

inline LangevinSummary cmd_langevin(const RunConfig& cfg) {
    ensure_out_dir(cfg.out_dir);
    const SpectralDecomposition sd = decompose(cfg);
    const std::vector<double> times = cfg.grid.points();
    std::vector<SystemRow> rows;
    rows.reserve(times.size());
    for (double t : times) rows.push_back(system_row_at(sd, t));

    LangevinSummary s;
    CsvWriter lcsv(cfg.out_dir / "langevin.csv", {"t", "a", "b", "omega_sq", "gamma", "singular"});
    CsvWriter rcsv(cfg.out_dir / "langevin_residual.csv", {"t", "residual"});
    for (const SystemRow& row : rows) {
        const LangevinCoefficients c = langevin_coefficients(row, cfg.tolerances.wronskian);
        const double r = langevin_residual_at(c);
        ++s.points;
        s.max_row_norm_error = std::max(s.max_row_norm_error, std::abs(row.A.squaredNorm() - 1.0));
        if (c.singular) {
            s.singular_times.push_back(c.t);
        } else {
            s.max_residual = std::max(s.max_residual, r);
            s.max_imag_residue = std::max(s.max_imag_residue, c.imag_residue);
        }
        lcsv.num(c.t).num(c.a()).num(c.b()).num(c.omega_sq).num(c.gamma).idx(c.singular ? 1 : 0);
        lcsv.end();
        rcsv.num(c.t).num(r);
        rcsv.end();
    }
    lcsv.close();
    rcsv.close();

    // Lower triangle t' <= t on the (strided) grid; C_ff is symmetric.
    CsvWriter cov(cfg.out_dir / "noise_cov.csv", {"t", "t_prime", "c_ff"});
    const std::size_t stride = std::max<std::size_t>(1, cfg.covariance_stride);
    for (std::size_t i = 0; i < rows.size(); i += stride)
        for (std::size_t j = 0; j <= i; j += stride) {
            const double c = noise_covariance(rows[i], rows[j], cfg.init, cfg.spec);
            const double mirror = noise_covariance(rows[j], rows[i], cfg.init, cfg.spec);
            s.max_cov_asymmetry = std::max(s.max_cov_asymmetry, std::abs(c - mirror));
            if (i == j) s.min_cov_diagonal = std::min(s.min_cov_diagonal, c);
            cov.num(rows[i].t).num(rows[j].t).num(c);
            cov.end();
        }
    cov.close();

    std::ofstream report(cfg.out_dir / "langevin_singular_points.txt", std::ios::binary | std::ios::trunc);
    if (!report) throw OutputError("cannot write langevin_singular_points.txt");
    report << "# langevin: Wronskian a*bdot - adot*b below " << format_number(cfg.tolerances.wronskian)
           << " * |A| * |Adot|\n";
    for (double t : s.singular_times) report << "singular t=" << format_number(t) << '\n';
    if (!report) throw OutputError("error while writing langevin_singular_points.txt");
    return s;
}

// -------------------------------- golden ------------------------------------

struct GoldenReport {
    PerturbativePrediction prediction;
    ExponentialFit fit;
    WComparison comparison;
    std::vector<std::string> window_issues;
};

inline nlohmann::json to_json(const GoldenReport& r) {
    using nlohmann::json;
    auto num = [](double x) -> json { return std::isfinite(x) ? json(x) : json(nullptr); };
    json j;
    j["gamma_pred"] = num(r.prediction.gamma);
    j["gamma_fit"] = num(r.fit.gamma_fit);
    j["delta_omega_pred"] = num(r.prediction.delta_Omega);
    j["omega_fit"] = num(r.fit.omega_fit);
    j["window"] = {r.fit.window.t1, r.fit.window.t2};
    j["goodness"] = num(r.fit.goodness);
    j["w_deviation"] = num(r.comparison.deviation);
    j["w_exact_mean"] = num(r.comparison.exact_mean);
    j["w_golden_mean"] = num(r.comparison.golden_mean);
    j["compare_window"] = {r.comparison.window.t1, r.comparison.window.t2};
    j["compare_points"] = r.comparison.points;
    j["compare_singular_excluded"] = r.comparison.singular_excluded;
    j["density_of_states"] = r.prediction.density_of_states ? json(*r.prediction.density_of_states) : json(nullptr);
    j["pv_epsilon"] = r.prediction.pv_epsilon;
    json warnings = r.prediction.warnings;
    for (const auto& w : r.window_issues) warnings.push_back(w);
    j["warnings"] = warnings;
    return j;
}

inline GoldenReport golden_report(const RunConfig& cfg) {
    GoldenReport r;
    r.prediction = perturbative_prediction(cfg.spec, cfg.tolerances.pv_epsilon);
    const FitWindow window = cfg.fit_window.value_or(default_fit_window(cfg.spec, cfg.grid.t_max));
    r.window_issues = fit_window_issues(cfg.spec, window);

    const SpectralDecomposition sd = decompose(cfg);
    std::vector<double> fit_t;
    std::vector<Complex> fit_a;
    for (double t : cfg.grid.points())
        if (t >= window.t1 && t <= window.t2) {
            fit_t.push_back(t);
            fit_a.push_back(survival_amplitude(sd, t));
        }
    if (fit_t.size() < 2) throw std::invalid_argument("fit window holds fewer than two grid points");
    r.fit = fit_exponential(fit_t, fit_a);

    const FitWindow cmp = cfg.compare_window.value_or(window);
    WComparisonAccumulator acc(cmp);
    std::vector<double> cmp_t;
    for (double t : cfg.grid.points())
        if (acc.in_window(t)) cmp_t.push_back(t);
    MasterOptions opts;
    opts.condition_cap = cfg.tolerances.condition_cap;
    run_master(sd, cmp_t, cfg.init, opts,
               [&](const MasterPoint& p) { acc.add(p.mc, golden_rule_rates(cfg.spec, p.tp.t)); });
    r.comparison = acc.result();
    return r;
}

inline GoldenReport cmd_golden(const RunConfig& cfg) {
    ensure_out_dir(cfg.out_dir);
    GoldenReport r = golden_report(cfg);
    std::ofstream out(cfg.out_dir / "golden_report.json", std::ios::binary | std::ios::trunc);
    if (!out) throw OutputError("cannot write golden_report.json");
    out << to_json(r).dump(2) << '\n';
    if (!out) throw OutputError("error while writing golden_report.json");
    return r;
}

// ------------------------------- validate -----------------------------------

struct CheckResult {
    std::string name;
    double value = 0.0;
    double tolerance = 0.0;
    bool passed = false;
};

class CheckTable {
public:
    // Passes when value <= tolerance (NaN fails).
    void at_most(std::string name, double value, double tolerance) {
        rows_.push_back({std::move(name), value, tolerance, value <= tolerance});
    }
    void at_least(std::string name, double value, double bound) {
        rows_.push_back({std::move(name), value, bound, value >= bound});
    }
    void holds(std::string name, bool ok) { rows_.push_back({std::move(name), ok ? 1.0 : 0.0, 1.0, ok}); }

    bool all_passed() const {
        return std::all_of(rows_.begin(), rows_.end(), [](const CheckResult& r) { return r.passed; });
    }
    const std::vector<CheckResult>& rows() const { return rows_; }

    void print(std::ostream& os) const {
        std::size_t width = 4;
        for (const auto& r : rows_) width = std::max(width, r.name.size());
        for (const auto& r : rows_) {
            os << (r.passed ? "PASS  " : "FAIL  ") << std::left << std::setw(static_cast<int>(width)) << r.name
               << "  value=" << std::setw(24) << format_number(r.value) << " bound=" << std::defaultfloat
               << r.tolerance << '\n';
        }
    }

private:
    std::vector<CheckResult> rows_;
};

// Resonant pair Omega = omega_1 = 1, g = 0.1, checked against closed forms:
// A_ΩΩ = e^{-it} cos(gt), W = g tan(2gt) [[-1,1],[1,-1]], Γ = 2g tan(gt),
// Ω² = 1 + g² + 2 g² tan²(gt), C_ff(t,t) = sin²(gt)(2 N_1 + 1)/2.
inline void two_oscillator_oracles(CheckTable& table) {
    const double g = 0.1;
    const ModelSpec spec = preset_two_oscillator(1.0, g);
    const SpectralDecomposition sd = eigendecompose(build_hamiltonian(spec));
    InitialPopulations init;
    init.occupations = RealVector::Zero(2);
    init.occupations << 1.0, 0.5;

    double amp = 0.0, prob = 0.0, w = 0.0, lang = 0.0, cov = 0.0, pop = 0.0;
    const double t_w = 0.9 * std::numbers::pi / (4.0 * g);
    const double t_l = 0.9 * std::numbers::pi / (2.0 * g);
    for (int k = 0; k <= 140; ++k) {
        const double t = 0.1 * k;
        const AmplitudeSet a = amplitudes_at(sd, t);
        const double c = std::cos(g * t), s = std::sin(g * t);
        const Complex e = std::polar(1.0, -t);
        amp = std::max({amp, std::abs(a.A(0, 0) - e * c), std::abs(a.A(0, 1) - Complex(0.0, -1.0) * e * s)});
        const TransitionProbabilities tp = transition_probabilities(a);
        prob = std::max({prob, std::abs(tp.P(0, 0) - c * c), std::abs(tp.P(0, 1) - s * s)});
        pop = std::max(pop, std::abs(populations_at(tp, init)(0) - (c * c + 0.5 * s * s)));
        if (t < t_w) {
            const MasterCoefficients mc = master_coefficients(tp);
            const double wc = g * std::tan(2.0 * g * t);
            RealMatrix expected(2, 2);
            expected << -wc, wc, wc, -wc;
            w = mc.singular ? std::numeric_limits<double>::infinity() : std::max(w, max_abs(mc.W - expected));
        }
        if (t < t_l) {
            const LangevinCoefficients lc = langevin_coefficients(a);
            const double tn = std::tan(g * t);
            lang = lc.singular ? std::numeric_limits<double>::infinity()
                               : std::max({lang, std::abs(lc.gamma - 2.0 * g * tn),
                                           std::abs(lc.omega_sq - (1.0 + g * g + 2.0 * g * g * tn * tn))});
        }
        cov = std::max(cov, std::abs(noise_covariance(a, a, init, spec) - s * s * 2.0 / 2.0));
    }
    table.at_most("two-oscillator survival/transfer amplitude", amp, 1e-12);
    table.at_most("two-oscillator P(t) closed form", prob, 1e-12);
    table.at_most("two-oscillator populations closed form", pop, 1e-12);
    table.at_most("two-oscillator W(t) closed form", w, 1e-8);
    table.at_most("two-oscillator Gamma(t), Omega^2(t) closed form", lang, 1e-8);
    table.at_most("two-oscillator C_ff(t,t) closed form", cov, 1e-12);

    const double t_sing = std::numbers::pi / (4.0 * g);
    const MasterCoefficients at_pole = master_coefficients(transition_probabilities(amplitudes_at(sd, t_sing)));
    table.holds("two-oscillator W flagged singular at pi/(4g)", at_pole.singular);
}

// Runs the invariant suite on the configured model plus the built-in
// closed-form oracles. Returns true iff every check passes.
inline bool cmd_validate(const RunConfig& cfg, std::ostream& os) {
    CheckTable table;
    const HermitianMatrix h = build_hamiltonian(cfg.spec);
    const SpectralDecomposition sd = eigendecompose(h);
    table.at_most("eigenvectors unitary", sd.unitarity_residual(), 1e-12);
    table.at_most("spectral reconstruction of h", sd.reconstruction_residual(h), 1e-12);

    const std::vector<double> times = cfg.grid.points();
    MasterOptions opts;
    opts.condition_cap = cfg.tolerances.condition_cap;
    const MasterSummary m = run_master(sd, times, cfg.init, opts);
    table.at_most("A(t) unitary", m.max_unitarity, 1e-10);
    table.at_most("P(t) doubly stochastic", m.max_stochasticity, 1e-10);
    table.at_most("total quanta conserved (relative)", m.conservation, 1e-10);
    table.at_least("populations non-negative", m.min_population, -1e-12);
    table.at_most("W(t) column sums vanish", m.max_column_sum, 1e-8);
    table.at_most("master residual (local and balance forms)", m.max_residual, 1e-8);

    double imag = 0.0, lres = 0.0, rownorm = 0.0, asym = 0.0, diag = std::numeric_limits<double>::infinity();
    std::vector<SystemRow> rows;
    for (double t : times) rows.push_back(system_row_at(sd, t));
    for (const SystemRow& row : rows) {
        const LangevinCoefficients c = langevin_coefficients(row, cfg.tolerances.wronskian);
        rownorm = std::max(rownorm, std::abs(row.A.squaredNorm() - 1.0));
        if (c.singular) continue;
        imag = std::max(imag, c.imag_residue);
        lres = std::max(lres, langevin_residual_at(c));
    }
    const std::size_t stride = std::max<std::size_t>(1, rows.size() / 50);
    for (std::size_t i = 0; i < rows.size(); i += stride)
        for (std::size_t j = 0; j < rows.size(); j += stride) {
            const double c = noise_covariance(rows[i], rows[j], cfg.init, cfg.spec);
            asym = std::max(asym, std::abs(c - noise_covariance(rows[j], rows[i], cfg.init, cfg.spec)));
            if (i == j) diag = std::min(diag, c);
        }
    table.at_most("Langevin coefficients real", imag, 1e-10);
    table.at_most("Langevin homogeneous residual (relative)", lres, 1e-6);
    table.at_most("system row of A(t) normalised", rownorm, 1e-10);
    table.at_most("C_ff symmetric", asym, 0.0);
    table.at_least("C_ff(t,t) non-negative", diag, 0.0);

    two_oscillator_oracles(table);

    table.print(os);
    os << "master singular points: " << m.singular_times.size() << ", det P sign crossings: " << m.crossings.size()
       << '\n';
    os << (table.all_passed() ? "validation passed" : "validation FAILED") << '\n';
    return table.all_passed();
}

}  // namespace qbm
