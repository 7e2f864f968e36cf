// qbm: command-line front end.
//
//   qbm <amplitudes|master|langevin|golden|validate> --config run.json [--out dir]
//       [--t-max T] [--dt DT] [--window t1,t2]
//
// Exit codes: 0 success, 1 validation failure, 2 configuration error,
// 3 numerical failure.

#include "qbm/qbm.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

namespace {

enum ExitCode { kOk = 0, kValidationFailed = 1, kConfigError = 2, kNumericalFailure = 3 };

struct Flags {
    std::string config;
    std::string out = ".";
    std::optional<double> t_max;
    std::optional<double> dt;
    std::vector<double> window;
};

qbm::RunConfig resolve(const Flags& f) {
    qbm::RunConfig cfg = qbm::load_config(f.config);
    cfg.out_dir = f.out;
    if (f.t_max || f.dt) {
        try {
            cfg.grid = qbm::TimeGrid(f.t_max.value_or(cfg.grid.t_max), f.dt.value_or(cfg.grid.dt));
        } catch (const std::invalid_argument& e) {
            throw qbm::ConfigError("--t-max/--dt", e.what());
        }
    }
    if (!f.window.empty()) {
        if (f.window.size() != 2 || !(f.window[0] < f.window[1]))
            throw qbm::ConfigError("--window", "expected t1,t2 with t1 < t2");
        cfg.fit_window = qbm::FitWindow{f.window[0], f.window[1]};
    }
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Exact master and Langevin equations for harmonic quantum Brownian motion"};
    app.require_subcommand(1);
    Flags flags;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", flags.config, "Run configuration (JSON)")->required();
        sub->add_option("--out", flags.out, "Output directory");
        sub->add_option("--t-max", flags.t_max, "Override time.t_max");
        sub->add_option("--dt", flags.dt, "Override time.dt");
        sub->add_option("--window", flags.window, "Exponential fit window t1,t2")->delimiter(',')->expected(2);
    };
    auto* amplitudes = app.add_subcommand("amplitudes", "Write amplitudes.csv and survival.csv");
    auto* master = app.add_subcommand("master", "Write populations, W(t) coefficients and master residuals");
    auto* langevin = app.add_subcommand("langevin", "Write Langevin coefficients, residuals and noise covariance");
    auto* golden = app.add_subcommand("golden", "Write golden_report.json");
    auto* validate = app.add_subcommand("validate", "Run the invariant suite and print a pass/fail table");
    for (auto* sub : {amplitudes, master, langevin, golden, validate}) add_common(sub);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfigError;
    }

    try {
        const qbm::RunConfig cfg = resolve(flags);
        if (*amplitudes) {
            qbm::cmd_amplitudes(cfg);
        } else if (*master) {
            const auto s = qbm::cmd_master(cfg);
            if (!s.singular_times.empty() || !s.crossings.empty())
                std::cerr << "master: " << s.singular_times.size() << " singular point(s), " << s.crossings.size()
                          << " det P sign crossing(s); see singular_points.txt\n";
        } else if (*langevin) {
            const auto s = qbm::cmd_langevin(cfg);
            if (!s.singular_times.empty())
                std::cerr << "langevin: " << s.singular_times.size()
                          << " singular point(s); see langevin_singular_points.txt\n";
        } else if (*golden) {
            const auto r = qbm::cmd_golden(cfg);
            for (const auto& w : r.prediction.warnings) std::cerr << "warning: " << w << '\n';
            for (const auto& w : r.window_issues) std::cerr << "warning: " << w << '\n';
        } else if (*validate) {
            return qbm::cmd_validate(cfg, std::cout) ? kOk : kValidationFailed;
        }
    } catch (const qbm::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const qbm::OutputError& e) {
        std::cerr << "output error: " << e.what() << '\n';
        return kConfigError;
    } catch (const qbm::ConvergenceError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kNumericalFailure;
    } catch (const qbm::SingularMatrixError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kNumericalFailure;
    } catch (const std::domain_error& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kNumericalFailure;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    }
    return kOk;
}
