#include "qbm/runner.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

namespace {

namespace fs = std::filesystem;

const fs::path kSource = QBM_SOURCE_DIR;
const fs::path kGolden = kSource / "tests" / "golden";

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("qbm_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

struct Csv {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

Csv read_csv(const fs::path& p) {
    std::ifstream in(p);
    EXPECT_TRUE(in) << p;
    Csv csv;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        std::stringstream ss(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (first) {
            csv.header = cells;
            first = false;
            continue;
        }
        std::vector<double> row;
        for (const auto& c : cells) row.push_back(c == "nan" ? std::nan("") : std::stod(c));
        csv.rows.push_back(row);
    }
    return csv;
}

qbm::RunConfig config(const std::string& file, const fs::path& out) {
    auto cfg = qbm::load_config(file.front() == '/' ? fs::path(file) : kSource / file);
    cfg.out_dir = out;
    return cfg;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(QBM_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Runner, TrivialModelSurvival) {
    const auto out = scratch("trivial");
    qbm::cmd_amplitudes(config("configs/trivial.json", out));
    const Csv s = read_csv(out / "survival.csv");
    EXPECT_EQ(s.header, (std::vector<std::string>{"t", "re", "im", "abs"}));
    ASSERT_EQ(s.rows.size(), 3u);
    for (std::size_t k = 0; k < 3; ++k) {
        const double t = 0.5 * static_cast<double>(k);
        EXPECT_EQ(s.rows[k][0], t);
        EXPECT_NEAR(s.rows[k][1], std::cos(t), 1e-15);
        EXPECT_NEAR(s.rows[k][2], -std::sin(t), 1e-15);
        EXPECT_NEAR(s.rows[k][3], 1.0, 1e-15);
    }
    EXPECT_EQ(read_csv(out / "amplitudes.csv").rows.size(), 3u);
}

TEST(Runner, FormatNumber) {
    EXPECT_EQ(qbm::format_number(0.1), "0.10000000000000001");
    EXPECT_EQ(qbm::format_number(std::nan("")), "nan");
    EXPECT_EQ(qbm::format_number(2.0), "2");
}

TEST(Runner, OutputsAreByteIdenticalAcrossRuns) {
    const auto a = scratch("det_a"), b = scratch("det_b");
    for (const auto& dir : {a, b}) {
        auto cfg = config("configs/weak_bath_51.json", dir);
        cfg.grid = qbm::TimeGrid(20.0, 0.5);
        qbm::cmd_amplitudes(cfg);
        qbm::cmd_master(cfg);
        qbm::cmd_langevin(cfg);
        qbm::cmd_golden(cfg);
    }
    std::size_t compared = 0;
    for (const auto& entry : fs::directory_iterator(a)) {
        const auto name = entry.path().filename();
        EXPECT_EQ(slurp(a / name), slurp(b / name)) << name;
        ++compared;
    }
    EXPECT_EQ(compared, 11u);
}

// Reference outputs for the resonant pair on a coarse grid, compared
// numerically and against the closed forms they encode.
TEST(Runner, ResonantPairMatchesGoldenFiles) {
    const auto out = scratch("golden");
    const auto cfg = config("tests/golden/two_oscillator_small.json", out);
    qbm::cmd_amplitudes(cfg);
    qbm::cmd_master(cfg);
    qbm::cmd_langevin(cfg);
    for (const char* name : {"survival.csv", "populations.csv", "langevin.csv", "noise_cov.csv"}) {
        const Csv got = read_csv(out / name), want = read_csv(kGolden / name);
        EXPECT_EQ(got.header, want.header) << name;
        ASSERT_EQ(got.rows.size(), want.rows.size()) << name;
        for (std::size_t r = 0; r < got.rows.size(); ++r) {
            ASSERT_EQ(got.rows[r].size(), want.rows[r].size());
            for (std::size_t c = 0; c < got.rows[r].size(); ++c)
                EXPECT_NEAR(got.rows[r][c], want.rows[r][c], 1e-12) << name << " row " << r << " col " << c;
        }
    }

    const double g = 0.1;
    for (const auto& row : read_csv(kGolden / "survival.csv").rows) {
        EXPECT_NEAR(row[1], std::cos(row[0]) * std::cos(g * row[0]), 1e-12);
        EXPECT_NEAR(row[2], -std::sin(row[0]) * std::cos(g * row[0]), 1e-12);
    }
    for (const auto& row : read_csv(kGolden / "populations.csv").rows) {
        const double c2 = std::pow(std::cos(g * row[0]), 2);
        EXPECT_NEAR(row[2], row[1] == 0.0 ? c2 : 1.0 - c2, 1e-12);
    }
    for (const auto& row : read_csv(kGolden / "langevin.csv").rows) {
        const double tn = std::tan(g * row[0]);
        EXPECT_NEAR(row[3], 1.0 + g * g + 2.0 * g * g * tn * tn, 1e-8);
        EXPECT_NEAR(row[4], 2.0 * g * tn, 1e-8);
        EXPECT_EQ(row[5], 0.0);
    }
}

TEST(Runner, MasterReportsPoleBetweenGridPoints) {
    const auto out = scratch("pole");
    const auto s = qbm::cmd_master(config("configs/two_oscillator.json", out));
    EXPECT_EQ(s.crossings.size(), 1u);
    const std::string report = slurp(out / "singular_points.txt");
    EXPECT_NE(report.find("crossing t_before=7."), std::string::npos)
        << report;
    const Csv res = read_csv(out / "master_residual.csv");
    EXPECT_EQ(res.header, (std::vector<std::string>{"t", "residual", "balance_residual"}));
    EXPECT_EQ(res.rows.size(), 101u);
}

TEST(Runner, MasterMarksSingularGridPoints) {
    const auto out = scratch("singular");
    auto cfg = config("configs/two_oscillator.json", out);
    cfg.grid = qbm::TimeGrid(std::numbers::pi / 0.4, std::numbers::pi / 0.4);
    const auto s = qbm::cmd_master(cfg);
    ASSERT_EQ(s.singular_times.size(), 1u);
    EXPECT_NE(slurp(out / "singular_points.txt").find("singular t="), std::string::npos);
    std::size_t nan_rows = 0;
    for (const auto& row : read_csv(out / "w_coeffs.csv").rows)
        if (std::isnan(row[3])) ++nan_rows;
    EXPECT_EQ(nan_rows, 4u);
    EXPECT_TRUE(std::isnan(read_csv(out / "master_residual.csv").rows.back()[1]));
}

TEST(Runner, LangevinCovarianceStride) {
    const auto out = scratch("stride");
    auto cfg = config("configs/two_oscillator.json", out);
    cfg.covariance_stride = 10;
    const auto s = qbm::cmd_langevin(cfg);
    EXPECT_EQ(s.points, 101u);
    EXPECT_TRUE(s.singular_times.empty());
    // 11 strided points, lower triangle
    EXPECT_EQ(read_csv(out / "noise_cov.csv").rows.size(), 66u);
    EXPECT_EQ(s.max_cov_asymmetry, 0.0);
    EXPECT_GE(s.min_cov_diagonal, 0.0);
}

TEST(Runner, GoldenReportKeys) {
    const auto out = scratch("report");
    qbm::cmd_golden(config("configs/weak_bath_51.json", out));
    const auto j = nlohmann::json::parse(slurp(out / "golden_report.json"));
    for (const char* key :
         {"gamma_pred", "gamma_fit", "delta_omega_pred", "omega_fit", "window", "goodness", "w_deviation"})
        EXPECT_TRUE(j.contains(key)) << key;
    EXPECT_EQ(j["window"].size(), 2u);
    EXPECT_TRUE(j["gamma_pred"].is_number());
}

TEST(Runner, ValidateTableOnShippedConfig) {
    std::ostringstream os;
    EXPECT_TRUE(qbm::cmd_validate(config("configs/two_oscillator.json", scratch("validate")), os));
    EXPECT_NE(os.str().find("validation passed"), std::string::npos);
    EXPECT_EQ(os.str().find("FAIL"), std::string::npos) << os.str();
}

TEST(Runner, UnwritableOutputDirectory) {
    const auto base = scratch("unwritable");
    std::ofstream(base / "file") << "x";
    EXPECT_THROW(qbm::cmd_amplitudes(config("configs/trivial.json", base / "file" / "sub")), qbm::OutputError);
}

TEST(Cli, ExitCodes) {
    const auto out = scratch("cli");
    const std::string trivial = (kSource / "configs" / "trivial.json").string();
    EXPECT_EQ(run_cli("validate --config " + trivial + " --out " + out.string()), 0);
    EXPECT_EQ(run_cli("amplitudes --config " + trivial + " --out " + out.string()), 0);
    EXPECT_TRUE(fs::exists(out / "survival.csv"));

    std::ofstream(out / "broken.json") << "{\"system\": {\"omega\": 1.0,\n}";
    EXPECT_EQ(run_cli("master --config " + (out / "broken.json").string()), 2);
    std::ofstream(out / "bad_field.json") << R"({"system": {"omega": -1}, "bath": {"n": 0},
        "time": {"t_max": 1, "dt": 0.5}})";
    EXPECT_EQ(run_cli("master --config " + (out / "bad_field.json").string()), 2);
    EXPECT_EQ(run_cli("master --config " + (out / "missing.json").string()), 2);
    EXPECT_EQ(run_cli("amplitudes --config " + trivial + " --out " + (out / "survival.csv" / "x").string()), 2);
    EXPECT_EQ(run_cli("amplitudes --config " + trivial + " --dt 0"), 2);
    EXPECT_EQ(run_cli("golden --config " + trivial + " --window 5,1"), 2);
    EXPECT_EQ(run_cli("frobnicate"), 2);
    EXPECT_EQ(run_cli("--help"), 0);
}

TEST(Cli, OverridesApply) {
    const auto out = scratch("cli_override");
    const std::string cfg = (kSource / "configs" / "two_oscillator.json").string();
    ASSERT_EQ(run_cli("amplitudes --config " + cfg + " --out " + out.string() + " --t-max 1 --dt 0.25"), 0);
    EXPECT_EQ(read_csv(out / "survival.csv").rows.size(), 5u);
    ASSERT_EQ(run_cli("golden --config " + cfg + " --out " + out.string() + " --window 1,4"), 0);
    const auto j = nlohmann::json::parse(slurp(out / "golden_report.json"));
    EXPECT_EQ(j["window"][0].get<double>(), 1.0);
    EXPECT_EQ(j["window"][1].get<double>(), 4.0);
}

}  // namespace
