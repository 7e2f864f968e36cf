// config.hpp: JSON run configuration: model, initial populations, time grid,
// fit windows and tolerance overrides.
//
//   {
//     "system":  {"omega": 1.0, "mass": 1.0, "v_self": 0.0},
//     "bath": {
//       "n": 201,
//       "spectrum": {"type": "linear", "omega_min": 0.0, "omega_max": 2.0}
//                 | {"type": "explicit", "omegas": [...]},
//       "coupling": {"type": "uniform", "g": 0.01} | {"type": "explicit", "gs": [...]},
//       "bath_bath": "zero" | [[...], ...]
//     },
//     "initial": {"type": "thermal", "beta": 1.0, "system_occupation": 1.0}
//              | {"type": "explicit", "occupations": [...]},
//     "time": {"t_max": 200.0, "dt": 0.1},
//     "fit": {"window": [10, 100], "compare_window": [10, 30]},
//     "tolerances": {"condition_cap": 1e10, "wronskian": 1e-12, "pv_epsilon": 0.005},
//     "output": {"covariance_stride": 1}
//   }
//
// Complex entries are either a number or a [re, im] pair. "initial", "fit",
// "tolerances" and "output" are optional; a missing "initial" block puts one
// quantum in the system and leaves the bath empty.

#pragma once

#include "qbm/amplitudes.hpp"
#include "qbm/golden_rule.hpp"
#include "qbm/langevin.hpp"
#include "qbm/master.hpp"
#include "qbm/model.hpp"

#include <json.hpp>

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>

namespace qbm {

// Invalid configuration; `field` is the JSON path of the offending entry.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, const std::string& what)
        : std::runtime_error(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

struct Tolerances {
    double condition_cap = kDefaultMasterConditionCap;
    double wronskian = kDefaultWronskianTolerance;
    std::optional<double> pv_epsilon;
};

struct RunConfig {
    ModelSpec spec;
    InitialPopulations init;
    TimeGrid grid;
    std::optional<FitWindow> fit_window;
    std::optional<FitWindow> compare_window;
    Tolerances tolerances;
    std::size_t covariance_stride = 1;
    std::filesystem::path out_dir = ".";
};

namespace detail {

using nlohmann::json;

inline const json& require(const json& j, const std::string& key, const std::string& path) {
    if (!j.is_object()) throw ConfigError(path, "expected an object");
    auto it = j.find(key);
    if (it == j.end()) throw ConfigError(path.empty() ? key : path + "." + key, "missing required field");
    return *it;
}

inline double number(const json& j, const std::string& path) {
    if (!j.is_number()) throw ConfigError(path, "expected a number");
    return j.get<double>();
}

inline double number_or(const json& j, const std::string& key, double fallback, const std::string& path) {
    if (!j.contains(key)) return fallback;
    return number(j.at(key), path + "." + key);
}

inline std::string text(const json& j, const std::string& path) {
    if (!j.is_string()) throw ConfigError(path, "expected a string");
    return j.get<std::string>();
}

inline Complex complex_value(const json& j, const std::string& path) {
    if (j.is_number()) return {j.get<double>(), 0.0};
    if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
        return {j[0].get<double>(), j[1].get<double>()};
    throw ConfigError(path, "expected a number or a [re, im] pair");
}

inline const json& array_of(const json& j, std::size_t n, const std::string& path) {
    if (!j.is_array()) throw ConfigError(path, "expected an array");
    if (j.size() != n)
        throw ConfigError(path, "expected " + std::to_string(n) + " entries, got " + std::to_string(j.size()));
    return j;
}

inline FitWindow window_value(const json& j, const std::string& path) {
    array_of(j, 2, path);
    FitWindow w{number(j[0], path + "[0]"), number(j[1], path + "[1]")};
    if (!(w.t1 < w.t2)) throw ConfigError(path, "window requires t1 < t2");
    return w;
}

inline json complex_json(Complex c) {
    if (c.imag() == 0.0) return c.real();
    return json::array({c.real(), c.imag()});
}

inline ModelSpec parse_model(const json& root) {
    ModelSpec s;
    const json& sys = require(root, "system", "");
    s.Omega = number(require(sys, "omega", "system"), "system.omega");
    s.mass = number_or(sys, "mass", 1.0, "system");
    s.self_shift = number_or(sys, "v_self", 0.0, "system");

    const json& bath = require(root, "bath", "");
    const json& nj = require(bath, "n", "bath");
    if (!nj.is_number_integer() || nj.get<long long>() < 0) throw ConfigError("bath.n", "expected a non-negative integer");
    const auto n = static_cast<std::size_t>(nj.get<long long>());

    std::optional<double> rho;
    if (n > 0) {
        const json& spectrum = require(bath, "spectrum", "bath");
        const std::string type = text(require(spectrum, "type", "bath.spectrum"), "bath.spectrum.type");
        if (type == "linear") {
            const double lo = number(require(spectrum, "omega_min", "bath.spectrum"), "bath.spectrum.omega_min");
            const double hi = number(require(spectrum, "omega_max", "bath.spectrum"), "bath.spectrum.omega_max");
            try {
                const ModelSpec grid = preset_linear_bath(n, lo, hi, s.Omega, 0.0);
                s.bath_frequencies = grid.bath_frequencies;
                rho = grid.density_of_states;
            } catch (const std::invalid_argument& e) {
                throw ConfigError("bath.spectrum", e.what());
            }
        } else if (type == "explicit") {
            const json& w = array_of(require(spectrum, "omegas", "bath.spectrum"), n, "bath.spectrum.omegas");
            for (std::size_t k = 0; k < n; ++k)
                s.bath_frequencies.push_back(number(w[k], "bath.spectrum.omegas[" + std::to_string(k) + "]"));
        } else {
            throw ConfigError("bath.spectrum.type", "unknown spectrum type '" + type + "'");
        }

        const json& coupling = require(bath, "coupling", "bath");
        const std::string ctype = text(require(coupling, "type", "bath.coupling"), "bath.coupling.type");
        if (ctype == "uniform") {
            s.couplings.assign(n, complex_value(require(coupling, "g", "bath.coupling"), "bath.coupling.g"));
        } else if (ctype == "explicit") {
            const json& gs = array_of(require(coupling, "gs", "bath.coupling"), n, "bath.coupling.gs");
            for (std::size_t k = 0; k < n; ++k)
                s.couplings.push_back(complex_value(gs[k], "bath.coupling.gs[" + std::to_string(k) + "]"));
        } else {
            throw ConfigError("bath.coupling.type", "unknown coupling type '" + ctype + "'");
        }

        if (bath.contains("bath_bath")) {
            const json& bb = bath.at("bath_bath");
            if (bb.is_string()) {
                if (bb.get<std::string>() != "zero") throw ConfigError("bath.bath_bath", "expected \"zero\" or a matrix");
            } else {
                array_of(bb, n, "bath.bath_bath");
                ComplexMatrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
                for (std::size_t i = 0; i < n; ++i) {
                    const std::string row = "bath.bath_bath[" + std::to_string(i) + "]";
                    array_of(bb[i], n, row);
                    for (std::size_t j = 0; j < n; ++j)
                        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                            complex_value(bb[i][j], row + "[" + std::to_string(j) + "]");
                }
                s.bath_bath = std::move(m);
            }
        }
    }
    s.density_of_states = rho;
    try {
        validate(s);
    } catch (const std::invalid_argument& e) {
        throw ConfigError("", e.what());
    }
    return s;
}

inline InitialPopulations parse_initial(const json& root, const ModelSpec& s) {
    if (!root.contains("initial")) return preset_system_excited(s, 1.0);
    const json& init = root.at("initial");
    const std::string type = text(require(init, "type", "initial"), "initial.type");
    try {
        if (type == "thermal") {
            const double beta = number(require(init, "beta", "initial"), "initial.beta");
            return preset_thermal_populations(s, beta, number_or(init, "system_occupation", 1.0, "initial"));
        }
        if (type == "explicit") {
            const json& occ = array_of(require(init, "occupations", "initial"), s.dim(), "initial.occupations");
            InitialPopulations p;
            p.occupations.resize(static_cast<Eigen::Index>(s.dim()));
            for (std::size_t k = 0; k < s.dim(); ++k)
                p.occupations(static_cast<Eigen::Index>(k)) =
                    number(occ[k], "initial.occupations[" + std::to_string(k) + "]");
            validate(p, s.dim());
            return p;
        }
    } catch (const std::invalid_argument& e) {
        throw ConfigError("initial", e.what());
    }
    throw ConfigError("initial.type", "unknown initial type '" + type + "'");
}

}  // namespace detail

inline RunConfig parse_config(const nlohmann::json& root) {
    using detail::number;
    using detail::require;
    if (!root.is_object()) throw ConfigError("", "configuration must be a JSON object");
    RunConfig cfg;
    cfg.spec = detail::parse_model(root);
    cfg.init = detail::parse_initial(root, cfg.spec);

    const auto& time = require(root, "time", "");
    try {
        cfg.grid = TimeGrid(number(require(time, "t_max", "time"), "time.t_max"), number(require(time, "dt", "time"), "time.dt"));
    } catch (const std::invalid_argument& e) {
        throw ConfigError("time", e.what());
    }

    if (root.contains("fit")) {
        const auto& fit = root.at("fit");
        if (fit.contains("window")) cfg.fit_window = detail::window_value(fit.at("window"), "fit.window");
        if (fit.contains("compare_window"))
            cfg.compare_window = detail::window_value(fit.at("compare_window"), "fit.compare_window");
    }
    if (root.contains("tolerances")) {
        const auto& tol = root.at("tolerances");
        cfg.tolerances.condition_cap = detail::number_or(tol, "condition_cap", cfg.tolerances.condition_cap, "tolerances");
        cfg.tolerances.wronskian = detail::number_or(tol, "wronskian", cfg.tolerances.wronskian, "tolerances");
        if (tol.contains("pv_epsilon")) cfg.tolerances.pv_epsilon = number(tol.at("pv_epsilon"), "tolerances.pv_epsilon");
        if (!(cfg.tolerances.condition_cap > 0.0)) throw ConfigError("tolerances.condition_cap", "must be > 0");
        if (!(cfg.tolerances.wronskian > 0.0)) throw ConfigError("tolerances.wronskian", "must be > 0");
        if (cfg.tolerances.pv_epsilon && !(*cfg.tolerances.pv_epsilon >= 0.0))
            throw ConfigError("tolerances.pv_epsilon", "must be >= 0");
    }
    if (root.contains("output")) {
        const auto& out = root.at("output");
        if (out.contains("covariance_stride")) {
            const auto& st = out.at("covariance_stride");
            if (!st.is_number_integer() || st.get<long long>() < 1)
                throw ConfigError("output.covariance_stride", "expected a positive integer");
            cfg.covariance_stride = static_cast<std::size_t>(st.get<long long>());
        }
    }
    return cfg;
}

inline RunConfig parse_config_text(const std::string& text) {
    nlohmann::json root;
    try {
        root = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("", std::string("malformed JSON: ") + e.what());
    }
    return parse_config(root);
}

inline RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("", "cannot open config file '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

// Fully explicit form of a configuration; parse_config(to_json(c)) rebuilds
// the same model bit for bit.
inline nlohmann::json to_json(const RunConfig& cfg) {
    using nlohmann::json;
    const ModelSpec& s = cfg.spec;
    json root;
    root["system"] = {{"omega", s.Omega}, {"mass", s.mass}, {"v_self", s.self_shift}};
    json bath;
    bath["n"] = s.bath_size();
    if (s.bath_size() > 0) {
        bath["spectrum"] = {{"type", "explicit"}, {"omegas", s.bath_frequencies}};
        json gs = json::array();
        for (const Complex& g : s.couplings) gs.push_back(detail::complex_json(g));
        bath["coupling"] = {{"type", "explicit"}, {"gs", gs}};
        if (s.bath_bath) {
            json m = json::array();
            for (Eigen::Index i = 0; i < s.bath_bath->rows(); ++i) {
                json row = json::array();
                for (Eigen::Index j = 0; j < s.bath_bath->cols(); ++j) row.push_back(detail::complex_json((*s.bath_bath)(i, j)));
                m.push_back(row);
            }
            bath["bath_bath"] = m;
        } else {
            bath["bath_bath"] = "zero";
        }
    }
    root["bath"] = bath;
    json occ = json::array();
    for (Eigen::Index k = 0; k < cfg.init.occupations.size(); ++k) occ.push_back(cfg.init.occupations(k));
    root["initial"] = {{"type", "explicit"}, {"occupations", occ}};
    root["time"] = {{"t_max", cfg.grid.t_max}, {"dt", cfg.grid.dt}};
    json fit = json::object();
    if (cfg.fit_window) fit["window"] = {cfg.fit_window->t1, cfg.fit_window->t2};
    if (cfg.compare_window) fit["compare_window"] = {cfg.compare_window->t1, cfg.compare_window->t2};
    if (!fit.empty()) root["fit"] = fit;
    json tol = {{"condition_cap", cfg.tolerances.condition_cap}, {"wronskian", cfg.tolerances.wronskian}};
    if (cfg.tolerances.pv_epsilon) tol["pv_epsilon"] = *cfg.tolerances.pv_epsilon;
    root["tolerances"] = tol;
    root["output"] = {{"covariance_stride", cfg.covariance_stride}};
    return root;
}

}  // namespace qbm
