// master.hpp: exact local master equation for level populations.
//
//   P_nm(t) = |A_nm(t)|^2,  <N_n(t)> = sum_m P_nm(t) <N_m(0)>,  W(t) = Pdot(t) P(t)^{-1}
//
// so that d<N_n>/dt = sum_k W_nk(t) <N_k(t)> holds identically wherever P(t)
// is invertible. Singular P(t) is reported per time point, never regularised.

#pragma once

#include "qbm/amplitudes.hpp"
#include "qbm/hermitian.hpp"
#include "qbm/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace qbm {

inline constexpr double kDefaultMasterConditionCap = 1e10;

struct TransitionProbabilities {
    double t = 0.0;
    RealMatrix P;     // |A_nm|^2
    RealMatrix Pdot;  // 2 Re(conj(A_nm) Adot_nm)
    double condition = 1.0;
    int det_sign = 1;

    std::size_t dim() const noexcept { return static_cast<std::size_t>(P.rows()); }

    // max over rows and columns of |sum − 1|
    double stochasticity_residual() const {
        const double rows = (P.rowwise().sum().array() - 1.0).abs().maxCoeff();
        const double cols = (P.colwise().sum().array() - 1.0).abs().maxCoeff();
        return std::max(rows, cols);
    }
};

inline TransitionProbabilities transition_probabilities(const AmplitudeSet& amps) {
    if (amps.Adot.size() == 0) throw std::invalid_argument("transition_probabilities: first derivative required");
    TransitionProbabilities tp;
    tp.t = amps.t;
    tp.P = amps.A.cwiseAbs2();
    tp.Pdot = 2.0 * (amps.A.conjugate().cwiseProduct(amps.Adot)).real();
    const LuDiagnostics d = lu_diagnostics(tp.P);
    tp.condition = d.condition;
    tp.det_sign = d.det_sign;
    return tp;
}

struct MasterCoefficients {
    double t = 0.0;
    RealMatrix W;  // empty when singular
    double condition = 1.0;
    bool singular = false;

    // max_k |sum_n W_nk|
    double column_sum_residual() const {
        if (singular || W.size() == 0) return std::numeric_limits<double>::quiet_NaN();
        return W.colwise().sum().cwiseAbs().maxCoeff();
    }
};

inline MasterCoefficients master_coefficients(const TransitionProbabilities& tp,
                                              double condition_cap = kDefaultMasterConditionCap) {
    MasterCoefficients mc;
    mc.t = tp.t;
    mc.condition = tp.condition;
    try {
        mc.W.noalias() = tp.Pdot * invert(tp.P, condition_cap);
    } catch (const SingularMatrixError& e) {
        mc.condition = e.condition_estimate();
        mc.singular = true;
        mc.W.resize(0, 0);
    }
    return mc;
}

// <N(t)> = P(t) <N(0)>
inline RealVector populations_at(const TransitionProbabilities& tp, const InitialPopulations& init) {
    if (init.dim() != tp.dim()) throw std::invalid_argument("populations_at: dimension mismatch");
    return tp.P * init.occupations;
}

struct PopulationTrajectory {
    std::vector<double> times;
    std::vector<RealVector> occupations;
    std::vector<double> totals;

    // max_k |total_k − total_0| / |total_0| (absolute if the total is zero)
    double conservation_residual() const {
        if (totals.empty()) return 0.0;
        const double ref = totals.front();
        double worst = 0.0;
        for (double x : totals) worst = std::max(worst, std::abs(x - ref));
        return ref != 0.0 ? worst / std::abs(ref) : worst;
    }
};

inline PopulationTrajectory evolve_populations(std::span<const TransitionProbabilities> series,
                                               const InitialPopulations& init) {
    PopulationTrajectory traj;
    traj.times.reserve(series.size());
    traj.occupations.reserve(series.size());
    traj.totals.reserve(series.size());
    for (const auto& tp : series) {
        traj.times.push_back(tp.t);
        traj.occupations.push_back(populations_at(tp, init));
        traj.totals.push_back(traj.occupations.back().sum());
    }
    return traj;
}

struct MasterResidual {
    double t = 0.0;
    double local = 0.0;    // max_n |dN_n/dt − sum_k W_nk N_k|
    double balance = 0.0;  // same, with the gain−loss form
    bool singular = false; // both residuals NaN when set
};

// d<N>/dt is taken analytically as Pdot <N(0)>, not by differencing.
inline MasterResidual master_residual_at(const TransitionProbabilities& tp, const MasterCoefficients& mc,
                                         const InitialPopulations& init) {
    MasterResidual r;
    r.t = tp.t;
    if (mc.singular) {
        r.singular = true;
        r.local = r.balance = std::numeric_limits<double>::quiet_NaN();
        return r;
    }
    const RealVector n = populations_at(tp, init);
    const RealVector dn = tp.Pdot * init.occupations;
    r.local = (dn - mc.W * n).cwiseAbs().maxCoeff();

    const Eigen::Index dim = n.size();
    double worst = 0.0;
    for (Eigen::Index i = 0; i < dim; ++i) {
        double rate = 0.0;
        for (Eigen::Index m = 0; m < dim; ++m) {
            if (m == i) continue;
            rate += mc.W(i, m) * n(m) - mc.W(m, i) * n(i);
        }
        worst = std::max(worst, std::abs(dn(i) - rate));
    }
    r.balance = worst;
    return r;
}

inline std::vector<MasterResidual> master_residual(std::span<const TransitionProbabilities> tps,
                                                   std::span<const MasterCoefficients> mcs,
                                                   const InitialPopulations& init) {
    if (tps.size() != mcs.size()) throw std::invalid_argument("master_residual: series lengths differ");
    std::vector<MasterResidual> out;
    out.reserve(tps.size());
    for (std::size_t k = 0; k < tps.size(); ++k) {
        if (tps[k].t != mcs[k].t) throw std::invalid_argument("master_residual: time grids differ");
        out.push_back(master_residual_at(tps[k], mcs[k], init));
    }
    return out;
}

// --------------------------- streaming driver -------------------------------

// det P(t) changed sign between two consecutive grid points: W has a pole in
// between even if neither point exceeded the condition cap.
struct SingularCrossing {
    double t_before = 0.0;
    double t_after = 0.0;
};

struct MasterPoint {
    const TransitionProbabilities& tp;
    const MasterCoefficients& mc;
    const RealVector& populations;
    const MasterResidual& residual;
};

struct MasterSummary {
    std::size_t points = 0;
    std::vector<double> singular_times;
    std::vector<double> singular_conditions;
    std::vector<SingularCrossing> crossings;
    double max_unitarity = 0.0;
    double max_stochasticity = 0.0;
    double max_column_sum = 0.0;  // over non-singular points
    double max_residual = 0.0;    // over non-singular points, both forms
    double max_form_gap = 0.0;    // |local − balance|
    double min_population = std::numeric_limits<double>::infinity();
    double conservation = 0.0;    // relative drift of total quanta
};

struct MasterOptions {
    double condition_cap = kDefaultMasterConditionCap;
};

// Evaluates every grid point in order and hands each to `visit` (optional).
// Full matrices are not retained, so this scales to large baths and grids.
inline MasterSummary run_master(const SpectralDecomposition& sd, std::span<const double> times,
                                const InitialPopulations& init, const MasterOptions& opts = {},
                                const std::function<void(const MasterPoint&)>& visit = {}) {
    if (init.dim() != sd.dim()) throw std::invalid_argument("run_master: initial populations dimension mismatch");
    MasterSummary s;
    const double total0 = init.total();
    std::optional<std::pair<double, int>> last_sign;
    for (double t : times) {
        const AmplitudeSet amps = amplitudes_at(sd, t, DerivativeOrder::first);
        const TransitionProbabilities tp = transition_probabilities(amps);
        const MasterCoefficients mc = master_coefficients(tp, opts.condition_cap);
        const RealVector pops = populations_at(tp, init);
        const MasterResidual res = master_residual_at(tp, mc, init);

        ++s.points;
        s.max_unitarity = std::max(s.max_unitarity, amps.unitarity_residual());
        s.max_stochasticity = std::max(s.max_stochasticity, tp.stochasticity_residual());
        s.min_population = std::min(s.min_population, pops.minCoeff());
        const double drift = std::abs(pops.sum() - total0);
        s.conservation = std::max(s.conservation, total0 != 0.0 ? drift / std::abs(total0) : drift);
        if (mc.singular) {
            s.singular_times.push_back(t);
            s.singular_conditions.push_back(mc.condition);
        } else {
            s.max_column_sum = std::max(s.max_column_sum, mc.column_sum_residual());
            s.max_residual = std::max({s.max_residual, res.local, res.balance});
            s.max_form_gap = std::max(s.max_form_gap, std::abs(res.local - res.balance));
        }
        if (tp.det_sign != 0) {
            if (last_sign && last_sign->second != tp.det_sign) s.crossings.push_back({last_sign->first, t});
            last_sign = std::make_pair(t, tp.det_sign);
        }
        if (visit) visit(MasterPoint{tp, mc, pops, res});
    }
    return s;
}

}  // namespace qbm
