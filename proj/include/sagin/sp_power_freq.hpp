#pragma once

// Joint transmit-power and computing-frequency control via the xi / Gamma
// change of variables: xi = 1 / ln(1 + SNR) per active link, Gamma >= the
// smooth convex surrogate xi (e^{1/xi} - 1), solved by the log-barrier
// method. Powers are recovered from xi afterwards.
//
// Cells decouple except for the per-UAV/per-slot frequency capacity rows and
// the per-UAV energy budget; cells are solved independently first and the
// coupled program is only assembled when a coupling row ends up violated.

#include <utility>
#include <vector>

#include "sagin/fp_transform.hpp"
#include "sagin/model.hpp"
#include "sagin/opt/convex.hpp"
#include "sagin/scenario.hpp"

namespace sagin {

struct PowerFreqAux {
    // Link variables for the associated UAV pair and the LEO link; zero when
    // the corresponding offload share is zero.
    std::vector<std::vector<double>> xi_uav, gamma_uav, gain_uav;  // [m][n]
    std::vector<std::vector<double>> xi_leo, gamma_leo;            // [m][n]
    std::vector<std::vector<int>> assoc_k;                         // [m][n], -1 if none

    static PowerFreqAux sized(int mus, int slots);
};

struct RecoveredPowers {
    std::vector<std::vector<double>> p_uav;  // [m][n] for the associated pair
    std::vector<std::vector<double>> p_leo;  // [m][n]
};

// p = (sigma^2 / h) (e^{1/xi} - 1) per link, clamped into [0, P_max].
RecoveredPowers recover_powers(const Scenario& s, const PowerFreqAux& aux);

enum class PowerFreqStatus { Ok, NoStrictInterior, InfeasibleBudget };

struct PowerFreqResult {
    Decision decision;  // input decision with P and F replaced
    PowerFreqAux aux;
    PowerFreqStatus status = PowerFreqStatus::Ok;
    std::vector<std::pair<int, int>> pinned_cells;  // kept at previous values
    double kkt_residual = 0.0;  // max over the solved programs
    double objective = 0.0;     // sum y^2 E^sum at the returned decision
    bool coupled_solve_used = false;
};

PowerFreqResult solve_power_freq(const Scenario& s, const Decision& d, const FpWeights& w,
                                 const SolverSettings& settings);

// The normalized per-cell program (no coupling rows), for gradient checks
// and diagnostics. Empty program (num_vars == 0) when the cell is inactive.
opt::SmoothConvexProgram build_power_freq_cell_program(const Scenario& s, const Decision& d,
                                                       const FpWeights& w, int m, int n,
                                                       const SolverSettings& settings);

}  // namespace sagin
