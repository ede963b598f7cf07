#pragma once

// Task-offloading LP: minimizes sum y^2 E^sum over the per-cell simplex of
// (omega^L, omega^U, omega^S) subject to per-path latency caps and the
// per-UAV energy budget rows.

#include <utility>
#include <vector>

#include "sagin/fp_transform.hpp"
#include "sagin/model.hpp"
#include "sagin/scenario.hpp"

namespace sagin {

struct OffloadCaps {
    double local = 1.0, uav = 1.0, leo = 1.0;  // in [0, 1]
    double sum() const { return local + uav + leo; }
};

struct OffloadLp {
    std::vector<std::vector<double>> w2, w3, w4;        // [m][n] coefficients
    std::vector<std::vector<OffloadCaps>> caps;         // [m][n]
    std::vector<double> budget_rhs;                     // per k: E_max - sum E^prop
    // Cells whose caps cannot cover the simplex; they keep the previous
    // split and contribute to the budget rows as constants.
    std::vector<std::pair<int, int>> infeasible_cells;
};

OffloadLp build_offload_lp(const Scenario& s, const Decision& d, const FpWeights& w,
                           const SolverSettings& settings);

struct OffloadResult {
    std::vector<std::vector<OffloadSplit>> offload;
    std::vector<std::pair<int, int>> infeasible_cells;
    double objective = 0.0;  // sum y^2 E^sum under the returned split
    bool lp_failed = false;  // coupled LP did not reach optimality
};

// For schemes without a UAV tier, pass allow_uav = false to pin omega^U = 0.
OffloadResult solve_offload(const Scenario& s, const Decision& d, const FpWeights& w,
                            const SolverSettings& settings, bool allow_uav = true);

}  // namespace sagin
