#pragma once

// MU-UAV association: minimizes the y^2-weighted UAV transmit-plus-compute
// cost under one-UAV-per-MU, per-pair latency feasibility, and the per-UAV
// energy budget. Solved by branch-and-bound over the LP relaxation.

#include <cstdint>
#include <utility>
#include <vector>

#include "sagin/fp_transform.hpp"
#include "sagin/model.hpp"
#include "sagin/scenario.hpp"

namespace sagin {

struct AssociationCosts {
    // Candidate cost y^2 (p w^U D / R + kappa_U f^2 w^U D phi); +inf when the
    // pair has no usable rate. Candidate frequency is the stored value for the
    // currently associated pair and F^U_max / M for a prospective switch.
    std::vector<std::vector<std::vector<double>>> cost;            // [m][k][n]
    std::vector<std::vector<std::vector<std::uint8_t>>> latency_ok;  // [m][k][n]
    std::vector<std::vector<std::vector<double>>> compute_energy;  // [m][k][n], J for (17p)
    std::vector<std::vector<std::vector<double>>> candidate_freq;  // [m][k][n]
};

AssociationCosts build_association_costs(const Scenario& s, const Decision& d,
                                         const FpWeights& w);

struct AssociationResult {
    std::vector<std::vector<std::vector<std::uint8_t>>> assoc;  // updated alpha
    // Rows kept at the previous association because no candidate was
    // latency-feasible; `infeasible` is set when such a row's previous
    // association is itself infeasible.
    std::vector<std::pair<int, int>> pinned_rows;
    bool infeasible = false;
    double cost_objective = 0.0;  // sum of candidate costs at the returned alpha
    int bnb_nodes = 0;
};

AssociationResult solve_association(const Scenario& s, const Decision& d,
                                    const FpWeights& w, const SolverSettings& settings);

}  // namespace sagin
