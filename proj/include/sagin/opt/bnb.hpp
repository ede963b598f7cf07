#pragma once

// Best-first branch-and-bound over binary variables of an LP relaxation,
// branching on the most fractional variable.

#include <functional>
#include <vector>

#include "sagin/opt/lp.hpp"

namespace sagin::opt {

enum class BnbStatus { Optimal, Infeasible, NodeLimit };

struct BnbProblem {
    LinearProgram relaxation;          // binaries carry [0,1] bounds
    std::vector<int> binary_indices;
    double gap_tolerance = 1e-9;
    // Optional extra check applied to integral candidates before they can
    // become the incumbent.
    std::function<bool(const Eigen::VectorXd&)> feasibility_oracle;
    int node_limit = 200000;
    double lp_tolerance = 1e-9;
};

struct BnbResult {
    BnbStatus status = BnbStatus::Infeasible;
    Eigen::VectorXd x;
    double objective = 0.0;
    int nodes_explored = 0;
};

BnbResult solve_bnb(const BnbProblem& p);

}  // namespace sagin::opt
