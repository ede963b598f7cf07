#include "sagin/opt/bnb.hpp"

#include <cmath>
#include <limits>
#include <queue>

namespace sagin::opt {

namespace {

struct Node {
    double bound;  // LP relaxation objective (lower bound, min problem)
    std::vector<std::pair<int, double>> fixes;  // (var, value)
    bool operator>(const Node& other) const { return bound > other.bound; }
};

constexpr double kIntTol = 1e-6;

}  // namespace

BnbResult solve_bnb(const BnbProblem& p) {
    BnbResult res;
    const double inf = std::numeric_limits<double>::infinity();
    double incumbent = inf;
    Eigen::VectorXd incumbent_x;

    auto solve_node = [&p](const std::vector<std::pair<int, double>>& fixes,
                           LpResult& out) {
        LinearProgram lp = p.relaxation;
        for (const auto& [var, val] : fixes) {
            lp.lower[var] = val;
            lp.upper[var] = val;
        }
        out = solve_lp(lp, p.lp_tolerance);
        return out.status;
    };

    std::priority_queue<Node, std::vector<Node>, std::greater<Node>> open;
    {
        LpResult root;
        const LpStatus st = solve_node({}, root);
        if (st == LpStatus::Infeasible) {
            res.status = BnbStatus::Infeasible;
            return res;
        }
        if (st != LpStatus::Optimal) {
            res.status = BnbStatus::NodeLimit;
            return res;
        }
        open.push({root.objective, {}});
    }

    while (!open.empty()) {
        if (++res.nodes_explored > p.node_limit) {
            res.status = BnbStatus::NodeLimit;
            return res;
        }
        Node node = open.top();
        open.pop();
        if (node.bound >= incumbent - p.gap_tolerance) break;  // certified

        LpResult lp;
        if (solve_node(node.fixes, lp) != LpStatus::Optimal) continue;
        if (lp.objective >= incumbent - p.gap_tolerance) continue;

        // Most fractional binary.
        int branch_var = -1;
        double worst = kIntTol;
        for (int var : p.binary_indices) {
            const double frac = std::abs(lp.x[var] - std::round(lp.x[var]));
            if (frac > worst) {
                worst = frac;
                branch_var = var;
            }
        }
        if (branch_var < 0) {
            // Integral candidate.
            if (!p.feasibility_oracle || p.feasibility_oracle(lp.x)) {
                if (lp.objective < incumbent) {
                    incumbent = lp.objective;
                    incumbent_x = lp.x;
                    for (int var : p.binary_indices)
                        incumbent_x[var] = std::round(incumbent_x[var]);
                }
            }
            continue;
        }
        for (double val : {0.0, 1.0}) {
            Node child = node;
            child.bound = lp.objective;
            child.fixes.emplace_back(branch_var, val);
            open.push(child);
        }
    }

    if (incumbent == inf) {
        res.status = BnbStatus::Infeasible;
        return res;
    }
    res.status = BnbStatus::Optimal;
    res.x = incumbent_x;
    res.objective = incumbent;
    return res;
}

}  // namespace sagin::opt
