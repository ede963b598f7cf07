#pragma once

// Dense bounded-variable primal simplex. Exact vertex solutions at desk
// scale; Dantzig pricing with a Bland's-rule fallback against cycling.

#include <Eigen/Dense>

namespace sagin::opt {

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit };

// min c'x  s.t.  a_ineq x <= b_ineq,  a_eq x = b_eq,  lower <= x <= upper.
// Lower bounds must be finite; upper bounds may be +inf.
struct LinearProgram {
    Eigen::VectorXd c;
    Eigen::MatrixXd a_ineq;
    Eigen::VectorXd b_ineq;
    Eigen::MatrixXd a_eq;
    Eigen::VectorXd b_eq;
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;

    int num_vars() const { return static_cast<int>(c.size()); }
    static LinearProgram sized(int vars, int ineq_rows, int eq_rows);
};

struct LpResult {
    LpStatus status = LpStatus::IterationLimit;
    Eigen::VectorXd x;
    double objective = 0.0;
    // Multipliers: dual_ineq >= 0 with dual_ineq .* slack = 0 at optimality;
    // reduced_cost[j] vanishes for variables strictly between their bounds.
    Eigen::VectorXd dual_ineq;
    Eigen::VectorXd dual_eq;
    Eigen::VectorXd reduced_cost;
    int iterations = 0;
};

LpResult solve_lp(const LinearProgram& lp, double tol = 1e-9);

}  // namespace sagin::opt
