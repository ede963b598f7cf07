#pragma once

// Log-barrier path following with damped Newton inner steps for smooth
// convex programs. Objective and constraints are sums of small-support
// terms so the Newton system can be assembled sparsely.

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace sagin::opt {

// One smooth function of a few variables. `vars` lists the global indices;
// the callbacks see and produce quantities over that support only.
struct ConvexTerm {
    std::vector<int> vars;
    std::function<double(const Eigen::VectorXd&)> value;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
    std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> hessian;
};

// min sum(objective_terms)  s.t.  g_i(x) <= 0 for each constraint term,
//                                 a_eq x = b_eq,
// from a strictly feasible start.
struct SmoothConvexProgram {
    int num_vars = 0;
    std::vector<ConvexTerm> objective_terms;
    std::vector<ConvexTerm> constraints;
    Eigen::MatrixXd a_eq;  // may be empty
    Eigen::VectorXd b_eq;
    Eigen::VectorXd start;

    double objective_value(const Eigen::VectorXd& x) const;
    double constraint_value(int i, const Eigen::VectorXd& x) const;
    Eigen::VectorXd objective_gradient(const Eigen::VectorXd& x) const;
};

enum class ConvexStatus { Converged, NoStrictInterior, IterationLimit, NumericalBreakdown };

struct ConvexResult {
    ConvexStatus status = ConvexStatus::IterationLimit;
    Eigen::VectorXd x;
    double objective = 0.0;
    // Inf-norm of grad f0 + sum lambda_i grad g_i + A_eq' nu, relative to
    // max(1, |grad f0|_inf).
    double kkt_residual = 0.0;
    Eigen::VectorXd ineq_multipliers;
    int newton_steps = 0;
    int outer_iterations = 0;
    bool outer_objective_monotone = true;
};

struct BarrierOptions {
    double initial_weight = 1.0;
    double multiplier = 30.0;
    double newton_tolerance = 1e-10;  // stop inner loop on lambda^2/2
    int max_newton_steps = 60;
    double gap_tolerance = 1e-8;      // stop outer loop on m_ineq / t
};

ConvexResult solve_convex(const SmoothConvexProgram& p, const BarrierOptions& opt);

// Central-difference check of every objective and constraint gradient at
// randomly perturbed strictly feasible points. Returns the worst relative
// mismatch observed.
struct GradientCheck {
    double max_rel_error = 0.0;
    int points_checked = 0;
};
GradientCheck check_gradients(const SmoothConvexProgram& p, int num_points,
                              std::uint64_t seed, double step_scale = 1e-4);

}  // namespace sagin::opt
