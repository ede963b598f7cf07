#pragma once

// Multi-UAV trajectory design by successive convex approximation: rate and
// squared-distance proxies with first-order expansions at the current
// trajectory, a slack speed for the propulsion bound, and step acceptance on
// the true transmit-energy objective with the original constraints.

#include <array>
#include <vector>

#include "sagin/fp_transform.hpp"
#include "sagin/model.hpp"
#include "sagin/opt/convex.hpp"
#include "sagin/scenario.hpp"

namespace sagin {

struct TrajectoryAux {
    std::vector<std::vector<double>> psi;       // [k][n] slack speed, m/s
    std::vector<std::vector<double>> gamma;     // [m][n] rate proxy, bit/s (0 inactive)
    std::vector<std::vector<double>> s_proxy;   // [m][n] squared-distance proxy, m^2
    std::vector<std::vector<Vec2>> expansion_q;      // [k][n]
    std::vector<std::vector<double>> expansion_s;    // [m][n] exact H^2 + dist^2 at expansion
};

// Right side of the linearized rate row at proxy S, expanded at S_l.
double sp4_rate_bound(double bandwidth, double power, double beta0, double noise,
                      double s_value, double s_expansion);

// Right side of the linearized squared-distance row at position q, expanded at q_l.
double sp4_linearized_distance(const Vec2& q_expansion, const Vec2& mu, double altitude,
                               const Vec2& q);

// Propulsion upper bound tau (zeta1 |v|^3 + zeta2 / psi).
double sp4_prop_upper_bound(double zeta1, double zeta2, double tau, double speed, double psi);

struct ConvexifiedTrajectory {
    opt::SmoothConvexProgram program;
    std::vector<std::vector<std::array<int, 2>>> q_vars;  // [k][n], -1 for fixed endpoints
    std::vector<std::vector<int>> psi_vars;               // [k][n]
    std::vector<std::vector<int>> gamma_vars, s_vars;     // [m][n], -1 inactive
    double pos_ref = 1.0;
    bool feasible = true;  // expansion admits a strict interior
};

// Convexified subproblem at the expansion stored in aux.
ConvexifiedTrajectory build_convexified(const Scenario& s, const Decision& d,
                                        const FpWeights& w, const TrajectoryAux& aux,
                                        const SolverSettings& settings);

// Exact step-acceptance metrics at a candidate trajectory.
struct TrajectoryMetrics {
    double transmit_objective = 0.0;  // sum y^2 E^{U,tran} with exact rates
    double max_speed = 0.0;
    double min_separation = 0.0;  // +inf when K == 1
    double endpoint_residual = 0.0;
    double max_uav_latency = 0.0;
    double max_budget_excess = 0.0;  // positive when (17p) fails
};
TrajectoryMetrics trajectory_metrics(const Scenario& s, const Decision& d, const FpWeights& w,
                                     const std::vector<std::vector<Vec2>>& trajectories,
                                     double min_speed_floor);

struct ScaStepRecord {
    int step = 0;
    bool accepted = false;
    double objective_before = 0.0, objective_after = 0.0;
    double max_speed = 0.0, min_separation = 0.0, endpoint_residual = 0.0;
    double max_uav_latency = 0.0;
};

enum class ScaStatus { Ok, NoActiveCells, ExpansionInfeasible, SolverFailed };

struct TrajectoryResult {
    std::vector<std::vector<Vec2>> trajectories;
    TrajectoryAux aux;
    std::vector<ScaStepRecord> steps;
    ScaStatus status = ScaStatus::Ok;
    double true_objective = 0.0;
};

TrajectoryResult sca_solve(const Scenario& s, const Decision& d, const FpWeights& w,
                           const SolverSettings& settings);

}  // namespace sagin
