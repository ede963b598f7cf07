#pragma once

// Alternating-optimization driver: SP1 -> SP2 -> SP3' -> SP4' -> y-update per
// iteration, with a per-block acceptance gate (the weighted energy sum must
// not increase and the objective must not dip) and the four baseline schemes.

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

#include "sagin/fp_transform.hpp"
#include "sagin/model.hpp"
#include "sagin/scenario.hpp"
#include "sagin/sp_trajectory.hpp"

namespace sagin {

struct NoFeasibleStart : std::runtime_error {
    explicit NoFeasibleStart(const std::string& what) : std::runtime_error(what) {}
};

enum class Scheme { Proposed, SingleUav, FixedTrajectory, FixedAllocation, LsOffloading };

std::string scheme_name(Scheme s);
Scheme scheme_from_name(const std::string& name);  // throws std::invalid_argument

struct SchemeSpec {
    Scheme scheme = Scheme::Proposed;
    std::array<double, 3> fixed_split = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
    int single_uav_index = 0;
};

// The scenario a scheme actually runs on (single-UAV keeps one UAV).
Scenario scheme_scenario(const Scenario& s, const SchemeSpec& spec);

struct IterationRecord {
    int iteration = 0;
    double phi = 0.0;        // objective after the iteration
    double surrogate = 0.0;  // surrogate at the iteration's working weights
    double d_sp1 = 0.0, d_sp2 = 0.0, d_sp3 = 0.0, d_sp4 = 0.0;  // phi deltas
    double max_residual = 0.0;
    double ms_sp1 = 0.0, ms_sp2 = 0.0, ms_sp3 = 0.0, ms_sp4 = 0.0;
};

enum class Termination { Converged, MaxIters, InfeasibleSubproblem };

struct RunReport {
    std::string scheme;
    SchemeSpec spec;
    Termination termination = Termination::MaxIters;
    std::vector<IterationRecord> trace;  // entry 0 is the initial point
    Decision final_decision;
    FpWeights final_weights;
    std::vector<ScaStepRecord> sca_steps;  // trajectory-step diagnostics
};

// Straight-line trajectories, nearest-UAV association, fair-share
// frequencies, half-cap powers, and a latency-clipped offloading split.
// Throws NoFeasibleStart when no split fits inside the slot.
Decision initial_point(const Scenario& s, const SolverSettings& settings = {});
Decision initial_point(const Scenario& s, const SchemeSpec& spec,
                       const SolverSettings& settings);

RunReport run_ao(const Scenario& s, const SchemeSpec& spec, const SolverSettings& settings);

}  // namespace sagin
