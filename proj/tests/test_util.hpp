#pragma once

// Shared fixtures: hand-sized scenarios and decisions with known geometry.

#include <cmath>

#include "sagin/ao_driver.hpp"
#include "sagin/model.hpp"
#include "sagin/scenario.hpp"

namespace sagin::testutil {

// One MU directly under a hovering UAV: h = beta0 / H^2 = 1e-10, so the
// UAV rate at p = 3 W is B log2(1 + 3e10).
inline Scenario overhead_scenario(int slots = 1) {
    Scenario s;
    s.num_mus = 1;
    s.num_uavs = 1;
    s.num_slots = slots;
    s.mu_positions = {Vec2(0, 0)};
    s.uav_start = {Vec2(0, 0)};
    s.uav_end = {Vec2(0, 0)};
    s.leo_gain = {10.0};
    s.task_bits.assign(1, std::vector<double>(slots, 6e6));
    s.cycles_per_bit.assign(1, std::vector<double>(slots, 100.0));
    s.uav_energy_budget = 1e6;
    s.area_side = 10.0;
    return s;
}

// Decision over the overhead scenario with the worked split
// (0.5, 0.3, 0.2), f_L = 5 GHz, f_U = 1 GHz, p at the 3 W cap.
inline Decision overhead_decision(const Scenario& s) {
    Decision d = Decision::sized(s.num_mus, s.num_uavs, s.num_slots);
    for (int n = 0; n < s.num_slots; ++n) {
        d.trajectories[0][n] = Vec2(0, 0);
        d.assoc[0][0][n] = 1;
        d.offload[0][n] = {0.5, 0.3, 0.2};
        d.power_uav[0][0][n] = 3.0;
        d.power_leo[0][n] = 3.0;
        d.freq_local[0][n] = 5e9;
        d.freq_uav[0][0][n] = 1e9;
        d.freq_leo[0][n] = 4e9;
    }
    return d;
}

inline double uav_rate(const Scenario& s, double p, double h) {
    return s.uav_bandwidth * std::log2(1.0 + p * h / s.uav_noise_power);
}

}  // namespace sagin::testutil
