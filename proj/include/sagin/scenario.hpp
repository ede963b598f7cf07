#pragma once

// Problem instances for the space-air-ground MEC simulator: static geometry,
// channel, task, compute and budget parameters, plus solver knobs.
// All quantities are linear SI (watts, hertz, joules, meters, seconds);
// dB-style inputs are converted once at load/generation time.

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace sagin {

using Vec2 = Eigen::Vector2d;

struct Scenario {
    int num_mus = 0;    // M
    int num_uavs = 0;   // K
    int num_slots = 0;  // N

    double slot_duration = 1.0;  // tau, s

    double uav_altitude = 100.0;       // H, m
    double min_uav_separation = 50.0;  // d_min, m
    double max_uav_speed = 50.0;       // V_max, m/s
    double propulsion_c1 = 0.00614;    // zeta1, J s^2 / m^3
    double propulsion_c2 = 15.976;     // zeta2, J m / s

    double ref_channel_gain = 1e-6;  // beta0 at 1 m, linear (-60 dB)
    double uav_noise_power = 1e-20;  // sigma^2_UAV, W (-170 dBm)
    double leo_noise_power = 1e-20;  // sigma^2_LEO, W (-170 dBm)
    std::vector<double> leo_gain;    // |g_{m,LEO}|^2 per MU, linear

    double uav_bandwidth = 1e6;  // B_{m,k}, Hz per (m,k) pair
    double leo_bandwidth = 1e6;  // B_LEO, Hz

    std::vector<Vec2> mu_positions;  // s_m, m (static over the horizon)
    std::vector<Vec2> uav_start;     // q_{k,I}, m
    std::vector<Vec2> uav_end;       // q_{k,F}, m

    std::vector<std::vector<double>> task_bits;       // D_m[n], bits, [m][n]
    std::vector<std::vector<double>> cycles_per_bit;  // phi_m[n], [m][n]

    double mu_max_freq = 5e9;   // F^L_max, cycles/s
    double uav_max_freq = 9e9;  // F^U_max per UAV, cycles/s
    double leo_max_freq = 9e9;  // F^S_max, cycles/s

    double mu_energy_coeff = 1e-26;   // kappa_L, J s^2 / cycle^3
    double uav_energy_coeff = 1e-27;  // kappa_U
    double leo_energy_coeff = 1e-27;  // kappa_S

    double max_power_uav_link = 3.0;  // P^U_max, W
    double max_power_leo_link = 3.0;  // P^S_max, W

    double uav_energy_budget = 0.0;  // E^UAV_max, J (per UAV)

    double area_side = 1000.0;  // deployment square side, m

    double period() const { return slot_duration * num_slots; }
};

// Knobs for the alternating-optimization driver and the inner solvers.
struct BarrierParams {
    double initial_weight = 1.0;    // first barrier weight t0
    double multiplier = 30.0;       // outer t growth factor
    double newton_tolerance = 1e-10;  // inner stop on lambda^2/2
    int max_newton_steps = 60;
    double gap_tolerance = 1e-8;    // stop outer when m_ineq/t < this
};

struct SolverSettings {
    double ao_tolerance = 1e-3;  // epsilon on relative objective change
    int ao_max_iters = 50;       // l_max
    int sca_max_iters = 6;
    double sca_tolerance = 1e-4;
    BarrierParams barrier_params;
    double lp_tolerance = 1e-9;
    double bnb_gap_tolerance = 1e-9;
    double min_speed_floor = 0.1;  // m/s, guards zeta2/v at hover
    std::uint64_t rng_seed = 0;
    // Distance-proxy row direction in the trajectory subproblem:
    // "printed" keeps the linearized upper bound on the squared-distance
    // proxy, "conservative" uses the convex row dist^2 <= S instead.
    std::string sp4_distance_mode = "printed";
};

struct Violation {
    std::string field;    // offending field or constraint
    std::string message;  // bound that failed, with indices
};

// Draws a full instance: MU positions uniform in the square, task sizes in
// [5.5, 6.5] Mbit, LEO gains uniform in [10^0.5, 10^1.0] linear, all other
// fields at their defaults, UAV endpoints on opposite edges of the square.
// Deterministic in the seed. Throws std::invalid_argument when the
// straight-line flight cannot meet the speed bound or the endpoints cannot
// honour the separation minimum.
Scenario generate_scenario(int mus, int uavs, int slots, double area,
                           std::uint64_t seed);

// Empty result iff every Scenario invariant holds.
std::vector<Violation> validate_scenario(const Scenario& s);

// Scenario (and optionally embedded solver settings) as one JSON document,
// key names identical to the field names.
std::string scenario_to_json(const Scenario& s, const SolverSettings* settings = nullptr);
Scenario scenario_from_json(const std::string& text, SolverSettings* settings_out = nullptr);

void save_scenario(const Scenario& s, const std::string& path,
                   const SolverSettings* settings = nullptr);
Scenario load_scenario(const std::string& path, SolverSettings* settings_out = nullptr);

}  // namespace sagin
