#pragma once

// Physical and cost model: kinematics, channels, rates, latencies, energies,
// and the bit/J objective for a given (Scenario, Decision).
//
// Zero-share convention: a path with offload fraction 0 contributes zero
// latency and zero energy, and its rate/frequency need not be usable.

#include <stdexcept>
#include <string>
#include <vector>

#include "sagin/scenario.hpp"

namespace sagin {

// Offload fractions below this are treated as an unused path.
inline constexpr double kZeroShare = 1e-12;

struct InfeasibleDecision : std::runtime_error {
    explicit InfeasibleDecision(const std::string& what) : std::runtime_error(what) {}
};

struct OffloadSplit {
    double local = 0.0, uav = 0.0, leo = 0.0;  // omega^L, omega^U, omega^S
    double sum() const { return local + uav + leo; }
};

// Full variable set X = {Q, P, Omega, F, alpha}. Canonical form keeps
// freq_uav at 0 for non-associated pairs; transmit powers of non-associated
// pairs retain their last value and serve as candidate-costing inputs.
struct Decision {
    std::vector<std::vector<Vec2>> trajectories;              // [k][n]
    std::vector<std::vector<std::vector<std::uint8_t>>> assoc;  // [m][k][n]
    std::vector<std::vector<OffloadSplit>> offload;           // [m][n]
    std::vector<std::vector<std::vector<double>>> power_uav;  // [m][k][n], W
    std::vector<std::vector<double>> power_leo;               // [m][n], W
    std::vector<std::vector<double>> freq_local;              // [m][n], cycles/s
    std::vector<std::vector<std::vector<double>>> freq_uav;   // [m][k][n]
    std::vector<std::vector<double>> freq_leo;                // [m][n]

    static Decision sized(int mus, int uavs, int slots);

    // Index of the associated UAV for (m, n), or -1 when no alpha is set.
    int assoc_of(int m, int n) const;
};

struct DerivedQuantities {
    // Kinematics; slot 0 carries no movement, entries there are 0.
    std::vector<std::vector<double>> speed;        // [k][n], m/s (clamped)
    std::vector<std::vector<double>> prop_energy;  // [k][n], J

    std::vector<std::vector<std::vector<double>>> gain;      // h_{m,k}[n]
    std::vector<std::vector<std::vector<double>>> rate_uav;  // R_{m,k}[n], bit/s
    std::vector<std::vector<double>> rate_leo;               // R_{m,LEO}[n]

    std::vector<std::vector<double>> lat_local, lat_uav, lat_leo, lat_sum;  // [m][n], s

    std::vector<std::vector<double>> e_local;     // [m][n], J
    std::vector<std::vector<double>> e_uav_tran;  // [m][n]
    std::vector<std::vector<std::vector<double>>> e_uav_com;  // [m][k][n]
    std::vector<std::vector<double>> e_leo_tran;  // [m][n]
    std::vector<std::vector<double>> e_leo_com;   // [m][n]
    std::vector<std::vector<double>> e_sum;       // [m][n]

    // Subproblem coefficients, association-weighted where alpha appears.
    std::vector<std::vector<double>> w1, w2, w3, w4, w5, w6;  // [m][n]

    double objective = 0.0;  // Phi, bit/J
};

struct ConstraintViolation {
    std::string tag;      // "17b".."17n", "17p"
    std::string detail;   // indices involved
    double residual = 0;  // positive amount by which the bound fails
};

// Channel gains and link rates for the current trajectories and powers.
// Rates are 0 wherever the corresponding transmit power is 0.
void link_rates(const Scenario& s, const Decision& d, DerivedQuantities& q);

// Per-(m,n) path latencies and their max. Throws InfeasibleDecision when a
// used path has zero rate or zero frequency.
void latencies(const Scenario& s, const Decision& d, DerivedQuantities& q);

// Per-(m,n) energy breakdown, E^sum, and the W coefficients.
void energies(const Scenario& s, const Decision& d, DerivedQuantities& q);

// Per-(k,n) speeds and propulsion energy, speeds clamped below at the floor.
void propulsion(const Scenario& s, const Decision& d, DerivedQuantities& q,
                double min_speed_floor = 0.1);

// Full evaluation: kinematics, links, latencies, energies and Phi.
// Throws InfeasibleDecision if any cell with task bits has E^sum <= 0.
DerivedQuantities evaluate(const Scenario& s, const Decision& d,
                           double min_speed_floor = 0.1);

// Phi = sum_{m,n} D_m[n] / E^sum_m[n]; cells without task bits contribute 0.
double objective(const Scenario& s, const Decision& d, DerivedQuantities* out = nullptr,
                 double min_speed_floor = 0.1);

// Every constraint of P1, additive tolerance tol in natural units.
std::vector<ConstraintViolation> check_feasibility(const Scenario& s, const Decision& d,
                                                   double tol = 1e-6,
                                                   double min_speed_floor = 0.1);

}  // namespace sagin
