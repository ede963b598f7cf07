#include <doctest.h>

#include <cmath>
#include <random>

#include "sagin/opt/lp.hpp"
#include "sagin/sp_offload.hpp"
#include "test_util.hpp"

using namespace sagin;
using namespace sagin::testutil;

namespace {

FpWeights unit_weights(int m, int n) {
    FpWeights w = FpWeights::sized(m, n);
    for (auto& row : w.y)
        for (double& y : row) y = 1.0;
    return w;
}

double grid_best(double w2, double w3, double w4, double cl, double cu, double cs) {
    double best = 1e300;
    for (double a = 0; a <= cl + 1e-12; a += 0.01)
        for (double b = 0; b <= cu + 1e-12 && a + b <= 1 + 1e-12; b += 0.01) {
            const double c = 1.0 - a - b;
            if (c < -1e-12 || c > cs + 1e-12) continue;
            best = std::min(best, w2 * a + w3 * b + w4 * c);
        }
    return best;
}

}  // namespace

TEST_SUITE("sp_offload") {

TEST_CASE("everything goes to the cheapest unconstrained path") {
    // Local at 5 GHz costs 150 J per unit share; UAV is far cheaper.
    Scenario s = overhead_scenario();
    Decision d = overhead_decision(s);
    d.freq_uav[0][0][0] = 9e9;   // cap 1 on the UAV path
    d.freq_leo[0][0] = 9e9;
    SolverSettings settings;
    const OffloadResult r = solve_offload(s, d, unit_weights(1, 1), settings);
    CHECK(r.infeasible_cells.empty());
    // UAV path: 3*6e6/R + 1e-27*(9e9)^2*6e8 ~ 0.517 + huge? kappa f^2 D phi
    // = 1e-27 * 8.1e19 * 6e8 = 48.6 -> local compute (150) still loses.
    DerivedQuantities q;
    link_rates(s, d, q);
    energies(s, d, q);
    const int cheapest = q.w2[0][0] <= q.w3[0][0] && q.w2[0][0] <= q.w4[0][0] ? 0
                         : q.w3[0][0] <= q.w4[0][0]                           ? 1
                                                                              : 2;
    const OffloadSplit& w = r.offload[0][0];
    const double shares[3] = {w.local, w.uav, w.leo};
    CHECK(shares[cheapest] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(w.sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("caps that cannot cover the simplex pin the cell") {
    Scenario s = overhead_scenario();
    Decision d = overhead_decision(s);
    DerivedQuantities q;
    link_rates(s, d, q);
    const double D = 6e6, phi = 100.0;
    // Arrange every path cap at 0.3.
    d.freq_local[0][0] = 0.3 * D * phi / s.slot_duration;
    d.freq_uav[0][0][0] = D * phi / (s.slot_duration / 0.3 - D / q.rate_uav[0][0][0]);
    d.freq_leo[0][0] = D * phi / (s.slot_duration / 0.3 - D / q.rate_leo[0][0]);
    SolverSettings settings;
    const OffloadResult r = solve_offload(s, d, unit_weights(1, 1), settings);
    REQUIRE(r.infeasible_cells.size() == 1);
    CHECK(r.infeasible_cells[0] == std::pair<int, int>{0, 0});
    CHECK(r.offload[0][0].local == doctest::Approx(d.offload[0][0].local));
    CHECK(r.offload[0][0].uav == doctest::Approx(d.offload[0][0].uav));
}

TEST_CASE("slack budget solution equals the cell-wise 3-variable LP") {
    const Scenario s = generate_scenario(3, 2, 3, 140.0, 9);
    Decision d = Decision::sized(3, 2, 3);
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> unif(0.2, 1.0);
    FpWeights w = FpWeights::sized(3, 3);
    for (int k = 0; k < 2; ++k)
        for (int n = 0; n < 3; ++n) {
            const double t = n / 2.0;
            d.trajectories[k][n] = s.uav_start[k] + t * (s.uav_end[k] - s.uav_start[k]);
        }
    for (int m = 0; m < 3; ++m)
        for (int n = 0; n < 3; ++n) {
            d.assoc[m][m % 2][n] = 1;
            d.offload[m][n] = {1.0, 0.0, 0.0};
            for (int k = 0; k < 2; ++k) d.power_uav[m][k][n] = 2.0;
            d.power_leo[m][n] = 2.0;
            d.freq_local[m][n] = 5e9;
            d.freq_uav[m][m % 2][n] = 3e9 * unif(rng);
            d.freq_leo[m][n] = 3e9 * unif(rng);
            w.y[m][n] = 10.0 * unif(rng);
        }
    SolverSettings settings;
    const OffloadLp lp = build_offload_lp(s, d, w, settings);
    const OffloadResult r = solve_offload(s, d, w, settings);
    CHECK(r.infeasible_cells.empty());
    for (int m = 0; m < 3; ++m)
        for (int n = 0; n < 3; ++n) {
            opt::LinearProgram cell = opt::LinearProgram::sized(3, 0, 1);
            const double y2 = w.y[m][n] * w.y[m][n];
            cell.c << y2 * lp.w2[m][n], y2 * lp.w3[m][n], y2 * lp.w4[m][n];
            cell.upper << lp.caps[m][n].local, lp.caps[m][n].uav, lp.caps[m][n].leo;
            cell.a_eq << 1, 1, 1;
            cell.b_eq[0] = 1.0;
            const opt::LpResult ref = opt::solve_lp(cell, 1e-9);
            REQUIRE(ref.status == opt::LpStatus::Optimal);
            const double got = y2 * (lp.w2[m][n] * r.offload[m][n].local +
                                     lp.w3[m][n] * r.offload[m][n].uav +
                                     lp.w4[m][n] * r.offload[m][n].leo);
            CHECK(got == doctest::Approx(ref.objective).epsilon(1e-9));
        }
}

TEST_CASE("weighted energy never increases across the update") {
    const Scenario s = generate_scenario(3, 2, 4, 180.0, 21);
    SolverSettings settings;
    Decision d = Decision::sized(3, 2, 4);
    for (int k = 0; k < 2; ++k)
        for (int n = 0; n < 4; ++n) {
            const double t = n / 3.0;
            d.trajectories[k][n] = s.uav_start[k] + t * (s.uav_end[k] - s.uav_start[k]);
        }
    for (int m = 0; m < 3; ++m)
        for (int n = 0; n < 4; ++n) {
            d.assoc[m][0][n] = 1;
            d.offload[m][n] = {0.6, 0.2, 0.2};
            d.power_uav[m][0][n] = 1.5;
            d.power_uav[m][1][n] = 1.5;
            d.power_leo[m][n] = 1.5;
            d.freq_local[m][n] = 5e9;
            d.freq_uav[m][0][n] = 2.5e9;
            d.freq_leo[m][n] = 2.5e9;
        }
    const FpWeights w = update_weights(s, d);
    auto weighted = [&](const Decision& dd) {
        const DerivedQuantities q = evaluate(s, dd);
        double total = 0;
        for (int m = 0; m < 3; ++m)
            for (int n = 0; n < 4; ++n) total += w.y[m][n] * w.y[m][n] * q.e_sum[m][n];
        return total;
    };
    const double before = weighted(d);
    const OffloadResult r = solve_offload(s, d, w, settings);
    Decision after = d;
    after.offload = r.offload;
    CHECK(weighted(after) <= before * (1.0 + 1e-9));
}

TEST_CASE("grid oracle brackets the LP optimum on random cells") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        const double w2 = 200.0 * unif(rng), w3 = 2.0 * unif(rng), w4 = 4.0 * unif(rng);
        double cl = 0.4 + 0.6 * unif(rng);
        double cu = 0.4 + 0.6 * unif(rng);
        double cs = 0.4 + 0.6 * unif(rng);
        if (cl + cu + cs < 1.0) cl = 1.0;
        opt::LinearProgram cell = opt::LinearProgram::sized(3, 0, 1);
        cell.c << w2, w3, w4;
        cell.upper << cl, cu, cs;
        cell.a_eq << 1, 1, 1;
        cell.b_eq[0] = 1.0;
        const opt::LpResult r = opt::solve_lp(cell, 1e-9);
        REQUIRE(r.status == opt::LpStatus::Optimal);
        const double grid = grid_best(w2, w3, w4, cl, cu, cs);
        CHECK(r.objective <= grid + 1e-9);
        CHECK(r.objective >= grid - 0.02 * std::max(1.0, std::abs(grid)));
    }
}

TEST_CASE("a binding budget is honoured by the coupled LP") {
    Scenario s = overhead_scenario();
    Decision d = overhead_decision(s);
    // At 2 GHz the UAV path is the cheapest; cap its compute energy.
    d.freq_uav[0][0][0] = 2e9;
    const double compute = s.uav_energy_coeff * 4e18 * 6e8;  // omega_u = 1 cost
    s.uav_energy_budget = 0.4 * compute;  // single slot, no propulsion
    SolverSettings settings;
    const OffloadResult r = solve_offload(s, d, unit_weights(1, 1), settings);
    CHECK(r.infeasible_cells.empty());
    CHECK(r.offload[0][0].uav <= 0.4 + 1e-6);
    CHECK(r.offload[0][0].sum() == doctest::Approx(1.0).epsilon(1e-9));
}

}  // TEST_SUITE
