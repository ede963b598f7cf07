#include <doctest.h>

#include <cmath>

#include "sagin/model.hpp"
#include "test_util.hpp"

using namespace sagin;
using namespace sagin::testutil;

TEST_SUITE("model") {

TEST_CASE("channel gain directly under the UAV") {
    const Scenario s = overhead_scenario();
    const Decision d = overhead_decision(s);
    DerivedQuantities q;
    link_rates(s, d, q);
    CHECK(q.gain[0][0][0] == doctest::Approx(1e-10).epsilon(1e-12));
}

TEST_CASE("uplink rate at the power cap") {
    const Scenario s = overhead_scenario();
    const Decision d = overhead_decision(s);
    DerivedQuantities q;
    link_rates(s, d, q);
    const double expected = 1e6 * std::log2(1.0 + 3.0 * 1e-10 / 1e-20);
    CHECK(q.rate_uav[0][0][0] == doctest::Approx(expected).epsilon(1e-12));
    CHECK(q.rate_uav[0][0][0] == doctest::Approx(3.48e7).epsilon(1e-3));
}

TEST_CASE("zero power gives zero rate") {
    const Scenario s = overhead_scenario();
    Decision d = overhead_decision(s);
    d.power_uav[0][0][0] = 0.0;
    d.power_leo[0][0] = 0.0;
    DerivedQuantities q;
    link_rates(s, d, q);
    CHECK(q.rate_uav[0][0][0] == 0.0);
    CHECK(q.rate_leo[0][0] == 0.0);
}

TEST_CASE("path latencies match hand evaluation") {
    const Scenario s = overhead_scenario();
    const Decision d = overhead_decision(s);
    DerivedQuantities q;
    link_rates(s, d, q);
    latencies(s, d, q);
    CHECK(q.lat_local[0][0] == doctest::Approx(0.06).epsilon(1e-12));
    const double rate = q.rate_uav[0][0][0];
    const double expected_uav = 0.3 * 6e6 / rate + 0.3 * 6e6 * 100 / 1e9;
    CHECK(q.lat_uav[0][0] == doctest::Approx(expected_uav).epsilon(1e-12));
    CHECK(q.lat_uav[0][0] == doctest::Approx(0.2317).epsilon(1e-3));
    CHECK(q.lat_sum[0][0] == doctest::Approx(std::max({q.lat_local[0][0], q.lat_uav[0][0],
                                                       q.lat_leo[0][0]})));
}

TEST_CASE("zero share contributes zero latency") {
    const Scenario s = overhead_scenario();
    Decision d = overhead_decision(s);
    d.offload[0][0] = {1.0, 0.0, 0.0};
    d.power_uav[0][0][0] = 0.0;  // unusable, but unused
    d.freq_uav[0][0][0] = 0.0;
    DerivedQuantities q;
    link_rates(s, d, q);
    latencies(s, d, q);
    CHECK(q.lat_uav[0][0] == 0.0);
    CHECK(q.lat_leo[0][0] == 0.0);
}

TEST_CASE("energy breakdown matches hand evaluation") {
    const Scenario s = overhead_scenario();
    Decision d = overhead_decision(s);
    d.offload[0][0] = {1.0, 0.0, 0.0};
    DerivedQuantities q = evaluate(s, d);
    CHECK(q.e_local[0][0] == doctest::Approx(150.0).epsilon(1e-12));

    d = overhead_decision(s);
    q = evaluate(s, d);
    CHECK(q.e_uav_com[0][0][0] == doctest::Approx(0.18).epsilon(1e-12));
    const double tran_time = 0.3 * 6e6 / q.rate_uav[0][0][0];
    CHECK(q.e_uav_tran[0][0] == doctest::Approx(3.0 * tran_time).epsilon(1e-12));
    CHECK(q.e_uav_tran[0][0] == doctest::Approx(0.155).epsilon(1e-2));
}

TEST_CASE("propulsion energy at reference speeds") {
    Scenario s = overhead_scenario(3);
    Decision d = overhead_decision(s);
    d.trajectories[0] = {Vec2(0, 0), Vec2(10, 0), Vec2(20, 0)};
    DerivedQuantities q;
    propulsion(s, d, q);
    CHECK(q.prop_energy[0][1] == doctest::Approx(7.7376).epsilon(1e-9));

    d.trajectories[0] = {Vec2(0, 0), Vec2(50, 0), Vec2(100, 0)};
    propulsion(s, d, q);
    CHECK(q.prop_energy[0][1] == doctest::Approx(767.82).epsilon(1e-4));

    d.trajectories[0] = {Vec2(0, 0), Vec2(0, 0), Vec2(0, 0)};
    propulsion(s, d, q, 0.1);
    CHECK(q.speed[0][1] == doctest::Approx(0.1));
    CHECK(q.prop_energy[0][1] ==
          doctest::Approx(0.00614 * 1e-3 + 15.976 / 0.1).epsilon(1e-12));
}

TEST_CASE("objective is the sum of bit-per-joule ratios") {
    const Scenario s = overhead_scenario();
    Decision d = overhead_decision(s);
    d.offload[0][0] = {1.0, 0.0, 0.0};
    DerivedQuantities q = evaluate(s, d);
    CHECK(q.objective == doctest::Approx(6e6 / 150.0).epsilon(1e-12));
    CHECK(q.objective == doctest::Approx(4e4).epsilon(1e-12));

    // Two identical cells double the objective.
    Scenario s2 = s;
    s2.num_mus = 2;
    s2.mu_positions.push_back(s.mu_positions[0]);
    s2.leo_gain.push_back(s.leo_gain[0]);
    s2.task_bits.push_back(s.task_bits[0]);
    s2.cycles_per_bit.push_back(s.cycles_per_bit[0]);
    Decision d2 = Decision::sized(2, 1, 1);
    for (int m = 0; m < 2; ++m) {
        d2.trajectories = d.trajectories;
        d2.assoc[m][0][0] = 1;
        d2.offload[m][0] = {1.0, 0.0, 0.0};
        d2.freq_local[m][0] = 5e9;
    }
    CHECK(objective(s2, d2) == doctest::Approx(8e4).epsilon(1e-12));
}

TEST_CASE("used path with zero power is infeasible") {
    const Scenario s = overhead_scenario();
    Decision d = overhead_decision(s);
    d.power_uav[0][0][0] = 0.0;  // omega_u = 0.3 still
    CHECK_THROWS_AS(evaluate(s, d), InfeasibleDecision);
}

TEST_CASE("feasibility check reports speed and separation violations") {
    Scenario s = overhead_scenario(2);
    s.num_uavs = 2;
    s.uav_start = {Vec2(0, 0), Vec2(0, 60)};
    s.uav_end = {Vec2(25, 0), Vec2(25, 60)};
    Decision d = Decision::sized(1, 2, 2);
    d.trajectories[0] = {Vec2(0, 0), Vec2(25, 0)};
    d.trajectories[1] = {Vec2(0, 60), Vec2(25, 60)};
    for (int n = 0; n < 2; ++n) {
        d.assoc[0][0][n] = 1;
        d.offload[0][n] = {1.0, 0.0, 0.0};
        d.freq_local[0][n] = 5e9;
    }
    // 25 m/s straight line: clean.
    for (const ConstraintViolation& v : check_feasibility(s, d)) CHECK(v.tag != "17d");

    // 60 m in one slot: residual 10 m/s over the cap.
    Decision fast = d;
    fast.trajectories[0] = {Vec2(0, 0), Vec2(60, 0)};
    bool found = false;
    for (const ConstraintViolation& v : check_feasibility(s, fast))
        if (v.tag == "17d") {
            found = true;
            CHECK(v.residual == doctest::Approx(10.0).epsilon(1e-9));
        }
    CHECK(found);

    // Identical positions: separation breach.
    Decision stacked = d;
    stacked.trajectories[1] = stacked.trajectories[0];
    found = false;
    for (const ConstraintViolation& v : check_feasibility(s, stacked))
        found = found || v.tag == "17c";
    CHECK(found);
}

TEST_CASE("rate is monotone in power and distance") {
    Scenario s = overhead_scenario();
    Decision d = overhead_decision(s);
    DerivedQuantities q;
    double prev = 0.0;
    for (double p : {0.5, 1.0, 2.0, 3.0}) {
        d.power_uav[0][0][0] = p;
        link_rates(s, d, q);
        CHECK(q.rate_uav[0][0][0] > prev);
        prev = q.rate_uav[0][0][0];
    }
    d.power_uav[0][0][0] = 3.0;
    prev = 1e18;
    for (double x : {0.0, 50.0, 200.0, 800.0}) {
        d.trajectories[0][0] = Vec2(x, 0);
        link_rates(s, d, q);
        CHECK(q.rate_uav[0][0][0] < prev);
        prev = q.rate_uav[0][0][0];
    }
}

TEST_CASE("energy additivity and objective recomputation") {
    const Scenario s = overhead_scenario();
    const Decision d = overhead_decision(s);
    const DerivedQuantities q = evaluate(s, d);
    double parts = q.e_local[0][0] + q.e_uav_tran[0][0] + q.e_leo_tran[0][0] +
                   q.e_leo_com[0][0];
    for (int k = 0; k < s.num_uavs; ++k) parts += q.e_uav_com[0][k][0];
    CHECK(q.e_sum[0][0] == doctest::Approx(parts).epsilon(1e-12));
    CHECK(q.objective == doctest::Approx(6e6 / q.e_sum[0][0]).epsilon(1e-12));
}

TEST_CASE("propulsion is numerically convex in speed") {
    const double z1 = 0.00614, z2 = 15.976;
    auto prop = [&](double v) { return z1 * v * v * v + z2 / v; };
    for (double v = 0.5; v < 50.0; v += 0.5) {
        const double h = 0.01 * v;
        CHECK(prop(v - h) - 2 * prop(v) + prop(v + h) > 0.0);
    }
}

}  // TEST_SUITE
