#include <doctest.h>

#include <cmath>

#include "sagin/ao_driver.hpp"
#include "sagin/report_io.hpp"

using namespace sagin;

TEST_SUITE("ao_driver") {

TEST_CASE("initial point is feasible on the default geometry") {
    const Scenario s = generate_scenario(8, 2, 40, 1000.0, 7);
    SolverSettings settings;
    const Decision d = initial_point(s, settings);
    CHECK(check_feasibility(s, d, 1e-9).empty());
}

TEST_CASE("oversized tasks admit no feasible start") {
    Scenario s = generate_scenario(2, 1, 4, 120.0, 3);
    for (auto& row : s.task_bits)
        for (double& d : row) d = 1e12;  // no path fits inside the slot
    SolverSettings settings;
    CHECK_THROWS_AS(initial_point(s, settings), NoFeasibleStart);
}

TEST_CASE("a single UAV takes every association") {
    const Scenario s = generate_scenario(4, 1, 8, 300.0, 2);
    SolverSettings settings;
    const Decision d = initial_point(s, settings);
    for (int m = 0; m < 4; ++m)
        for (int n = 0; n < 8; ++n) CHECK(d.assoc[m][0][n] == 1);
}

TEST_CASE("desk-scale proposed run converges with a monotone trace") {
    const Scenario s = generate_scenario(4, 2, 8, 300.0, 7);
    SolverSettings settings;
    const RunReport report = run_ao(s, {}, settings);
    CHECK(report.termination == Termination::Converged);
    CHECK(static_cast<int>(report.trace.size()) - 1 <= settings.ao_max_iters);
    for (std::size_t i = 1; i < report.trace.size(); ++i) {
        const double prev = report.trace[i - 1].phi;
        CHECK(report.trace[i].phi >= prev * (1.0 - 1e-6));
    }
    // Residuals stay inside the additive feasibility tolerance.
    for (const IterationRecord& rec : report.trace) CHECK(rec.max_residual <= 1e-6);
    // The surrogate never exceeds the objective it bounds.
    for (const IterationRecord& rec : report.trace)
        CHECK(rec.surrogate <= rec.phi * (1.0 + 1e-9) + 1e-9);
}

TEST_CASE("removing the UAV tier costs energy efficiency") {
    const Scenario s = generate_scenario(4, 2, 8, 300.0, 7);
    SolverSettings settings;
    const RunReport proposed = run_ao(s, {}, settings);
    SchemeSpec ls;
    ls.scheme = Scheme::LsOffloading;
    const RunReport baseline = run_ao(s, ls, settings);
    CHECK(baseline.trace.back().phi < proposed.trace.back().phi);
    // No UAV share anywhere in the baseline.
    for (int m = 0; m < 4; ++m)
        for (int n = 0; n < 8; ++n)
            CHECK(baseline.final_decision.offload[m][n].uav == 0.0);
}

TEST_CASE("zero iteration budget reports the initial point only") {
    const Scenario s = generate_scenario(3, 2, 6, 250.0, 5);
    SolverSettings settings;
    settings.ao_max_iters = 0;
    const RunReport report = run_ao(s, {}, settings);
    CHECK(report.termination == Termination::MaxIters);
    REQUIRE(report.trace.size() == 1);
    CHECK(report.trace[0].iteration == 0);
    CHECK(report.trace[0].phi > 0.0);
    CHECK(report.trace[0].surrogate == doctest::Approx(report.trace[0].phi).epsilon(1e-9));
}

TEST_CASE("identical inputs produce identical reports") {
    const Scenario s = generate_scenario(3, 2, 6, 250.0, 9);
    SolverSettings settings;
    settings.ao_max_iters = 6;
    const RunReport a = run_ao(s, {}, settings);
    const RunReport b = run_ao(s, {}, settings);
    CHECK(report_to_json(a) == report_to_json(b));
}

TEST_CASE("per-block deltas never dip beyond the tolerated slack") {
    const Scenario s = generate_scenario(4, 2, 8, 300.0, 11);
    SolverSettings settings;
    settings.ao_max_iters = 10;
    const RunReport report = run_ao(s, {}, settings);
    for (const IterationRecord& rec : report.trace) {
        const double slack = 1e-6 * std::max(1.0, std::abs(rec.phi));
        CHECK(rec.d_sp1 >= -slack);
        CHECK(rec.d_sp2 >= -slack);
        CHECK(rec.d_sp3 >= -slack);
        CHECK(rec.d_sp4 >= -slack);
    }
}

TEST_CASE("fixed-trajectory scheme never moves the straight line") {
    const Scenario s = generate_scenario(3, 2, 6, 250.0, 13);
    SolverSettings settings;
    settings.ao_max_iters = 4;
    SchemeSpec spec;
    spec.scheme = Scheme::FixedTrajectory;
    const RunReport report = run_ao(s, spec, settings);
    for (int k = 0; k < 2; ++k)
        for (int n = 0; n < 6; ++n) {
            const double t = n / 5.0;
            const Vec2 straight = s.uav_start[k] + t * (s.uav_end[k] - s.uav_start[k]);
            CHECK((report.final_decision.trajectories[k][n] - straight).norm() < 1e-9);
        }
}

TEST_CASE("fixed-allocation scheme pins the split") {
    const Scenario s = generate_scenario(3, 2, 6, 250.0, 13);
    SolverSettings settings;
    settings.ao_max_iters = 4;
    SchemeSpec spec;
    spec.scheme = Scheme::FixedAllocation;
    const RunReport report = run_ao(s, spec, settings);
    const Decision init = initial_point(s, spec, settings);
    for (int m = 0; m < 3; ++m)
        for (int n = 0; n < 6; ++n) {
            CHECK(report.final_decision.offload[m][n].local ==
                  doctest::Approx(init.offload[m][n].local));
            CHECK(report.final_decision.offload[m][n].uav ==
                  doctest::Approx(init.offload[m][n].uav));
        }
}

TEST_CASE("single-uav scheme reduces the fleet") {
    const Scenario s = generate_scenario(3, 2, 6, 250.0, 15);
    SolverSettings settings;
    settings.ao_max_iters = 3;
    SchemeSpec spec;
    spec.scheme = Scheme::SingleUav;
    const RunReport report = run_ao(s, spec, settings);
    CHECK(report.final_decision.trajectories.size() == 1);
}

}  // TEST_SUITE
