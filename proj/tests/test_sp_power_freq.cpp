#include <doctest.h>

#include <cmath>
#include <random>

#include "sagin/sp_power_freq.hpp"
#include "test_util.hpp"

using namespace sagin;
using namespace sagin::testutil;

namespace {

double weighted_energy(const Scenario& s, const Decision& d, const FpWeights& w) {
    const DerivedQuantities q = evaluate(s, d);
    double total = 0;
    for (int m = 0; m < s.num_mus; ++m)
        for (int n = 0; n < s.num_slots; ++n)
            total += w.y[m][n] * w.y[m][n] * q.e_sum[m][n];
    return total;
}

}  // namespace

TEST_SUITE("sp_power_freq") {

TEST_CASE("xi lower bound and cone value at the power cap") {
    // 1/ln(1 + 3 W * 1e-10 / 1e-20).
    const double xi_min = 1.0 / std::log1p(3e10);
    CHECK(xi_min == doctest::Approx(0.04145).epsilon(1e-3));
    const double cone = xi_min * std::expm1(1.0 / xi_min);
    CHECK(cone == doctest::Approx(1.2435e9).epsilon(1e-3));
}

TEST_CASE("power recovery inverts the xi map") {
    const Scenario s = overhead_scenario();
    PowerFreqAux aux = PowerFreqAux::sized(1, 1);
    aux.gain_uav[0][0] = 1e-10;
    aux.assoc_k[0][0] = 0;

    SUBCASE("xi at its lower bound recovers the cap") {
        aux.xi_uav[0][0] = 1.0 / std::log1p(3e10);
        const RecoveredPowers p = recover_powers(s, aux);
        CHECK(p.p_uav[0][0] == doctest::Approx(3.0).epsilon(1e-9));
    }
    SUBCASE("large xi behaves like sigma^2/(h xi)") {
        aux.xi_uav[0][0] = 100.0;
        const RecoveredPowers p = recover_powers(s, aux);
        CHECK(p.p_uav[0][0] ==
              doctest::Approx(1e-20 / 1e-10 / 100.0).epsilon(1e-2));
    }
    SUBCASE("round trip p -> xi -> p") {
        std::mt19937_64 rng(3);
        for (int i = 0; i < 20; ++i) {
            const double p0 = 3.0 * (i + 1) / 21.0;
            aux.xi_uav[0][0] = 1.0 / std::log1p(p0 * 1e-10 / 1e-20);
            const RecoveredPowers p = recover_powers(s, aux);
            CHECK(p.p_uav[0][0] == doctest::Approx(p0).epsilon(1e-10));
        }
        (void)rng;
    }
}

TEST_CASE("local-only cell lands on its latency lower bound") {
    Scenario s = overhead_scenario();
    Decision d = overhead_decision(s);
    d.offload[0][0] = {1.0, 0.0, 0.0};
    const FpWeights w = update_weights(s, d);
    SolverSettings settings;
    const PowerFreqResult r = solve_power_freq(s, d, w, settings);
    REQUIRE(r.status == PowerFreqStatus::Ok);
    // f_L -> omega D phi / tau = 6e8; energy is increasing in f.
    CHECK(r.decision.freq_local[0][0] == doctest::Approx(6e8).epsilon(1e-3));
    CHECK(r.decision.power_uav[0][0][0] == 0.0);
    CHECK(r.decision.power_leo[0][0] == 0.0);
}

TEST_CASE("proposition 1: p / log2(1 + B p) has non-positive curvature") {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> unif(0.1, 1e12);
    for (int trial = 0; trial < 8; ++trial) {
        const double b = unif(rng);
        auto f = [b](double p) { return p / std::log2(1.0 + b * p); };
        for (double p = 0.05; p <= 3.0; p += 0.05) {
            const double h = 1e-4 * p;
            const double second = f(p - h) - 2.0 * f(p) + f(p + h);
            CHECK(second <= 1e-12 * std::abs(f(p)));
        }
    }
}

TEST_CASE("proposition 2: xi(e^{1/xi}-1) has positive curvature on a log grid") {
    auto g = [](long double xi) { return xi * std::expm1l(1.0L / xi); };
    for (double e = -3.0; e <= 3.0; e += 0.05) {
        const long double xi = std::pow(10.0L, static_cast<long double>(e));
        const long double h = 1e-3L * xi;
        const long double second = g(xi - h) - 2.0L * g(xi) + g(xi + h);
        CHECK(static_cast<double>(second) > 0.0);
    }
}

TEST_CASE("full solve: KKT, monotonicity, tight cone rows, transmit floor") {
    const Scenario s = generate_scenario(3, 2, 3, 140.0, 77);
    SolverSettings settings;
    Decision d = Decision::sized(3, 2, 3);
    for (int k = 0; k < 2; ++k)
        for (int n = 0; n < 3; ++n) {
            const double t = n / 2.0;
            d.trajectories[k][n] = s.uav_start[k] + t * (s.uav_end[k] - s.uav_start[k]);
        }
    for (int m = 0; m < 3; ++m)
        for (int n = 0; n < 3; ++n) {
            d.assoc[m][m % 2][n] = 1;
            d.offload[m][n] = {0.5, 0.3, 0.2};
            d.power_uav[m][m % 2][n] = 1.5;
            d.power_leo[m][n] = 1.5;
            d.freq_local[m][n] = 5e9;
            d.freq_uav[m][m % 2][n] = 3e9;
            d.freq_leo[m][n] = 3e9;
        }
    const FpWeights w = update_weights(s, d);
    const double before = weighted_energy(s, d, w);
    const PowerFreqResult r = solve_power_freq(s, d, w, settings);
    REQUIRE(r.status == PowerFreqStatus::Ok);
    CHECK(r.pinned_cells.empty());
    CHECK(r.kkt_residual < 1e-6);
    CHECK(r.objective <= before * (1.0 + 1e-7));

    DerivedQuantities q;
    link_rates(s, r.decision, q);
    for (int m = 0; m < 3; ++m)
        for (int n = 0; n < 3; ++n) {
            // Cone rows tight at active links.
            const double xi_u = r.aux.xi_uav[m][n];
            REQUIRE(xi_u > 0);
            const double cone = xi_u * std::expm1(1.0 / xi_u);
            CHECK(r.aux.gamma_uav[m][n] ==
                  doctest::Approx(cone).epsilon(1e-6));
            const double xi_s = r.aux.xi_leo[m][n];
            REQUIRE(xi_s > 0);
            CHECK(r.aux.gamma_leo[m][n] ==
                  doctest::Approx(xi_s * std::expm1(1.0 / xi_s)).epsilon(1e-6));

            // Transmit-energy floor: ln2 sigma^2 w D / (h B) per active link.
            const int k = r.aux.assoc_k[m][n];
            const double h = r.aux.gain_uav[m][n];
            const double rate = q.rate_uav[m][k][n];
            REQUIRE(rate > 0);
            const double e_tran =
                r.decision.power_uav[m][k][n] * d.offload[m][n].uav * s.task_bits[m][n] / rate;
            const double floor = std::log(2.0) * s.uav_noise_power *
                                 d.offload[m][n].uav * s.task_bits[m][n] /
                                 (h * s.uav_bandwidth);
            CHECK(e_tran >= floor * (1.0 - 1e-9));

            // Latency satisfied with the recovered decision.
            const double lat = d.offload[m][n].uav * s.task_bits[m][n] / rate +
                               d.offload[m][n].uav * s.task_bits[m][n] *
                                   s.cycles_per_bit[m][n] / r.decision.freq_uav[m][k][n];
            CHECK(lat <= s.slot_duration + 1e-8);
        }
}

TEST_CASE("analytic gradients of the cell program match finite differences") {
    const Scenario s = generate_scenario(2, 2, 2, 100.0, 5);
    SolverSettings settings;
    Decision d = Decision::sized(2, 2, 2);
    for (int k = 0; k < 2; ++k)
        for (int n = 0; n < 2; ++n)
            d.trajectories[k][n] = n == 0 ? s.uav_start[k] : s.uav_end[k];
    for (int m = 0; m < 2; ++m)
        for (int n = 0; n < 2; ++n) {
            d.assoc[m][0][n] = 1;
            d.offload[m][n] = {0.4, 0.35, 0.25};
            d.power_uav[m][0][n] = 1.5;
            d.power_leo[m][n] = 1.5;
            d.freq_local[m][n] = 5e9;
            d.freq_uav[m][0][n] = 4e9;
            d.freq_leo[m][n] = 4e9;
        }
    const FpWeights w = update_weights(s, d);
    const opt::SmoothConvexProgram prog =
        build_power_freq_cell_program(s, d, w, 0, 0, settings);
    REQUIRE(prog.num_vars > 0);
    const opt::GradientCheck gc = opt::check_gradients(prog, 20, 11);
    CHECK(gc.points_checked == 20);
    CHECK(gc.max_rel_error < 1e-4);
}

TEST_CASE("infeasible propulsion budget is reported") {
    Scenario s = generate_scenario(2, 1, 4, 120.0, 3);
    s.uav_energy_budget = 1.0;  // straight flight alone exceeds this
    SolverSettings settings;
    Decision d = Decision::sized(2, 1, 4);
    for (int n = 0; n < 4; ++n) {
        const double t = n / 3.0;
        d.trajectories[0][n] = s.uav_start[0] + t * (s.uav_end[0] - s.uav_start[0]);
    }
    for (int m = 0; m < 2; ++m)
        for (int n = 0; n < 4; ++n) {
            d.assoc[m][0][n] = 1;
            d.offload[m][n] = {0.5, 0.3, 0.2};
            d.power_uav[m][0][n] = 1.5;
            d.power_leo[m][n] = 1.5;
            d.freq_local[m][n] = 5e9;
            d.freq_uav[m][0][n] = 3e9;
            d.freq_leo[m][n] = 3e9;
        }
    const FpWeights w = update_weights(s, d);
    const PowerFreqResult r = solve_power_freq(s, d, w, settings);
    CHECK(r.status == PowerFreqStatus::InfeasibleBudget);
    CHECK_FALSE(r.pinned_cells.empty());
}

}  // TEST_SUITE
