#include <doctest.h>

#include <cmath>
#include <random>

#include "sagin/fp_transform.hpp"
#include "test_util.hpp"

using namespace sagin;
using namespace sagin::testutil;

namespace {

// Single-cell derived quantities with a prescribed energy.
DerivedQuantities cell_energy(double e) {
    DerivedQuantities q;
    q.e_sum.assign(1, std::vector<double>(1, e));
    return q;
}

}  // namespace

TEST_SUITE("fp_transform") {

TEST_CASE("weight update matches sqrt(D)/E") {
    Scenario s = overhead_scenario();
    const FpWeights w = update_weights(s, cell_energy(150.0));
    CHECK(w.y[0][0] == doctest::Approx(std::sqrt(6e6) / 150.0).epsilon(1e-12));
    CHECK(w.y[0][0] == doctest::Approx(16.330).epsilon(1e-3));

    SUBCASE("zero task bits give zero weight") {
        s.task_bits[0][0] = 0.0;
        CHECK(update_weights(s, cell_energy(150.0)).y[0][0] == 0.0);
    }
    SUBCASE("doubling the energy halves the weight") {
        const FpWeights half = update_weights(s, cell_energy(300.0));
        CHECK(half.y[0][0] == doctest::Approx(0.5 * w.y[0][0]).epsilon(1e-12));
    }
    SUBCASE("non-positive energy is rejected") {
        CHECK_THROWS_AS(update_weights(s, cell_energy(0.0)), InfeasibleDecision);
    }
}

TEST_CASE("surrogate completes the square at the update") {
    const Scenario s = overhead_scenario();
    const DerivedQuantities q = cell_energy(150.0);
    const FpWeights w = update_weights(s, q);
    CHECK(surrogate_value(s, q, w) == doctest::Approx(4e4).epsilon(1e-12));

    FpWeights zero = FpWeights::sized(1, 1);
    CHECK(surrogate_value(s, q, zero) == 0.0);
}

TEST_CASE("surrogate lower-bounds the ratio sum, tight only at the update") {
    const Scenario s = overhead_scenario();
    const DerivedQuantities q = cell_energy(150.0);
    const double phi = 6e6 / 150.0;
    const FpWeights w = update_weights(s, q);
    for (double scale : {0.2, 0.7, 0.999, 1.001, 1.5, 4.0}) {
        FpWeights perturbed = w;
        perturbed.y[0][0] *= scale;
        const double v = surrogate_value(s, q, perturbed);
        CHECK(v <= phi + 1e-9);
        if (std::abs(scale - 1.0) > 1e-3) CHECK(v < phi);
    }
}

TEST_CASE("identity holds on random feasible decisions") {
    const Scenario s = overhead_scenario(2);
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> unif(0.1, 1.0);
    for (int trial = 0; trial < 25; ++trial) {
        Decision d = overhead_decision(s);
        for (int n = 0; n < s.num_slots; ++n) {
            double a = unif(rng), b = unif(rng), c = unif(rng);
            const double total = a + b + c;
            d.offload[0][n] = {a / total, b / total, c / total};
            d.power_uav[0][0][n] = unif(rng) * 3.0;
            d.power_leo[0][n] = unif(rng) * 3.0;
            d.freq_local[0][n] = unif(rng) * 5e9;
            d.freq_uav[0][0][n] = unif(rng) * 4e9;
            d.freq_leo[0][n] = unif(rng) * 4e9;
        }
        const DerivedQuantities q = evaluate(s, d);
        const FpWeights w = update_weights(s, q);
        CHECK(surrogate_value(s, q, w) == doctest::Approx(q.objective).epsilon(1e-9));
    }
}

}  // TEST_SUITE
