#include "sagin/fp_transform.hpp"

#include <cmath>
#include <string>

namespace sagin {

FpWeights update_weights(const Scenario& s, const DerivedQuantities& q) {
    FpWeights w = FpWeights::sized(s.num_mus, s.num_slots);
    for (int m = 0; m < s.num_mus; ++m)
        for (int n = 0; n < s.num_slots; ++n) {
            const double D = s.task_bits[m][n];
            if (D <= 0) continue;
            const double e = q.e_sum[m][n];
            if (e <= 0)
                throw InfeasibleDecision("update_weights: non-positive E^sum at m=" +
                                         std::to_string(m) + ",n=" + std::to_string(n));
            w.y[m][n] = std::sqrt(D) / e;
        }
    return w;
}

FpWeights update_weights(const Scenario& s, const Decision& d) {
    return update_weights(s, evaluate(s, d));
}

double surrogate_value(const Scenario& s, const DerivedQuantities& q, const FpWeights& w) {
    double total = 0.0;
    for (int m = 0; m < s.num_mus; ++m)
        for (int n = 0; n < s.num_slots; ++n) {
            const double y = w.y[m][n];
            total += 2.0 * y * std::sqrt(s.task_bits[m][n]) - y * y * q.e_sum[m][n];
        }
    return total;
}

double surrogate_value(const Scenario& s, const Decision& d, const FpWeights& w) {
    return surrogate_value(s, evaluate(s, d), w);
}

}  // namespace sagin
