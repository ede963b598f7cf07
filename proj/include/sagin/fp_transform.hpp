#pragma once

// Quadratic transform for the sum-of-ratios objective: the surrogate
// 2 y sqrt(D) - y^2 E^sum replaces each ratio D / E^sum and is tight at
// y = sqrt(D) / E^sum.

#include <vector>

#include "sagin/model.hpp"
#include "sagin/scenario.hpp"

namespace sagin {

struct FpWeights {
    std::vector<std::vector<double>> y;  // [m][n], >= 0

    static FpWeights sized(int mus, int slots) {
        FpWeights w;
        w.y.assign(mus, std::vector<double>(slots, 0.0));
        return w;
    }
};

// y_{m,n} = sqrt(D_m[n]) / E^sum_m[n]; cells without task bits get y = 0.
// Throws InfeasibleDecision when a cell with task bits has E^sum <= 0.
FpWeights update_weights(const Scenario& s, const Decision& d);
FpWeights update_weights(const Scenario& s, const DerivedQuantities& q);

// sum_{m,n} (2 y sqrt(D) - y^2 E^sum).
double surrogate_value(const Scenario& s, const Decision& d, const FpWeights& w);
double surrogate_value(const Scenario& s, const DerivedQuantities& q, const FpWeights& w);

}  // namespace sagin
