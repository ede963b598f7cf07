#include "sagin/sp_association.hpp"

#include <array>
#include <cmath>
#include <limits>

#include "sagin/opt/bnb.hpp"

namespace sagin {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

AssociationCosts build_association_costs(const Scenario& s, const Decision& d,
                                         const FpWeights& w) {
    const int M = s.num_mus, K = s.num_uavs, N = s.num_slots;
    DerivedQuantities q;
    link_rates(s, d, q);

    AssociationCosts out;
    out.cost.assign(M, std::vector<std::vector<double>>(K, std::vector<double>(N, 0.0)));
    out.latency_ok.assign(
        M, std::vector<std::vector<std::uint8_t>>(K, std::vector<std::uint8_t>(N, 1)));
    out.compute_energy.assign(M, std::vector<std::vector<double>>(K, std::vector<double>(N, 0.0)));
    out.candidate_freq.assign(M, std::vector<std::vector<double>>(K, std::vector<double>(N, 0.0)));

    const double fair_share = s.uav_max_freq / s.num_mus;
    for (int m = 0; m < M; ++m) {
        for (int n = 0; n < N; ++n) {
            const double omega = d.offload[m][n].uav;
            const double D = s.task_bits[m][n];
            const double phi = s.cycles_per_bit[m][n];
            const double y2 = w.y[m][n] * w.y[m][n];
            for (int k = 0; k < K; ++k) {
                const bool assoc = d.assoc[m][k][n] != 0;
                const double f = assoc ? d.freq_uav[m][k][n] : fair_share;
                out.candidate_freq[m][k][n] = f;
                if (omega <= kZeroShare || D <= 0) continue;  // cost 0, feasible
                const double r = q.rate_uav[m][k][n];
                if (r <= 0 || f <= 0) {
                    out.cost[m][k][n] = kInf;
                    out.latency_ok[m][k][n] = 0;
                    continue;
                }
                const double p = d.power_uav[m][k][n];
                const double compute = s.uav_energy_coeff * f * f * omega * D * phi;
                out.cost[m][k][n] = y2 * (p * omega * D / r + compute);
                out.compute_energy[m][k][n] = compute;
                const double lat = omega * D / r + omega * D * phi / f;
                out.latency_ok[m][k][n] = lat <= s.slot_duration + 1e-9 ? 1 : 0;
            }
        }
    }
    return out;
}

AssociationResult solve_association(const Scenario& s, const Decision& d,
                                    const FpWeights& w, const SolverSettings& settings) {
    const int M = s.num_mus, K = s.num_uavs, N = s.num_slots;
    const AssociationCosts costs = build_association_costs(s, d, w);

    DerivedQuantities q;
    propulsion(s, d, q, settings.min_speed_floor);
    std::vector<double> budget(K, 0.0);
    for (int k = 0; k < K; ++k) {
        budget[k] = s.uav_energy_budget;
        for (int n = 0; n < N; ++n) budget[k] -= q.prop_energy[k][n];
    }

    AssociationResult res;
    res.assoc = d.assoc;

    // Tie preference toward the lowest UAV index.
    double max_cost = 0.0;
    for (int m = 0; m < M; ++m)
        for (int k = 0; k < K; ++k)
            for (int n = 0; n < N; ++n)
                if (std::isfinite(costs.cost[m][k][n]))
                    max_cost = std::max(max_cost, costs.cost[m][k][n]);
    const double tie_eps = 1e-10 * (1.0 + max_cost);

    // Rows with no latency-feasible candidate stay at the previous alpha and
    // consume their budget as a constant.
    std::vector<std::vector<std::uint8_t>> pinned(M, std::vector<std::uint8_t>(N, 0));
    for (int m = 0; m < M; ++m)
        for (int n = 0; n < N; ++n) {
            bool any = false;
            for (int k = 0; k < K; ++k) any = any || costs.latency_ok[m][k][n];
            if (any) continue;
            pinned[m][n] = 1;
            res.pinned_rows.emplace_back(m, n);
            const int prev = d.assoc_of(m, n);
            if (prev >= 0) {
                budget[prev] -= costs.compute_energy[m][prev][n];
                if (!costs.latency_ok[m][prev][n]) res.infeasible = true;
            } else {
                res.infeasible = true;
            }
        }

    // Independent per-row argmin; keep it when every budget row stays slack.
    std::vector<std::vector<int>> pick(M, std::vector<int>(N, -1));
    std::vector<double> used(K, 0.0);
    for (int m = 0; m < M; ++m)
        for (int n = 0; n < N; ++n) {
            if (pinned[m][n]) {
                pick[m][n] = d.assoc_of(m, n);
                continue;
            }
            int best = -1;
            double best_cost = kInf;
            for (int k = 0; k < K; ++k) {
                if (!costs.latency_ok[m][k][n]) continue;
                const double c = costs.cost[m][k][n] + tie_eps * k;
                if (c < best_cost) {
                    best_cost = c;
                    best = k;
                }
            }
            pick[m][n] = best;
            used[best] += costs.compute_energy[m][best][n];
        }
    bool budgets_ok = true;
    for (int k = 0; k < K; ++k) budgets_ok = budgets_ok && used[k] <= budget[k] + 1e-9;

    if (!budgets_ok) {
        // Coupled case: branch-and-bound over the assignment LP.
        std::vector<std::array<int, 3>> vars;  // (m, n, k)
        std::vector<std::vector<std::vector<int>>> var_of(
            M, std::vector<std::vector<int>>(K, std::vector<int>(N, -1)));
        std::vector<std::pair<int, int>> rows;
        for (int m = 0; m < M; ++m)
            for (int n = 0; n < N; ++n) {
                if (pinned[m][n]) continue;
                rows.emplace_back(m, n);
                for (int k = 0; k < K; ++k) {
                    if (!costs.latency_ok[m][k][n]) continue;
                    var_of[m][k][n] = static_cast<int>(vars.size());
                    vars.push_back({m, n, k});
                }
            }
        const int nv = static_cast<int>(vars.size());
        opt::BnbProblem bp;
        bp.relaxation = opt::LinearProgram::sized(nv, K, static_cast<int>(rows.size()));
        bp.gap_tolerance = settings.bnb_gap_tolerance;
        bp.lp_tolerance = settings.lp_tolerance;
        for (int j = 0; j < nv; ++j) {
            const auto [m, n, k] = vars[j];
            bp.relaxation.c[j] = costs.cost[m][k][n] + tie_eps * k;
            bp.relaxation.upper[j] = 1.0;
            bp.relaxation.a_ineq(k, j) = costs.compute_energy[m][k][n];
            bp.binary_indices.push_back(j);
        }
        for (int k = 0; k < K; ++k) bp.relaxation.b_ineq[k] = budget[k];
        for (std::size_t r = 0; r < rows.size(); ++r) {
            const auto [m, n] = rows[r];
            for (int k = 0; k < K; ++k)
                if (var_of[m][k][n] >= 0) bp.relaxation.a_eq(static_cast<int>(r), var_of[m][k][n]) = 1.0;
            bp.relaxation.b_eq[static_cast<int>(r)] = 1.0;
        }
        const opt::BnbResult bres = opt::solve_bnb(bp);
        res.bnb_nodes = bres.nodes_explored;
        if (bres.status != opt::BnbStatus::Optimal) {
            // No assignment satisfies the budget: keep the previous alpha.
            res.infeasible = true;
            res.assoc = d.assoc;
            res.cost_objective = kInf;
            return res;
        }
        for (int j = 0; j < nv; ++j) {
            const auto [m, n, k] = vars[j];
            if (bres.x[j] > 0.5) pick[m][n] = k;
        }
    }

    double total = 0.0;
    for (int m = 0; m < M; ++m)
        for (int n = 0; n < N; ++n) {
            for (int k = 0; k < K; ++k) res.assoc[m][k][n] = 0;
            const int k = pick[m][n];
            if (k >= 0) {
                res.assoc[m][k][n] = 1;
                if (std::isfinite(costs.cost[m][k][n])) total += costs.cost[m][k][n];
            }
        }
    res.cost_objective = total;
    return res;
}

}  // namespace sagin
