#include "sagin/sp_offload.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "sagin/opt/lp.hpp"

namespace sagin {

namespace {

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

OffloadLp build_impl(const Scenario& s, const Decision& d, const FpWeights& w,
                     const SolverSettings& settings, bool allow_uav) {
    (void)w;
    const int M = s.num_mus, K = s.num_uavs, N = s.num_slots;
    DerivedQuantities q;
    propulsion(s, d, q, settings.min_speed_floor);
    link_rates(s, d, q);
    energies(s, d, q);

    OffloadLp lp;
    lp.w2.assign(M, std::vector<double>(N, 0.0));
    lp.w3.assign(M, std::vector<double>(N, 0.0));
    lp.w4.assign(M, std::vector<double>(N, 0.0));
    lp.caps.assign(M, std::vector<OffloadCaps>(N));
    lp.budget_rhs.assign(K, s.uav_energy_budget);
    for (int k = 0; k < K; ++k)
        for (int n = 0; n < N; ++n) lp.budget_rhs[k] -= q.prop_energy[k][n];

    for (int m = 0; m < M; ++m) {
        for (int n = 0; n < N; ++n) {
            lp.w2[m][n] = q.w2[m][n];
            lp.w3[m][n] = q.w3[m][n];
            lp.w4[m][n] = q.w4[m][n];
            const double D = s.task_bits[m][n];
            const double phi = s.cycles_per_bit[m][n];
            const double tau = s.slot_duration;
            OffloadCaps& caps = lp.caps[m][n];
            if (D <= 0) continue;  // caps stay 1; the cell costs nothing

            const double fl = d.freq_local[m][n];
            caps.local = fl > 0 ? clamp01(tau * fl / (D * phi)) : 0.0;

            caps.uav = 0.0;
            const int k = d.assoc_of(m, n);
            if (allow_uav && k >= 0) {
                const double r = q.rate_uav[m][k][n];
                const double fu = d.freq_uav[m][k][n];
                if (r > 0 && fu > 0)
                    caps.uav = clamp01(tau / (D / r + D * phi / fu));
            }

            caps.leo = 0.0;
            const double rs = q.rate_leo[m][n];
            const double fs = d.freq_leo[m][n];
            if (rs > 0 && fs > 0) caps.leo = clamp01(tau / (D / rs + D * phi / fs));

            if (caps.sum() < 1.0 - 1e-12) {
                lp.infeasible_cells.emplace_back(m, n);
                const int ka = d.assoc_of(m, n);
                if (ka >= 0) {
                    const double fu = d.freq_uav[m][ka][n];
                    lp.budget_rhs[ka] -=
                        s.uav_energy_coeff * fu * fu * d.offload[m][n].uav * D * phi;
                }
            }
        }
    }
    return lp;
}

}  // namespace

OffloadLp build_offload_lp(const Scenario& s, const Decision& d, const FpWeights& w,
                           const SolverSettings& settings) {
    return build_impl(s, d, w, settings, true);
}

OffloadResult solve_offload(const Scenario& s, const Decision& d, const FpWeights& w,
                            const SolverSettings& settings, bool allow_uav) {
    const int M = s.num_mus, K = s.num_uavs, N = s.num_slots;
    const OffloadLp lp = build_impl(s, d, w, settings, allow_uav);

    OffloadResult res;
    res.offload = d.offload;
    res.infeasible_cells = lp.infeasible_cells;
    std::vector<std::vector<std::uint8_t>> pinned(M, std::vector<std::uint8_t>(N, 0));
    for (const auto& [m, n] : lp.infeasible_cells) pinned[m][n] = 1;

    // Per-UAV compute-energy coefficient of omega^U for the budget rows.
    auto budget_coeff = [&](int m, int n) {
        const int k = d.assoc_of(m, n);
        if (k < 0) return std::pair<int, double>{-1, 0.0};
        const double fu = d.freq_uav[m][k][n];
        return std::pair<int, double>{
            k, s.uav_energy_coeff * fu * fu * s.task_bits[m][n] * s.cycles_per_bit[m][n]};
    };

    // Cell-wise greedy fill: cheapest path first up to its cap. This is the
    // LP optimum whenever the budget rows end up slack.
    for (int m = 0; m < M; ++m)
        for (int n = 0; n < N; ++n) {
            if (pinned[m][n]) continue;
            const double y2 = w.y[m][n] * w.y[m][n];
            std::array<std::pair<double, int>, 3> order = {
                std::pair<double, int>{y2 * lp.w2[m][n], 0},
                std::pair<double, int>{y2 * lp.w3[m][n], 1},
                std::pair<double, int>{y2 * lp.w4[m][n], 2}};
            std::stable_sort(order.begin(), order.end(),
                             [](const auto& a, const auto& b) { return a.first < b.first; });
            const std::array<double, 3> caps = {lp.caps[m][n].local, lp.caps[m][n].uav,
                                                lp.caps[m][n].leo};
            std::array<double, 3> omega = {0, 0, 0};
            double remaining = 1.0;
            for (const auto& [cost, path] : order) {
                const double take = std::min(remaining, caps[path]);
                omega[path] = take;
                remaining -= take;
                if (remaining <= 1e-15) break;
            }
            res.offload[m][n] = {omega[0], omega[1], omega[2]};
        }

    std::vector<double> used(K, 0.0);
    for (int m = 0; m < M; ++m)
        for (int n = 0; n < N; ++n) {
            if (pinned[m][n]) continue;
            const auto [k, coeff] = budget_coeff(m, n);
            if (k >= 0) used[k] += coeff * res.offload[m][n].uav;
        }
    bool budgets_ok = true;
    for (int k = 0; k < K; ++k) budgets_ok = budgets_ok && used[k] <= lp.budget_rhs[k] + 1e-9;

    if (!budgets_ok) {
        // Coupled LP over all non-pinned cells.
        std::vector<std::pair<int, int>> cells;
        for (int m = 0; m < M; ++m)
            for (int n = 0; n < N; ++n)
                if (!pinned[m][n]) cells.emplace_back(m, n);
        const int nc = static_cast<int>(cells.size());
        opt::LinearProgram prog = opt::LinearProgram::sized(3 * nc, K, nc);
        for (int c = 0; c < nc; ++c) {
            const auto [m, n] = cells[c];
            const double y2 = w.y[m][n] * w.y[m][n];
            prog.c[3 * c + 0] = y2 * lp.w2[m][n];
            prog.c[3 * c + 1] = y2 * lp.w3[m][n];
            prog.c[3 * c + 2] = y2 * lp.w4[m][n];
            prog.upper[3 * c + 0] = lp.caps[m][n].local;
            prog.upper[3 * c + 1] = lp.caps[m][n].uav;
            prog.upper[3 * c + 2] = lp.caps[m][n].leo;
            prog.a_eq(c, 3 * c + 0) = 1.0;
            prog.a_eq(c, 3 * c + 1) = 1.0;
            prog.a_eq(c, 3 * c + 2) = 1.0;
            prog.b_eq[c] = 1.0;
            const auto [k, coeff] = budget_coeff(m, n);
            if (k >= 0) prog.a_ineq(k, 3 * c + 1) = coeff;
        }
        for (int k = 0; k < K; ++k) prog.b_ineq[k] = lp.budget_rhs[k];
        const opt::LpResult sol = opt::solve_lp(prog, settings.lp_tolerance);
        if (sol.status != opt::LpStatus::Optimal) {
            res.offload = d.offload;  // keep the previous split wholesale
            res.lp_failed = true;
        } else {
            for (int c = 0; c < nc; ++c) {
                const auto [m, n] = cells[c];
                res.offload[m][n] = {sol.x[3 * c + 0], sol.x[3 * c + 1], sol.x[3 * c + 2]};
            }
        }
    }

    double total = 0.0;
    for (int m = 0; m < M; ++m)
        for (int n = 0; n < N; ++n) {
            const double y2 = w.y[m][n] * w.y[m][n];
            const OffloadSplit& om = res.offload[m][n];
            total += y2 * (lp.w2[m][n] * om.local + lp.w3[m][n] * om.uav +
                           lp.w4[m][n] * om.leo);
        }
    res.objective = total;
    return res;
}

}  // namespace sagin
