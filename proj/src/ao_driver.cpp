#include "sagin/ao_driver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "sagin/sp_association.hpp"
#include "sagin/sp_offload.hpp"
#include "sagin/sp_power_freq.hpp"

namespace sagin {

namespace {

double now_ms() {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

double weighted_energy(const Scenario& s, const DerivedQuantities& q, const FpWeights& y) {
    double total = 0.0;
    for (int m = 0; m < s.num_mus; ++m)
        for (int n = 0; n < s.num_slots; ++n)
            total += y.y[m][n] * y.y[m][n] * q.e_sum[m][n];
    return total;
}

double max_violation(const Scenario& s, const Decision& d, double floor) {
    double worst = 0.0;
    for (const ConstraintViolation& v : check_feasibility(s, d, 1e-9, floor))
        worst = std::max(worst, v.residual);
    return worst;
}

// Clip a target split to the per-path latency caps, pushing the excess onto
// the path with the most headroom.
OffloadSplit clip_split(const std::array<double, 3>& target, double cap_l, double cap_u,
                        double cap_s) {
    const std::array<double, 3> caps = {cap_l, cap_u, cap_s};
    std::array<double, 3> w = {std::min(target[0], cap_l), std::min(target[1], cap_u),
                               std::min(target[2], cap_s)};
    double deficit = 1.0 - (w[0] + w[1] + w[2]);
    while (deficit > 1e-15) {
        int best = -1;
        double headroom = 0.0;
        for (int i = 0; i < 3; ++i)
            if (caps[i] - w[i] > headroom) {
                headroom = caps[i] - w[i];
                best = i;
            }
        if (best < 0) return {-1, -1, -1};  // infeasible marker
        const double take = std::min(deficit, headroom);
        w[best] += take;
        deficit -= take;
    }
    return {w[0], w[1], w[2]};
}

}  // namespace

std::string scheme_name(Scheme s) {
    switch (s) {
        case Scheme::Proposed: return "proposed";
        case Scheme::SingleUav: return "single_uav";
        case Scheme::FixedTrajectory: return "fixed_trajectory";
        case Scheme::FixedAllocation: return "fixed_allocation";
        case Scheme::LsOffloading: return "ls_offloading";
    }
    return "proposed";
}

Scheme scheme_from_name(const std::string& name) {
    if (name == "proposed") return Scheme::Proposed;
    if (name == "single_uav") return Scheme::SingleUav;
    if (name == "fixed_trajectory") return Scheme::FixedTrajectory;
    if (name == "fixed_allocation") return Scheme::FixedAllocation;
    if (name == "ls_offloading") return Scheme::LsOffloading;
    throw std::invalid_argument("unknown scheme: " + name);
}

Scenario scheme_scenario(const Scenario& s, const SchemeSpec& spec) {
    if (spec.scheme != Scheme::SingleUav || s.num_uavs <= 1) return s;
    Scenario out = s;
    const int k = std::clamp(spec.single_uav_index, 0, s.num_uavs - 1);
    out.num_uavs = 1;
    out.uav_start = {s.uav_start[k]};
    out.uav_end = {s.uav_end[k]};
    return out;
}

Decision initial_point(const Scenario& s, const SchemeSpec& spec,
                       const SolverSettings& settings) {
    const int M = s.num_mus, K = s.num_uavs, N = s.num_slots;
    const double tau = s.slot_duration;
    Decision d = Decision::sized(M, K, N);

    for (int k = 0; k < K; ++k)
        for (int n = 0; n < N; ++n) {
            const double t = N > 1 ? static_cast<double>(n) / (N - 1) : 0.0;
            d.trajectories[k][n] = s.uav_start[k] + t * (s.uav_end[k] - s.uav_start[k]);
        }

    for (int m = 0; m < M; ++m)
        for (int n = 0; n < N; ++n) {
            int best = 0;
            double best_dist = (d.trajectories[0][n] - s.mu_positions[m]).squaredNorm();
            for (int k = 1; k < K; ++k) {
                const double dist = (d.trajectories[k][n] - s.mu_positions[m]).squaredNorm();
                if (dist < best_dist - 1e-12) {
                    best_dist = dist;
                    best = k;
                }
            }
            d.assoc[m][best][n] = 1;
        }

    const double fu_share = s.uav_max_freq / M;
    const double fs_share = s.leo_max_freq / M;
    for (int m = 0; m < M; ++m) {
        for (int n = 0; n < N; ++n) {
            d.freq_local[m][n] = s.mu_max_freq;
            d.freq_leo[m][n] = fs_share;
            const int k = d.assoc_of(m, n);
            d.freq_uav[m][k][n] = fu_share;
            d.power_leo[m][n] = 0.5 * s.max_power_leo_link;
            for (int kk = 0; kk < K; ++kk) d.power_uav[m][kk][n] = 0.5 * s.max_power_uav_link;
        }
    }

    DerivedQuantities q;
    link_rates(s, d, q);
    const bool allow_uav = spec.scheme != Scheme::LsOffloading;
    const std::array<double, 3> target =
        spec.scheme == Scheme::FixedAllocation
            ? spec.fixed_split
            : std::array<double, 3>{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
    for (int m = 0; m < M; ++m)
        for (int n = 0; n < N; ++n) {
            const double D = s.task_bits[m][n];
            if (D <= 0) {
                d.offload[m][n] = {1.0, 0.0, 0.0};
                continue;
            }
            const double phi = s.cycles_per_bit[m][n];
            const double cap_l = std::clamp(tau * d.freq_local[m][n] / (D * phi), 0.0, 1.0);
            const int k = d.assoc_of(m, n);
            double cap_u = 0.0;
            if (allow_uav && q.rate_uav[m][k][n] > 0)
                cap_u = std::clamp(
                    tau / (D / q.rate_uav[m][k][n] + D * phi / d.freq_uav[m][k][n]), 0.0, 1.0);
            double cap_s = 0.0;
            if (q.rate_leo[m][n] > 0)
                cap_s = std::clamp(
                    tau / (D / q.rate_leo[m][n] + D * phi / d.freq_leo[m][n]), 0.0, 1.0);
            std::array<double, 3> t = target;
            if (!allow_uav) {
                // Redistribute the UAV share across the surviving paths.
                const double extra = t[1] / 2.0;
                t = {t[0] + extra, 0.0, t[2] + extra};
            }
            const OffloadSplit split = clip_split(t, cap_l, cap_u, cap_s);
            if (split.local < 0)
                throw NoFeasibleStart("no offloading split fits the slot for m=" +
                                      std::to_string(m) + ",n=" + std::to_string(n));
            d.offload[m][n] = split;
        }

    for (int m = 0; m < M; ++m)
        for (int n = 0; n < N; ++n) {
            if (d.offload[m][n].leo <= kZeroShare) d.power_leo[m][n] = 0.5 * s.max_power_leo_link;
            if (!allow_uav)
                for (int k = 0; k < K; ++k) d.power_uav[m][k][n] = 0.0;
        }

    const std::vector<ConstraintViolation> v =
        check_feasibility(s, d, 1e-6, settings.min_speed_floor);
    if (!v.empty())
        throw NoFeasibleStart("initial point violates " + v.front().tag + " (" +
                              v.front().detail + ")");
    return d;
}

Decision initial_point(const Scenario& s, const SolverSettings& settings) {
    return initial_point(s, SchemeSpec{}, settings);
}

RunReport run_ao(const Scenario& s_in, const SchemeSpec& spec, const SolverSettings& settings) {
    const Scenario s = scheme_scenario(s_in, spec);
    const double floor = settings.min_speed_floor;

    RunReport report;
    report.scheme = scheme_name(spec.scheme);
    report.spec = spec;

    Decision d = initial_point(s, spec, settings);
    FpWeights y = update_weights(s, d);
    DerivedQuantities q = evaluate(s, d, floor);
    double phi = q.objective;
    double sigma = weighted_energy(s, q, y);

    {
        IterationRecord rec;
        rec.iteration = 0;
        rec.phi = phi;
        rec.surrogate = surrogate_value(s, q, y);
        rec.max_residual = max_violation(s, d, floor);
        report.trace.push_back(rec);
    }

    const bool run_sp1 = spec.scheme != Scheme::LsOffloading;
    const bool run_sp2 = spec.scheme != Scheme::FixedAllocation;
    const bool run_sp4 =
        spec.scheme != Scheme::FixedTrajectory && spec.scheme != Scheme::LsOffloading;
    const bool allow_uav = spec.scheme != Scheme::LsOffloading;
    const int blocks_per_iter = (run_sp1 ? 1 : 0) + (run_sp2 ? 1 : 0) + 1 + (run_sp4 ? 1 : 0);

    report.termination = Termination::MaxIters;
    int all_skipped_streak = 0;

    // Accepts a candidate block update when the y-weighted energy does not
    // increase and the objective does not dip beyond the tolerated slack.
    auto try_accept = [&](const Decision& cand, bool solver_flagged) {
        if (solver_flagged) return false;
        DerivedQuantities qc;
        try {
            qc = evaluate(s, cand, floor);
        } catch (const InfeasibleDecision&) {
            return false;
        }
        const double sigma_c = weighted_energy(s, qc, y);
        if (sigma_c > sigma * (1.0 + 1e-9) + 1e-15) return false;
        if (qc.objective < phi * (1.0 - 5e-7)) return false;
        d = cand;
        q = std::move(qc);
        phi = q.objective;
        sigma = sigma_c;
        return true;
    };

    for (int l = 1; l <= settings.ao_max_iters; ++l) {
        IterationRecord rec;
        rec.iteration = l;
        const double phi_start = phi;
        int skipped = 0;

        if (run_sp1) {
            const double t0 = now_ms();
            const double before = phi;
            AssociationResult ar = solve_association(s, d, y, settings);
            Decision cand = d;
            cand.assoc = ar.assoc;
            // Materialize frequencies for switched pairs: zero the old pair,
            // then a headroom-capped fair share for the new one.
            const double fair = s.uav_max_freq / s.num_mus;
            std::vector<std::pair<int, int>> switched;
            for (int m = 0; m < s.num_mus; ++m)
                for (int n = 0; n < s.num_slots; ++n) {
                    const int k_old = d.assoc_of(m, n);
                    const int k_new = cand.assoc_of(m, n);
                    if (k_old == k_new) continue;
                    switched.emplace_back(m, n);
                    if (k_old >= 0) cand.freq_uav[m][k_old][n] = 0.0;
                }
            for (const auto& [m, n] : switched) {
                const int k_new = cand.assoc_of(m, n);
                if (k_new < 0) continue;
                double used = 0.0;
                for (int mm = 0; mm < s.num_mus; ++mm) used += cand.freq_uav[mm][k_new][n];
                cand.freq_uav[m][k_new][n] =
                    std::max(0.0, std::min(fair, s.uav_max_freq - used));
            }
            if (try_accept(cand, ar.infeasible)) rec.d_sp1 = phi - before;
            else ++skipped;
            rec.ms_sp1 = now_ms() - t0;
        }

        if (run_sp2) {
            const double t0 = now_ms();
            const double before = phi;
            OffloadResult orr = solve_offload(s, d, y, settings, allow_uav);
            Decision cand = d;
            cand.offload = orr.offload;
            if (try_accept(cand, orr.lp_failed)) rec.d_sp2 = phi - before;
            else ++skipped;
            rec.ms_sp2 = now_ms() - t0;
        }

        {
            const double t0 = now_ms();
            const double before = phi;
            PowerFreqResult pr = solve_power_freq(s, d, y, settings);
            if (try_accept(pr.decision, false)) rec.d_sp3 = phi - before;
            else ++skipped;
            rec.ms_sp3 = now_ms() - t0;
        }

        if (run_sp4) {
            const double t0 = now_ms();
            const double before = phi;
            TrajectoryResult tr = sca_solve(s, d, y, settings);
            for (ScaStepRecord& st : tr.steps) {
                st.step = l * 1000 + st.step;  // tag with the AO iteration
                report.sca_steps.push_back(st);
            }
            Decision cand = d;
            cand.trajectories = tr.trajectories;
            if (try_accept(cand, false)) rec.d_sp4 = phi - before;
            else ++skipped;
            rec.ms_sp4 = now_ms() - t0;
        }

        rec.phi = phi;
        rec.surrogate = surrogate_value(s, q, y);
        rec.max_residual = max_violation(s, d, floor);
        report.trace.push_back(rec);

        if (skipped == blocks_per_iter) {
            if (++all_skipped_streak >= 2) {
                report.termination = Termination::InfeasibleSubproblem;
                break;
            }
        } else {
            all_skipped_streak = 0;
        }

        // y-update for the next iteration.
        y = update_weights(s, q);
        sigma = weighted_energy(s, q, y);  // equals phi at the fresh weights

        const double delta = std::abs(phi - phi_start) / std::max(1.0, std::abs(phi_start));
        if (delta < settings.ao_tolerance) {
            report.termination = Termination::Converged;
            break;
        }
    }

    report.final_decision = d;
    report.final_weights = y;
    return report;
}

}  // namespace sagin
