#include "sagin/sp_power_freq.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace sagin {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double safe_exp_ratio(double xi) {  // e^{1/xi}, +inf outside the domain
    if (!(xi > 0)) return kInf;
    const double r = 1.0 / xi;
    if (r > 690.0) return kInf;
    return std::exp(r);
}

// xi (e^{1/xi} - 1), smooth convex on xi > 0.
double cone_value(double xi) {
    if (!(xi > 0)) return kInf;
    const double r = 1.0 / xi;
    if (r > 690.0) return kInf;
    return xi * std::expm1(r);
}

opt::ConvexTerm quadratic_term(int var, double coeff) {
    opt::ConvexTerm t;
    t.vars = {var};
    t.value = [coeff](const Eigen::VectorXd& x) { return coeff * x[0] * x[0]; };
    t.gradient = [coeff](const Eigen::VectorXd& x) {
        return Eigen::VectorXd::Constant(1, 2.0 * coeff * x[0]);
    };
    t.hessian = [coeff](const Eigen::VectorXd&) {
        return Eigen::MatrixXd::Constant(1, 1, 2.0 * coeff);
    };
    return t;
}

opt::ConvexTerm linear_term(std::vector<int> vars, Eigen::VectorXd coefs, double constant) {
    opt::ConvexTerm t;
    t.vars = std::move(vars);
    const int n = static_cast<int>(t.vars.size());
    t.value = [coefs, constant](const Eigen::VectorXd& x) { return coefs.dot(x) + constant; };
    t.gradient = [coefs](const Eigen::VectorXd&) { return coefs; };
    t.hessian = [n](const Eigen::VectorXd&) { return Eigen::MatrixXd::Zero(n, n); };
    return t;
}

// (xi (e^{1/xi} - 1) - Gamma) / row_scale <= 0 in scaled variables.
opt::ConvexTerm gamma_row(int xi_var, int gamma_var, double xi_ref, double gamma_ref,
                          double row_scale) {
    opt::ConvexTerm t;
    t.vars = {xi_var, gamma_var};
    t.value = [=](const Eigen::VectorXd& x) {
        const double xi = xi_ref * x[0];
        const double v = cone_value(xi);
        if (!std::isfinite(v)) return kInf;
        return (v - gamma_ref * x[1]) / row_scale;
    };
    t.gradient = [=](const Eigen::VectorXd& x) {
        const double xi = xi_ref * x[0];
        const double e = safe_exp_ratio(xi);
        Eigen::VectorXd g(2);
        g[0] = xi_ref * (e - 1.0 - e / xi) / row_scale;
        g[1] = -gamma_ref / row_scale;
        return g;
    };
    t.hessian = [=](const Eigen::VectorXd& x) {
        const double xi = xi_ref * x[0];
        const double e = safe_exp_ratio(xi);
        Eigen::MatrixXd h = Eigen::MatrixXd::Zero(2, 2);
        h(0, 0) = xi_ref * xi_ref * e / (xi * xi * xi) / row_scale;
        return h;
    };
    return t;
}

// (a xi + b / f - tau) / tau <= 0 in scaled variables.
opt::ConvexTerm latency_row(int xi_var, int f_var, double a, double b, double tau,
                            double xi_ref, double f_ref) {
    opt::ConvexTerm t;
    t.vars = {xi_var, f_var};
    t.value = [=](const Eigen::VectorXd& x) {
        const double f = f_ref * x[1];
        if (!(f > 0)) return kInf;
        return (a * xi_ref * x[0] + b / f - tau) / tau;
    };
    t.gradient = [=](const Eigen::VectorXd& x) {
        const double f = f_ref * x[1];
        Eigen::VectorXd g(2);
        g[0] = a * xi_ref / tau;
        g[1] = -b * f_ref / (f * f) / tau;
        return g;
    };
    t.hessian = [=](const Eigen::VectorXd& x) {
        const double f = f_ref * x[1];
        Eigen::MatrixXd h = Eigen::MatrixXd::Zero(2, 2);
        h(1, 1) = 2.0 * b * f_ref * f_ref / (f * f * f) / tau;
        return h;
    };
    return t;
}

// One remote link (UAV or LEO) inside a cell program.
struct LinkPlan {
    bool active = false;
    double a = 0, b = 0;        // latency coefficients
    double obj_gamma = 0;       // y^2 ln2 sigma^2 w D / (h B)
    double obj_quad = 0;        // y^2 kappa w D phi (on f^2)
    double xi_min = 0;
    double xi0 = 0, gamma0 = 0, f0 = 0, f_lb = 0;
    double f_ref = 1, xi_ref = 1, gamma_ref = 1;
};

struct CellPlan {
    int m = 0, n = 0, k = -1;
    bool pinned = false;
    bool local_active = false;
    bool local_fixed = false;   // thin interval, f_L held at its bound
    double local_lb = 0, local_cap = 0, local_f0 = 0, local_obj = 0;
    LinkPlan uav, leo;
    double obj_scale = 1.0;
};

// Pick xi0 >= shrink * xi_min while keeping latency slack for the frequency.
bool choose_xi0(LinkPlan& link, double tau, double shrink) {
    const double lat_at_min = link.a * link.xi_min;
    if (lat_at_min >= 0.98 * tau) return false;  // no power makes the path fit
    double xi0 = shrink * link.xi_min;
    if (link.a * xi0 > 0.85 * tau) xi0 = std::max(1.0001 * link.xi_min, 0.85 * tau / link.a);
    link.xi0 = xi0;
    link.f_lb = link.b / (tau - link.a * xi0);
    return true;
}

void finalize_link_start(LinkPlan& link) {
    link.gamma0 = 1.1 * cone_value(link.xi0);
    link.xi_ref = link.xi_min;
    link.gamma_ref = link.gamma0;
}

// Appends the cell's variables and rows to `prog`; returns the variable ids.
struct CellVarIds {
    int fl = -1, fu = -1, xu = -1, gu = -1, fs = -1, xs = -1, gs = -1;
};

CellVarIds append_cell(opt::SmoothConvexProgram& prog, const CellPlan& c, double tau) {
    CellVarIds ids;
    auto new_var = [&prog](double start) {
        const int id = prog.num_vars++;
        prog.start.conservativeResize(prog.num_vars);
        prog.start[id] = start;
        return id;
    };
    if (c.local_active && !c.local_fixed) {
        ids.fl = new_var(c.local_f0 / c.local_cap);
        prog.objective_terms.push_back(
            quadratic_term(ids.fl, c.obj_scale * c.local_obj * c.local_cap * c.local_cap));
        // lb <= f_L <= F^L_max, both scaled by the cap.
        prog.constraints.push_back(linear_term({ids.fl}, Eigen::VectorXd::Constant(1, -1.0),
                                               c.local_lb / c.local_cap));
        prog.constraints.push_back(
            linear_term({ids.fl}, Eigen::VectorXd::Constant(1, 1.0), -1.0));
    }
    auto append_link = [&](const LinkPlan& link, int& f_id, int& xi_id, int& gamma_id) {
        if (!link.active) return;
        f_id = new_var(link.f0 / link.f_ref);
        xi_id = new_var(link.xi0 / link.xi_ref);
        gamma_id = new_var(link.gamma0 / link.gamma_ref);
        prog.objective_terms.push_back(
            quadratic_term(f_id, c.obj_scale * link.obj_quad * link.f_ref * link.f_ref));
        prog.objective_terms.push_back(
            linear_term({gamma_id},
                        Eigen::VectorXd::Constant(1, c.obj_scale * link.obj_gamma * link.gamma_ref),
                        0.0));
        prog.constraints.push_back(
            gamma_row(xi_id, gamma_id, link.xi_ref, link.gamma_ref, link.gamma_ref));
        prog.constraints.push_back(
            latency_row(xi_id, f_id, link.a, link.b, tau, link.xi_ref, link.f_ref));
        // xi >= xi_min, scaled: 1 - xi_hat <= 0.
        prog.constraints.push_back(
            linear_term({xi_id}, Eigen::VectorXd::Constant(1, -1.0), 1.0));
        // Valid bound implied by the latency row; closes the f < 0 domain hole.
        prog.constraints.push_back(linear_term({f_id}, Eigen::VectorXd::Constant(1, -1.0),
                                               0.9 * (link.b / tau) / link.f_ref));
    };
    append_link(c.uav, ids.fu, ids.xu, ids.gu);
    append_link(c.leo, ids.fs, ids.xs, ids.gs);
    return ids;
}

}  // namespace

PowerFreqAux PowerFreqAux::sized(int mus, int slots) {
    PowerFreqAux a;
    auto zeros = [&](auto& g) { g.assign(mus, std::vector<double>(slots, 0.0)); };
    zeros(a.xi_uav);
    zeros(a.gamma_uav);
    zeros(a.gain_uav);
    zeros(a.xi_leo);
    zeros(a.gamma_leo);
    a.assoc_k.assign(mus, std::vector<int>(slots, -1));
    return a;
}

RecoveredPowers recover_powers(const Scenario& s, const PowerFreqAux& aux) {
    const int M = s.num_mus, N = s.num_slots;
    RecoveredPowers p;
    p.p_uav.assign(M, std::vector<double>(N, 0.0));
    p.p_leo.assign(M, std::vector<double>(N, 0.0));
    for (int m = 0; m < M; ++m)
        for (int n = 0; n < N; ++n) {
            if (aux.xi_uav[m][n] > 0 && aux.gain_uav[m][n] > 0) {
                const double raw = s.uav_noise_power / aux.gain_uav[m][n] *
                                   std::expm1(1.0 / aux.xi_uav[m][n]);
                p.p_uav[m][n] = std::clamp(raw, 0.0, s.max_power_uav_link);
            }
            if (aux.xi_leo[m][n] > 0) {
                const double raw = s.leo_noise_power / s.leo_gain[m] *
                                   std::expm1(1.0 / aux.xi_leo[m][n]);
                p.p_leo[m][n] = std::clamp(raw, 0.0, s.max_power_leo_link);
            }
        }
    return p;
}

namespace {

// Shared planning step: activity, latency bounds, and interior starts for
// every cell, honouring the frequency-capacity groups.
struct Plan {
    std::vector<CellPlan> cells;  // only cells with at least one active path
    std::vector<std::pair<int, int>> pinned;
    bool budget_infeasible = false;
    bool interior_missing = false;
};

Plan plan_cells(const Scenario& s, const Decision& d, const FpWeights& w,
                const DerivedQuantities& q) {
    const int M = s.num_mus, K = s.num_uavs, N = s.num_slots;
    const double tau = s.slot_duration;
    const double ln2 = std::log(2.0);
    Plan plan;

    std::vector<std::vector<CellPlan>> grid(M, std::vector<CellPlan>(N));
    for (int m = 0; m < M; ++m)
        for (int n = 0; n < N; ++n) {
            CellPlan& c = grid[m][n];
            c.m = m;
            c.n = n;
            c.k = d.assoc_of(m, n);
            const double D = s.task_bits[m][n];
            if (D <= 0) continue;
            const double phi = s.cycles_per_bit[m][n];
            const double y2 = w.y[m][n] * w.y[m][n];
            const OffloadSplit& om = d.offload[m][n];

            if (om.local > kZeroShare) {
                c.local_active = true;
                c.local_lb = om.local * D * phi / tau;
                c.local_cap = s.mu_max_freq;
                c.local_obj = y2 * s.mu_energy_coeff * om.local * D * phi;
                if (c.local_lb <= s.mu_max_freq * (1.0 - 1e-9)) {
                    c.local_f0 = c.local_lb + 0.5 * (s.mu_max_freq - c.local_lb);
                } else {
                    c.local_fixed = true;  // interval too thin to centre in
                }
            }
            if (om.uav > kZeroShare && c.k >= 0) {
                const double h = q.gain[m][c.k][n];
                LinkPlan& L = c.uav;
                L.active = true;
                L.a = ln2 * om.uav * D / s.uav_bandwidth;
                L.b = om.uav * D * phi;
                L.obj_gamma = y2 * ln2 * s.uav_noise_power * om.uav * D / (h * s.uav_bandwidth);
                L.obj_quad = y2 * s.uav_energy_coeff * om.uav * D * phi;
                L.xi_min = 1.0 / std::log1p(s.max_power_uav_link * h / s.uav_noise_power);
                L.f_ref = s.uav_max_freq;
            }
            if (om.leo > kZeroShare) {
                LinkPlan& L = c.leo;
                L.active = true;
                L.a = ln2 * om.leo * D / s.leo_bandwidth;
                L.b = om.leo * D * phi;
                L.obj_gamma =
                    y2 * ln2 * s.leo_noise_power * om.leo * D / (s.leo_gain[m] * s.leo_bandwidth);
                L.obj_quad = y2 * s.leo_energy_coeff * om.leo * D * phi;
                L.xi_min =
                    1.0 / std::log1p(s.max_power_leo_link * s.leo_gain[m] / s.leo_noise_power);
                L.f_ref = s.leo_max_freq;
            }
        }

    // Interior starts per frequency-capacity group; shrink xi0 toward xi_min
    // until the group of latency lower bounds fits under the cap.
    auto resolve_group = [&](std::vector<LinkPlan*>& members, double cap) {
        if (members.empty()) return true;
        for (double shrink : {2.0, 1.25, 1.0001}) {
            bool ok = true;
            double lb_sum = 0.0;
            for (LinkPlan* L : members) {
                ok = ok && choose_xi0(*L, tau, shrink);
                if (!ok) break;
                lb_sum += L->f_lb;
            }
            if (!ok) return false;
            const double slack = cap - lb_sum;
            if (slack > 1e-9 * cap) {
                for (LinkPlan* L : members) {
                    L->f0 = L->f_lb + 0.45 * slack / static_cast<double>(members.size());
                    finalize_link_start(*L);
                }
                return true;
            }
        }
        return false;
    };

    for (int k = 0; k < K; ++k)
        for (int n = 0; n < N; ++n) {
            std::vector<LinkPlan*> members;
            for (int m = 0; m < M; ++m)
                if (grid[m][n].uav.active && grid[m][n].k == k) members.push_back(&grid[m][n].uav);
            if (!resolve_group(members, s.uav_max_freq)) {
                for (int m = 0; m < M; ++m)
                    if (grid[m][n].uav.active && grid[m][n].k == k) grid[m][n].pinned = true;
                plan.interior_missing = true;
            }
        }
    for (int n = 0; n < N; ++n) {
        std::vector<LinkPlan*> members;
        for (int m = 0; m < M; ++m)
            if (grid[m][n].leo.active) members.push_back(&grid[m][n].leo);
        if (!resolve_group(members, s.leo_max_freq)) {
            for (int m = 0; m < M; ++m)
                if (grid[m][n].leo.active) grid[m][n].pinned = true;
            plan.interior_missing = true;
        }
    }

    // Shrink frequency starts toward the latency bounds until the per-UAV
    // energy budget holds strictly at the start.
    for (int k = 0; k < K; ++k) {
        double prop = 0.0;
        for (int n = 0; n < N; ++n) prop += q.prop_energy[k][n];
        if (prop >= s.uav_energy_budget) {
            plan.budget_infeasible = true;
            for (int m = 0; m < M; ++m)
                for (int n = 0; n < N; ++n)
                    if (grid[m][n].uav.active && grid[m][n].k == k) grid[m][n].pinned = true;
            continue;
        }
        auto energy_at = [&](double theta) {
            double e = prop;
            for (int m = 0; m < M; ++m)
                for (int n = 0; n < N; ++n) {
                    const CellPlan& c = grid[m][n];
                    if (!c.uav.active || c.k != k || c.pinned) continue;
                    const double f = c.uav.f_lb + theta * (c.uav.f0 - c.uav.f_lb);
                    const double omega_d_phi =
                        d.offload[m][n].uav * s.task_bits[m][n] * s.cycles_per_bit[m][n];
                    e += s.uav_energy_coeff * f * f * omega_d_phi;
                }
            return e;
        };
        double theta = 1.0;
        bool ok = false;
        for (int it = 0; it < 30; ++it) {
            if (energy_at(theta) < s.uav_energy_budget * (1.0 - 1e-12)) {
                ok = true;
                break;
            }
            theta *= 0.5;
        }
        if (!ok) {
            if (energy_at(0.0) >= s.uav_energy_budget) {
                // Even the minimum compute load breaks the budget.
                plan.interior_missing = true;
                for (int m = 0; m < M; ++m)
                    for (int n = 0; n < N; ++n)
                        if (grid[m][n].uav.active && grid[m][n].k == k) grid[m][n].pinned = true;
                continue;
            }
        } else if (theta < 1.0) {
            for (int m = 0; m < M; ++m)
                for (int n = 0; n < N; ++n) {
                    CellPlan& c = grid[m][n];
                    if (c.uav.active && c.k == k && !c.pinned)
                        c.uav.f0 = c.uav.f_lb + theta * (c.uav.f0 - c.uav.f_lb);
                }
        }
    }

    for (int m = 0; m < M; ++m)
        for (int n = 0; n < N; ++n) {
            CellPlan& c = grid[m][n];
            const bool any = c.local_active || c.uav.active || c.leo.active;
            if (!any) continue;
            if (c.pinned) {
                plan.pinned.emplace_back(m, n);
                continue;
            }
            plan.cells.push_back(c);
        }
    return plan;
}

}  // namespace

opt::SmoothConvexProgram build_power_freq_cell_program(const Scenario& s, const Decision& d,
                                                       const FpWeights& w, int m, int n,
                                                       const SolverSettings& settings) {
    DerivedQuantities q;
    propulsion(s, d, q, settings.min_speed_floor);
    link_rates(s, d, q);
    const Plan plan = plan_cells(s, d, w, q);
    opt::SmoothConvexProgram prog;
    prog.num_vars = 0;
    prog.start.resize(0);
    for (const CellPlan& c : plan.cells) {
        if (c.m != m || c.n != n) continue;
        CellPlan scaled = c;
        double ref = 0.0;
        if (c.local_active && !c.local_fixed) ref += c.local_obj * c.local_f0 * c.local_f0;
        if (c.uav.active) ref += c.uav.obj_quad * c.uav.f0 * c.uav.f0 + c.uav.obj_gamma * c.uav.gamma0;
        if (c.leo.active) ref += c.leo.obj_quad * c.leo.f0 * c.leo.f0 + c.leo.obj_gamma * c.leo.gamma0;
        scaled.obj_scale = ref > 0 ? 1.0 / ref : 1.0;
        append_cell(prog, scaled, s.slot_duration);
        break;
    }
    return prog;
}

PowerFreqResult solve_power_freq(const Scenario& s, const Decision& d, const FpWeights& w,
                                 const SolverSettings& settings) {
    const int M = s.num_mus, K = s.num_uavs, N = s.num_slots;
    const double tau = s.slot_duration;

    DerivedQuantities q;
    propulsion(s, d, q, settings.min_speed_floor);
    link_rates(s, d, q);

    PowerFreqResult res;
    res.decision = d;
    res.aux = PowerFreqAux::sized(M, N);

    Plan plan = plan_cells(s, d, w, q);
    res.pinned_cells = plan.pinned;
    if (plan.budget_infeasible) res.status = PowerFreqStatus::InfeasibleBudget;
    else if (plan.interior_missing) res.status = PowerFreqStatus::NoStrictInterior;

    opt::BarrierOptions bopt;
    bopt.initial_weight = settings.barrier_params.initial_weight;
    bopt.multiplier = settings.barrier_params.multiplier;
    bopt.newton_tolerance = settings.barrier_params.newton_tolerance;
    bopt.max_newton_steps = settings.barrier_params.max_newton_steps;
    bopt.gap_tolerance = settings.barrier_params.gap_tolerance;

    struct Solved {
        const CellPlan* plan;
        CellVarIds ids;
        Eigen::VectorXd x;
    };
    std::vector<Solved> solved;

    // Independent cell solves; coupling rows are verified afterwards.
    for (CellPlan& c : plan.cells) {
        opt::SmoothConvexProgram prog;
        double ref = 0.0;
        if (c.local_active && !c.local_fixed) ref += c.local_obj * c.local_f0 * c.local_f0;
        if (c.uav.active) ref += c.uav.obj_quad * c.uav.f0 * c.uav.f0 + c.uav.obj_gamma * c.uav.gamma0;
        if (c.leo.active) ref += c.leo.obj_quad * c.leo.f0 * c.leo.f0 + c.leo.obj_gamma * c.leo.gamma0;
        c.obj_scale = ref > 0 ? 1.0 / ref : 1.0;
        const CellVarIds ids = append_cell(prog, c, tau);
        if (prog.num_vars == 0) {
            solved.push_back({&c, ids, Eigen::VectorXd()});
            continue;
        }
        const opt::ConvexResult r = opt::solve_convex(prog, bopt);
        if (r.status != opt::ConvexStatus::Converged) {
            res.pinned_cells.emplace_back(c.m, c.n);
            if (res.status == PowerFreqStatus::Ok) res.status = PowerFreqStatus::NoStrictInterior;
            c.pinned = true;
            continue;
        }
        res.kkt_residual = std::max(res.kkt_residual, r.kkt_residual);
        solved.push_back({&c, ids, r.x});
    }

    // Coupling rows at the independent optima.
    bool coupled_needed = false;
    {
        std::vector<std::vector<double>> uav_sum(K, std::vector<double>(N, 0.0));
        std::vector<double> leo_sum(N, 0.0);
        std::vector<double> budget(K, 0.0);
        for (int k = 0; k < K; ++k)
            for (int n = 0; n < N; ++n) budget[k] += q.prop_energy[k][n];
        // Pinned cells keep previous values and still consume capacity.
        auto add_pinned = [&](int m, int n) {
            const int k = d.assoc_of(m, n);
            if (k >= 0) {
                uav_sum[k][n] += d.freq_uav[m][k][n];
                budget[k] += s.uav_energy_coeff * d.freq_uav[m][k][n] * d.freq_uav[m][k][n] *
                             d.offload[m][n].uav * s.task_bits[m][n] * s.cycles_per_bit[m][n];
            }
            leo_sum[n] += d.freq_leo[m][n];
        };
        for (const auto& [m, n] : res.pinned_cells) add_pinned(m, n);
        for (const Solved& so : solved) {
            const CellPlan& c = *so.plan;
            if (c.uav.active && so.ids.fu >= 0) {
                const double f = so.x[so.ids.fu] * c.uav.f_ref;
                uav_sum[c.k][c.n] += f;
                budget[c.k] += s.uav_energy_coeff * f * f * d.offload[c.m][c.n].uav *
                               s.task_bits[c.m][c.n] * s.cycles_per_bit[c.m][c.n];
            }
            if (c.leo.active && so.ids.fs >= 0) leo_sum[c.n] += so.x[so.ids.fs] * c.leo.f_ref;
        }
        for (int k = 0; k < K && !coupled_needed; ++k) {
            if (budget[k] > s.uav_energy_budget * (1.0 + 1e-12)) coupled_needed = true;
            for (int n = 0; n < N; ++n)
                if (uav_sum[k][n] > s.uav_max_freq * (1.0 + 1e-12)) coupled_needed = true;
        }
        for (int n = 0; n < N && !coupled_needed; ++n)
            if (leo_sum[n] > s.leo_max_freq * (1.0 + 1e-12)) coupled_needed = true;
    }

    if (coupled_needed) {
        res.coupled_solve_used = true;
        opt::SmoothConvexProgram prog;
        double ref = 0.0;
        for (const CellPlan& c : plan.cells) {
            if (c.pinned) continue;
            if (c.local_active && !c.local_fixed) ref += c.local_obj * c.local_f0 * c.local_f0;
            if (c.uav.active)
                ref += c.uav.obj_quad * c.uav.f0 * c.uav.f0 + c.uav.obj_gamma * c.uav.gamma0;
            if (c.leo.active)
                ref += c.leo.obj_quad * c.leo.f0 * c.leo.f0 + c.leo.obj_gamma * c.leo.gamma0;
        }
        const double obj_scale = ref > 0 ? 1.0 / ref : 1.0;
        std::vector<std::pair<const CellPlan*, CellVarIds>> placed;
        for (CellPlan& c : plan.cells) {
            if (c.pinned) continue;
            c.obj_scale = obj_scale;
            placed.emplace_back(&c, append_cell(prog, c, tau));
        }
        // Frequency-capacity rows.
        std::map<std::pair<int, int>, std::vector<std::pair<int, double>>> uav_groups;
        std::map<int, std::vector<std::pair<int, double>>> leo_groups;
        std::map<int, std::vector<std::pair<int, double>>> budget_vars;  // k -> (var, wDphi)
        std::vector<std::vector<double>> uav_fixed(K, std::vector<double>(N, 0.0));
        std::vector<double> leo_fixed(N, 0.0);
        std::vector<double> budget_fixed(K, 0.0);
        for (int k = 0; k < K; ++k)
            for (int n = 0; n < N; ++n) budget_fixed[k] += q.prop_energy[k][n];
        for (const auto& [m, n] : res.pinned_cells) {
            const int k = d.assoc_of(m, n);
            if (k >= 0) {
                uav_fixed[k][n] += d.freq_uav[m][k][n];
                budget_fixed[k] += s.uav_energy_coeff * d.freq_uav[m][k][n] *
                                   d.freq_uav[m][k][n] * d.offload[m][n].uav *
                                   s.task_bits[m][n] * s.cycles_per_bit[m][n];
            }
            leo_fixed[n] += d.freq_leo[m][n];
        }
        for (const auto& [cp, ids] : placed) {
            if (cp->uav.active && ids.fu >= 0) {
                uav_groups[{cp->k, cp->n}].emplace_back(ids.fu, cp->uav.f_ref);
                budget_vars[cp->k].emplace_back(
                    ids.fu, d.offload[cp->m][cp->n].uav * s.task_bits[cp->m][cp->n] *
                                s.cycles_per_bit[cp->m][cp->n]);
            }
            if (cp->leo.active && ids.fs >= 0)
                leo_groups[cp->n].emplace_back(ids.fs, cp->leo.f_ref);
        }
        for (const auto& [key, members] : uav_groups) {
            std::vector<int> vars;
            Eigen::VectorXd coefs(members.size());
            for (std::size_t i = 0; i < members.size(); ++i) {
                vars.push_back(members[i].first);
                coefs[static_cast<int>(i)] = members[i].second / s.uav_max_freq;
            }
            prog.constraints.push_back(linear_term(
                vars, coefs, (uav_fixed[key.first][key.second] - s.uav_max_freq) / s.uav_max_freq));
        }
        for (const auto& [n, members] : leo_groups) {
            std::vector<int> vars;
            Eigen::VectorXd coefs(members.size());
            for (std::size_t i = 0; i < members.size(); ++i) {
                vars.push_back(members[i].first);
                coefs[static_cast<int>(i)] = members[i].second / s.leo_max_freq;
            }
            prog.constraints.push_back(
                linear_term(vars, coefs, (leo_fixed[n] - s.leo_max_freq) / s.leo_max_freq));
        }
        for (const auto& [k, members] : budget_vars) {
            opt::ConvexTerm t;
            std::vector<double> wdphi;
            for (const auto& [var, c] : members) {
                t.vars.push_back(var);
                wdphi.push_back(c);
            }
            const double f_ref = s.uav_max_freq;
            const double kappa = s.uav_energy_coeff;
            const double e_max = s.uav_energy_budget;
            const double fixed = budget_fixed[k];
            t.value = [wdphi, f_ref, kappa, e_max, fixed](const Eigen::VectorXd& x) {
                double e = fixed;
                for (int i = 0; i < x.size(); ++i) {
                    const double f = f_ref * x[i];
                    e += kappa * f * f * wdphi[i];
                }
                return (e - e_max) / e_max;
            };
            t.gradient = [wdphi, f_ref, kappa, e_max](const Eigen::VectorXd& x) {
                Eigen::VectorXd g(x.size());
                for (int i = 0; i < x.size(); ++i)
                    g[i] = 2.0 * kappa * f_ref * f_ref * x[i] * wdphi[i] / e_max;
                return g;
            };
            t.hessian = [wdphi, f_ref, kappa, e_max](const Eigen::VectorXd& x) {
                Eigen::MatrixXd h = Eigen::MatrixXd::Zero(x.size(), x.size());
                for (int i = 0; i < x.size(); ++i)
                    h(i, i) = 2.0 * kappa * f_ref * f_ref * wdphi[i] / e_max;
                return h;
            };
            prog.constraints.push_back(std::move(t));
        }
        const opt::ConvexResult r = opt::solve_convex(prog, bopt);
        if (r.status == opt::ConvexStatus::Converged) {
            res.kkt_residual = r.kkt_residual;
            solved.clear();
            for (const auto& [cp, ids] : placed) solved.push_back({cp, ids, r.x});
        } else {
            // Keep the previous P and F wholesale.
            if (res.status == PowerFreqStatus::Ok) res.status = PowerFreqStatus::NoStrictInterior;
            res.objective = 0.0;
            DerivedQuantities qd = evaluate(s, res.decision, settings.min_speed_floor);
            for (int m = 0; m < M; ++m)
                for (int n = 0; n < N; ++n)
                    res.objective += w.y[m][n] * w.y[m][n] * qd.e_sum[m][n];
            return res;
        }
    }

    // Write the solution back into the decision.
    for (const Solved& so : solved) {
        const CellPlan& c = *so.plan;
        const int m = c.m, n = c.n;
        if (c.local_active) {
            res.decision.freq_local[m][n] =
                c.local_fixed ? s.mu_max_freq
                              : std::min(so.x[so.ids.fl] * c.local_cap, s.mu_max_freq);
        }
        if (c.uav.active && so.ids.fu >= 0) {
            const double f = so.x[so.ids.fu] * c.uav.f_ref;
            const double xi = so.x[so.ids.xu] * c.uav.xi_ref;
            const double gamma = so.x[so.ids.gu] * c.uav.gamma_ref;
            res.decision.freq_uav[m][c.k][n] = f;
            res.aux.xi_uav[m][n] = xi;
            res.aux.gamma_uav[m][n] = gamma;
            res.aux.gain_uav[m][n] = q.gain[m][c.k][n];
            res.aux.assoc_k[m][n] = c.k;
        }
        if (c.leo.active && so.ids.fs >= 0) {
            res.decision.freq_leo[m][n] = so.x[so.ids.fs] * c.leo.f_ref;
            res.aux.xi_leo[m][n] = so.x[so.ids.xs] * c.leo.xi_ref;
            res.aux.gamma_leo[m][n] = so.x[so.ids.gs] * c.leo.gamma_ref;
        }
    }
    const RecoveredPowers rp = recover_powers(s, res.aux);
    for (int m = 0; m < M; ++m)
        for (int n = 0; n < N; ++n) {
            bool cell_pinned = false;
            for (const auto& [pm, pn] : res.pinned_cells)
                cell_pinned = cell_pinned || (pm == m && pn == n);
            if (cell_pinned) continue;
            const int k = d.assoc_of(m, n);
            const OffloadSplit& om = d.offload[m][n];
            if (k >= 0) {
                if (om.uav > kZeroShare && s.task_bits[m][n] > 0) {
                    res.decision.power_uav[m][k][n] = rp.p_uav[m][n];
                } else {
                    res.decision.power_uav[m][k][n] = 0.0;  // unused link
                }
            }
            if (om.leo > kZeroShare && s.task_bits[m][n] > 0) {
                res.decision.power_leo[m][n] = rp.p_leo[m][n];
            } else {
                res.decision.power_leo[m][n] = 0.0;
            }
        }

    // Unused paths get revival-friendly frequencies out of the leftover
    // capacity; they cost nothing now but keep the offloading LP able to
    // re-open the path later.
    for (int m = 0; m < M; ++m)
        for (int n = 0; n < N; ++n)
            if (d.offload[m][n].local <= kZeroShare) res.decision.freq_local[m][n] = s.mu_max_freq;
    for (int n = 0; n < N; ++n) {
        double used = 0.0;
        int dead = 0;
        for (int m = 0; m < M; ++m) {
            if (d.offload[m][n].leo > kZeroShare) used += res.decision.freq_leo[m][n];
            else ++dead;
        }
        if (dead == 0) continue;
        const double share =
            std::max(0.0, std::min(s.leo_max_freq / s.num_mus,
                                   0.999 * (s.leo_max_freq - used) / dead));
        for (int m = 0; m < M; ++m)
            if (d.offload[m][n].leo <= kZeroShare) res.decision.freq_leo[m][n] = share;
    }
    for (int k = 0; k < K; ++k)
        for (int n = 0; n < N; ++n) {
            double used = 0.0;
            std::vector<int> dead;
            for (int m = 0; m < M; ++m) {
                if (d.assoc_of(m, n) != k) continue;
                if (d.offload[m][n].uav > kZeroShare) used += res.decision.freq_uav[m][k][n];
                else dead.push_back(m);
            }
            if (dead.empty()) continue;
            const double share = std::max(
                0.0, std::min(s.uav_max_freq / s.num_mus,
                              0.999 * (s.uav_max_freq - used) / static_cast<double>(dead.size())));
            for (int m : dead) res.decision.freq_uav[m][k][n] = share;
        }

    DerivedQuantities qd = evaluate(s, res.decision, settings.min_speed_floor);
    res.objective = 0.0;
    for (int m = 0; m < M; ++m)
        for (int n = 0; n < N; ++n)
            res.objective += w.y[m][n] * w.y[m][n] * qd.e_sum[m][n];
    return res;
}

}  // namespace sagin
