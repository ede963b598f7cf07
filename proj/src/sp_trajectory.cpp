#include "sagin/sp_trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sagin {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
const double kLog2e = 1.0 / std::log(2.0);

struct ActiveCell {
    int m, n, k;
    double omega, task, phi, y2, power;
    double gamma_lb;      // latency lower bound on the rate proxy
    double obj_coeff;     // y^2 p omega D
};

}  // namespace

double sp4_rate_bound(double bandwidth, double power, double beta0, double noise,
                      double s_value, double s_expansion) {
    const double u = s_value * noise + power * beta0;
    if (!(u > 0)) return -kInf;
    return bandwidth * (std::log2(u) - std::log2(s_expansion * noise) -
                        kLog2e / s_expansion * (s_value - s_expansion));
}

double sp4_linearized_distance(const Vec2& q_expansion, const Vec2& mu, double altitude,
                               const Vec2& q) {
    const Vec2 d = q_expansion - mu;
    return d.squaredNorm() + altitude * altitude + 2.0 * d.dot(q - q_expansion);
}

double sp4_prop_upper_bound(double zeta1, double zeta2, double tau, double speed, double psi) {
    return tau * (zeta1 * speed * speed * speed + zeta2 / psi);
}

TrajectoryMetrics trajectory_metrics(const Scenario& s, const Decision& d, const FpWeights& w,
                                     const std::vector<std::vector<Vec2>>& tr,
                                     double min_speed_floor) {
    const int M = s.num_mus, K = s.num_uavs, N = s.num_slots;
    TrajectoryMetrics mt;
    mt.min_separation = K > 1 ? kInf : std::numeric_limits<double>::infinity();
    for (int k = 0; k < K; ++k) {
        mt.endpoint_residual = std::max(mt.endpoint_residual, (tr[k][0] - s.uav_start[k]).norm());
        mt.endpoint_residual =
            std::max(mt.endpoint_residual, (tr[k][N - 1] - s.uav_end[k]).norm());
        for (int n = 1; n < N; ++n)
            mt.max_speed = std::max(mt.max_speed,
                                    (tr[k][n] - tr[k][n - 1]).norm() / s.slot_duration);
        for (int i = k + 1; i < K; ++i)
            for (int n = 0; n < N; ++n)
                mt.min_separation = std::min(mt.min_separation, (tr[k][n] - tr[i][n]).norm());
    }
    std::vector<double> budget(K, 0.0);
    for (int k = 0; k < K; ++k)
        for (int n = 1; n < N; ++n) {
            const double v =
                std::max((tr[k][n] - tr[k][n - 1]).norm() / s.slot_duration, min_speed_floor);
            budget[k] += s.slot_duration * (s.propulsion_c1 * v * v * v + s.propulsion_c2 / v);
        }
    for (int m = 0; m < M; ++m)
        for (int n = 0; n < N; ++n) {
            const OffloadSplit& om = d.offload[m][n];
            const double D = s.task_bits[m][n];
            if (om.uav <= kZeroShare || D <= 0) continue;
            const int k = d.assoc_of(m, n);
            if (k < 0) continue;
            const double h = s.ref_channel_gain /
                             (s.uav_altitude * s.uav_altitude +
                              (tr[k][n] - s.mu_positions[m]).squaredNorm());
            const double p = d.power_uav[m][k][n];
            const double rate =
                p > 0 ? s.uav_bandwidth * std::log2(1.0 + p * h / s.uav_noise_power) : 0.0;
            const double f = d.freq_uav[m][k][n];
            if (rate <= 0 || f <= 0) {
                mt.max_uav_latency = kInf;
                mt.transmit_objective = kInf;
                continue;
            }
            mt.max_uav_latency = std::max(
                mt.max_uav_latency, om.uav * D / rate + om.uav * D * s.cycles_per_bit[m][n] / f);
            mt.transmit_objective += w.y[m][n] * w.y[m][n] * p * om.uav * D / rate;
            budget[k] += s.uav_energy_coeff * f * f * om.uav * D * s.cycles_per_bit[m][n];
        }
    for (int k = 0; k < K; ++k)
        mt.max_budget_excess = std::max(mt.max_budget_excess, budget[k] - s.uav_energy_budget);
    return mt;
}

ConvexifiedTrajectory build_convexified(const Scenario& s, const Decision& d,
                                        const FpWeights& w, const TrajectoryAux& aux,
                                        const SolverSettings& settings) {
    const int M = s.num_mus, K = s.num_uavs, N = s.num_slots;
    const double tau = s.slot_duration;
    const double vmax_step = s.max_uav_speed * tau;
    const bool printed_mode = settings.sp4_distance_mode != "conservative";

    ConvexifiedTrajectory out;
    out.pos_ref = std::max(s.area_side, 1.0);
    const double pos_ref = out.pos_ref;
    opt::SmoothConvexProgram& prog = out.program;
    prog.start.resize(0);

    auto new_var = [&prog](double start) {
        const int id = prog.num_vars++;
        prog.start.conservativeResize(prog.num_vars);
        prog.start[id] = start;
        return id;
    };

    // Interior trajectory positions; endpoints stay fixed.
    out.q_vars.assign(K, std::vector<std::array<int, 2>>(N, {-1, -1}));
    for (int k = 0; k < K; ++k)
        for (int n = 1; n + 1 < N; ++n) {
            out.q_vars[k][n] = {new_var(aux.expansion_q[k][n].x() / pos_ref),
                                new_var(aux.expansion_q[k][n].y() / pos_ref)};
        }
    out.psi_vars.assign(K, std::vector<int>(N, -1));
    for (int k = 0; k < K; ++k)
        for (int n = 1; n < N; ++n) out.psi_vars[k][n] = new_var(aux.psi[k][n] / s.max_uav_speed);

    std::vector<ActiveCell> cells;
    out.gamma_vars.assign(M, std::vector<int>(N, -1));
    out.s_vars.assign(M, std::vector<int>(N, -1));
    for (int m = 0; m < M; ++m)
        for (int n = 0; n < N; ++n) {
            const OffloadSplit& om = d.offload[m][n];
            const double D = s.task_bits[m][n];
            if (om.uav <= kZeroShare || D <= 0) continue;
            const int k = d.assoc_of(m, n);
            if (k < 0) continue;
            ActiveCell c;
            c.m = m;
            c.n = n;
            c.k = k;
            c.omega = om.uav;
            c.task = D;
            c.phi = s.cycles_per_bit[m][n];
            c.y2 = w.y[m][n] * w.y[m][n];
            c.power = d.power_uav[m][k][n];
            const double f = d.freq_uav[m][k][n];
            if (c.power <= 0 || f <= 0) {
                out.feasible = false;
                continue;
            }
            const double slack = tau - c.omega * D * c.phi / f;
            if (slack <= 0) {
                out.feasible = false;
                continue;
            }
            c.gamma_lb = c.omega * D / slack;
            c.obj_coeff = c.y2 * c.power * c.omega * D;
            out.gamma_vars[m][n] = new_var(aux.gamma[m][n]);      // scaled below
            out.s_vars[m][n] = new_var(aux.s_proxy[m][n]);
            cells.push_back(c);
        }

    if (cells.empty()) {
        prog.num_vars = 0;  // nothing to optimize
        return out;
    }

    // Scale gamma and S variables by their start values.
    std::vector<double> gamma_ref(cells.size()), s_ref(cells.size());
    double obj0 = 0.0;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const ActiveCell& c = cells[i];
        gamma_ref[i] = std::max(aux.gamma[c.m][c.n], 1.0);
        s_ref[i] = std::max(aux.s_proxy[c.m][c.n], 1.0);
        prog.start[out.gamma_vars[c.m][c.n]] = aux.gamma[c.m][c.n] / gamma_ref[i];
        prog.start[out.s_vars[c.m][c.n]] = aux.s_proxy[c.m][c.n] / s_ref[i];
        obj0 += c.obj_coeff / std::max(aux.gamma[c.m][c.n], 1e-9);
    }
    const double obj_scale = obj0 > 0 ? 1.0 / obj0 : 1.0;

    auto q_const_or_var = [&](int k, int n) {
        // Returns (var ids, constant position); ids {-1,-1} means fixed.
        struct QRef {
            std::array<int, 2> ids;
            Vec2 fixed;
        };
        QRef r;
        r.ids = out.q_vars[k][n];
        r.fixed = n == 0 ? s.uav_start[k] : (n == N - 1 ? s.uav_end[k] : Vec2(aux.expansion_q[k][n]));
        return r;
    };

    // Objective: sum c / gamma.
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const ActiveCell& c = cells[i];
        const double coeff = obj_scale * c.obj_coeff / gamma_ref[i];
        opt::ConvexTerm t;
        t.vars = {out.gamma_vars[c.m][c.n]};
        t.value = [coeff](const Eigen::VectorXd& x) {
            if (!(x[0] > 0)) return kInf;
            return coeff / x[0];
        };
        t.gradient = [coeff](const Eigen::VectorXd& x) {
            return Eigen::VectorXd::Constant(1, -coeff / (x[0] * x[0]));
        };
        t.hessian = [coeff](const Eigen::VectorXd& x) {
            return Eigen::MatrixXd::Constant(1, 1, 2.0 * coeff / (x[0] * x[0] * x[0]));
        };
        prog.objective_terms.push_back(std::move(t));
    }

    // Speed rows |q[n]-q[n-1]|^2 <= (V tau)^2, slightly relaxed so the
    // expansion point itself stays strictly inside; acceptance enforces the
    // exact bound.
    for (int k = 0; k < K; ++k)
        for (int n = 1; n < N; ++n) {
            const auto a = q_const_or_var(k, n);
            const auto b = q_const_or_var(k, n - 1);
            const double cur_step =
                (aux.expansion_q[k][n] - aux.expansion_q[k][n - 1]).norm();
            const double limit2 =
                std::max(vmax_step * vmax_step, cur_step * cur_step) * (1.0 + 2e-9);
            std::vector<int> vars;
            for (int ax : a.ids)
                if (ax >= 0) vars.push_back(ax);
            for (int bx : b.ids)
                if (bx >= 0) vars.push_back(bx);
            if (vars.empty()) continue;
            const bool a_var = a.ids[0] >= 0, b_var = b.ids[0] >= 0;
            const Vec2 fa = a.fixed, fb = b.fixed;
            const double scale = vmax_step * vmax_step;
            opt::ConvexTerm t;
            t.vars = vars;
            auto delta = [=](const Eigen::VectorXd& x) {
                Vec2 pa = fa, pb = fb;
                int idx = 0;
                if (a_var) {
                    pa = Vec2(x[idx] * pos_ref, x[idx + 1] * pos_ref);
                    idx += 2;
                }
                if (b_var) pb = Vec2(x[idx] * pos_ref, x[idx + 1] * pos_ref);
                return Vec2(pa - pb);
            };
            t.value = [=](const Eigen::VectorXd& x) {
                return (delta(x).squaredNorm() - limit2) / scale;
            };
            t.gradient = [=](const Eigen::VectorXd& x) {
                const Vec2 dt = delta(x);
                Eigen::VectorXd g(x.size());
                int idx = 0;
                if (a_var) {
                    g[idx] = 2.0 * dt.x() * pos_ref / scale;
                    g[idx + 1] = 2.0 * dt.y() * pos_ref / scale;
                    idx += 2;
                }
                if (b_var) {
                    g[idx] = -2.0 * dt.x() * pos_ref / scale;
                    g[idx + 1] = -2.0 * dt.y() * pos_ref / scale;
                }
                return g;
            };
            t.hessian = [=](const Eigen::VectorXd& x) {
                Eigen::MatrixXd h = Eigen::MatrixXd::Zero(x.size(), x.size());
                const double c2 = 2.0 * pos_ref * pos_ref / scale;
                int ia = -1, ib = -1, idx = 0;
                if (a_var) {
                    ia = idx;
                    idx += 2;
                }
                if (b_var) ib = idx;
                for (int ax = 0; ax < 2; ++ax) {
                    if (ia >= 0) h(ia + ax, ia + ax) += c2;
                    if (ib >= 0) h(ib + ax, ib + ax) += c2;
                    if (ia >= 0 && ib >= 0) {
                        h(ia + ax, ib + ax) -= c2;
                        h(ib + ax, ia + ax) -= c2;
                    }
                }
                return h;
            };
            prog.constraints.push_back(std::move(t));
        }

    // psi coupling: psi^2 tau^2 <= 2 Dl' D - |Dl|^2 + (floor tau)^2 and
    // box bounds on psi.
    const double floor_sq = settings.min_speed_floor * tau * settings.min_speed_floor * tau;
    for (int k = 0; k < K; ++k)
        for (int n = 1; n < N; ++n) {
            const auto a = q_const_or_var(k, n);
            const auto b = q_const_or_var(k, n - 1);
            const Vec2 dl = aux.expansion_q[k][n] - aux.expansion_q[k][n - 1];
            const double rhs_const = -dl.squaredNorm() + floor_sq;
            const int psi = out.psi_vars[k][n];
            std::vector<int> vars = {psi};
            for (int ax : a.ids)
                if (ax >= 0) vars.push_back(ax);
            for (int bx : b.ids)
                if (bx >= 0) vars.push_back(bx);
            const bool a_var = a.ids[0] >= 0, b_var = b.ids[0] >= 0;
            const Vec2 fa = a.fixed, fb = b.fixed;
            const double scale = vmax_step * vmax_step;
            const double psi_ref = s.max_uav_speed;
            opt::ConvexTerm t;
            t.vars = vars;
            auto lin = [=](const Eigen::VectorXd& x) {
                Vec2 pa = fa, pb = fb;
                int idx = 1;
                if (a_var) {
                    pa = Vec2(x[idx] * pos_ref, x[idx + 1] * pos_ref);
                    idx += 2;
                }
                if (b_var) pb = Vec2(x[idx] * pos_ref, x[idx + 1] * pos_ref);
                return 2.0 * dl.dot(pa - pb);
            };
            t.value = [=](const Eigen::VectorXd& x) {
                const double psi_v = x[0] * psi_ref * tau;
                return (psi_v * psi_v - lin(x) - rhs_const) / scale;
            };
            t.gradient = [=](const Eigen::VectorXd& x) {
                Eigen::VectorXd g = Eigen::VectorXd::Zero(x.size());
                g[0] = 2.0 * x[0] * psi_ref * tau * psi_ref * tau / scale;
                int idx = 1;
                if (a_var) {
                    g[idx] = -2.0 * dl.x() * pos_ref / scale;
                    g[idx + 1] = -2.0 * dl.y() * pos_ref / scale;
                    idx += 2;
                }
                if (b_var) {
                    g[idx] = 2.0 * dl.x() * pos_ref / scale;
                    g[idx + 1] = 2.0 * dl.y() * pos_ref / scale;
                }
                return g;
            };
            t.hessian = [=](const Eigen::VectorXd& x) {
                Eigen::MatrixXd h = Eigen::MatrixXd::Zero(x.size(), x.size());
                h(0, 0) = 2.0 * psi_ref * tau * psi_ref * tau / scale;
                return h;
            };
            prog.constraints.push_back(std::move(t));

            // floor/2 <= psi <= V_max + floor (scaled by V_max).
            prog.constraints.push_back(
                [&]() {
                    opt::ConvexTerm lo;
                    lo.vars = {psi};
                    const double bound = 0.5 * settings.min_speed_floor / s.max_uav_speed;
                    lo.value = [bound](const Eigen::VectorXd& x) { return bound - x[0]; };
                    lo.gradient = [](const Eigen::VectorXd&) {
                        return Eigen::VectorXd::Constant(1, -1.0);
                    };
                    lo.hessian = [](const Eigen::VectorXd&) {
                        return Eigen::MatrixXd::Zero(1, 1);
                    };
                    return lo;
                }());
            prog.constraints.push_back(
                [&]() {
                    opt::ConvexTerm hi;
                    hi.vars = {psi};
                    const double bound =
                        (s.max_uav_speed + settings.min_speed_floor) / s.max_uav_speed;
                    hi.value = [bound](const Eigen::VectorXd& x) { return x[0] - bound; };
                    hi.gradient = [](const Eigen::VectorXd&) {
                        return Eigen::VectorXd::Constant(1, 1.0);
                    };
                    hi.hessian = [](const Eigen::VectorXd&) {
                        return Eigen::MatrixXd::Zero(1, 1);
                    };
                    return hi;
                }());
        }

    // Pairwise separation, linearized at the expansion (relaxed like speed).
    for (int k = 0; k < K; ++k)
        for (int i = k + 1; i < K; ++i)
            for (int n = 1; n + 1 < N; ++n) {
                const Vec2 dl = aux.expansion_q[k][n] - aux.expansion_q[i][n];
                const double d_eff2 =
                    std::min(s.min_uav_separation * s.min_uav_separation, dl.squaredNorm()) *
                    (1.0 - 2e-9);
                const std::array<int, 2> qa = out.q_vars[k][n];
                const std::array<int, 2> qb = out.q_vars[i][n];
                std::vector<int> vars = {qa[0], qa[1], qb[0], qb[1]};
                const double scale = s.min_uav_separation * s.min_uav_separation;
                const double rhs = d_eff2 + dl.squaredNorm();
                opt::ConvexTerm t;
                t.vars = vars;
                t.value = [=](const Eigen::VectorXd& x) {
                    const double lin = 2.0 * (dl.x() * (x[0] - x[2]) + dl.y() * (x[1] - x[3])) *
                                       pos_ref;
                    return (rhs - lin) / scale;
                };
                t.gradient = [=](const Eigen::VectorXd&) {
                    Eigen::VectorXd g(4);
                    g << -2.0 * dl.x() * pos_ref / scale, -2.0 * dl.y() * pos_ref / scale,
                        2.0 * dl.x() * pos_ref / scale, 2.0 * dl.y() * pos_ref / scale;
                    return g;
                };
                t.hessian = [](const Eigen::VectorXd&) { return Eigen::MatrixXd::Zero(4, 4); };
                prog.constraints.push_back(std::move(t));
            }

    // Per-UAV energy budget with the convex propulsion upper bound.
    std::vector<double> com_fixed(K, 0.0);
    for (const ActiveCell& c : cells)
        com_fixed[c.k] += s.uav_energy_coeff * d.freq_uav[c.m][c.k][c.n] *
                          d.freq_uav[c.m][c.k][c.n] * c.omega * c.task * c.phi;
    for (int k = 0; k < K; ++k) {
        opt::ConvexTerm t;
        std::vector<int> vars;
        struct Leg {
            int psi_idx;                  // position in vars
            int qa_idx = -1, qb_idx = -1;  // positions in vars, -1 fixed
            Vec2 fa, fb;
        };
        std::vector<Leg> legs;
        for (int n = 1; n < N; ++n) {
            Leg leg;
            leg.psi_idx = static_cast<int>(vars.size());
            vars.push_back(out.psi_vars[k][n]);
            const auto a = q_const_or_var(k, n);
            const auto b = q_const_or_var(k, n - 1);
            leg.fa = a.fixed;
            leg.fb = b.fixed;
            if (a.ids[0] >= 0) {
                leg.qa_idx = static_cast<int>(vars.size());
                vars.push_back(a.ids[0]);
                vars.push_back(a.ids[1]);
            }
            if (b.ids[0] >= 0) {
                leg.qb_idx = static_cast<int>(vars.size());
                vars.push_back(b.ids[0]);
                vars.push_back(b.ids[1]);
            }
            legs.push_back(leg);
        }
        const double e_max = s.uav_energy_budget;
        const double fixed = com_fixed[k];
        const double zeta1 = s.propulsion_c1, zeta2 = s.propulsion_c2;
        const double psi_ref = s.max_uav_speed;
        auto leg_delta = [pos_ref](const Leg& leg, const Eigen::VectorXd& x) {
            Vec2 pa = leg.qa_idx >= 0
                          ? Vec2(x[leg.qa_idx] * pos_ref, x[leg.qa_idx + 1] * pos_ref)
                          : leg.fa;
            Vec2 pb = leg.qb_idx >= 0
                          ? Vec2(x[leg.qb_idx] * pos_ref, x[leg.qb_idx + 1] * pos_ref)
                          : leg.fb;
            return Vec2(pa - pb);
        };
        t.vars = vars;
        t.value = [=](const Eigen::VectorXd& x) {
            double e = fixed;
            for (const Leg& leg : legs) {
                const double psi = x[leg.psi_idx] * psi_ref;
                if (!(psi > 0)) return kInf;
                const double dist = leg_delta(leg, x).norm();
                e += zeta1 * dist * dist * dist / (tau * tau) + tau * zeta2 / psi;
            }
            return (e - e_max) / e_max;
        };
        t.gradient = [=](const Eigen::VectorXd& x) {
            Eigen::VectorXd g = Eigen::VectorXd::Zero(x.size());
            for (const Leg& leg : legs) {
                const double psi = x[leg.psi_idx] * psi_ref;
                g[leg.psi_idx] = -tau * zeta2 / (psi * psi) * psi_ref / e_max;
                const Vec2 dt = leg_delta(leg, x);
                const double dist = dt.norm();
                const Vec2 gq = 3.0 * zeta1 * dist * dt / (tau * tau) * pos_ref / e_max;
                if (leg.qa_idx >= 0) {
                    g[leg.qa_idx] += gq.x();
                    g[leg.qa_idx + 1] += gq.y();
                }
                if (leg.qb_idx >= 0) {
                    g[leg.qb_idx] -= gq.x();
                    g[leg.qb_idx + 1] -= gq.y();
                }
            }
            return g;
        };
        t.hessian = [=](const Eigen::VectorXd& x) {
            Eigen::MatrixXd h = Eigen::MatrixXd::Zero(x.size(), x.size());
            for (const Leg& leg : legs) {
                const double psi = x[leg.psi_idx] * psi_ref;
                h(leg.psi_idx, leg.psi_idx) =
                    2.0 * tau * zeta2 / (psi * psi * psi) * psi_ref * psi_ref / e_max;
                const Vec2 dt = leg_delta(leg, x);
                const double dist = std::max(dt.norm(), 1e-9);
                Eigen::Matrix2d block =
                    3.0 * zeta1 / (tau * tau) *
                    (dist * Eigen::Matrix2d::Identity() + dt * dt.transpose() / dist) *
                    pos_ref * pos_ref / e_max;
                auto add = [&h, &block](int ia, int ib, double sign) {
                    for (int r = 0; r < 2; ++r)
                        for (int c = 0; c < 2; ++c) h(ia + r, ib + c) += sign * block(r, c);
                };
                if (leg.qa_idx >= 0) add(leg.qa_idx, leg.qa_idx, 1.0);
                if (leg.qb_idx >= 0) add(leg.qb_idx, leg.qb_idx, 1.0);
                if (leg.qa_idx >= 0 && leg.qb_idx >= 0) {
                    add(leg.qa_idx, leg.qb_idx, -1.0);
                    add(leg.qb_idx, leg.qa_idx, -1.0);
                }
            }
            return h;
        };
        prog.constraints.push_back(std::move(t));
    }

    // Per-cell rows: latency lower bound on gamma, linearized rate row, and
    // the distance-proxy row in the configured direction.
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const ActiveCell& c = cells[i];
        const int gv = out.gamma_vars[c.m][c.n];
        const int sv = out.s_vars[c.m][c.n];
        const double gref = gamma_ref[i];
        const double sref = s_ref[i];
        const double s_l = aux.expansion_s[c.m][c.n];
        const double cur_rate_room = aux.gamma[c.m][c.n];
        const double lb = std::min(c.gamma_lb, cur_rate_room) * (1.0 - 1e-9);

        // gamma >= lb.
        {
            opt::ConvexTerm t;
            t.vars = {gv};
            const double b = lb / gref;
            t.value = [b](const Eigen::VectorXd& x) { return b - x[0]; };
            t.gradient = [](const Eigen::VectorXd&) {
                return Eigen::VectorXd::Constant(1, -1.0);
            };
            t.hessian = [](const Eigen::VectorXd&) { return Eigen::MatrixXd::Zero(1, 1); };
            prog.constraints.push_back(std::move(t));
        }
        // gamma <= linearized rate(S).
        {
            const double B = s.uav_bandwidth, p = c.power, beta0 = s.ref_channel_gain;
            const double noise = s.uav_noise_power;
            opt::ConvexTerm t;
            t.vars = {gv, sv};
            t.value = [=](const Eigen::VectorXd& x) {
                const double bound = sp4_rate_bound(B, p, beta0, noise, x[1] * sref, s_l);
                if (!std::isfinite(bound)) return kInf;
                return (x[0] * gref - bound) / gref;
            };
            t.gradient = [=](const Eigen::VectorXd& x) {
                const double u = x[1] * sref * noise + p * beta0;
                Eigen::VectorXd g(2);
                g[0] = 1.0;
                g[1] = -B * (sref * noise / (u * std::log(2.0)) - kLog2e / s_l * sref) / gref;
                return g;
            };
            t.hessian = [=](const Eigen::VectorXd& x) {
                const double u = x[1] * sref * noise + p * beta0;
                Eigen::MatrixXd h = Eigen::MatrixXd::Zero(2, 2);
                h(1, 1) = B * sref * noise * sref * noise / (u * u * std::log(2.0)) / gref;
                return h;
            };
            prog.constraints.push_back(std::move(t));
        }
        const auto qr = q_const_or_var(c.k, c.n);
        const bool q_is_var = qr.ids[0] >= 0;
        const Vec2 q_l = aux.expansion_q[c.k][c.n];
        const Vec2 mu = s.mu_positions[c.m];
        const double h2 = s.uav_altitude * s.uav_altitude;
        if (printed_mode) {
            // S <= |q_l - mu|^2 + H^2 + 2 (q_l - mu)'(q - q_l), linear.
            const Vec2 dl = q_l - mu;
            const double base = dl.squaredNorm() + h2 - 2.0 * dl.dot(q_l);
            opt::ConvexTerm t;
            if (q_is_var) {
                t.vars = {sv, qr.ids[0], qr.ids[1]};
                t.value = [=](const Eigen::VectorXd& x) {
                    const double rhs =
                        base + 2.0 * (dl.x() * x[1] + dl.y() * x[2]) * pos_ref;
                    return (x[0] * sref - rhs) / sref;
                };
                t.gradient = [=](const Eigen::VectorXd&) {
                    Eigen::VectorXd g(3);
                    g << 1.0, -2.0 * dl.x() * pos_ref / sref, -2.0 * dl.y() * pos_ref / sref;
                    return g;
                };
                t.hessian = [](const Eigen::VectorXd&) { return Eigen::MatrixXd::Zero(3, 3); };
            } else {
                const double rhs = base + 2.0 * dl.dot(qr.fixed);
                t.vars = {sv};
                t.value = [=](const Eigen::VectorXd& x) { return (x[0] * sref - rhs) / sref; };
                t.gradient = [](const Eigen::VectorXd&) {
                    return Eigen::VectorXd::Constant(1, 1.0);
                };
                t.hessian = [](const Eigen::VectorXd&) { return Eigen::MatrixXd::Zero(1, 1); };
            }
            prog.constraints.push_back(std::move(t));
            // Valid lower bound: the true squared distance never dips below H^2.
            opt::ConvexTerm lo;
            lo.vars = {sv};
            const double bound = 0.999 * h2 / sref;
            lo.value = [bound](const Eigen::VectorXd& x) { return bound - x[0]; };
            lo.gradient = [](const Eigen::VectorXd&) {
                return Eigen::VectorXd::Constant(1, -1.0);
            };
            lo.hessian = [](const Eigen::VectorXd&) { return Eigen::MatrixXd::Zero(1, 1); };
            prog.constraints.push_back(std::move(lo));
        } else {
            // Conservative direction: H^2 + |q - mu|^2 <= S, convex row.
            opt::ConvexTerm t;
            if (q_is_var) {
                t.vars = {sv, qr.ids[0], qr.ids[1]};
                t.value = [=](const Eigen::VectorXd& x) {
                    const Vec2 q(x[1] * pos_ref, x[2] * pos_ref);
                    return (h2 + (q - mu).squaredNorm() - x[0] * sref) / sref;
                };
                t.gradient = [=](const Eigen::VectorXd& x) {
                    const Vec2 q(x[1] * pos_ref, x[2] * pos_ref);
                    Eigen::VectorXd g(3);
                    g << -1.0, 2.0 * (q.x() - mu.x()) * pos_ref / sref,
                        2.0 * (q.y() - mu.y()) * pos_ref / sref;
                    return g;
                };
                t.hessian = [=](const Eigen::VectorXd&) {
                    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(3, 3);
                    h(1, 1) = 2.0 * pos_ref * pos_ref / sref;
                    h(2, 2) = 2.0 * pos_ref * pos_ref / sref;
                    return h;
                };
            } else {
                const double lhs = h2 + (qr.fixed - mu).squaredNorm();
                t.vars = {sv};
                t.value = [=](const Eigen::VectorXd& x) { return (lhs - x[0] * sref) / sref; };
                t.gradient = [](const Eigen::VectorXd&) {
                    return Eigen::VectorXd::Constant(1, -1.0);
                };
                t.hessian = [](const Eigen::VectorXd&) { return Eigen::MatrixXd::Zero(1, 1); };
            }
            prog.constraints.push_back(std::move(t));
        }
    }
    return out;
}

namespace {

TrajectoryAux make_aux_at(const Scenario& s, const Decision& d,
                          const std::vector<std::vector<Vec2>>& tr, double min_speed_floor,
                          bool printed_mode) {
    const int M = s.num_mus, K = s.num_uavs, N = s.num_slots;
    TrajectoryAux aux;
    aux.expansion_q = tr;
    aux.psi.assign(K, std::vector<double>(N, min_speed_floor));
    aux.gamma.assign(M, std::vector<double>(N, 0.0));
    aux.s_proxy.assign(M, std::vector<double>(N, 0.0));
    aux.expansion_s.assign(M, std::vector<double>(N, 0.0));
    const double tau = s.slot_duration;
    for (int k = 0; k < K; ++k)
        for (int n = 1; n < N; ++n) {
            const double v = (tr[k][n] - tr[k][n - 1]).norm() / tau;
            // Strictly inside psi^2 <= v^2 + floor^2.
            aux.psi[k][n] = std::clamp(
                0.95 * std::sqrt(v * v + min_speed_floor * min_speed_floor),
                0.6 * min_speed_floor, (s.max_uav_speed + min_speed_floor) * 0.99);
        }
    for (int m = 0; m < M; ++m)
        for (int n = 0; n < N; ++n) {
            const int k = d.assoc_of(m, n);
            if (k < 0) continue;
            const double dist2 = s.uav_altitude * s.uav_altitude +
                                 (tr[k][n] - s.mu_positions[m]).squaredNorm();
            aux.expansion_s[m][n] = dist2;
            const double p = d.power_uav[m][k][n];
            if (d.offload[m][n].uav <= kZeroShare || s.task_bits[m][n] <= 0 || p <= 0) continue;
            const double rate = s.uav_bandwidth *
                                std::log2(1.0 + p * s.ref_channel_gain /
                                                    (dist2 * s.uav_noise_power));
            // Start strictly inside the rate row and (in printed mode) the
            // distance row.
            aux.s_proxy[m][n] = printed_mode ? dist2 * (1.0 - 1e-6) : dist2 * (1.0 + 1e-6);
            const double bound = sp4_rate_bound(s.uav_bandwidth, p, s.ref_channel_gain,
                                                s.uav_noise_power, aux.s_proxy[m][n], dist2);
            aux.gamma[m][n] = std::min(rate, bound) * (1.0 - 1e-6);
        }
    return aux;
}

}  // namespace

TrajectoryResult sca_solve(const Scenario& s, const Decision& d, const FpWeights& w,
                           const SolverSettings& settings) {
    const int K = s.num_uavs, N = s.num_slots;
    const bool printed_mode = settings.sp4_distance_mode != "conservative";
    TrajectoryResult res;
    res.trajectories = d.trajectories;

    TrajectoryMetrics cur =
        trajectory_metrics(s, d, w, res.trajectories, settings.min_speed_floor);
    res.true_objective = cur.transmit_objective;
    if (cur.transmit_objective == 0.0) {
        res.status = ScaStatus::NoActiveCells;
        res.aux = make_aux_at(s, d, res.trajectories, settings.min_speed_floor, printed_mode);
        return res;
    }
    if (!std::isfinite(cur.transmit_objective) ||
        cur.max_speed > s.max_uav_speed + 1e-6 ||
        (K > 1 && cur.min_separation < s.min_uav_separation - 1e-6)) {
        res.status = ScaStatus::ExpansionInfeasible;
        res.aux = make_aux_at(s, d, res.trajectories, settings.min_speed_floor, printed_mode);
        return res;
    }

    opt::BarrierOptions bopt;
    bopt.initial_weight = settings.barrier_params.initial_weight;
    bopt.multiplier = settings.barrier_params.multiplier;
    bopt.newton_tolerance = settings.barrier_params.newton_tolerance;
    bopt.max_newton_steps = settings.barrier_params.max_newton_steps;
    bopt.gap_tolerance = std::max(settings.barrier_params.gap_tolerance, 1e-7);

    const double lat_tol = 1e-6;
    for (int iter = 1; iter <= settings.sca_max_iters; ++iter) {
        TrajectoryAux aux =
            make_aux_at(s, d, res.trajectories, settings.min_speed_floor, printed_mode);
        ConvexifiedTrajectory cvx = build_convexified(s, d, w, aux, settings);
        if (!cvx.feasible) {
            res.status = ScaStatus::ExpansionInfeasible;
            break;
        }
        if (cvx.program.num_vars == 0) break;
        const opt::ConvexResult sol = opt::solve_convex(cvx.program, bopt);
        if (sol.status != opt::ConvexStatus::Converged) {
            res.status = ScaStatus::SolverFailed;
            break;
        }
        std::vector<std::vector<Vec2>> cand = res.trajectories;
        for (int k = 0; k < K; ++k)
            for (int n = 1; n + 1 < N; ++n)
                cand[k][n] = Vec2(sol.x[cvx.q_vars[k][n][0]] * cvx.pos_ref,
                                  sol.x[cvx.q_vars[k][n][1]] * cvx.pos_ref);

        // Step acceptance on the true objective and the original constraints,
        // with a shrinking blend toward the expansion on rejection.
        bool accepted = false;
        double blend = 1.0;
        ScaStepRecord rec;
        rec.step = iter;
        rec.objective_before = cur.transmit_objective;
        for (int halving = 0; halving <= 5; ++halving) {
            std::vector<std::vector<Vec2>> blended = res.trajectories;
            for (int k = 0; k < K; ++k)
                for (int n = 1; n + 1 < N; ++n)
                    blended[k][n] =
                        res.trajectories[k][n] + blend * (cand[k][n] - res.trajectories[k][n]);
            const TrajectoryMetrics mt =
                trajectory_metrics(s, d, w, blended, settings.min_speed_floor);
            const bool ok =
                mt.transmit_objective <=
                    cur.transmit_objective * (1.0 + 1e-9) + 1e-15 &&
                mt.max_speed <= s.max_uav_speed + 1e-9 &&
                (K <= 1 || mt.min_separation >= s.min_uav_separation - 1e-6) &&
                mt.max_uav_latency <= s.slot_duration + lat_tol &&
                mt.max_budget_excess <= 1e-6 * (1.0 + s.uav_energy_budget);
            if (ok) {
                rec.accepted = true;
                rec.objective_after = mt.transmit_objective;
                rec.max_speed = mt.max_speed;
                rec.min_separation = mt.min_separation;
                rec.endpoint_residual = mt.endpoint_residual;
                rec.max_uav_latency = mt.max_uav_latency;
                res.trajectories = std::move(blended);
                const double before = cur.transmit_objective;
                cur = mt;
                accepted = true;
                res.steps.push_back(rec);
                if (std::abs(before - mt.transmit_objective) <
                    settings.sca_tolerance * std::max(1.0, std::abs(before))) {
                    res.true_objective = cur.transmit_objective;
                    res.aux = make_aux_at(s, d, res.trajectories, settings.min_speed_floor,
                                          printed_mode);
                    return res;
                }
                break;
            }
            blend *= 0.5;
        }
        if (!accepted) {
            rec.accepted = false;
            rec.objective_after = cur.transmit_objective;
            res.steps.push_back(rec);
            break;
        }
    }
    res.true_objective = cur.transmit_objective;
    res.aux = make_aux_at(s, d, res.trajectories, settings.min_speed_floor, printed_mode);
    return res;
}

}  // namespace sagin
