#include "sagin/opt/lp.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace sagin::opt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

enum class VarState { Basic, AtLower, AtUpper };

// Internal equality-form problem: min c'z, A z = b, l <= z <= u, where
// z = [x, slacks, artificials]. Rows are equilibrated to unit max-abs.
struct Tableau {
    Eigen::MatrixXd a;   // m x total
    Eigen::VectorXd b;   // m
    Eigen::VectorXd c;   // total (phase-2 costs)
    Eigen::VectorXd lo, up;
    int n_struct = 0;    // structural vars
    int n_slack = 0;
    int n_art = 0;
    int total() const { return n_struct + n_slack + n_art; }
};

struct SimplexCore {
    Tableau t;
    std::vector<VarState> state;
    std::vector<int> basic;            // size m, variable index per row
    std::vector<int> row_of;           // var -> row or -1
    Eigen::MatrixXd b_inv;             // m x m
    Eigen::VectorXd xb;                // basic values
    Eigen::VectorXd z;                 // full solution vector
    double pivot_tol = 1e-10;
    double cost_tol = 1e-9;
    int iterations = 0;
    int max_iterations = 0;
    bool bland = false;
    int stall = 0;
    double last_obj = kInf;

    int m() const { return static_cast<int>(t.b.size()); }

    void refresh_solution() {
        const int rows = m();
        Eigen::VectorXd rhs = t.b;
        for (int j = 0; j < t.total(); ++j) {
            if (state[j] == VarState::Basic) continue;
            const double v = state[j] == VarState::AtLower ? t.lo[j] : t.up[j];
            z[j] = v;
            if (v != 0.0) rhs -= t.a.col(j) * v;
        }
        xb = b_inv * rhs;
        for (int i = 0; i < rows; ++i) z[basic[i]] = xb[i];
    }

    bool refactorize() {
        const int rows = m();
        Eigen::MatrixXd basis(rows, rows);
        for (int i = 0; i < rows; ++i) basis.col(i) = t.a.col(basic[i]);
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(basis);
        const Eigen::MatrixXd inv = lu.inverse();
        if (!inv.allFinite()) return false;
        b_inv = inv;
        refresh_solution();
        return true;
    }

    double objective(const Eigen::VectorXd& cost) const { return cost.dot(z); }

    // One phase of simplex with the given cost vector. `allow` masks columns
    // eligible to enter. Returns Optimal/Unbounded/IterationLimit.
    LpStatus run(const Eigen::VectorXd& cost, const std::vector<bool>& allow) {
        const int rows = m();
        while (true) {
            if (++iterations > max_iterations) return LpStatus::IterationLimit;
            if (iterations % 60 == 0 && !refactorize()) return LpStatus::IterationLimit;

            const Eigen::VectorXd cb =
                Eigen::VectorXd::NullaryExpr(rows, [&](int i) { return cost[basic[i]]; });
            const Eigen::VectorXd y = b_inv.transpose() * cb;

            // Entering column: Dantzig by default, Bland after a stall.
            int enter = -1;
            double best = cost_tol;
            double enter_dir = 0.0;
            for (int j = 0; j < t.total(); ++j) {
                if (state[j] == VarState::Basic || !allow[j]) continue;
                if (t.lo[j] == t.up[j]) continue;
                const double d = cost[j] - y.dot(t.a.col(j));
                double improve = 0.0, dir = 0.0;
                if (state[j] == VarState::AtLower && d < -cost_tol) {
                    improve = -d;
                    dir = 1.0;
                } else if (state[j] == VarState::AtUpper && d > cost_tol) {
                    improve = d;
                    dir = -1.0;
                } else {
                    continue;
                }
                if (bland) {
                    enter = j;
                    enter_dir = dir;
                    break;
                }
                if (improve > best) {
                    best = improve;
                    enter = j;
                    enter_dir = dir;
                }
            }
            if (enter < 0) return LpStatus::Optimal;

            const Eigen::VectorXd w = b_inv * t.a.col(enter);

            // Ratio test: entering moves by step >= 0 in direction enter_dir,
            // basic i changes by -enter_dir * w[i] per unit step.
            double step = t.up[enter] - t.lo[enter];  // bound-flip distance
            int leave_row = -1;
            double leave_bound = 0.0;
            double best_piv = 0.0;
            for (int i = 0; i < rows; ++i) {
                const double g = enter_dir * w[i];
                double limit = kInf, bound = 0.0;
                if (g > pivot_tol) {
                    limit = (xb[i] - t.lo[basic[i]]) / g;
                    bound = t.lo[basic[i]];
                } else if (g < -pivot_tol && t.up[basic[i]] < kInf) {
                    limit = (xb[i] - t.up[basic[i]]) / g;
                    bound = t.up[basic[i]];
                } else {
                    continue;
                }
                limit = std::max(limit, 0.0);
                const bool better =
                    limit < step - 1e-12 ||
                    (limit < step + 1e-12 &&
                     (bland ? (leave_row >= 0 && basic[i] < basic[leave_row])
                            : std::abs(g) > best_piv));
                if (better) {
                    step = limit;
                    leave_row = i;
                    leave_bound = bound;
                    best_piv = std::abs(g);
                }
            }
            if (step == kInf) return LpStatus::Unbounded;

            // Apply the move.
            xb -= (enter_dir * step) * w;
            for (int i = 0; i < rows; ++i) z[basic[i]] = xb[i];
            z[enter] = (state[enter] == VarState::AtLower) ? t.lo[enter] + enter_dir * step
                                                           : t.up[enter] + enter_dir * step;

            if (leave_row < 0) {
                // Bound flip, basis unchanged.
                state[enter] =
                    state[enter] == VarState::AtLower ? VarState::AtUpper : VarState::AtLower;
            } else {
                const int leave = basic[leave_row];
                state[leave] = (leave_bound == t.lo[leave]) ? VarState::AtLower : VarState::AtUpper;
                z[leave] = leave_bound;
                row_of[leave] = -1;
                state[enter] = VarState::Basic;
                basic[leave_row] = enter;
                row_of[enter] = leave_row;
                xb[leave_row] = z[enter];
                // B_inv update with pivot element w[leave_row].
                const double piv = w[leave_row];
                b_inv.row(leave_row) /= piv;
                for (int i = 0; i < rows; ++i) {
                    if (i == leave_row) continue;
                    const double f = w[i];
                    if (f != 0.0) b_inv.row(i) -= f * b_inv.row(leave_row);
                }
            }

            const double obj = objective(cost);
            if (obj < last_obj - 1e-12 * (1.0 + std::abs(last_obj))) {
                stall = 0;
                last_obj = obj;
            } else if (++stall > 150) {
                bland = true;
            }
        }
    }
};

}  // namespace

LinearProgram LinearProgram::sized(int vars, int ineq_rows, int eq_rows) {
    LinearProgram lp;
    lp.c = Eigen::VectorXd::Zero(vars);
    lp.a_ineq = Eigen::MatrixXd::Zero(ineq_rows, vars);
    lp.b_ineq = Eigen::VectorXd::Zero(ineq_rows);
    lp.a_eq = Eigen::MatrixXd::Zero(eq_rows, vars);
    lp.b_eq = Eigen::VectorXd::Zero(eq_rows);
    lp.lower = Eigen::VectorXd::Zero(vars);
    lp.upper = Eigen::VectorXd::Constant(vars, kInf);
    return lp;
}

LpResult solve_lp(const LinearProgram& lp, double tol) {
    const int n = lp.num_vars();
    const int mi = static_cast<int>(lp.b_ineq.size());
    const int me = static_cast<int>(lp.b_eq.size());
    const int rows = mi + me;

    for (int j = 0; j < n; ++j) {
        if (!std::isfinite(lp.lower[j]))
            throw std::invalid_argument("solve_lp: lower bounds must be finite");
        if (lp.upper[j] < lp.lower[j])
            throw std::invalid_argument("solve_lp: upper < lower bound");
    }

    LpResult res;
    res.x = Eigen::VectorXd::Zero(n);
    res.dual_ineq = Eigen::VectorXd::Zero(mi);
    res.dual_eq = Eigen::VectorXd::Zero(me);
    res.reduced_cost = Eigen::VectorXd::Zero(n);

    if (rows == 0) {
        // Box-only problem: each variable sits at its cheaper bound.
        for (int j = 0; j < n; ++j) {
            if (lp.c[j] > 0) {
                res.x[j] = lp.lower[j];
            } else if (lp.c[j] < 0) {
                if (lp.upper[j] == kInf) {
                    res.status = LpStatus::Unbounded;
                    return res;
                }
                res.x[j] = lp.upper[j];
            } else {
                res.x[j] = lp.lower[j];
            }
            res.reduced_cost[j] = lp.c[j];
        }
        res.objective = lp.c.dot(res.x);
        res.status = LpStatus::Optimal;
        return res;
    }

    SimplexCore s;
    s.t.n_struct = n;
    s.t.n_slack = mi;
    s.t.n_art = rows;
    const int total = s.t.total();
    s.t.a = Eigen::MatrixXd::Zero(rows, total);
    s.t.b = Eigen::VectorXd::Zero(rows);
    s.t.c = Eigen::VectorXd::Zero(total);
    s.t.lo = Eigen::VectorXd::Zero(total);
    s.t.up = Eigen::VectorXd::Constant(total, kInf);

    Eigen::VectorXd row_scale = Eigen::VectorXd::Ones(rows);
    for (int i = 0; i < mi; ++i) {
        double sc = lp.a_ineq.row(i).cwiseAbs().maxCoeff();
        if (!(sc > 0)) sc = 1.0;
        row_scale[i] = sc;
        s.t.a.row(i).head(n) = lp.a_ineq.row(i) / sc;
        s.t.a(i, n + i) = 1.0;  // slack
        s.t.b[i] = lp.b_ineq[i] / sc;
    }
    for (int i = 0; i < me; ++i) {
        double sc = lp.a_eq.row(i).cwiseAbs().maxCoeff();
        if (!(sc > 0)) sc = 1.0;
        row_scale[mi + i] = sc;
        s.t.a.row(mi + i).head(n) = lp.a_eq.row(i) / sc;
        s.t.b[mi + i] = lp.b_eq[i] / sc;
    }
    double cost_scale = lp.c.cwiseAbs().maxCoeff();
    if (!(cost_scale > 0)) cost_scale = 1.0;
    s.t.c.head(n) = lp.c / cost_scale;
    s.t.lo.head(n) = lp.lower;
    s.t.up.head(n) = lp.upper;

    s.state.assign(total, VarState::AtLower);
    s.row_of.assign(total, -1);
    s.z = Eigen::VectorXd::Zero(total);
    s.basic.resize(rows);
    s.b_inv = Eigen::MatrixXd::Identity(rows, rows);
    s.xb = Eigen::VectorXd::Zero(rows);
    s.max_iterations = 400 + 120 * (rows + n);
    s.cost_tol = std::max(tol, 1e-12);

    // Phase 1: artificials absorb the residual of the all-at-lower start.
    Eigen::VectorXd resid = s.t.b;
    for (int j = 0; j < n; ++j)
        if (lp.lower[j] != 0.0) resid -= s.t.a.col(j).eval() * lp.lower[j];
    Eigen::VectorXd phase1 = Eigen::VectorXd::Zero(total);
    for (int i = 0; i < rows; ++i) {
        const int aj = n + mi + i;
        s.t.a(i, aj) = resid[i] >= 0 ? 1.0 : -1.0;
        s.basic[i] = aj;
        s.row_of[aj] = i;
        s.state[aj] = VarState::Basic;
        phase1[aj] = 1.0;
    }
    s.refactorize();  // basis is diag(+-1), not the identity

    std::vector<bool> allow(total, true);
    s.last_obj = s.objective(phase1);
    LpStatus st = s.run(phase1, allow);
    if (st == LpStatus::IterationLimit) {
        res.status = st;
        res.iterations = s.iterations;
        return res;
    }
    const double feas_tol = std::max(tol, 1e-9) * (1.0 + s.t.b.cwiseAbs().maxCoeff());
    if (s.objective(phase1) > feas_tol) {
        res.status = LpStatus::Infeasible;
        res.iterations = s.iterations;
        return res;
    }

    // Drive basic artificials to nonbasic where possible; redundant rows keep
    // a pinned artificial.
    for (int i = 0; i < rows; ++i) {
        const int v = s.basic[i];
        if (v < n + mi) continue;
        int pivot_col = -1;
        double best = 1e-7;
        for (int j = 0; j < n + mi; ++j) {
            if (s.state[j] == VarState::Basic) continue;
            const double e = s.b_inv.row(i).dot(s.t.a.col(j));
            if (std::abs(e) > best) {
                best = std::abs(e);
                pivot_col = j;
            }
        }
        if (pivot_col < 0) continue;
        const Eigen::VectorXd w = s.b_inv * s.t.a.col(pivot_col);
        s.state[v] = VarState::AtLower;
        s.row_of[v] = -1;
        s.basic[i] = pivot_col;
        s.row_of[pivot_col] = i;
        s.state[pivot_col] = VarState::Basic;
        const double piv = w[i];
        s.b_inv.row(i) /= piv;
        for (int r = 0; r < rows; ++r)
            if (r != i && w[r] != 0.0) s.b_inv.row(r) -= w[r] * s.b_inv.row(i);
        s.refresh_solution();
    }
    for (int i = 0; i < rows; ++i) {
        const int aj = n + mi + i;
        s.t.up[aj] = 0.0;  // artificials pinned for phase 2
        allow[aj] = false;
    }

    s.bland = false;
    s.stall = 0;
    s.last_obj = s.objective(s.t.c);
    st = s.run(s.t.c, allow);
    res.iterations = s.iterations;
    if (st != LpStatus::Optimal) {
        res.status = st;
        return res;
    }

    s.refactorize();
    res.x = s.z.head(n);
    res.objective = lp.c.dot(res.x);
    res.status = LpStatus::Optimal;

    // Duals and reduced costs, unscaled to the original rows.
    const Eigen::VectorXd cb =
        Eigen::VectorXd::NullaryExpr(rows, [&](int i) { return s.t.c[s.basic[i]]; });
    const Eigen::VectorXd y = s.b_inv.transpose() * cb;
    for (int i = 0; i < mi; ++i) res.dual_ineq[i] = -y[i] * cost_scale / row_scale[i];
    for (int i = 0; i < me; ++i) res.dual_eq[i] = -y[mi + i] * cost_scale / row_scale[mi + i];
    for (int j = 0; j < n; ++j)
        res.reduced_cost[j] = (s.t.c[j] - y.dot(s.t.a.col(j))) * cost_scale;
    return res;
}

}  // namespace sagin::opt
