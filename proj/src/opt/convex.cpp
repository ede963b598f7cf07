#include "sagin/opt/convex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace sagin::opt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::VectorXd gather(const Eigen::VectorXd& x, const std::vector<int>& vars) {
    Eigen::VectorXd out(vars.size());
    for (std::size_t i = 0; i < vars.size(); ++i) out[i] = x[vars[i]];
    return out;
}

struct Workspace {
    const SmoothConvexProgram& p;
    Eigen::VectorXd grad;                   // barrier gradient
    std::vector<Eigen::Triplet<double>> trips;
    Eigen::SparseMatrix<double> hess;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
    bool pattern_ready = false;

    explicit Workspace(const SmoothConvexProgram& prog)
        : p(prog), grad(prog.num_vars), hess(prog.num_vars, prog.num_vars) {}

    // Barrier value t*f0 - sum ln(-g_i); +inf outside the strict interior.
    double barrier_value(const Eigen::VectorXd& x, double t) const {
        double val = t * p.objective_value(x);
        for (const auto& g : p.constraints) {
            const double gi = g.value(gather(x, g.vars));
            if (!(gi < 0)) return kInf;
            val -= std::log(-gi);
        }
        return std::isfinite(val) ? val : kInf;
    }

    void assemble(const Eigen::VectorXd& x, double t) {
        grad.setZero();
        trips.clear();
        auto add_block = [this](const std::vector<int>& vars, const Eigen::MatrixXd& h,
                                double scale) {
            for (std::size_t a = 0; a < vars.size(); ++a)
                for (std::size_t b = 0; b < vars.size(); ++b)
                    trips.emplace_back(vars[a], vars[b], scale * h(a, b));
        };
        for (const auto& f : p.objective_terms) {
            const Eigen::VectorXd xs = gather(x, f.vars);
            const Eigen::VectorXd g = f.gradient(xs);
            for (std::size_t i = 0; i < f.vars.size(); ++i) grad[f.vars[i]] += t * g[i];
            add_block(f.vars, f.hessian(xs), t);
        }
        for (const auto& c : p.constraints) {
            const Eigen::VectorXd xs = gather(x, c.vars);
            const double gi = c.value(xs);
            const Eigen::VectorXd g = c.gradient(xs);
            const double inv = 1.0 / (-gi);
            for (std::size_t i = 0; i < c.vars.size(); ++i) grad[c.vars[i]] += inv * g[i];
            add_block(c.vars, c.hessian(xs), inv);
            add_block(c.vars, (g * g.transpose()).eval(), inv * inv);
        }
        // Keep a full diagonal so the sparsity pattern is constant across
        // iterations and regularization never changes it.
        for (int i = 0; i < p.num_vars; ++i) trips.emplace_back(i, i, 0.0);
    }

    bool solve_newton(double reg, Eigen::VectorXd& dx) {
        auto t = trips;
        if (reg > 0)
            for (int i = 0; i < p.num_vars; ++i) t.emplace_back(i, i, reg);
        hess.setFromTriplets(t.begin(), t.end());
        if (!pattern_ready) {
            ldlt.analyzePattern(hess);
            pattern_ready = true;
        }
        ldlt.factorize(hess);
        if (ldlt.info() != Eigen::Success) return false;
        dx = ldlt.solve(-grad);
        return dx.allFinite();
    }

    // Dense KKT path for programs with affine equality rows (small sizes).
    bool solve_newton_eq(double reg, Eigen::VectorXd& dx, Eigen::VectorXd& w) {
        const int n = p.num_vars;
        const int me = static_cast<int>(p.b_eq.size());
        auto t = trips;
        Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
        for (const auto& tr : t) h(tr.row(), tr.col()) += tr.value();
        h.diagonal().array() += reg;
        Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + me, n + me);
        kkt.topLeftCorner(n, n) = h;
        kkt.topRightCorner(n, me) = p.a_eq.transpose();
        kkt.bottomLeftCorner(me, n) = p.a_eq;
        Eigen::VectorXd rhs(n + me);
        rhs.head(n) = -grad;
        rhs.tail(me).setZero();
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(kkt);
        const Eigen::VectorXd sol = lu.solve(rhs);
        if (!sol.allFinite()) return false;
        dx = sol.head(n);
        w = sol.tail(me);
        return true;
    }
};

}  // namespace

double SmoothConvexProgram::objective_value(const Eigen::VectorXd& x) const {
    double v = 0;
    for (const auto& f : objective_terms) v += f.value(gather(x, f.vars));
    return v;
}

double SmoothConvexProgram::constraint_value(int i, const Eigen::VectorXd& x) const {
    return constraints[i].value(gather(x, constraints[i].vars));
}

Eigen::VectorXd SmoothConvexProgram::objective_gradient(const Eigen::VectorXd& x) const {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(num_vars);
    for (const auto& f : objective_terms) {
        const Eigen::VectorXd gs = f.gradient(gather(x, f.vars));
        for (std::size_t i = 0; i < f.vars.size(); ++i) g[f.vars[i]] += gs[i];
    }
    return g;
}

ConvexResult solve_convex(const SmoothConvexProgram& p, const BarrierOptions& opt) {
    ConvexResult res;
    res.x = p.start;
    const int m_ineq = static_cast<int>(p.constraints.size());
    const bool has_eq = p.b_eq.size() > 0;

    for (int i = 0; i < m_ineq; ++i) {
        if (!(p.constraint_value(i, res.x) < 0)) {
            res.status = ConvexStatus::NoStrictInterior;
            return res;
        }
    }

    Workspace ws(p);
    double t = std::max(opt.initial_weight, 1e-12);
    double prev_stage_obj = kInf;
    Eigen::VectorXd eq_mult = Eigen::VectorXd::Zero(p.b_eq.size());

    const int max_outer = 200;
    for (int outer = 0; outer < max_outer; ++outer) {
        ++res.outer_iterations;
        bool stalled = false;
        for (int it = 0; it < opt.max_newton_steps; ++it) {
            ws.assemble(res.x, t);
            Eigen::VectorXd dx;
            bool ok = false;
            double reg = 0.0;
            for (int attempt = 0; attempt < 6 && !ok; ++attempt) {
                ok = has_eq ? ws.solve_newton_eq(reg, dx, eq_mult)
                            : ws.solve_newton(reg, dx);
                if (!ok) reg = reg == 0.0 ? 1e-10 * (1.0 + t) : reg * 1e3;
            }
            if (!ok) {
                res.status = ConvexStatus::NumericalBreakdown;
                return res;
            }
            const double decrement = -ws.grad.dot(dx);
            if (decrement * 0.5 < opt.newton_tolerance) break;

            const double base = ws.barrier_value(res.x, t);
            double step = 1.0;
            bool accepted = false;
            for (int ls = 0; ls < 70; ++ls) {
                const Eigen::VectorXd cand = res.x + step * dx;
                const double val = ws.barrier_value(cand, t);
                if (val <= base - 0.25 * step * decrement) {
                    res.x = cand;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            ++res.newton_steps;
            if (!accepted) {
                stalled = true;
                break;
            }
        }

        const double stage_obj = p.objective_value(res.x);
        if (stage_obj > prev_stage_obj + 1e-9 * (1.0 + std::abs(prev_stage_obj)))
            res.outer_objective_monotone = false;
        prev_stage_obj = stage_obj;

        if (m_ineq == 0 || static_cast<double>(m_ineq) / t < opt.gap_tolerance) {
            res.status = stalled && m_ineq > 0 ? ConvexStatus::IterationLimit
                                               : ConvexStatus::Converged;
            break;
        }
        t *= opt.multiplier;
        if (outer == max_outer - 1) res.status = ConvexStatus::IterationLimit;
    }
    if (res.status == ConvexStatus::IterationLimit && m_ineq == 0)
        res.status = ConvexStatus::Converged;

    // KKT certificate at the returned point.
    res.objective = p.objective_value(res.x);
    res.ineq_multipliers.resize(m_ineq);
    Eigen::VectorXd r = p.objective_gradient(res.x);
    const double gscale = std::max(1.0, r.cwiseAbs().maxCoeff());
    for (int i = 0; i < m_ineq; ++i) {
        const auto& c = p.constraints[i];
        const Eigen::VectorXd xs = gather(res.x, c.vars);
        const double gi = c.value(xs);
        const double lam = 1.0 / (t * std::max(-gi, 1e-300));
        res.ineq_multipliers[i] = lam;
        const Eigen::VectorXd g = c.gradient(xs);
        for (std::size_t j = 0; j < c.vars.size(); ++j) r[c.vars[j]] += lam * g[j];
    }
    if (has_eq) {
        // Best-fitting equality multipliers for the certificate.
        const Eigen::VectorXd nu =
            p.a_eq.transpose().colPivHouseholderQr().solve(-r);
        r += p.a_eq.transpose() * nu;
    }
    res.kkt_residual = r.cwiseAbs().maxCoeff() / gscale;
    return res;
}

GradientCheck check_gradients(const SmoothConvexProgram& p, int num_points,
                              std::uint64_t seed, double step_scale) {
    GradientCheck report;
    std::mt19937_64 rng(seed);
    auto unif = [&rng]() { return static_cast<double>(rng() >> 11) * 0x1.0p-53 * 2.0 - 1.0; };

    auto strictly_feasible = [&p](const Eigen::VectorXd& x) {
        for (const auto& c : p.constraints) {
            const double g = c.value(gather(x, c.vars));
            if (!(g < 0) || !std::isfinite(g)) return false;
        }
        return true;
    };

    auto check_term = [&](const ConvexTerm& term, const Eigen::VectorXd& x) {
        Eigen::VectorXd xs = gather(x, term.vars);
        const Eigen::VectorXd g = term.gradient(xs);
        for (int j = 0; j < xs.size(); ++j) {
            const double h = step_scale * (1.0 + std::abs(xs[j]));
            Eigen::VectorXd hi = xs, lo = xs;
            hi[j] += h;
            lo[j] -= h;
            const double fd = (term.value(hi) - term.value(lo)) / (2.0 * h);
            const double err =
                std::abs(fd - g[j]) / std::max({1.0, std::abs(fd), std::abs(g[j])});
            report.max_rel_error = std::max(report.max_rel_error, err);
        }
    };

    double radius = 0.05;
    for (int pt = 0; pt < num_points; ++pt) {
        Eigen::VectorXd x = p.start;
        bool found = false;
        for (int attempt = 0; attempt < 60 && !found; ++attempt) {
            Eigen::VectorXd cand = p.start;
            for (int j = 0; j < cand.size(); ++j)
                cand[j] += radius * (1.0 + std::abs(cand[j])) * unif();
            if (strictly_feasible(cand)) {
                x = cand;
                found = true;
            } else if (attempt % 10 == 9) {
                radius *= 0.5;
            }
        }
        for (const auto& f : p.objective_terms) check_term(f, x);
        for (const auto& c : p.constraints) check_term(c, x);
        ++report.points_checked;
    }
    return report;
}

}  // namespace sagin::opt
