#include <doctest.h>

#include <cmath>
#include <random>

#include "sagin/opt/convex.hpp"

using namespace sagin::opt;

namespace {

ConvexTerm scalar_term(int var, std::function<double(double)> f,
                       std::function<double(double)> df, std::function<double(double)> d2f) {
    ConvexTerm t;
    t.vars = {var};
    t.value = [f](const Eigen::VectorXd& x) { return f(x[0]); };
    t.gradient = [df](const Eigen::VectorXd& x) {
        return Eigen::VectorXd::Constant(1, df(x[0]));
    };
    t.hessian = [d2f](const Eigen::VectorXd& x) {
        return Eigen::MatrixXd::Constant(1, 1, d2f(x[0]));
    };
    return t;
}

}  // namespace

TEST_SUITE("convex") {

TEST_CASE("projection onto a halfspace") {
    SmoothConvexProgram p;
    p.num_vars = 1;
    p.start = Eigen::VectorXd::Constant(1, 0.0);
    p.objective_terms.push_back(scalar_term(
        0, [](double x) { return (x - 2) * (x - 2); }, [](double x) { return 2 * (x - 2); },
        [](double) { return 2.0; }));
    p.constraints.push_back(scalar_term(
        0, [](double x) { return x - 1.0; }, [](double) { return 1.0; },
        [](double) { return 0.0; }));
    const ConvexResult r = solve_convex(p, {});
    REQUIRE(r.status == ConvexStatus::Converged);
    CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(r.kkt_residual < 1e-6);
    CHECK(r.outer_objective_monotone);
}

TEST_CASE("x(e^{1/x}-1) decreases toward its upper bound") {
    SmoothConvexProgram p;
    p.num_vars = 1;
    p.start = Eigen::VectorXd::Constant(1, 1.0);
    auto f = [](double x) { return x * std::expm1(1.0 / x); };
    auto df = [](double x) {
        const double e = std::exp(1.0 / x);
        return e - 1.0 - e / x;
    };
    auto d2f = [](double x) { return std::exp(1.0 / x) / (x * x * x); };
    p.objective_terms.push_back(scalar_term(0, f, df, d2f));
    p.constraints.push_back(scalar_term(
        0, [](double x) { return x - 5.0; }, [](double) { return 1.0; },
        [](double) { return 0.0; }));
    p.constraints.push_back(scalar_term(
        0, [](double x) { return 0.05 - x; }, [](double) { return -1.0; },
        [](double) { return 0.0; }));
    const ConvexResult r = solve_convex(p, {});
    REQUIRE(r.status == ConvexStatus::Converged);
    CHECK(r.x[0] > 4.99);
    // Dense sampling confirms the function is monotone decreasing there.
    double best = 1e300;
    for (double x = 0.05; x <= 5.0; x += 0.001) best = std::min(best, f(x));
    CHECK(r.objective <= best + 1e-6);
}

TEST_CASE("unconstrained quadratic converges in at most two newton steps") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    Eigen::MatrixXd a(3, 3);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) a(i, j) = unif(rng);
    const Eigen::MatrixXd qmat = a.transpose() * a + Eigen::MatrixXd::Identity(3, 3);
    Eigen::VectorXd b(3);
    for (int i = 0; i < 3; ++i) b[i] = unif(rng);

    SmoothConvexProgram p;
    p.num_vars = 3;
    p.start = Eigen::VectorXd::Zero(3);
    ConvexTerm t;
    t.vars = {0, 1, 2};
    t.value = [qmat, b](const Eigen::VectorXd& x) {
        return 0.5 * x.dot(qmat * x) - b.dot(x);
    };
    t.gradient = [qmat, b](const Eigen::VectorXd& x) { return (qmat * x - b).eval(); };
    t.hessian = [qmat](const Eigen::VectorXd&) { return qmat; };
    p.objective_terms.push_back(t);
    const ConvexResult r = solve_convex(p, {});
    REQUIRE(r.status == ConvexStatus::Converged);
    CHECK(r.newton_steps <= 2);
    const Eigen::VectorXd expected = qmat.ldlt().solve(b);
    CHECK((r.x - expected).norm() < 1e-8);
}

TEST_CASE("equality-constrained quadratic via the KKT path") {
    SmoothConvexProgram p;
    p.num_vars = 2;
    p.start = Eigen::Vector2d(1.5, 0.5);  // on the constraint plane
    ConvexTerm t;
    t.vars = {0, 1};
    t.value = [](const Eigen::VectorXd& x) { return x[0] * x[0] + x[1] * x[1]; };
    t.gradient = [](const Eigen::VectorXd& x) { return (2.0 * x).eval(); };
    t.hessian = [](const Eigen::VectorXd&) {
        return (2.0 * Eigen::MatrixXd::Identity(2, 2)).eval();
    };
    p.objective_terms.push_back(t);
    p.a_eq = Eigen::MatrixXd::Ones(1, 2);
    p.b_eq = Eigen::VectorXd::Constant(1, 2.0);
    p.constraints.push_back(scalar_term(
        0, [](double x) { return x - 10.0; }, [](double) { return 1.0; },
        [](double) { return 0.0; }));
    const ConvexResult r = solve_convex(p, {});
    REQUIRE(r.status == ConvexStatus::Converged);
    CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(r.x[1] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(r.kkt_residual < 1e-6);
}

TEST_CASE("infeasible start is reported") {
    SmoothConvexProgram p;
    p.num_vars = 1;
    p.start = Eigen::VectorXd::Constant(1, 3.0);
    p.objective_terms.push_back(scalar_term(
        0, [](double x) { return x * x; }, [](double x) { return 2 * x; },
        [](double) { return 2.0; }));
    p.constraints.push_back(scalar_term(
        0, [](double x) { return x - 1.0; }, [](double) { return 1.0; },
        [](double) { return 0.0; }));
    CHECK(solve_convex(p, {}).status == ConvexStatus::NoStrictInterior);
}

TEST_CASE("gradient checker accepts correct and flags wrong gradients") {
    SmoothConvexProgram p;
    p.num_vars = 2;
    p.start = Eigen::Vector2d(1.0, 1.0);
    ConvexTerm good;
    good.vars = {0, 1};
    good.value = [](const Eigen::VectorXd& x) { return std::exp(x[0]) + x[1] * x[1]; };
    good.gradient = [](const Eigen::VectorXd& x) {
        return Eigen::Vector2d(std::exp(x[0]), 2 * x[1]).eval();
    };
    good.hessian = [](const Eigen::VectorXd& x) {
        Eigen::MatrixXd h = Eigen::MatrixXd::Zero(2, 2);
        h(0, 0) = std::exp(x[0]);
        h(1, 1) = 2.0;
        return h;
    };
    p.objective_terms.push_back(good);
    CHECK(check_gradients(p, 20, 42).max_rel_error < 1e-4);

    SmoothConvexProgram bad = p;
    bad.objective_terms[0].gradient = [](const Eigen::VectorXd& x) {
        return Eigen::Vector2d(std::exp(x[0]) * 1.5, 2 * x[1]).eval();
    };
    CHECK(check_gradients(bad, 20, 42).max_rel_error > 1e-2);
}

}  // TEST_SUITE
