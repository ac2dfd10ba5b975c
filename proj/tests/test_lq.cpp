#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "svlq/errors.hpp"

using namespace svlq;
using namespace testing;
using doctest::Approx;

TEST_CASE("weighted adjoints are exact") {
    Setup s = setup("random-smooth", 5, 33);
    app::Uniform U(1);
    ThetaPair th{s.dlq.Theta, s.dlq.Theta_T};
    Eigen::MatrixXd Tstar = theta_adjoint(th, s.dlq.w, s.dlq.n, s.dlq.m);
    for (int k = 0; k < 5; ++k) {
        Eigen::MatrixXd X = random_matrix(U, s.dlq.n, 33), u = random_matrix(U, s.dlq.m, 33);
        Eigen::VectorXd Tu = s.dlq.Theta * stacked(u);
        double lhs = stacked(X).dot(s.dlq.wn.asDiagonal() * Tu);
        Eigen::MatrixXd TsX = unstack(Tstar * stacked(X), s.dlq.m);
        double rhs = s.dlq.inner(TsX, u);
        CHECK(std::abs(lhs - rhs) <= 1e-12 * (1.0 + std::abs(lhs)));
    }
}

TEST_CASE("zero kernel gives zero Theta") {
    app::ProblemParams p;
    auto cp = app::make_problem("zero-cost", p);
    cp.problem.B = [](double, double) { return Eigen::MatrixXd::Zero(1, 1); };
    Grid g = build_grid(17, 1.0);
    Setup s = finish(cp, g, cp.cost(g));
    CHECK(s.dlq.Theta.cwiseAbs().maxCoeff() == 0.0);
    CHECK(s.dlq.Theta_T.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("Theta is bounded") {
    Setup s = setup("random-smooth", 2, 65);
    // |B|_inf T^beta / beta times the weighted norm of (I + Phi) bounds Theta.
    double Bsup = kernel_sup_norm(s.cp.problem.B, s.grid);
    Eigen::MatrixXd IPhi = Eigen::MatrixXd::Identity(s.dec.Phi_op.rows(), s.dec.Phi_op.cols()) + s.dec.Phi_op;
    Eigen::VectorXd sw = s.dlq.wn.cwiseSqrt();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(sw.asDiagonal() * IPhi * sw.cwiseInverse().asDiagonal());
    double K = Bsup * std::sqrt(static_cast<double>(s.dlq.n * s.dlq.m)) / 0.75 * svd.singularValues()(0);
    app::Uniform U(3);
    for (int k = 0; k < 100; ++k) {
        Eigen::MatrixXd u = random_matrix(U, s.dlq.m, 65);
        Eigen::MatrixXd X = unstack(s.dlq.Theta * stacked(u), s.dlq.n);
        double nx = std::sqrt(stacked(X).dot(s.dlq.wn.asDiagonal() * stacked(X)));
        CHECK(nx <= K * s.dlq.norm(u));
    }
}

TEST_CASE("zero weights: Lambda is R") {
    Setup s = setup("zero-cost", 1, 17);
    Eigen::MatrixXd WR = s.dlq.wm.asDiagonal();
    CHECK((s.dlq.gram - WR).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(s.dlq.ell.cwiseAbs().maxCoeff() == 0.0);
    CHECK(s.dlq.lambda0 == 0.0);
    Eigen::MatrixXd u = solve_open_loop(s.dlq);
    CHECK(u.cwiseAbs().maxCoeff() == 0.0);
    CHECK(cost(s.ds, s.cost, Eigen::MatrixXd::Zero(1, 17)) == 0.0);
    CHECK(verify_bar_u1(s.dlq, s.cost, u) == 0.0);
}

TEST_CASE("quadratic form reproduces the direct cost") {
    for (const char* name : {"random-smooth", "cross-term"}) {
        Setup s = setup(name, 7, 33, GridKind::graded, 2.0);
        Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(s.dlq.m, 33);
        CHECK(cost(s.ds, s.cost, zero) == Approx(s.dlq.lambda0).epsilon(1e-12));
        app::Uniform U(11);
        for (int k = 0; k < 10; ++k) {
            Eigen::MatrixXd u = random_matrix(U, s.dlq.m, 33);
            double J = cost(s.ds, s.cost, u);
            CHECK(std::abs(J - s.dlq.J(u)) <= 1e-8 * (1.0 + std::abs(J)));
        }
    }
}

TEST_CASE("Q = I with B = 0 integrates |psi|^2") {
    app::ProblemParams p;
    auto cp = app::make_problem("constant-coeff", p);
    cp.problem.B = [](double, double) { return Eigen::MatrixXd::Zero(1, 1); };
    Grid g = build_grid(33, 1.0);
    CostData c = zero_cost(33, 1, 1);
    for (auto& Q : c.Q) Q.setIdentity();
    Setup s = finish(cp, g, c);
    Eigen::MatrixXd X = solve_state(s.ds, s.ds.phi);
    double ref = (trapezoid_weights(g).array() * X.row(0).transpose().array().square()).sum();
    CHECK(cost(s.ds, c, Eigen::MatrixXd::Zero(1, 33)) == Approx(ref).epsilon(1e-13));
}

TEST_CASE("B = 0, S = 0: the optimal control is -R^{-1} rho") {
    app::ProblemParams p;
    auto cp = app::make_problem("constant-coeff", p);
    cp.problem.B = [](double, double) { return Eigen::MatrixXd::Zero(1, 1); };
    Grid g = build_grid(17, 1.0);
    CostData c = cp.cost(g);
    for (std::size_t i = 0; i < 17; ++i) {
        c.R[i](0, 0) = 2.0 + g[i];
        c.rho(0, static_cast<Eigen::Index>(i)) = std::sin(3.0 * g[i]);
    }
    Setup s = finish(cp, g, c);
    Eigen::MatrixXd u = solve_open_loop(s.dlq);
    for (std::size_t i = 0; i < 17; ++i)
        CHECK(u(0, static_cast<Eigen::Index>(i)) == Approx(-std::sin(3.0 * g[i]) / (2.0 + g[i])).epsilon(1e-13));
    CHECK(verify_bar_u1(s.dlq, c, u) < 1e-14);
}

TEST_CASE("open-loop optimum") {
    Setup s = setup("random-smooth", 3, 65);
    Eigen::MatrixXd u = solve_open_loop(s.dlq);
    double J0 = cost(s.ds, s.cost, u);
    app::Uniform U(5);
    for (int k = 0; k < 100; ++k) {
        Eigen::MatrixXd v = random_matrix(U, s.dlq.m, 65);
        for (double eps : {-1e-1, -1e-2, 1e-2, 1e-1}) CHECK(cost(s.ds, s.cost, u + eps * v) - J0 >= -1e-10);
        double h = 1e-4;
        double d = (cost(s.ds, s.cost, u + h * v) - cost(s.ds, s.cost, u - h * v)) / (2.0 * h);
        CHECK(std::abs(d) <= 1e-6 * s.dlq.norm(v));
    }
    Eigen::MatrixXd u2 = solve_open_loop_ldlt(s.dlq);
    CHECK(rel_l2(s.dlq, u2, u) < 1e-10);
    CHECK(verify_bar_u1(s.dlq, s.cost, u) <= 1e-6 * (1.0 + s.dlq.norm(u)));
}

TEST_CASE("Lambda is symmetric and coercive") {
    for (std::uint64_t seed : {1, 2, 3}) {
        for (const char* name : {"random-smooth", "cross-term"}) {
            Setup s = setup(name, seed, 33);
            Eigen::MatrixXd L = s.dlq.Lambda();
            Eigen::MatrixXd WL = s.dlq.wm.asDiagonal() * L;
            CHECK((WL - WL.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * WL.cwiseAbs().maxCoeff());
            CHECK(s.dlq.min_generalized_eig >= s.dlq.delta * (1.0 - 1e-6));
        }
    }
}

TEST_CASE("(A4) violations are reported") {
    Grid g = build_grid(9, 1.0);
    CostData c = zero_cost(9, 1, 1);
    c.R[4](0, 0) = -1.0;
    CHECK_THROWS_AS(check_assumption_a4(c), AssumptionError);
    try {
        check_assumption_a4(c);
    } catch (const AssumptionError& e) {
        CHECK(std::string(e.what()).find("R(t) >= delta I") != std::string::npos);
    }
    CostData d = zero_cost(9, 1, 1);
    d.G(0, 0) = -0.5;
    CHECK_THROWS_AS(check_assumption_a4(d), AssumptionError);
    CostData e = zero_cost(9, 1, 1);
    e.S[2](0, 0) = 1.0;
    CHECK_THROWS_AS(check_assumption_a4(e), AssumptionError);
    CHECK(check_assumption_a4(zero_cost(9, 1, 1)) == 1.0);
}

TEST_CASE("terminal cost needs beta > 1/2") {
    app::ProblemParams p;
    p.beta = 0.5;
    auto cp = app::make_problem("constant-coeff", p);
    Grid g = build_grid(9, 1.0);
    CHECK_THROWS_AS(cost(cp.problem, cp.cost(g), Eigen::MatrixXd::Zero(1, 9), g), PreconditionError);
}
