#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "helpers.hpp"
#include "oracles.hpp"
#include "svlq/fredholm.hpp"

using namespace svlq;
using namespace testing;

namespace {

Setup with_cost(const Setup& base, const CostData& c) { return finish(base.cp, base.grid, c); }

double max_abs(const Eigen::MatrixXd& M) { return M.size() ? M.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

TEST_CASE("zero weights give a zero kernel") {
    Setup base = setup("random-smooth", 1, 33);
    CostData c = base.cost;
    for (auto& Q : c.Q) Q.setZero();
    c.G.setZero();
    Setup s = with_cost(base, c);
    FredholmSystem sys = assemble_fredholm(s.dlq, s.cost, 5);
    CHECK(max_abs(sys.Kcal) < 1e-14);
    CHECK(max_abs(sys.f) < 1e-14);
    FeedbackKernel d = solve_direct(sys);
    CHECK(max_abs(d.M) < 1e-14);
    FeedbackKernel g = solve_galerkin(sys, 8);
    CHECK(max_abs(g.M) < 1e-14);
    CHECK(max_abs(solve_iterated_galerkin(sys, g).M) < 1e-14);
    SuperconvergentResult sc = solve_superconvergent(sys, 8, 3);
    CHECK(max_abs(sc.kernel.M) < 1e-14);
}

TEST_CASE("kernel is symmetric when R = I and G = 0") {
    Setup base = setup("constant-coeff", 1, 33);
    CostData c = base.cost;
    c.G.setZero();
    Setup s = with_cost(base, c);
    FredholmSystem sys = assemble_fredholm(s.dlq, s.cost, 0);
    CHECK(max_abs(sys.Kcal - sys.Kcal.transpose()) <= 1e-13 * max_abs(sys.Kcal));
}

TEST_CASE("kernel entries against the loop re-assembly") {
    Setup s = setup("random-smooth", 3, 65);
    FredholmSystem sys = assemble_fredholm(s.dlq, s.cost, 0);
    CHECK(fredholm_quadrature_check(sys, s.dlq, s.cost, 200, 17) <= 1e-4);
}

TEST_CASE("kernel entries against direct quadrature of the integral definition") {
    // A = 0, B = 1, Q = G = R = 1: Psi(tau, t) = (tau - t)^(beta-1), so
    // K(t, xi) = -[int_{t v xi}^T (tau-t)^(beta-1) (tau-xi)^(beta-1) dtau
    //              + (T-t)^(beta-1) (T-xi)^(beta-1)].
    const double beta = 0.75;
    app::ProblemParams p;
    p.a = 0.0;
    auto cp = app::make_problem("constant-coeff", p);
    double prev = 1.0;
    for (std::size_t n : {65, 129, 257}) {
        Grid g = build_grid(n, 1.0);
        Setup s = finish(cp, g, cp.cost(g));
        FredholmSystem sys = assemble_fredholm(s.dlq, s.cost, 0);
        double worst = 0.0;
        for (double t : {0.125, 0.25, 0.5}) {
            for (double xi : {0.0625, 0.375, 0.625}) {
                std::size_t i = g.locate(t), j = g.locate(xi);
                t = g[i];
                xi = g[j];
                double lo = std::max(t, xi);
                double ref = oracle::integral(
                                 [&](double tau) { return std::pow(tau - t, beta - 1) * std::pow(tau - xi, beta - 1); },
                                 lo, 1.0) +
                             std::pow(1 - t, beta - 1) * std::pow(1 - xi, beta - 1);
                double got = -sys.Kcal(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
                worst = std::max(worst, std::abs(got - ref) / std::abs(ref));
            }
        }
        MESSAGE("n=" << n << " max relative deviation " << worst);
        CHECK(worst < prev);
        prev = worst;
    }
    CHECK(prev <= 1e-4);
}

TEST_CASE("direct solve") {
    Setup s = setup("random-smooth", 2, 65);
    for (std::size_t sigma : {0, 20, 64}) {
        FredholmSystem sys = assemble_fredholm(s.dlq, s.cost, sigma);
        FeedbackKernel d = solve_direct(sys);
        CHECK(d.residual <= 1e-10);
        CHECK(fredholm_residual(sys, d.M) <= 1e-10);
        Eigen::MatrixXd def = feedback_gain_from_definition(s.dlq, s.cost, sigma);
        Eigen::Index a = sys.active();
        // Only source columns >= sigma are defined by the operator form.
        CHECK(max_abs(def.bottomRightCorner(a, a) - d.M.bottomRightCorner(a, a)) <=
              1e-9 * max_abs(d.M.bottomRightCorner(a, a)));
    }
    SUBCASE("K = 0 gives M = f") {
        FredholmSystem sys = assemble_fredholm(s.dlq, s.cost, 10);
        sys.Kcal.setZero();
        CHECK(max_abs(solve_direct(sys).M.bottomRows(sys.active()) - sys.f.bottomRows(sys.active())) == 0.0);
    }
}

TEST_CASE("Galerkin family") {
    Setup s = setup("random-smooth", 5, 65);
    FredholmSystem sys = assemble_fredholm(s.dlq, s.cost, 0);
    FeedbackKernel d = solve_direct(sys);

    SUBCASE("full subspace reproduces the direct solve") {
        FeedbackKernel g = solve_galerkin(sys, 65);
        CHECK(kernel_error(sys, g.M, d.M) <= 1e-10 * kernel_error(sys, d.M, 0.0 * d.M));
        FeedbackKernel it = solve_iterated_galerkin(sys, g);
        CHECK(kernel_error(sys, it.M, d.M) <= 1e-10 * kernel_error(sys, d.M, 0.0 * d.M));
    }
    SUBCASE("projector") {
        GalerkinState st = galerkin_setup(sys, 16);
        const Eigen::MatrixXd& P = st.projector;
        CHECK(max_abs(P * P - P) <= 1e-10);
        Eigen::VectorXd w = sys.wm.tail(sys.active());
        Eigen::MatrixXd WP = w.asDiagonal() * P;
        CHECK(max_abs(WP - WP.transpose()) <= 1e-10 * max_abs(WP));
        // The iterated solution projects back onto the Galerkin one.
        FeedbackKernel g = solve_galerkin(sys, 16);
        FeedbackKernel it = solve_iterated_galerkin(sys, g);
        Eigen::Index a = sys.active();
        CHECK(max_abs(P * it.M.bottomRows(a) - g.M.bottomRows(a)) <= 1e-10 * max_abs(g.M));
    }
    SUBCASE("refining the subspace reduces the error") {
        double prev = 1e300;
        for (int dim : {5, 9, 17, 33}) {
            double e = kernel_error(sys, solve_galerkin(sys, dim).M, d.M);
            CHECK(e < prev);
            prev = e;
        }
    }
    SUBCASE("superconvergent iteration") {
        SuperconvergentResult sc = solve_superconvergent(sys, 16, 3, &d);
        FeedbackKernel g = solve_galerkin(sys, 16);
        FeedbackKernel it = solve_iterated_galerkin(sys, g);
        REQUIRE(sc.error_history.size() == 4);
        CHECK(sc.error_history[0] == doctest::Approx(kernel_error(sys, it.M, d.M)).epsilon(1e-12));
        for (std::size_t k = 0; k + 1 < sc.error_history.size(); ++k)
            CHECK((sc.error_history[k + 1] < sc.error_history[k] || sc.error_history[k + 1] < 1e-13));
        SuperconvergentResult zero = solve_superconvergent(sys, 16, 0);
        CHECK(max_abs(zero.kernel.M - it.M) == 0.0);
    }
}

TEST_CASE("method hierarchy over seeds") {
    int hierarchy = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        Setup s = setup("random-smooth", seed, 64);
        FredholmSystem sys = assemble_fredholm(s.dlq, s.cost, 0);
        FeedbackKernel d = solve_direct(sys);
        FeedbackKernel g = solve_galerkin(sys, 16);
        FeedbackKernel it = solve_iterated_galerkin(sys, g);
        SuperconvergentResult sc = solve_superconvergent(sys, 16, 2, &d);
        double eg = kernel_error(sys, g.M, d.M), ei = kernel_error(sys, it.M, d.M);
        hierarchy += sc.error_history.back() <= ei && ei <= eg;
    }
    CHECK(hierarchy >= 18);
}

TEST_CASE("reconstruction in the source argument") {
    Setup s = setup("random-smooth", 4, 33);
    FredholmSystem sys = assemble_fredholm(s.dlq, s.cost, 0);
    FeedbackKernel d = solve_direct(sys);
    int m = s.dlq.m;
    Eigen::MatrixXd at = reconstruct_in_s(d, s.grid, 7, s.grid[12]);
    CHECK(at == blk(d.M, 7, 12, m, m));
    Eigen::MatrixXd mid = reconstruct_in_s(d, s.grid, 7, 0.5 * (s.grid[12] + s.grid[13]));
    CHECK(max_abs(mid - 0.5 * (blk(d.M, 7, 12, m, m) + blk(d.M, 7, 13, m, m))) < 1e-15);
    CHECK_THROWS_AS(reconstruct_in_s(d, s.grid, 7, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(reconstruct_in_s(d, s.grid, 7, -0.1), std::invalid_argument);
}

TEST_CASE("interpolation in s converges") {
    // The direct solve on grid 2n-1 supplies both the knots (even nodes, the
    // grid with n nodes) and the reference values at the odd nodes in between.
    std::vector<double> errs;
    for (std::size_t n : {17, 33, 65}) {
        Setup fine = setup("random-smooth", 6, 2 * n - 1);
        FeedbackKernel df = solve_direct(assemble_fredholm(fine.dlq, fine.cost, 0));
        int m = fine.dlq.m;
        auto nc = static_cast<Eigen::Index>(n);
        FeedbackKernel coarse = df;
        coarse.M.resize(nc * m, nc * m);
        for (Eigen::Index i = 0; i < nc; ++i)
            for (Eigen::Index j = 0; j < nc; ++j) blk(coarse.M, i, j, m, m) = blk(df.M, 2 * i, 2 * j, m, m);
        Grid cg = build_grid(n, 1.0);
        std::size_t ic = cg.locate(0.25);
        auto iff = static_cast<Eigen::Index>(2 * ic);
        double e = 0.0;
        for (std::size_t j = 0; j + 1 < n; ++j) {
            double sm = fine.grid[2 * j + 1];
            // Skip the kink at s = t, the (T - s)^(beta-1) growth from the
            // terminal weight, and the half cell at s = 0.
            if (std::abs(sm - 0.25) < 0.1 || sm > 0.75 || sm < 0.05) continue;
            Eigen::MatrixXd ref = blk(df.M, iff, static_cast<Eigen::Index>(2 * j + 1), m, m);
            e = std::max(e, max_abs(reconstruct_in_s(coarse, cg, ic, sm) - ref));
        }
        MESSAGE("n=" << n << " interpolation error " << e);
        errs.push_back(e);
    }
    CHECK(errs[1] < errs[0] / 3.5);
    CHECK(errs[2] < errs[1] / 3.5);
}

TEST_CASE("feedback control") {
    SUBCASE("matches the oracle with the direct kernel") {
        for (std::uint64_t seed : {1, 2, 3}) {
            Setup s = setup("random-smooth", seed, 65);
            Eigen::MatrixXd u = solve_open_loop(s.dlq);
            CausalTrajectories tr = causal_trajectories(s.dlq, u);
            Eigen::MatrixXd uf = feedback_control(s.dlq, s.cost, tr);
            CHECK(s.dlq.norm(uf - u) <= 1e-6 * (1.0 + s.dlq.norm(u)));
        }
    }
    SUBCASE("approximate kernels give approximate controls") {
        Setup s = setup("random-smooth", 2, 65);
        Eigen::MatrixXd u = solve_open_loop(s.dlq);
        CausalTrajectories tr = causal_trajectories(s.dlq, u);
        FeedbackOptions sc{FredholmMethod::superconvergent, 16, 3};
        FeedbackOptions gal{FredholmMethod::galerkin, 16, 0};
        double esc = rel_l2(s.dlq, feedback_control(s.dlq, s.cost, tr, sc), u);
        double egal = rel_l2(s.dlq, feedback_control(s.dlq, s.cost, tr, gal), u);
        CHECK(esc < egal);
        CHECK(esc < 1e-6);
    }
    SUBCASE("linear weights only") {
        Setup base = setup("random-smooth", 3, 33);
        CostData c = base.cost;
        for (auto& Q : c.Q) Q.setZero();
        c.G.setZero();
        Setup s = with_cost(base, c);
        Eigen::MatrixXd u = solve_open_loop(s.dlq);
        Eigen::MatrixXd uf = feedback_control(s.dlq, s.cost, causal_trajectories(s.dlq, u));
        CHECK(rel_l2(s.dlq, uf, u) <= 1e-10);
    }
    SUBCASE("zero weights") {
        Setup s = setup("zero-cost", 1, 17);
        Eigen::MatrixXd u = solve_open_loop(s.dlq);
        CHECK(max_abs(feedback_control(s.dlq, s.cost, causal_trajectories(s.dlq, u))) == 0.0);
    }
}

TEST_CASE("feedback kernel file round trip") {
    Setup s = setup("random-smooth", 2, 17);
    FeedbackKernel d = solve_direct(assemble_fredholm(s.dlq, s.cost, 3));
    std::stringstream ss;
    save_feedback_kernel(d, 0.75, ss);
    double beta = 0.0;
    FeedbackKernel back = load_feedback_kernel(ss, &beta);
    CHECK(beta == 0.75);
    CHECK(back.sigma == 3);
    CHECK(back.m == d.m);
    CHECK(back.method == FredholmMethod::direct);
    CHECK(back.M == d.M);
}

TEST_CASE("method names") {
    for (auto m : {FredholmMethod::direct, FredholmMethod::galerkin, FredholmMethod::iterated,
                   FredholmMethod::superconvergent})
        CHECK(parse_method(method_name(m)) == m);
    CHECK_THROWS_AS(parse_method("lu"), std::invalid_argument);
}
