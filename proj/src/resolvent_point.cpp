// Pointwise resolvent. With r = t - s,
//   Phi = A r^(beta-1) + r^(2beta-1) G2 + r^(3beta-1) W,
// where G2, G3 are the first two iterated kernels in bounded form and W solves
//   W(t,s) = G3(t,s) + r^beta int_0^1 (1-x)^(beta-1) x^(3beta-1) A(t,tau) W(tau,s) dx,
// tau = s + r x. W is resolved on the grid nodes with piecewise-quadratic
// product weights; G2 and G3 use Gauss-Jacobi rules.
#include <cmath>
#include <vector>

#include <boost/math/special_functions/beta.hpp>

#include "detail.hpp"
#include "svlq/errors.hpp"
#include "svlq/quadrature.hpp"

namespace svlq::detail {

namespace {

constexpr int kJacobiPoints = 16;

Eigen::MatrixXd second_kernel(const ProblemData& p, const Rule& rule, double t, double s) {
    double r = t - s;
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(p.n, p.n);
    for (std::size_t g = 0; g < rule.x.size(); ++g) {
        double tau = s + r * rule.x[g];
        acc.noalias() += rule.w[g] * p.A(t, tau) * p.A(tau, s);
    }
    return acc;
}

Eigen::MatrixXd third_kernel(const ProblemData& p, const Rule& outer, const Rule& inner, double t,
                             double s) {
    double r = t - s;
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(p.n, p.n);
    for (std::size_t g = 0; g < outer.x.size(); ++g) {
        double tau = s + r * outer.x[g];
        acc.noalias() += outer.w[g] * p.A(t, tau) * second_kernel(p, inner, tau, s);
    }
    return acc;
}

// Weights on x_k = (tau_k - s)/r, k = 0..m, for (1-x)^(beta-1) x^(3beta-1).
Eigen::VectorXd remainder_weights(const Grid& grid, std::size_t i, std::size_t j, double beta) {
    std::size_t m = i - j;
    double r = grid.gap(i, j);
    std::vector<double> x(m + 1), y(m + 1);
    for (std::size_t k = 0; k <= m; ++k) {
        x[k] = grid.gap(j + k, j) / r;
        y[k] = grid.gap(i, j + k) / r;
    }
    double a = beta - 1.0, b = 3.0 * beta - 1.0;
    Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m + 1));
    auto add = [&](std::size_t first, std::size_t count, std::size_t from, std::size_t to) {
        Eigen::VectorXd pw = panel_weights(std::span(x).subspan(first, count),
                                           std::span(y).subspan(first, count), a, b, from, to);
        for (std::size_t q = 0; q < count; ++q) w(static_cast<Eigen::Index>(first + q)) += pw(q);
    };
    if (m == 1) {
        add(0, 2, 0, 1);
        return w;
    }
    std::size_t start = 0;
    if (m % 2 == 1) {
        add(0, 3, 0, 1);
        start = 1;
    }
    for (std::size_t k = start; k + 2 <= m; k += 2) add(k, 3, 0, 2);
    return w;
}

}  // namespace

FactoredKernel point_resolvent(const ProblemData& problem, const DiscreteState& ds) {
    const Grid& grid = ds.grid;
    double beta = ds.beta();
    int n = ds.n;
    auto N = static_cast<Eigen::Index>(grid.size());
    Rule r2 = gauss_jacobi(kJacobiPoints, beta - 1.0, beta - 1.0);
    Rule r3 = gauss_jacobi(kJacobiPoints, beta - 1.0, 2.0 * beta - 1.0);
    double b2 = boost::math::beta(beta, beta), b3 = boost::math::beta(beta, 2.0 * beta);

    FactoredKernel k = zero_kernel(grid, beta, n, n, Sampling::point);
    k.C = ds.Asmp;
    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(N * n, N * n);
    Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
    for (Eigen::Index j = 0; j < N; ++j) {
        Eigen::MatrixXd ajj = blk(ds.Asmp, j, j, n, n);
        blk(W, j, j, n, n) = b2 * b3 * ajj * ajj * ajj;
        double s = grid[static_cast<std::size_t>(j)];
        for (Eigen::Index i = j + 1; i < N; ++i) {
            auto I_ = static_cast<std::size_t>(i), J_ = static_cast<std::size_t>(j);
            double t = grid[I_];
            double r = grid.gap(I_, J_);
            double rb = std::pow(r, beta);
            Eigen::MatrixXd g2 = second_kernel(problem, r2, t, s);
            Eigen::MatrixXd g3 = third_kernel(problem, r3, r2, t, s);
            Eigen::VectorXd w = remainder_weights(grid, I_, J_, beta);
            Eigen::Index m = i - j;
            Eigen::MatrixXd rhs = g3;
            for (Eigen::Index q = 0; q < m; ++q)
                rhs.noalias() += rb * w(q) * blk(ds.Asmp, i, j + q, n, n) * blk(W, j + q, j, n, n);
            Eigen::MatrixXd M = I - rb * w(m) * blk(ds.Asmp, i, i, n, n);
            Eigen::PartialPivLU<Eigen::MatrixXd> lu(M);
            if (!(std::abs(lu.determinant()) > 1e-12))
                throw NumericalError("pointwise resolvent step singular; refine the grid");
            blk(W, i, j, n, n) = lu.solve(rhs);
            blk(k.D, i, j, n, n) =
                std::pow(r, 2.0 * beta - 1.0) * g2 + std::pow(r, 3.0 * beta - 1.0) * blk(W, i, j, n, n);
        }
    }
    double a_norm = 0.0;
    for (Eigen::Index i = 0; i < N; ++i)
        for (Eigen::Index j = 0; j <= i; ++j)
            a_norm = std::max(a_norm, blk(ds.Asmp, i, j, n, n).cwiseAbs().rowwise().sum().maxCoeff());
    k.bound = a_norm + gronwall_constant(a_norm, beta, grid.T()) * a_norm * a_norm * b2 *
                           std::pow(grid.T(), beta);
    ResolventResiduals res = resolvent_residuals(problem, k);
    k.residual = res.phi;
    k.residual_dual = res.phi_star;
    return k;
}

}  // namespace svlq::detail
