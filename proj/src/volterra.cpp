#include "svlq/volterra.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <boost/math/special_functions/beta.hpp>
#include <spdlog/spdlog.h>

#include "detail.hpp"
#include "svlq/errors.hpp"
#include "svlq/quadrature.hpp"

namespace svlq {

void ProblemData::validate(bool lq) const {
    if (!A || !B || !phi) throw std::invalid_argument("problem coefficients are not set");
    if (n < 1 || m < 1) throw std::invalid_argument("state and control dimensions must be positive");
    if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("beta must lie in (0,1)");
    if (!(T > 0.0)) throw std::invalid_argument("horizon T must be positive");
    if (lq && !(beta > 0.5))
        throw PreconditionError("(A3) requires beta > 1/2 for the terminal cost");
}

Eigen::MatrixXd sample_phi(const ProblemData& problem, const Grid& grid) {
    auto N = static_cast<Eigen::Index>(grid.size());
    Eigen::MatrixXd out(problem.n, N);
    for (Eigen::Index i = 0; i < N; ++i) {
        Eigen::VectorXd v = problem.phi(grid[static_cast<std::size_t>(i)]);
        if (v.size() != problem.n) throw std::invalid_argument("phi has the wrong dimension");
        out.col(i) = v;
    }
    if (!out.col(0).allFinite()) out.col(0) = out.col(1);
    return out;
}

DiscreteState discretize(const ProblemData& problem, const Grid& grid) {
    problem.validate();
    if (std::abs(grid.T() - problem.T) > 1e-14 * problem.T)
        throw std::invalid_argument("grid horizon differs from problem horizon");
    DiscreteState ds{grid, product_weights(grid, problem.beta), trapezoid_rows(grid), problem.n,
                     problem.m, {}, {}, {}, {}, {}};
    auto N = static_cast<Eigen::Index>(grid.size());
    int n = problem.n, m = problem.m;
    ds.Asmp = Eigen::MatrixXd::Zero(N * n, N * n);
    ds.Bsmp = Eigen::MatrixXd::Zero(N * n, N * m);
    ds.calA = ds.Asmp;
    ds.calB = ds.Bsmp;
    for (Eigen::Index i = 0; i < N; ++i) {
        double t = grid[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j <= i; ++j) {
            double s = grid[static_cast<std::size_t>(j)];
            Eigen::MatrixXd a = problem.A(t, s), b = problem.B(t, s);
            if (a.rows() != n || a.cols() != n || b.rows() != n || b.cols() != m)
                throw std::invalid_argument("coefficient has the wrong shape");
            if (!a.allFinite() || !b.allFinite())
                throw std::invalid_argument("coefficient sample is not finite");
            blk(ds.Asmp, i, j, n, n) = a;
            blk(ds.Bsmp, i, j, n, m) = b;
            double w = ds.weights.w(i, j);
            blk(ds.calA, i, j, n, n) = w * a;
            blk(ds.calB, i, j, n, m) = w * b;
        }
    }
    ds.phi = sample_phi(problem, grid);
    return ds;
}

Eigen::MatrixXd solve_lower(const Eigen::MatrixXd& L, int bs, const Eigen::MatrixXd& rhs) {
    if (L.rows() != L.cols() || L.rows() != rhs.rows() || L.rows() % bs != 0)
        throw std::invalid_argument("block system has inconsistent shapes");
    Eigen::Index nb = L.rows() / bs;
    Eigen::MatrixXd X(rhs.rows(), rhs.cols());
    Eigen::MatrixXd I = Eigen::MatrixXd::Identity(bs, bs);
    for (Eigen::Index i = 0; i < nb; ++i) {
        Eigen::MatrixXd r = rhs.middleRows(i * bs, bs);
        if (i > 0) r.noalias() += L.block(i * bs, 0, bs, i * bs) * X.topRows(i * bs);
        Eigen::MatrixXd M = I - L.block(i * bs, i * bs, bs, bs);
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(M);
        double det = std::abs(lu.determinant());
        if (!(det > 1e-12))
            throw NumericalError(
                "implicit step matrix singular at node " + std::to_string(i) +
                "; the grid is too coarse relative to |A| T^beta / beta");
        X.middleRows(i * bs, bs) = lu.solve(r);
    }
    return X;
}

FactoredKernel resolvent(const ProblemData& problem, const Grid& grid, Sampling scheme) {
    DiscreteState ds = discretize(problem, grid);
    if (scheme == Sampling::point) return detail::point_resolvent(problem, ds);
    return resolvent(ds, scheme);
}

FactoredKernel resolvent(const DiscreteState& ds, Sampling scheme) {
    if (scheme == Sampling::point)
        throw std::invalid_argument("point resolvent needs the problem coefficients");
    int n = ds.n;
    auto N = static_cast<Eigen::Index>(ds.grid.size());
    Eigen::MatrixXd R = solve_lower(ds.calA, n, ds.calA);
    FactoredKernel k = zero_kernel(ds.grid, ds.beta(), n, n, Sampling::cell);
    k.C = ds.Asmp;
    for (Eigen::Index i = 1; i < N; ++i)
        for (Eigen::Index j = 0; j <= i; ++j)
            blk(k.D, i, j, n, n) = (blk(R, i, j, n, n) - blk(ds.calA, i, j, n, n)) / ds.trap(i, j);
    // Both discrete resolvent identities, R = A + A R and R = A + R A.
    double scale = std::max(1.0, R.cwiseAbs().maxCoeff());
    k.residual = (R - ds.calA - ds.calA * R).cwiseAbs().maxCoeff() / scale;
    k.residual_dual = (R - ds.calA - R * ds.calA).cwiseAbs().maxCoeff() / scale;
    return k;
}

Eigen::MatrixXd solve_state(const ProblemData& problem, const Grid& grid,
                            const Eigen::MatrixXd& xi) {
    return solve_state(discretize(problem, grid), xi);
}

Eigen::MatrixXd solve_state(const DiscreteState& ds, const Eigen::MatrixXd& xi) {
    auto N = static_cast<Eigen::Index>(ds.grid.size());
    if (xi.rows() != ds.n || xi.cols() != N)
        throw std::invalid_argument("forcing trajectory does not match the grid");
    Eigen::VectorXd x = solve_lower(ds.calA, ds.n, stacked(xi));
    return unstack(x, ds.n);
}

Eigen::MatrixXd state_for_control(const DiscreteState& ds, const Eigen::MatrixXd& u) {
    auto N = static_cast<Eigen::Index>(ds.grid.size());
    if (u.rows() != ds.m || u.cols() != N)
        throw std::invalid_argument("control does not match the grid");
    Eigen::VectorXd xi = stacked(ds.phi) + ds.calB * stacked(u);
    return solve_state(ds, unstack(xi, ds.n));
}

StateDecomposition decompose(const ProblemData& problem, const Grid& grid,
                             const FactoredKernel& Phi) {
    return decompose(discretize(problem, grid), Phi);
}

StateDecomposition decompose(const DiscreteState& ds, const FactoredKernel& Phi_in) {
    if (!Phi_in.grid.same_as(ds.grid)) throw std::invalid_argument("resolvent computed on another grid");
    FactoredKernel Phi = Phi_in.sampling == Sampling::cell ? Phi_in : resolvent(ds, Sampling::cell);
    int n = ds.n, m = ds.m;
    auto N = static_cast<Eigen::Index>(ds.grid.size());
    StateDecomposition dec{ds.grid, ds.beta(), {}, {}, Phi,
                           zero_kernel(ds.grid, ds.beta(), n, m, Sampling::cell), {}, {}, {}};
    dec.Phi_op = operator_form(Phi, ds.weights);
    Eigen::MatrixXd RB = dec.Phi_op * ds.calB;
    dec.Psi.C = ds.Bsmp;
    for (Eigen::Index i = 1; i < N; ++i)
        for (Eigen::Index j = 0; j <= i; ++j)
            blk(dec.Psi.D, i, j, n, m) = blk(RB, i, j, n, m) / ds.trap(i, j);
    dec.Theta = ds.calB + RB;
    Eigen::VectorXd psi = stacked(ds.phi) + dec.Phi_op * stacked(ds.phi);
    dec.psi = unstack(psi, n);
    dec.psi_T = dec.psi.col(N - 1);
    dec.Psi_T_row = Eigen::MatrixXd::Zero(n, N * m);
    for (Eigen::Index j = 0; j + 1 < N; ++j)
        dec.Psi_T_row.middleCols(j * m, m) =
            dec.Psi.value(static_cast<std::size_t>(N - 1), static_cast<std::size_t>(j));
    return dec;
}

ResolventResiduals resolvent_residuals(const ProblemData& problem, const FactoredKernel& Phi) {
    const Grid& grid = Phi.grid;
    double beta = Phi.beta;
    int n = Phi.rows;
    auto N = static_cast<Eigen::Index>(grid.size());
    Eigen::MatrixXd V = Eigen::MatrixXd::Zero(N * n, N * n);
    Eigen::MatrixXd Asmp = Eigen::MatrixXd::Zero(N * n, N * n);
    for (Eigen::Index i = 0; i < N; ++i)
        for (Eigen::Index j = 0; j <= i; ++j) {
            auto I = static_cast<std::size_t>(i), J = static_cast<std::size_t>(j);
            blk(Asmp, i, j, n, n) = problem.A(grid[I], grid[J]);
            blk(V, i, j, n, n) = i == j ? blk(Asmp, i, j, n, n).eval() : Phi.bounded(I, J);
        }
    double scale = std::max(V.cwiseAbs().maxCoeff(), 1e-300);
    ResolventResiduals res;
    std::vector<double> x, y;
    for (Eigen::Index i = 1; i < N; ++i) {
        for (Eigen::Index j = 0; j < i; ++j) {
            auto I = static_cast<std::size_t>(i), J = static_cast<std::size_t>(j);
            double r = grid.gap(I, J);
            Eigen::Index m = i - j;
            Eigen::VectorXd w = Eigen::VectorXd::Zero(m + 1);
            for (Eigen::Index k = 0; k < m; ++k) {
                auto K = static_cast<std::size_t>(j + k);
                double xs[2] = {grid.gap(K, J) / r, grid.gap(K + 1, J) / r};
                double ys[2] = {grid.gap(I, K) / r, grid.gap(I, K + 1) / r};
                Eigen::VectorXd pw = panel_weights(xs, ys, beta - 1.0, beta - 1.0);
                w(k) += pw(0);
                w(k + 1) += pw(1);
            }
            double rb = std::pow(r, beta);
            Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(n, n), acc_star = acc;
            for (Eigen::Index k = 0; k <= m; ++k) {
                Eigen::Index tau = j + k;
                acc.noalias() += w(k) * blk(Asmp, i, tau, n, n) * blk(V, tau, j, n, n);
                acc_star.noalias() += w(k) * blk(V, i, tau, n, n) * blk(Asmp, tau, j, n, n);
            }
            Eigen::MatrixXd v = blk(V, i, j, n, n), a = blk(Asmp, i, j, n, n);
            res.phi = std::max(res.phi, (v - a - rb * acc).cwiseAbs().maxCoeff());
            res.phi_star = std::max(res.phi_star, (v - a - rb * acc_star).cwiseAbs().maxCoeff());
        }
    }
    res.phi /= scale;
    res.phi_star /= scale;
    return res;
}

double gronwall_constant(double a_norm, double beta, double T) {
    if (!(a_norm > 0.0)) return 0.0;
    double la = std::log(a_norm), lg = std::lgamma(beta), lT = std::log(T);
    double E = 0.0;
    for (int k = 1; k < 2000; ++k) {
        double term = std::exp(k * (la + lg) + (k - 1) * beta * lT - std::lgamma(k * beta));
        E += term;
        if (k > 5 && term < 1e-17 * E) break;
    }
    return (E - a_norm) / (a_norm * a_norm * boost::math::beta(beta, beta) * std::pow(T, beta));
}

double kernel_sup_norm(const ProblemData::Kernel& k, const Grid& grid) {
    double s = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i)
        for (std::size_t j = 0; j <= i; ++j)
            s = std::max(s, k(grid[i], grid[j]).cwiseAbs().rowwise().sum().maxCoeff());
    return s;
}

double resolvent_bound_ratio(const FactoredKernel& Phi, double a_norm) {
    double K = gronwall_constant(a_norm, Phi.beta, Phi.grid.T());
    double B = boost::math::beta(Phi.beta, Phi.beta);
    double worst = 0.0;
    for (std::size_t i = 1; i < Phi.nodes(); ++i)
        for (std::size_t j = 0; j < i; ++j) {
            double v = Phi.bounded(i, j).cwiseAbs().rowwise().sum().maxCoeff();
            double bound = a_norm + K * a_norm * a_norm * B * std::pow(Phi.grid.gap(i, j), Phi.beta);
            if (bound > 0.0) worst = std::max(worst, v / bound);
            else if (v > 0.0) worst = std::numeric_limits<double>::infinity();
        }
    return worst;
}

Eigen::MatrixXd sample_control(const ControlSampler& u, const Grid& grid, int m) {
    auto N = static_cast<Eigen::Index>(grid.size());
    Eigen::MatrixXd out(m, N);
    for (Eigen::Index i = 0; i < N; ++i) {
        auto I = static_cast<std::size_t>(i);
        Eigen::VectorXd v = u(grid[I], grid.tail(I));
        if (v.size() != m) throw std::invalid_argument("control has the wrong dimension");
        out.col(i) = v;
    }
    return out;
}

ContinuityReport check_continuity_at_T(const ProblemData& problem, const Grid& grid,
                                       const ControlSampler& u) {
    if (!(problem.beta > 0.5))
        throw PreconditionError("(A3) requires beta > 1/2 for continuity at T");
    ContinuityReport rep;
    std::size_t intervals = grid.size() - 1;
    for (int level = 0; level < 3; ++level) {
        Grid g = build_grid(intervals * (std::size_t{1} << level) + 1, grid.T(), grid.kind(),
                            grid.exponent());
        DiscreteState ds = discretize(problem, g);
        Eigen::MatrixXd X = state_for_control(ds, sample_control(u, g, problem.m));
        Eigen::Index last = X.cols() - 1;
        double jump = 0.0;
        for (Eigen::Index i = std::max<Eigen::Index>(0, last - 10); i < last; ++i)
            jump = std::max(jump, (X.col(i) - X.col(last)).cwiseAbs().maxCoeff());
        rep.sizes.push_back(g.size());
        rep.jumps.push_back(jump);
    }
    bool flat = std::all_of(rep.jumps.begin(), rep.jumps.end(), [](double j) { return j <= 1e-14; });
    rep.pass = flat || (rep.jumps[1] < rep.jumps[0] && rep.jumps[2] < rep.jumps[1]);
    spdlog::debug("continuity at T: jumps {} {} {}", rep.jumps[0], rep.jumps[1], rep.jumps[2]);
    return rep;
}

}  // namespace svlq
