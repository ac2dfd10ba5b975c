#include "svlq/lq.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include <spdlog/spdlog.h>

#include "svlq/errors.hpp"

namespace svlq {

namespace {

double min_eig(const Eigen::MatrixXd& M) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (M + M.transpose()),
                                                      Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
}

Eigen::MatrixXd block_diag(const std::vector<Eigen::MatrixXd>& M, const Eigen::VectorXd& w) {
    Eigen::Index r = M.front().rows(), c = M.front().cols();
    auto N = static_cast<Eigen::Index>(M.size());
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(N * r, N * c);
    for (Eigen::Index i = 0; i < N; ++i) blk(out, i, i, r, c) = w(i) * M[static_cast<std::size_t>(i)];
    return out;
}

void check_cost_shapes(const CostData& c, std::size_t nodes, int n, int m) {
    if (c.Q.size() != nodes || c.S.size() != nodes || c.R.size() != nodes)
        throw std::invalid_argument("cost weights are not sampled on the grid");
    if (c.q.rows() != n || c.q.cols() != static_cast<Eigen::Index>(nodes) || c.rho.rows() != m ||
        c.rho.cols() != static_cast<Eigen::Index>(nodes))
        throw std::invalid_argument("cost linear terms are not sampled on the grid");
    if (c.G.rows() != n || c.G.cols() != n || c.g.size() != n)
        throw std::invalid_argument("terminal weights have the wrong shape");
    for (std::size_t i = 0; i < nodes; ++i)
        if (c.Q[i].rows() != n || c.Q[i].cols() != n || c.S[i].rows() != m || c.S[i].cols() != n ||
            c.R[i].rows() != m || c.R[i].cols() != m)
            throw std::invalid_argument("cost weight at node " + std::to_string(i) +
                                        " has the wrong shape");
}

}  // namespace

bool CostData::has_cross_terms() const {
    for (const auto& s : S)
        if (s.cwiseAbs().maxCoeff() != 0.0) return true;
    return rho.size() > 0 && rho.cwiseAbs().maxCoeff() != 0.0;
}

CostData zero_cost(std::size_t nodes, int n, int m) {
    CostData c;
    auto N = static_cast<Eigen::Index>(nodes);
    c.Q.assign(nodes, Eigen::MatrixXd::Zero(n, n));
    c.S.assign(nodes, Eigen::MatrixXd::Zero(m, n));
    c.R.assign(nodes, Eigen::MatrixXd::Identity(m, m));
    c.q = Eigen::MatrixXd::Zero(n, N);
    c.rho = Eigen::MatrixXd::Zero(m, N);
    c.G = Eigen::MatrixXd::Zero(n, n);
    c.g = Eigen::VectorXd::Zero(n);
    return c;
}

double check_assumption_a4(const CostData& cost) {
    double minR = std::numeric_limits<double>::infinity();
    for (const auto& R : cost.R) minR = std::min(minR, min_eig(R));
    double delta = cost.delta > 0.0 ? cost.delta : minR;
    if (!(delta > 0.0)) throw AssumptionError("(A4) violated: R(t) >= delta I needs delta > 0");
    for (std::size_t i = 0; i < cost.R.size(); ++i) {
        double e = min_eig(cost.R[i]);
        if (e < delta * (1.0 - 1e-12))
            throw AssumptionError("(A4) violated: R(t) >= delta I fails at node " +
                                  std::to_string(i) + " (min eigenvalue " + std::to_string(e) + ")");
        Eigen::MatrixXd red = cost.Q[i] - cost.S[i].transpose() * cost.R[i].ldlt().solve(cost.S[i]);
        double scale = std::max(1.0, cost.Q[i].cwiseAbs().maxCoeff());
        if (min_eig(red) < -1e-12 * scale)
            throw AssumptionError("(A4) violated: Q(t) - S(t)^T R(t)^{-1} S(t) >= 0 fails at node " +
                                  std::to_string(i));
    }
    double gscale = std::max(1.0, cost.G.cwiseAbs().maxCoeff());
    if (min_eig(cost.G) < -1e-12 * gscale) throw AssumptionError("(A4) violated: G >= 0 fails");
    return delta;
}

ThetaPair assemble_theta(const StateDecomposition& dec, const Grid& grid) {
    if (!dec.grid.same_as(grid)) throw std::invalid_argument("decomposition lives on another grid");
    ThetaPair th;
    th.Theta = dec.Theta;
    int n = dec.Psi.rows;
    th.Theta_T = dec.Theta.bottomRows(n);
    return th;
}

Eigen::MatrixXd theta_adjoint(const ThetaPair& th, const Eigen::VectorXd& w, int n, int m) {
    Eigen::VectorXd wn = w.replicate(1, n).transpose().reshaped();
    Eigen::VectorXd wm = w.replicate(1, m).transpose().reshaped();
    return wm.cwiseInverse().asDiagonal() * th.Theta.transpose() * wn.asDiagonal();
}

double min_generalized_eigenvalue(const Eigen::MatrixXd& gram, const Eigen::VectorXd& weights) {
    Eigen::VectorXd s = weights.cwiseSqrt().cwiseInverse();
    return min_eig(s.asDiagonal() * gram * s.asDiagonal());
}

DiscreteLQ assemble_quadratic_form(const ThetaPair& theta, const CostData& cost,
                                   const StateDecomposition& dec) {
    int n = dec.Psi.rows, m = dec.Psi.cols;
    const Grid& grid = dec.grid;
    check_cost_shapes(cost, grid.size(), n, m);
    double delta = check_assumption_a4(cost);
    DiscreteLQ d;
    d.grid = grid;
    d.n = n;
    d.m = m;
    d.Theta = theta.Theta;
    d.Theta_T = theta.Theta_T;
    d.w = trapezoid_weights(grid);
    d.wn = d.w.replicate(1, n).transpose().reshaped();
    d.wm = d.w.replicate(1, m).transpose().reshaped();
    d.delta = delta;
    d.psi = dec.psi;
    d.psi_T = dec.psi_T;

    Eigen::MatrixXd WQ = block_diag(cost.Q, d.w);
    Eigen::MatrixXd WS = block_diag(cost.S, d.w);
    Eigen::MatrixXd WR = block_diag(cost.R, d.w);
    const Eigen::MatrixXd& Th = d.Theta;
    const Eigen::MatrixXd& ThT = d.Theta_T;
    Eigen::MatrixXd WSTh = WS * Th;
    d.gram = Th.transpose() * WQ * Th + WSTh + WSTh.transpose() + WR + ThT.transpose() * cost.G * ThT;
    d.gram = 0.5 * (d.gram + d.gram.transpose()).eval();

    auto psi = stacked(dec.psi);
    auto q = stacked(cost.q);
    auto rho = stacked(cost.rho);
    Eigen::VectorXd zpsi = WQ * psi + d.wn.asDiagonal() * q;
    Eigen::VectorXd zeta = cost.G * dec.psi_T + cost.g;
    d.ell = Th.transpose() * zpsi + WS * psi + d.wm.asDiagonal() * rho + ThT.transpose() * zeta;
    d.lambda0 = psi.dot(WQ * psi) + 2.0 * q.dot(d.wn.asDiagonal() * psi) +
                dec.psi_T.dot(cost.G * dec.psi_T) + 2.0 * cost.g.dot(dec.psi_T);

    Eigen::VectorXd s = d.wm.cwiseSqrt().cwiseInverse();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s.asDiagonal() * d.gram * s.asDiagonal(),
                                                      Eigen::EigenvaluesOnly);
    d.min_generalized_eig = es.eigenvalues()(0);
    double cond = es.eigenvalues().maxCoeff() / es.eigenvalues()(0);
    if (!(cond < 1e12)) spdlog::warn("Lambda is ill-conditioned (condition number {:.3g})", cond);
    return d;
}

Eigen::MatrixXd DiscreteLQ::Lambda() const { return wm.cwiseInverse().asDiagonal() * gram; }

Eigen::VectorXd DiscreteLQ::ell1() const { return ell.cwiseQuotient(wm); }

double DiscreteLQ::J(const Eigen::MatrixXd& u) const {
    auto v = stacked(u);
    if (v.size() != gram.rows()) throw std::invalid_argument("control does not match the grid");
    return v.dot(gram * v) + 2.0 * ell.dot(v) + lambda0;
}

double DiscreteLQ::inner(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) const {
    return stacked(a).dot(wm.asDiagonal() * stacked(b));
}

double DiscreteLQ::norm(const Eigen::MatrixXd& u) const { return std::sqrt(inner(u, u)); }

Eigen::MatrixXd solve_open_loop(const DiscreteLQ& dlq) {
    Eigen::LLT<Eigen::MatrixXd> llt(dlq.gram);
    if (llt.info() != Eigen::Success)
        throw NumericalError("Cholesky factorization of Lambda failed; check (A4) and conditioning");
    Eigen::VectorXd u = -llt.solve(dlq.ell);
    return unstack(u, dlq.m);
}

Eigen::MatrixXd solve_open_loop_ldlt(const DiscreteLQ& dlq) {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(dlq.gram);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
        throw NumericalError("LDL^T factorization of Lambda failed");
    Eigen::VectorXd u = -ldlt.solve(dlq.ell);
    return unstack(u, dlq.m);
}

Eigen::MatrixXd state_of(const DiscreteLQ& dlq, const Eigen::MatrixXd& u) {
    Eigen::VectorXd x = stacked(dlq.psi) + dlq.Theta * stacked(u);
    return unstack(x, dlq.n);
}

Eigen::MatrixXd apply_nodewise(const std::vector<Eigen::MatrixXd>& M, const Eigen::MatrixXd& x) {
    Eigen::MatrixXd out(M.front().rows(), x.cols());
    for (Eigen::Index i = 0; i < x.cols(); ++i) out.col(i) = M[static_cast<std::size_t>(i)] * x.col(i);
    return out;
}

Eigen::MatrixXd apply_nodewise_transpose(const std::vector<Eigen::MatrixXd>& M,
                                         const Eigen::MatrixXd& x) {
    Eigen::MatrixXd out(M.front().cols(), x.cols());
    for (Eigen::Index i = 0; i < x.cols(); ++i)
        out.col(i) = M[static_cast<std::size_t>(i)].transpose() * x.col(i);
    return out;
}

Eigen::MatrixXd solve_nodewise(const std::vector<Eigen::MatrixXd>& M, const Eigen::MatrixXd& x) {
    Eigen::MatrixXd out(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.cols(); ++i) {
        Eigen::LDLT<Eigen::MatrixXd> f(M[static_cast<std::size_t>(i)]);
        if (f.info() != Eigen::Success) throw AssumptionError("R(t) not invertible at a node");
        out.col(i) = f.solve(x.col(i));
    }
    return out;
}

double cost_of_pair(const CostData& c, const Grid& grid, const Eigen::MatrixXd& X,
                    const Eigen::MatrixXd& u) {
    Eigen::VectorXd w = trapezoid_weights(grid);
    double J = 0.0;
    for (Eigen::Index i = 0; i < X.cols(); ++i) {
        auto I = static_cast<std::size_t>(i);
        Eigen::VectorXd x = X.col(i), v = u.col(i);
        double f = x.dot(c.Q[I] * x) + 2.0 * v.dot(c.S[I] * x) + v.dot(c.R[I] * v) +
                   2.0 * c.q.col(i).dot(x) + 2.0 * c.rho.col(i).dot(v);
        J += w(i) * f;
    }
    Eigen::VectorXd xT = X.col(X.cols() - 1);
    return J + xT.dot(c.G * xT) + 2.0 * c.g.dot(xT);
}

double cost(const DiscreteState& ds, const CostData& c, const Eigen::MatrixXd& u) {
    if (!(ds.beta() > 0.5)) throw PreconditionError("(A3) requires beta > 1/2 for the terminal cost");
    check_cost_shapes(c, ds.grid.size(), ds.n, ds.m);
    return cost_of_pair(c, ds.grid, state_for_control(ds, u), u);
}

double cost(const ProblemData& problem, const CostData& c, const Eigen::MatrixXd& u,
            const Grid& grid) {
    problem.validate(true);
    return cost(discretize(problem, grid), c, u);
}

double verify_bar_u1(const DiscreteLQ& dlq, const CostData& c, const Eigen::MatrixXd& u_bar) {
    Eigen::MatrixXd X = state_of(dlq, u_bar);
    Eigen::MatrixXd z = apply_nodewise(c.Q, X) + apply_nodewise_transpose(c.S, u_bar) + c.q;
    Eigen::VectorXd zeta = c.G * X.col(X.cols() - 1) + c.g;
    Eigen::VectorXd adj = dlq.Theta.transpose() * (dlq.wn.asDiagonal() * stacked(z)) +
                          dlq.Theta_T.transpose() * zeta;
    Eigen::MatrixXd inner = unstack(adj.cwiseQuotient(dlq.wm), dlq.m) + apply_nodewise(c.S, X) + c.rho;
    Eigen::MatrixXd rhs = -solve_nodewise(c.R, inner);
    double r = 0.0;
    for (Eigen::Index i = 0; i + 1 < u_bar.cols(); ++i)
        r = std::max(r, (u_bar.col(i) - rhs.col(i)).cwiseAbs().maxCoeff());
    return r;
}

}  // namespace svlq
