#include "svlq/adjoint.hpp"

#include <stdexcept>

#include "svlq/errors.hpp"

namespace svlq {

namespace {

// Reverses the block order of a square block matrix.
Eigen::MatrixXd reflect(const Eigen::MatrixXd& M, int bs) {
    Eigen::Index nb = M.rows() / bs;
    Eigen::MatrixXd out(M.rows(), M.cols());
    for (Eigen::Index i = 0; i < nb; ++i)
        for (Eigen::Index j = 0; j < nb; ++j)
            blk(out, nb - 1 - i, nb - 1 - j, bs, bs) = blk(M, i, j, bs, bs);
    return out;
}

Eigen::MatrixXd reverse_columns(const Eigen::MatrixXd& x) { return x.rowwise().reverse(); }

// W^{-1} L^T W for a block operator L with r x c blocks.
Eigen::MatrixXd weighted_transpose(const Eigen::MatrixXd& L, const Eigen::VectorXd& w, int r,
                                   int c) {
    Eigen::VectorXd wr = w.replicate(1, r).transpose().reshaped();
    Eigen::VectorXd wc = w.replicate(1, c).transpose().reshaped();
    return wc.cwiseInverse().asDiagonal() * L.transpose() * wr.asDiagonal();
}

}  // namespace

AdjointTrajectory solve_adjoint(const DiscreteState& ds, const CostData& cost,
                                const Eigen::MatrixXd& x_bar, const Eigen::MatrixXd& u_bar) {
    if (!(ds.beta() > 0.5)) throw PreconditionError("(A3) requires beta > 1/2 for the adjoint");
    int n = ds.n;
    auto N = static_cast<Eigen::Index>(ds.grid.size());
    Eigen::VectorXd w = trapezoid_weights(ds.grid);
    AdjointTrajectory adj;
    adj.z = apply_nodewise(cost.Q, x_bar) + apply_nodewise_transpose(cost.S, u_bar) + cost.q;
    adj.zeta = cost.G * x_bar.col(N - 1) + cost.g;
    adj.gamma = adj.z;
    for (Eigen::Index i = 0; i < N; ++i)
        adj.gamma.col(i) += blk(ds.calA, N - 1, i, n, n).transpose() * adj.zeta / w(i);
    // Y = gamma + W^{-1} calA^T W Y; calA^T is block upper triangular.
    Eigen::MatrixXd L = reflect(weighted_transpose(ds.calA, w, n, n), n);
    Eigen::VectorXd y = solve_lower(L, n, stacked(reverse_columns(adj.gamma)));
    adj.Y = reverse_columns(unstack(y, n));
    return adj;
}

AdjointTrajectory solve_adjoint(const ProblemData& problem, const CostData& cost,
                                const Eigen::MatrixXd& x_bar, const Eigen::MatrixXd& u_bar,
                                const Grid& grid) {
    problem.validate(true);
    return solve_adjoint(discretize(problem, grid), cost, x_bar, u_bar);
}

Eigen::MatrixXd control_from_mp(const AdjointTrajectory& adj, const DiscreteState& ds,
                                const CostData& cost, const Eigen::MatrixXd& x_bar) {
    int n = ds.n, m = ds.m;
    auto N = static_cast<Eigen::Index>(ds.grid.size());
    Eigen::VectorXd w = trapezoid_weights(ds.grid);
    Eigen::VectorXd wn = w.replicate(1, n).transpose().reshaped();
    Eigen::VectorXd back = ds.calB.transpose() * (wn.asDiagonal() * stacked(adj.Y));
    Eigen::MatrixXd inner = unstack(back, m);
    for (Eigen::Index i = 0; i < N; ++i) {
        inner.col(i) += blk(ds.calB, N - 1, i, n, m).transpose() * adj.zeta;
        inner.col(i) /= w(i);
    }
    inner += apply_nodewise(cost.S, x_bar) + cost.rho;
    return -solve_nodewise(cost.R, inner);
}

Eigen::MatrixXd adjoint_from_resolvent(const StateDecomposition& dec, const Eigen::MatrixXd& z,
                                       const Eigen::VectorXd& zeta) {
    int n = static_cast<int>(z.rows());
    Eigen::VectorXd w = trapezoid_weights(dec.grid);
    Eigen::VectorXd wn = w.replicate(1, n).transpose().reshaped();
    Eigen::VectorXd b = wn.asDiagonal() * stacked(z);
    b.tail(n) += zeta;
    Eigen::VectorXd y = stacked(z) + (dec.Phi_op.transpose() * b).cwiseQuotient(wn);
    return unstack(y, n);
}

double adjoint_residual(const DiscreteState& ds, const AdjointTrajectory& adj) {
    int n = ds.n;
    Eigen::VectorXd w = trapezoid_weights(ds.grid);
    Eigen::MatrixXd L = weighted_transpose(ds.calA, w, n, n);
    Eigen::VectorXd r = stacked(adj.Y) - stacked(adj.gamma) - L * stacked(adj.Y);
    return r.cwiseAbs().maxCoeff() / std::max(1.0, adj.Y.cwiseAbs().maxCoeff());
}

}  // namespace svlq
