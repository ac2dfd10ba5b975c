#include "svlq/causal.hpp"

#include <algorithm>
#include <stdexcept>

#include "svlq/errors.hpp"

namespace svlq {

Eigen::MatrixXd CausalProjection::past(const Eigen::MatrixXd& u) const {
    Eigen::MatrixXd out = u;
    for (Eigen::Index i = static_cast<Eigen::Index>(sigma); i < u.cols(); ++i) out.col(i).setZero();
    return out;
}

Eigen::MatrixXd CausalProjection::future(const Eigen::MatrixXd& u) const {
    Eigen::MatrixXd out = u;
    for (Eigen::Index i = 0; i < std::min<Eigen::Index>(static_cast<Eigen::Index>(sigma), u.cols()); ++i)
        out.col(i).setZero();
    return out;
}

Eigen::MatrixXd CausalProjection::past_matrix(std::size_t nodes, int bs) const {
    auto n = static_cast<Eigen::Index>(nodes) * bs;
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(n, n);
    auto k = std::min<Eigen::Index>(static_cast<Eigen::Index>(sigma) * bs, n);
    P.topLeftCorner(k, k).setIdentity();
    return P;
}

Eigen::MatrixXd CausalProjection::future_matrix(std::size_t nodes, int bs) const {
    auto n = static_cast<Eigen::Index>(nodes) * bs;
    return Eigen::MatrixXd::Identity(n, n) - past_matrix(nodes, bs);
}

namespace {

Eigen::Index trailing_size(const DiscreteLQ& dlq, std::size_t sigma) {
    if (sigma >= dlq.grid.size()) throw std::invalid_argument("sigma index out of range");
    return static_cast<Eigen::Index>(dlq.grid.size() - sigma) * dlq.m;
}

}  // namespace

Eigen::MatrixXd lambda_sigma(const DiscreteLQ& dlq, std::size_t sigma) {
    Eigen::Index k = trailing_size(dlq, sigma);
    return dlq.wm.tail(k).cwiseInverse().asDiagonal() * dlq.gram.bottomRightCorner(k, k);
}

double lambda_sigma_min_eig(const DiscreteLQ& dlq, std::size_t sigma) {
    Eigen::Index k = trailing_size(dlq, sigma);
    return min_generalized_eigenvalue(dlq.gram.bottomRightCorner(k, k), dlq.wm.tail(k));
}

Eigen::MatrixXd truncation_trajectory(const DiscreteLQ& dlq, const Eigen::MatrixXd& u,
                                      std::size_t p) {
    return state_of(dlq, CausalProjection{p}.past(u));
}

Eigen::VectorXd auxiliary_state(const DiscreteLQ& dlq, const Eigen::MatrixXd& u, std::size_t p) {
    Eigen::MatrixXd past = CausalProjection{p}.past(u);
    return dlq.psi_T + dlq.Theta_T * stacked(past);
}

CausalTrajectories causal_trajectories(const DiscreteLQ& dlq, const Eigen::MatrixXd& u) {
    std::size_t N = dlq.grid.size();
    CausalTrajectories tr;
    tr.X_sigma.reserve(N);
    tr.X_aux.resize(dlq.n, static_cast<Eigen::Index>(N));
    for (std::size_t p = 0; p < N; ++p) {
        tr.X_sigma.push_back(truncation_trajectory(dlq, u, p));
        tr.X_aux.col(static_cast<Eigen::Index>(p)) = auxiliary_state(dlq, u, p);
    }
    return tr;
}

Eigen::MatrixXd causal_forcing(const DiscreteLQ& dlq, const CostData& cost,
                               const Eigen::MatrixXd& X_p, const Eigen::VectorXd& X_aux_p) {
    Eigen::MatrixXd z = apply_nodewise(cost.Q, X_p) + cost.q;
    Eigen::VectorXd zeta = cost.G * X_aux_p + cost.g;
    Eigen::VectorXd gv = dlq.Theta.transpose() * (dlq.wn.asDiagonal() * stacked(z)) +
                         dlq.Theta_T.transpose() * zeta;
    return unstack(gv.cwiseQuotient(dlq.wm), dlq.m);
}

Eigen::VectorXd abstract_causal_control_at(const DiscreteLQ& dlq, const Eigen::MatrixXd& X_p,
                                           const Eigen::VectorXd& X_aux_p, const CostData& cost,
                                           std::size_t p) {
    if (cost.has_cross_terms())
        throw std::invalid_argument("cross terms present; reduce through the hat system first");
    int m = dlq.m;
    Eigen::Index k = trailing_size(dlq, p);
    auto P = static_cast<Eigen::Index>(p);
    Eigen::MatrixXd G = causal_forcing(dlq, cost, X_p, X_aux_p);
    Eigen::VectorXd g = stacked(G).tail(k);
    Eigen::LLT<Eigen::MatrixXd> llt(dlq.gram.bottomRightCorner(k, k));
    if (llt.info() != Eigen::Success) throw NumericalError("Lambda_sigma factorization failed");
    Eigen::VectorXd y = llt.solve(dlq.wm.tail(k).cwiseProduct(g));
    Eigen::VectorXd Ly = dlq.gram.block(P * m, P * m, m, k) * y / dlq.w(P);
    const Eigen::MatrixXd& R = cost.R[p];
    Eigen::VectorXd inner = G.col(P) - Ly + R * y.head(m);
    return -R.ldlt().solve(inner);
}

Eigen::MatrixXd abstract_causal_control(const DiscreteLQ& dlq, const CausalTrajectories& traj,
                                        const CostData& cost) {
    auto N = static_cast<Eigen::Index>(dlq.grid.size());
    Eigen::MatrixXd u(dlq.m, N);
    for (Eigen::Index p = 0; p < N; ++p) {
        auto P = static_cast<std::size_t>(p);
        u.col(p) = abstract_causal_control_at(dlq, traj.X_sigma[P], traj.X_aux.col(p), cost, P);
    }
    return u;
}

namespace {

// Node lookup with linear interpolation off the nodes.
template <class Sample>
auto node_lookup(const std::vector<double>& nodes, double t, const Sample& at) {
    auto it = std::lower_bound(nodes.begin(), nodes.end(), t);
    if (it == nodes.end()) return at(nodes.size() - 1);
    auto k = static_cast<std::size_t>(it - nodes.begin());
    if (*it == t || k == 0) return at(k);
    double a = nodes[k - 1], b = nodes[k];
    double th = (t - a) / (b - a);
    return ((1.0 - th) * at(k - 1) + th * at(k)).eval();
}

}  // namespace

Eigen::MatrixXd HatSystem::control_from_v(const Eigen::MatrixXd& v, const Eigen::MatrixXd& X) const {
    return v - apply_nodewise(RinvS, X) - Rinv_rho;
}

HatSystem build_hat_system(const ProblemData& problem, const CostData& cost, const Grid& grid) {
    problem.validate(true);
    double delta = check_assumption_a4(cost);
    DiscreteState ds0 = discretize(problem, grid);
    int n = problem.n, m = problem.m;
    auto N = static_cast<Eigen::Index>(grid.size());

    HatSystem h;
    h.RinvS.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        Eigen::LDLT<Eigen::MatrixXd> f(cost.R[i]);
        if (f.info() != Eigen::Success) throw AssumptionError("R(t) not invertible at a node");
        h.RinvS[i] = f.solve(cost.S[i]);
    }
    h.Rinv_rho = solve_nodewise(cost.R, cost.rho);
    Eigen::MatrixXd phi_hat = unstack(stacked(ds0.phi) - ds0.calB * stacked(h.Rinv_rho), n);

    std::vector<double> nodes = grid.nodes();
    auto RinvS = h.RinvS;
    auto A = problem.A, B = problem.B;
    h.problem = problem;
    h.problem.A = [A, B, RinvS, nodes](double t, double s) -> Eigen::MatrixXd {
        Eigen::MatrixXd K = node_lookup(nodes, s, [&](std::size_t k) { return RinvS[k]; });
        return A(t, s) - B(t, s) * K;
    };
    h.problem.phi = [phi_hat, nodes](double t) -> Eigen::VectorXd {
        return node_lookup(nodes, t, [&](std::size_t k) { return phi_hat.col(static_cast<Eigen::Index>(k)).eval(); });
    };

    h.cost = cost;
    h.cost.delta = delta;
    h.cost.q = cost.q - apply_nodewise_transpose(cost.S, h.Rinv_rho);
    Eigen::VectorXd w = trapezoid_weights(grid);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        h.cost.Q[i] = cost.Q[i] - cost.S[i].transpose() * h.RinvS[i];
        h.cost.Q[i] = (0.5 * (h.cost.Q[i] + h.cost.Q[i].transpose())).eval();
        h.cost.S[i].setZero();
    }
    h.cost.rho = Eigen::MatrixXd::Zero(m, N);
    for (Eigen::Index i = 0; i < N; ++i) h.offset -= w(i) * cost.rho.col(i).dot(h.Rinv_rho.col(i));

    h.ds = discretize(h.problem, grid);
    h.dec = decompose(h.ds, resolvent(h.ds));
    h.dlq = assemble_quadratic_form(assemble_theta(h.dec, grid), h.cost, h.dec);
    return h;
}

}  // namespace svlq
