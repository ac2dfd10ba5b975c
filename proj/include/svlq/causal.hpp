#pragma once

#include <vector>

#include <Eigen/Dense>

#include "svlq/lq.hpp"
#include "svlq/volterra.hpp"

namespace svlq {

// Pi_sigma keeps the samples at nodes < sigma (closed-left [0, sigma)).
struct CausalProjection {
    std::size_t sigma = 0;

    Eigen::MatrixXd past(const Eigen::MatrixXd& u) const;    // Pi_sigma u
    Eigen::MatrixXd future(const Eigen::MatrixXd& u) const;  // (I - Pi_sigma) u
    // Block operator versions on stacked samples with block size bs.
    Eigen::MatrixXd past_matrix(std::size_t nodes, int bs) const;
    Eigen::MatrixXd future_matrix(std::size_t nodes, int bs) const;
};

// Trailing principal block of Lambda (operator form) on nodes >= sigma.
Eigen::MatrixXd lambda_sigma(const DiscreteLQ& dlq, std::size_t sigma);
// Smallest eigenvalue of Lambda_sigma relative to the weighted inner product.
double lambda_sigma_min_eig(const DiscreteLQ& dlq, std::size_t sigma);

struct CausalTrajectories {
    // X_sigma[p] = psi + Theta Pi_p u, n x N+1, for every node p.
    std::vector<Eigen::MatrixXd> X_sigma;
    // X_aux.col(p) = psi(T) + Theta_T Pi_p u.
    Eigen::MatrixXd X_aux;
};

CausalTrajectories causal_trajectories(const DiscreteLQ& dlq, const Eigen::MatrixXd& u);
// Single node p, used for non-anticipation checks.
Eigen::MatrixXd truncation_trajectory(const DiscreteLQ& dlq, const Eigen::MatrixXd& u, std::size_t p);
Eigen::VectorXd auxiliary_state(const DiscreteLQ& dlq, const Eigen::MatrixXd& u, std::size_t p);

// G_p = Theta* Q X_p + Theta_T* G X^a(p) + Theta* q + Theta_T* g, m x N+1.
Eigen::MatrixXd causal_forcing(const DiscreteLQ& dlq, const CostData& cost,
                               const Eigen::MatrixXd& X_p, const Eigen::VectorXd& X_aux_p);

// Reconstructs the control node by node from the truncation and auxiliary
// trajectories:
//   u(t) = -R^{-1}[G_t - (Lambda - R) Lambda_t^{-1} (I - Pi_t) G_t](t).
// Requires S = 0 and rho = 0; the general case goes through the hat system.
Eigen::MatrixXd abstract_causal_control(const DiscreteLQ& dlq, const CausalTrajectories& traj,
                                        const CostData& cost);
// The value at one node (uses traj entries for that node only).
Eigen::VectorXd abstract_causal_control_at(const DiscreteLQ& dlq, const Eigen::MatrixXd& X_p,
                                           const Eigen::VectorXd& X_aux_p, const CostData& cost,
                                           std::size_t p);

// Reduced system without cross terms. With u = v - R^{-1}(S X + rho):
//   A_hat = A - B R^{-1} S, phi_hat = phi - int B R^{-1} rho,
//   Q_hat = Q - S^T R^{-1} S, q_hat = q - S^T R^{-1} rho,
// and J(u) = J_hat(v) + offset with offset = -int <R^{-1} rho, rho>.
struct HatSystem {
    ProblemData problem;
    CostData cost;
    DiscreteState ds;
    StateDecomposition dec;
    DiscreteLQ dlq;
    double offset = 0.0;
    std::vector<Eigen::MatrixXd> RinvS;  // per node
    Eigen::MatrixXd Rinv_rho;            // m x N+1

    // u = v - R^{-1}(S X + rho)
    Eigen::MatrixXd control_from_v(const Eigen::MatrixXd& v, const Eigen::MatrixXd& X) const;
};

HatSystem build_hat_system(const ProblemData& problem, const CostData& cost, const Grid& grid);

}  // namespace svlq
