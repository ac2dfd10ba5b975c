#pragma once

#include <Eigen/Dense>

#include "svlq/lq.hpp"
#include "svlq/volterra.hpp"

namespace svlq {

struct AdjointTrajectory {
    Eigen::MatrixXd Y;      // n x N+1
    Eigen::MatrixXd gamma;  // z plus the terminal coupling A(T,t)^T zeta (T-t)^(beta-1)
    Eigen::MatrixXd z;      // Q X + S^T u + q
    Eigen::VectorXd zeta;   // G X(T) + g
};

// Backward equation
//   Y(t) = z(t) + A(T,t)^T zeta (T-t)^(beta-1) + int_t^T A(s,t)^T Y(s) (s-t)^(beta-1) ds,
// discretized as the adjoint of the forward product-integration scheme and
// solved by reflecting time and reusing the forward stepper.
AdjointTrajectory solve_adjoint(const DiscreteState& ds, const CostData& cost,
                                const Eigen::MatrixXd& x_bar, const Eigen::MatrixXd& u_bar);
AdjointTrajectory solve_adjoint(const ProblemData& problem, const CostData& cost,
                                const Eigen::MatrixXd& x_bar, const Eigen::MatrixXd& u_bar,
                                const Grid& grid);

//   u(t) = -R^{-1}[ int_t^T B(s,t)^T Y(s) (s-t)^(beta-1) ds
//                   + B(T,t)^T zeta (T-t)^(beta-1) + S X + rho ]
Eigen::MatrixXd control_from_mp(const AdjointTrajectory& adj, const DiscreteState& ds,
                                const CostData& cost, const Eigen::MatrixXd& x_bar);

// Y through the cell resolvent: Y = z + W^{-1} Phi^T (W z + E_N^T zeta).
Eigen::MatrixXd adjoint_from_resolvent(const StateDecomposition& dec, const Eigen::MatrixXd& z,
                                       const Eigen::VectorXd& zeta);

// max residual of the discrete backward equation for Y.
double adjoint_residual(const DiscreteState& ds, const AdjointTrajectory& adj);

}  // namespace svlq
