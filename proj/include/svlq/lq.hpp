#pragma once

#include <vector>

#include <Eigen/Dense>

#include "svlq/grid.hpp"
#include "svlq/problem.hpp"
#include "svlq/volterra.hpp"

namespace svlq {

// J(u) = int [<QX,X> + 2<SX,u> + <Ru,u> + 2<q,X> + 2<rho,u>] dt
//        + <G X(T), X(T)> + 2<g, X(T)>, sampled on the grid nodes.
struct CostData {
    std::vector<Eigen::MatrixXd> Q;  // n x n per node
    std::vector<Eigen::MatrixXd> S;  // m x n per node
    std::vector<Eigen::MatrixXd> R;  // m x m per node
    Eigen::MatrixXd q;               // n x N+1
    Eigen::MatrixXd rho;             // m x N+1
    Eigen::MatrixXd G;
    Eigen::VectorXd g;
    double delta = 0.0;              // <= 0: min eigenvalue of R over nodes

    std::size_t nodes() const { return R.size(); }
    bool has_cross_terms() const;
};

// All weights zero except R = I.
CostData zero_cost(std::size_t nodes, int n, int m);

// Throws AssumptionError naming the violated inequality of (A4). Returns the
// delta in effect.
double check_assumption_a4(const CostData& cost);

struct ThetaPair {
    Eigen::MatrixXd Theta;    // (N+1)n x (N+1)m
    Eigen::MatrixXd Theta_T;  // n x (N+1)m
};

// The adjoints are weighted transposes: Theta* = W^{-1} Theta^T W_n,
// Theta_T* = W^{-1} Theta_T^T.
ThetaPair assemble_theta(const StateDecomposition& dec, const Grid& grid);
Eigen::MatrixXd theta_adjoint(const ThetaPair& th, const Eigen::VectorXd& w, int n, int m);

struct DiscreteLQ {
    Grid grid;
    int n = 1;
    int m = 1;
    Eigen::MatrixXd Theta;
    Eigen::MatrixXd Theta_T;
    Eigen::VectorXd w;     // trapezoid node weights
    Eigen::VectorXd wm;    // w repeated per control component
    Eigen::VectorXd wn;    // w repeated per state component
    // Gram form: J(u) = u^T gram u + 2 ell^T u + lambda0 on stacked samples.
    Eigen::MatrixXd gram;
    Eigen::VectorXd ell;
    double lambda0 = 0.0;
    double delta = 0.0;
    double min_generalized_eig = 0.0;  // of gram against diag(wm)
    Eigen::MatrixXd psi;
    Eigen::VectorXd psi_T;

    // Operator form relative to the weighted inner product.
    Eigen::MatrixXd Lambda() const;
    Eigen::VectorXd ell1() const;
    double J(const Eigen::MatrixXd& u) const;
    double inner(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) const;  // control space
    double norm(const Eigen::MatrixXd& u) const;
};

DiscreteLQ assemble_quadratic_form(const ThetaPair& theta, const CostData& cost,
                                   const StateDecomposition& dec);

// Smallest lambda with gram v = lambda diag(weights) v.
double min_generalized_eigenvalue(const Eigen::MatrixXd& gram, const Eigen::VectorXd& weights);

// Direct cost evaluation: runs the state and applies the nodewise trapezoid rule.
double cost(const ProblemData& problem, const CostData& cost, const Eigen::MatrixXd& u,
            const Grid& grid);
double cost(const DiscreteState& ds, const CostData& cost, const Eigen::MatrixXd& u);
double cost_of_pair(const CostData& cost, const Grid& grid, const Eigen::MatrixXd& X,
                    const Eigen::MatrixXd& u);

// Oracle control: gram u = -ell by Cholesky. m x N+1.
Eigen::MatrixXd solve_open_loop(const DiscreteLQ& dlq);
// Same system through LDL^T, for the uniqueness check.
Eigen::MatrixXd solve_open_loop_ldlt(const DiscreteLQ& dlq);

// X = psi + Theta u.
Eigen::MatrixXd state_of(const DiscreteLQ& dlq, const Eigen::MatrixXd& u);

// max_{i<N} |u(t_i) - rhs(t_i)| for
//   rhs = -R^{-1}[S X + rho + Theta*(Q X + S^T u + q) + Theta_T*(G X(T) + g)].
double verify_bar_u1(const DiscreteLQ& dlq, const CostData& cost, const Eigen::MatrixXd& u_bar);

// Nodewise helpers shared by the later modules.
Eigen::MatrixXd apply_nodewise(const std::vector<Eigen::MatrixXd>& M, const Eigen::MatrixXd& x);
Eigen::MatrixXd apply_nodewise_transpose(const std::vector<Eigen::MatrixXd>& M,
                                         const Eigen::MatrixXd& x);
Eigen::MatrixXd solve_nodewise(const std::vector<Eigen::MatrixXd>& M, const Eigen::MatrixXd& x);

}  // namespace svlq
