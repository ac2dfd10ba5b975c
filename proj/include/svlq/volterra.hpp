#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "svlq/grid.hpp"
#include "svlq/kernel.hpp"
#include "svlq/problem.hpp"

namespace svlq {

// Product-integration discretization of the state equation:
//   X = phi + calA X + calB u
// with calA, calB block lower triangular (the diagonal blocks make each step
// implicit).
struct DiscreteState {
    Grid grid;
    SingularWeights weights;
    Eigen::MatrixXd trap;  // trapezoid rows on [0, t_i]
    int n = 1;
    int m = 1;
    Eigen::MatrixXd Asmp;  // A(t_i, t_j), j <= i
    Eigen::MatrixXd Bsmp;  // B(t_i, t_j), j <= i
    Eigen::MatrixXd calA;
    Eigen::MatrixXd calB;
    Eigen::MatrixXd phi;   // n x N+1

    double beta() const { return weights.beta; }
};

DiscreteState discretize(const ProblemData& problem, const Grid& grid);

// Solves (I - L) X = rhs for block lower-triangular L with bs x bs blocks,
// stepping forward one block row at a time.
Eigen::MatrixXd solve_lower(const Eigen::MatrixXd& L, int bs, const Eigen::MatrixXd& rhs);

// point: high-order pointwise Phi (kernel checks); cell: the kernel whose
// operator form is the discrete resolvent (I - calA)^{-1} calA.
FactoredKernel resolvent(const ProblemData& problem, const Grid& grid,
                         Sampling scheme = Sampling::cell);
FactoredKernel resolvent(const DiscreteState& ds, Sampling scheme = Sampling::cell);

// X = xi + int A X (t-s)^(beta-1) ds by time stepping; xi is n x N+1.
Eigen::MatrixXd solve_state(const ProblemData& problem, const Grid& grid,
                            const Eigen::MatrixXd& xi);
Eigen::MatrixXd solve_state(const DiscreteState& ds, const Eigen::MatrixXd& xi);

// X for control u (m x N+1): xi = phi + calB u.
Eigen::MatrixXd state_for_control(const DiscreteState& ds, const Eigen::MatrixXd& u);

struct StateDecomposition {
    Grid grid;
    double beta = 0.75;
    Eigen::MatrixXd psi;      // n x N+1
    Eigen::VectorXd psi_T;
    FactoredKernel Phi;       // cell sampled
    FactoredKernel Psi;       // cell sampled, singular coefficient B
    Eigen::MatrixXd Psi_T_row;  // Psi(T, s_j), n x (N+1) m; block N left zero
    Eigen::MatrixXd Phi_op;   // operator form of Phi
    Eigen::MatrixXd Theta;    // operator form of Psi
};

// A point-sampled resolvent is replaced by the cell-sampled one, since the
// decomposition has to agree with solve_state exactly.
StateDecomposition decompose(const ProblemData& problem, const Grid& grid,
                             const FactoredKernel& Phi);
StateDecomposition decompose(const DiscreteState& ds, const FactoredKernel& Phi);

struct ResolventResiduals {
    double phi = 0.0;       // Phi = A r^(beta-1) + int A(t,tau) Phi(tau,s) ...
    double phi_star = 0.0;  // Phi = A r^(beta-1) + int Phi(t,tau) A(tau,s) ...
};

// Independent pass: both identities evaluated at every node pair with
// piecewise-linear interpolation of the bounded factor against the double
// weight (t-tau)^(beta-1) (tau-s)^(beta-1). Residuals are measured on the
// bounded factor and scaled by max |bounded factor|.
ResolventResiduals resolvent_residuals(const ProblemData& problem, const FactoredKernel& Phi);

// Admissible Gronwall-type constant K in
//   |Phi (t-s)^(1-beta)| <= |A| + K |A|^2 B(beta,beta) (t-s)^beta
// obtained from the scalar majorant with constant coefficient |A|.
double gronwall_constant(double a_norm, double beta, double T);

// Max over samples of |bounded factor| / bound(t-s); <= 1 means the bound holds.
double resolvent_bound_ratio(const FactoredKernel& Phi, double a_norm);

// sup of the induced infinity norm of A over the sampled node pairs.
double kernel_sup_norm(const ProblemData::Kernel& k, const Grid& grid);

struct ContinuityReport {
    std::vector<std::size_t> sizes;
    std::vector<double> jumps;   // max over the last 10 nodes of |X(t) - X(T)|
    bool pass = false;
};

// u is sampled through (t, T - t) so graded grids keep precision near T.
using ControlSampler = std::function<Eigen::VectorXd(double t, double tail)>;

ContinuityReport check_continuity_at_T(const ProblemData& problem, const Grid& grid,
                                       const ControlSampler& u);

Eigen::MatrixXd sample_control(const ControlSampler& u, const Grid& grid, int m);

}  // namespace svlq
