#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "svlq/causal.hpp"
#include "svlq/lq.hpp"

namespace svlq {

// M(t, s) = f(t, s) + int_sigma^T Kcal(t, xi) M(xi, s) dxi on the grid, with
// Kcal(t_i, xi_j) = -R(t_i)^{-1} [Theta* Q Theta + Theta_T* G Theta_T]_ij / w_j
// and f = Kcal. All tables are (N+1)m x (N+1)m with m x m blocks.
struct FredholmSystem {
    Grid grid;
    std::size_t sigma = 0;
    int m = 1;
    Eigen::MatrixXd Kcal;
    Eigen::MatrixXd f;
    Eigen::VectorXd w;
    Eigen::VectorXd wm;

    // The operator K_sigma acting on columns of samples (rows >= sigma).
    Eigen::MatrixXd K_sigma() const;
    Eigen::Index offset() const { return static_cast<Eigen::Index>(sigma) * m; }
    Eigen::Index active() const { return Kcal.rows() - offset(); }
};

FredholmSystem assemble_fredholm(const DiscreteLQ& dlq, const CostData& cost, std::size_t sigma);

// Entries of Kcal recomputed by explicit loops over the integral definition,
// using cell-averaged Psi(tau, t) samples; returns the max relative deviation
// over `samples` random (t, xi) pairs.
double fredholm_quadrature_check(const FredholmSystem& sys, const DiscreteLQ& dlq,
                                 const CostData& cost, int samples, unsigned seed);

enum class FredholmMethod { direct, galerkin, iterated, superconvergent };
std::string method_name(FredholmMethod m);
FredholmMethod parse_method(const std::string& name);

struct FeedbackKernel {
    std::size_t sigma = 0;
    int m = 1;
    FredholmMethod method = FredholmMethod::direct;
    // M(t_i, s_j) blocks; rows below sigma are left zero by the projection
    // methods.
    Eigen::MatrixXd M;
    double residual = 0.0;  // max |M - f - K M| / max |f| over rows >= sigma
};

// Cache format: one text line
//   svlqm v1 sigma= method= nodes= m= beta= residual=
// followed by M as raw row-major doubles.
void save_feedback_kernel(const FeedbackKernel& k, double beta, std::ostream& out);
FeedbackKernel load_feedback_kernel(std::istream& in, double* beta = nullptr);

double fredholm_residual(const FredholmSystem& sys, const Eigen::MatrixXd& M);

FeedbackKernel solve_direct(const FredholmSystem& sys);

// Continuous piecewise-linear hats on a sub-grid of the nodes >= sigma.
struct GalerkinState {
    int dim = 0;
    std::vector<std::size_t> knots;  // fine node indices of the hat peaks
    Eigen::MatrixXd basis;           // active rows x dim*m
    Eigen::MatrixXd gram;            // basis^T W basis
    Eigen::MatrixXd projector;       // P_n on the active rows
    Eigen::MatrixXd projected_lu_matrix;  // I - P_n K
};

GalerkinState galerkin_setup(const FredholmSystem& sys, int subspace_dim);

FeedbackKernel solve_galerkin(const FredholmSystem& sys, int subspace_dim);
FeedbackKernel solve_iterated_galerkin(const FredholmSystem& sys, const FeedbackKernel& galerkin);

struct SuperconvergentResult {
    FeedbackKernel kernel;
    std::vector<double> error_history;  // vs oracle, one entry per iterate k = 0..k_iters
};

SuperconvergentResult solve_superconvergent(const FredholmSystem& sys, int subspace_dim,
                                            int k_iters, const FeedbackKernel* oracle = nullptr);

// Weighted L2 distance over rows >= sigma and all source columns.
double kernel_error(const FredholmSystem& sys, const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

// Linear interpolation in the source argument: the m x m block M(t_i, s).
Eigen::MatrixXd reconstruct_in_s(const FeedbackKernel& k, const Grid& grid, std::size_t i, double s);

// M_sigma from its operator definition -R^{-1}(Lambda - R) Lambda_sigma^{-1} R,
// converted to samples.
Eigen::MatrixXd feedback_gain_from_definition(const DiscreteLQ& dlq, const CostData& cost,
                                              std::size_t sigma);

struct FeedbackOptions {
    FredholmMethod method = FredholmMethod::direct;
    int subspace_dim = 16;
    int iterations = 2;
};

// Causal feedback representation: for every node t,
//   u(t) = -R^{-1} G_t(t) - int_t^T M_t(t, s) R(s)^{-1} G_t(s) ds,
// G_t built from the truncation and auxiliary trajectories. Requires S = 0,
// rho = 0.
Eigen::MatrixXd feedback_control(const DiscreteLQ& dlq, const CostData& cost,
                                 const CausalTrajectories& traj,
                                 const FeedbackOptions& opt = {});

// General representation through the hat system:
//   u = v - R^{-1}(S X + rho), v from the feedback representation of the
// reduced problem on its own trajectories.
Eigen::MatrixXd general_causal_control(const HatSystem& hat, const CausalTrajectories& hat_traj,
                                       const Eigen::MatrixXd& x_bar,
                                       const FeedbackOptions& opt = {});

}  // namespace svlq
