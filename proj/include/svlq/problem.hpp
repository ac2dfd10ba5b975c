#pragma once

#include <functional>

#include <Eigen/Dense>

#include "svlq/grid.hpp"

namespace svlq {

// X(t) = phi(t) + int_0^t [A(t,s) X(s) + B(t,s) u(s)] (t-s)^(beta-1) ds
struct ProblemData {
    using Kernel = std::function<Eigen::MatrixXd(double t, double s)>;
    using Trajectory = std::function<Eigen::VectorXd(double t)>;

    Kernel A;      // n x n
    Kernel B;      // n x m
    Trajectory phi;
    double beta = 0.75;
    double T = 1.0;
    int n = 1;
    int m = 1;

    // Throws std::invalid_argument on bad shapes or beta; with lq = true also
    // enforces beta > 1/2.
    void validate(bool lq = false) const;
};

// Block (i, j) of a block matrix with r x c blocks.
inline auto blk(Eigen::MatrixXd& M, Eigen::Index i, Eigen::Index j, Eigen::Index r,
                Eigen::Index c) {
    return M.block(i * r, j * c, r, c);
}
inline auto blk(const Eigen::MatrixXd& M, Eigen::Index i, Eigen::Index j, Eigen::Index r,
                Eigen::Index c) {
    return M.block(i * r, j * c, r, c);
}

// A trajectory is stored as a dim x grid.size() matrix; its column-major
// storage is the stacked vector used by the block operators.
inline Eigen::Map<const Eigen::VectorXd> stacked(const Eigen::MatrixXd& traj) {
    return {traj.data(), traj.size()};
}
inline Eigen::MatrixXd unstack(const Eigen::VectorXd& v, Eigen::Index dim) {
    return Eigen::Map<const Eigen::MatrixXd>(v.data(), dim, v.size() / dim);
}

// Node samples of phi; a non-finite phi(0) is replaced by phi(t_1).
Eigen::MatrixXd sample_phi(const ProblemData& problem, const Grid& grid);

}  // namespace svlq
