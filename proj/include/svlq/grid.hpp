#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace svlq {

enum class GridKind { uniform, graded };

// Nodes 0 = t_0 < ... < t_N = T. Each node also stores its distance to T so
// that strongly graded meshes keep full relative precision near the horizon,
// where t_i itself may round to T.
class Grid {
public:
    // Three uniform nodes on [0, 1]; placeholder for aggregates filled later.
    Grid() : Grid({0.0, 0.5, 1.0}, {1.0, 0.5, 0.0}, 1.0, GridKind::uniform, 1.0) {}
    Grid(std::vector<double> nodes, std::vector<double> tails, double T,
         GridKind kind, double exponent);

    std::size_t size() const { return nodes_.size(); }
    std::size_t last() const { return nodes_.size() - 1; }
    double operator[](std::size_t i) const { return nodes_[i]; }
    double node(std::size_t i) const { return nodes_[i]; }
    double tail(std::size_t i) const { return tails_[i]; }
    // t_i - t_j without cancellation near T.
    double gap(std::size_t i, std::size_t j) const;
    double step(std::size_t j) const { return gap(j + 1, j); }
    double max_step() const;

    double T() const { return T_; }
    GridKind kind() const { return kind_; }
    double exponent() const { return exponent_; }
    const std::vector<double>& nodes() const { return nodes_; }

    // Index of the node equal to t, or the last node below t (closed-left).
    std::size_t locate(double t) const;

    bool same_as(const Grid& other) const;

private:
    std::vector<double> nodes_;
    std::vector<double> tails_;
    double T_;
    GridKind kind_;
    double exponent_;
};

// n nodes on [0, T]. graded(r) places t_k = (T/2)(2k/N)^r on the lower half
// and mirrors it about T/2.
Grid build_grid(std::size_t n, double T, GridKind kind = GridKind::uniform,
                double exponent = 1.0);

// Trapezoid weights for the L2 inner product on [0, T].
Eigen::VectorXd trapezoid_weights(const Grid& grid);

// Trapezoid weights on [0, t_i]: row i, columns 0..i.
Eigen::MatrixXd trapezoid_rows(const Grid& grid);

struct SingularWeights {
    Grid grid;
    double beta;
    // w(i, j) = weight of g(s_j) in int_0^{t_i} (t_i - s)^(beta-1) g(s) ds,
    // g piecewise linear. Lower triangular including the diagonal.
    Eigen::MatrixXd w;
};

// One row of the product-integration weights (length grid.size()).
Eigen::VectorXd product_weights_row(const Grid& grid, double beta, std::size_t i);

SingularWeights product_weights(const Grid& grid, double beta);

double integrate_singular(const SingularWeights& weights, std::size_t i,
                          std::span<const double> g);

struct YoungNorms {
    double eta_l2 = 0.0;
    double eta_sup = 0.0;
    double theta_l2 = 0.0;
    double l2_bound = 0.0;
    double sup_bound = 0.0;  // only meaningful for beta > 1/2
};

// eta(t, s) = int_s^t theta0(tau) (t - tau)^(beta-1) dtau on the nodes t >= s.
YoungNorms young_norms(const SingularWeights& weights, std::span<const double> theta0,
                       double s);

// L2 bound (and the sup bound when beta > 1/2) with 1% slack.
bool check_young_bound(const SingularWeights& weights, std::span<const double> theta0,
                       double s);

}  // namespace svlq
