#include "svlq/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "svlq/quadrature.hpp"

namespace svlq {

Grid::Grid(std::vector<double> nodes, std::vector<double> tails, double T, GridKind kind,
           double exponent)
    : nodes_(std::move(nodes)), tails_(std::move(tails)), T_(T), kind_(kind), exponent_(exponent) {
    if (nodes_.size() < 3) throw std::invalid_argument("grid needs at least 3 nodes");
    if (tails_.size() != nodes_.size()) throw std::invalid_argument("grid tails size mismatch");
    if (nodes_.front() != 0.0 || tails_.back() != 0.0)
        throw std::invalid_argument("grid must start at 0 and end at T");
    for (std::size_t j = 0; j + 1 < nodes_.size(); ++j)
        if (!(gap(j + 1, j) > 0.0))
            throw std::invalid_argument("grid nodes not strictly increasing at index " +
                                        std::to_string(j + 1));
}

double Grid::gap(std::size_t i, std::size_t j) const {
    if (2.0 * nodes_[i] >= T_ && 2.0 * nodes_[j] >= T_) return tails_[j] - tails_[i];
    return nodes_[i] - nodes_[j];
}

double Grid::max_step() const {
    double h = 0.0;
    for (std::size_t j = 0; j + 1 < size(); ++j) h = std::max(h, step(j));
    return h;
}

std::size_t Grid::locate(double t) const {
    auto it = std::upper_bound(nodes_.begin(), nodes_.end(), t);
    if (it == nodes_.begin()) return 0;
    return static_cast<std::size_t>(it - nodes_.begin()) - 1;
}

bool Grid::same_as(const Grid& other) const {
    return T_ == other.T_ && nodes_ == other.nodes_ && tails_ == other.tails_;
}

Grid build_grid(std::size_t n, double T, GridKind kind, double exponent) {
    if (n < 3) throw std::invalid_argument("grid size n must be at least 3");
    if (!(T > 0.0) || !std::isfinite(T)) throw std::invalid_argument("horizon T must be positive");
    std::size_t N = n - 1;
    std::vector<double> nodes(n), tails(n);
    if (kind == GridKind::uniform) {
        for (std::size_t k = 0; k < n; ++k) {
            nodes[k] = T * static_cast<double>(k) / static_cast<double>(N);
            tails[k] = T * static_cast<double>(N - k) / static_cast<double>(N);
        }
        return Grid(std::move(nodes), std::move(tails), T, kind, 1.0);
    }
    if (!(exponent >= 1.0) || !std::isfinite(exponent))
        throw std::invalid_argument("grading exponent must be >= 1");
    auto lower = [&](std::size_t k) {
        return 0.5 * T * std::pow(2.0 * static_cast<double>(k) / static_cast<double>(N), exponent);
    };
    for (std::size_t k = 0; 2 * k <= N; ++k) {
        double t = lower(k);
        nodes[k] = t;
        tails[k] = T - t;
        nodes[N - k] = T - t;
        tails[N - k] = t;
    }
    if (N % 2 == 0) {
        nodes[N / 2] = 0.5 * T;
        tails[N / 2] = 0.5 * T;
    }
    return Grid(std::move(nodes), std::move(tails), T, kind, exponent);
}

Eigen::VectorXd trapezoid_weights(const Grid& grid) {
    Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.size()));
    for (std::size_t j = 0; j + 1 < grid.size(); ++j) {
        double h = 0.5 * grid.step(j);
        w(j) += h;
        w(j + 1) += h;
    }
    return w;
}

Eigen::MatrixXd trapezoid_rows(const Grid& grid) {
    auto n = static_cast<Eigen::Index>(grid.size());
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 1; i < n; ++i) {
        w.row(i) = w.row(i - 1);
        double h = 0.5 * grid.step(static_cast<std::size_t>(i - 1));
        w(i, i - 1) += h;
        w(i, i) += h;
    }
    return w;
}

Eigen::VectorXd product_weights_row(const Grid& grid, double beta, std::size_t i) {
    if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("beta must lie in (0,1)");
    Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.size()));
    const Rule& gl = gauss_legendre(8);
    for (std::size_t j = 0; j < i; ++j) {
        double da = grid.gap(i, j);
        double db = grid.gap(i, j + 1);
        double h = grid.step(j);
        double far = 0.0, near = 0.0;
        if (db > 20.0 * h) {
            // Closed form cancels badly here; the integrand is smooth on the cell.
            for (std::size_t g = 0; g < gl.x.size(); ++g) {
                double x = db + h * gl.x[g];
                double f = gl.w[g] * h * std::pow(x, beta - 1.0);
                far += f * gl.x[g];
                near += f * (1.0 - gl.x[g]);
            }
        } else {
            double m0 = (std::pow(da, beta) - std::pow(db, beta)) / beta;
            double m1 = (std::pow(da, beta + 1.0) - std::pow(db, beta + 1.0)) / (beta + 1.0);
            far = (m1 - db * m0) / h;
            near = (da * m0 - m1) / h;
        }
        w(j) += far;
        w(j + 1) += near;
    }
    return w;
}

SingularWeights product_weights(const Grid& grid, double beta) {
    if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("beta must lie in (0,1)");
    auto n = static_cast<Eigen::Index>(grid.size());
    SingularWeights sw{grid, beta, Eigen::MatrixXd::Zero(n, n)};
    for (std::size_t i = 1; i < grid.size(); ++i)
        sw.w.row(static_cast<Eigen::Index>(i)) = product_weights_row(grid, beta, i).transpose();
    return sw;
}

double integrate_singular(const SingularWeights& weights, std::size_t i,
                          std::span<const double> g) {
    if (g.size() != weights.grid.size())
        throw std::invalid_argument("integrand length does not match the grid");
    if (i >= weights.grid.size()) throw std::invalid_argument("node index out of range");
    double s = 0.0;
    for (std::size_t j = 0; j <= i; ++j) s += weights.w(static_cast<Eigen::Index>(i), j) * g[j];
    return s;
}

YoungNorms young_norms(const SingularWeights& weights, std::span<const double> theta0,
                       double s) {
    const Grid& grid = weights.grid;
    if (theta0.size() != grid.size())
        throw std::invalid_argument("theta0 length does not match the grid");
    if (!(s >= 0.0 && s < grid.T())) throw std::invalid_argument("s must lie in [0,T)");
    double beta = weights.beta;
    std::size_t p = grid.locate(s);
    if (grid[p] < s) ++p;
    std::vector<double> cut(grid.size(), 0.0);
    for (std::size_t j = p; j < grid.size(); ++j) cut[j] = theta0[j];
    Eigen::VectorXd tw = trapezoid_weights(grid);
    YoungNorms r;
    double eta2 = 0.0, th2 = 0.0;
    for (std::size_t i = p; i < grid.size(); ++i) {
        double eta = integrate_singular(weights, i, cut);
        eta2 += tw(i) * eta * eta;
        r.eta_sup = std::max(r.eta_sup, std::abs(eta));
    }
    for (std::size_t j = p; j < grid.size(); ++j) th2 += tw(j) * cut[j] * cut[j];
    r.eta_l2 = std::sqrt(eta2);
    r.theta_l2 = std::sqrt(th2);
    double len = grid.T() - s;
    r.l2_bound = std::pow(len, beta) / beta * r.theta_l2;
    if (beta > 0.5)
        r.sup_bound = std::pow(len, beta - 0.5) / std::sqrt(2.0 * beta - 1.0) * r.theta_l2;
    return r;
}

bool check_young_bound(const SingularWeights& weights, std::span<const double> theta0,
                       double s) {
    YoungNorms r = young_norms(weights, theta0, s);
    bool ok = r.eta_l2 <= 1.01 * r.l2_bound;
    if (weights.beta > 0.5) ok = ok && r.eta_sup <= 1.01 * r.sup_bound;
    return ok;
}

}  // namespace svlq
