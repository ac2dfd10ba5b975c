#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace svlq {

struct Rule {
    std::vector<double> x;
    std::vector<double> w;
};

// Gauss rules mapped to [0, 1].
const Rule& gauss_legendre(int n);
// Weight (1 - x)^a x^b on [0, 1], a, b > -1.
Rule gauss_jacobi(int n, double a, double b);

// Weights of the Lagrange interpolant through the panel nodes x (2 or 3,
// ascending, inside [0, 1]) for int (1 - x)^a x^b g(x) dx over
// [x[from], x[to]] (to = 0 means the last node). y holds 1 - x computed
// without cancellation.
Eigen::VectorXd panel_weights(std::span<const double> x, std::span<const double> y,
                              double a, double b, std::size_t from = 0, std::size_t to = 0);

}  // namespace svlq
