#pragma once

#include <iosfwd>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "svlq/grid.hpp"

namespace svlq {

// point: pointwise high-order samples of the continuous kernel.
// cell: samples consistent with the product-integration operator, so that
// weights * C + trapezoid * D reproduces the discrete operator exactly.
enum class Sampling { point, cell };

// K(t_i, s_j) = C_ij (t_i - s_j)^(beta-1) + D_ij for i > j; blocks are
// rows x cols. C holds the diagonal limit in block (i, i).
struct FactoredKernel {
    Grid grid;
    double beta = 0.75;
    int rows = 1;
    int cols = 1;
    Sampling sampling = Sampling::cell;
    Eigen::MatrixXd C;
    Eigen::MatrixXd D;
    // Declared bound: |C + D (t-s)^(1-beta)| <= bound on all samples.
    double bound = std::numeric_limits<double>::infinity();
    // Residuals of the defining equation and of its dual, when computed.
    double residual = std::numeric_limits<double>::quiet_NaN();
    double residual_dual = std::numeric_limits<double>::quiet_NaN();

    std::size_t nodes() const { return grid.size(); }
    Eigen::MatrixXd value(std::size_t i, std::size_t j) const;
    // Bounded factor K (t-s)^(1-beta); equals C on the diagonal.
    Eigen::MatrixXd bounded(std::size_t i, std::size_t j) const;
};

FactoredKernel zero_kernel(const Grid& grid, double beta, int rows, int cols, Sampling s);

// weights * C + trapezoid_rows * D as a block lower-triangular operator.
Eigen::MatrixXd operator_form(const FactoredKernel& k, const SingularWeights& weights);

// Binary cache: a text header line
//   svlqk v1 nodes=<N+1> T=<T> kind=<uniform|graded> exponent=<r> beta=<beta>
//     rows=<r> cols=<c> sampling=<point|cell> bound=<b>
// followed by raw little-endian doubles: nodes, tails, C row-major, D row-major.
void save_kernel(const FactoredKernel& k, std::ostream& out);
FactoredKernel load_kernel(std::istream& in);
void save_kernel(const FactoredKernel& k, const std::string& path);
FactoredKernel load_kernel(const std::string& path);

}  // namespace svlq
