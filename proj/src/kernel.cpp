#include "svlq/kernel.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <fmt/format.h>

#include "svlq/problem.hpp"
#include "detail.hpp"

namespace svlq {

Eigen::MatrixXd FactoredKernel::value(std::size_t i, std::size_t j) const {
    if (i <= j) throw std::invalid_argument("kernel is only sampled below the diagonal");
    auto I = static_cast<Eigen::Index>(i), J = static_cast<Eigen::Index>(j);
    return blk(C, I, J, rows, cols) * std::pow(grid.gap(i, j), beta - 1.0) +
           blk(D, I, J, rows, cols);
}

Eigen::MatrixXd FactoredKernel::bounded(std::size_t i, std::size_t j) const {
    auto I = static_cast<Eigen::Index>(i), J = static_cast<Eigen::Index>(j);
    if (i == j) return blk(C, I, J, rows, cols);
    return blk(C, I, J, rows, cols) + blk(D, I, J, rows, cols) * std::pow(grid.gap(i, j), 1.0 - beta);
}

FactoredKernel zero_kernel(const Grid& grid, double beta, int rows, int cols, Sampling s) {
    auto N = static_cast<Eigen::Index>(grid.size());
    FactoredKernel k{grid, beta, rows, cols, s,
                     Eigen::MatrixXd::Zero(N * rows, N * cols),
                     Eigen::MatrixXd::Zero(N * rows, N * cols)};
    return k;
}

Eigen::MatrixXd operator_form(const FactoredKernel& k, const SingularWeights& weights) {
    if (!k.grid.same_as(weights.grid) || k.beta != weights.beta)
        throw std::invalid_argument("kernel and weights live on different grids");
    Eigen::MatrixXd trap = trapezoid_rows(k.grid);
    auto N = static_cast<Eigen::Index>(k.nodes());
    Eigen::MatrixXd op = Eigen::MatrixXd::Zero(N * k.rows, N * k.cols);
    for (Eigen::Index i = 1; i < N; ++i)
        for (Eigen::Index j = 0; j <= i; ++j)
            blk(op, i, j, k.rows, k.cols) = weights.w(i, j) * blk(k.C, i, j, k.rows, k.cols) +
                                            trap(i, j) * blk(k.D, i, j, k.rows, k.cols);
    return op;
}

namespace detail {

void write_doubles(std::ostream& out, const double* p, std::size_t n) {
    out.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n * sizeof(double)));
}

void read_doubles(std::istream& in, double* p, std::size_t n) {
    in.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(n * sizeof(double)));
    if (!in) throw std::runtime_error("kernel cache truncated");
}

}  // namespace detail

using detail::read_doubles;
using detail::write_doubles;

void save_kernel(const FactoredKernel& k, std::ostream& out) {
    out << fmt::format(
        "svlqk v1 nodes={} T={:.17g} kind={} exponent={:.17g} beta={:.17g} rows={} cols={} "
        "sampling={} bound={:.17g}\n",
        k.nodes(), k.grid.T(), k.grid.kind() == GridKind::uniform ? "uniform" : "graded",
        k.grid.exponent(), k.beta, k.rows, k.cols, k.sampling == Sampling::cell ? "cell" : "point",
        k.bound);
    std::vector<double> tails(k.nodes());
    for (std::size_t i = 0; i < k.nodes(); ++i) tails[i] = k.grid.tail(i);
    write_doubles(out, k.grid.nodes().data(), k.nodes());
    write_doubles(out, tails.data(), k.nodes());
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> c = k.C, d = k.D;
    write_doubles(out, c.data(), static_cast<std::size_t>(c.size()));
    write_doubles(out, d.data(), static_cast<std::size_t>(d.size()));
}

FactoredKernel load_kernel(std::istream& in) {
    std::string header;
    if (!std::getline(in, header)) throw std::runtime_error("empty kernel cache");
    std::istringstream hs(header);
    std::string magic, version;
    hs >> magic >> version;
    if (magic != "svlqk" || version != "v1") throw std::runtime_error("not a kernel cache file");
    std::size_t nodes = 0;
    double T = 0, exponent = 1, beta = 0, bound = 0;
    int rows = 0, cols = 0;
    std::string kind, sampling;
    std::string tok;
    while (hs >> tok) {
        auto eq = tok.find('=');
        if (eq == std::string::npos) throw std::runtime_error("bad kernel cache header");
        std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
        if (key == "nodes") nodes = std::stoul(val);
        else if (key == "T") T = std::stod(val);
        else if (key == "kind") kind = val;
        else if (key == "exponent") exponent = std::stod(val);
        else if (key == "beta") beta = std::stod(val);
        else if (key == "rows") rows = std::stoi(val);
        else if (key == "cols") cols = std::stoi(val);
        else if (key == "sampling") sampling = val;
        else if (key == "bound") bound = std::stod(val);
    }
    if (nodes < 3 || rows < 1 || cols < 1) throw std::runtime_error("bad kernel cache header");
    std::vector<double> t(nodes), tails(nodes);
    read_doubles(in, t.data(), nodes);
    read_doubles(in, tails.data(), nodes);
    Grid grid(std::move(t), std::move(tails), T,
              kind == "graded" ? GridKind::graded : GridKind::uniform, exponent);
    auto N = static_cast<Eigen::Index>(nodes);
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> c(N * rows, N * cols),
        d(N * rows, N * cols);
    read_doubles(in, c.data(), static_cast<std::size_t>(c.size()));
    read_doubles(in, d.data(), static_cast<std::size_t>(d.size()));
    FactoredKernel k{grid, beta, rows, cols,
                     sampling == "point" ? Sampling::point : Sampling::cell, c, d};
    k.bound = bound;
    return k;
}

void save_kernel(const FactoredKernel& k, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write kernel cache " + path);
    save_kernel(k, out);
}

FactoredKernel load_kernel(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read kernel cache " + path);
    return load_kernel(in);
}

}  // namespace svlq
