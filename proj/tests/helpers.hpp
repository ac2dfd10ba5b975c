#pragma once

#include <string>

#include "svlq/app/catalog.hpp"
#include "svlq/lq.hpp"
#include "svlq/volterra.hpp"

namespace testing {

struct Setup {
    svlq::app::CatalogProblem cp;
    svlq::Grid grid;
    svlq::DiscreteState ds;
    svlq::StateDecomposition dec;
    svlq::CostData cost;
    svlq::DiscreteLQ dlq;
};

inline Setup finish(svlq::app::CatalogProblem cp, svlq::Grid grid, svlq::CostData cost) {
    Setup s{std::move(cp), std::move(grid), {}, {}, std::move(cost), {}};
    s.ds = svlq::discretize(s.cp.problem, s.grid);
    s.dec = svlq::decompose(s.ds, svlq::resolvent(s.ds));
    s.dlq = svlq::assemble_quadratic_form(svlq::assemble_theta(s.dec, s.grid), s.cost, s.dec);
    return s;
}

inline Setup setup(const std::string& name, std::uint64_t seed, std::size_t n,
                   svlq::GridKind kind = svlq::GridKind::uniform, double exponent = 1.0) {
    svlq::app::ProblemParams p;
    p.seed = seed;
    auto cp = svlq::app::make_problem(name, p);
    svlq::Grid grid = svlq::build_grid(n, p.T, kind, exponent);
    svlq::CostData cost = cp.cost(grid);
    return finish(std::move(cp), std::move(grid), std::move(cost));
}

inline Eigen::MatrixXd random_matrix(svlq::app::Uniform& U, Eigen::Index r, Eigen::Index c) {
    Eigen::MatrixXd M(r, c);
    for (Eigen::Index j = 0; j < c; ++j)
        for (Eigen::Index i = 0; i < r; ++i) M(i, j) = U(-1.0, 1.0);
    return M;
}

inline double rel_l2(const svlq::DiscreteLQ& dlq, const Eigen::MatrixXd& a, const Eigen::MatrixXd& ref) {
    double s = dlq.norm(ref);
    return dlq.norm(a - ref) / (s > 0.0 ? s : 1.0);
}

}  // namespace testing
