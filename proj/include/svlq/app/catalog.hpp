#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "svlq/lq.hpp"
#include "svlq/problem.hpp"
#include "svlq/volterra.hpp"

namespace svlq::app {

struct ProblemParams {
    double beta = 0.75;
    double T = 1.0;
    std::uint64_t seed = 1;
    double a = 1.0;  // constant-coeff
    double b = 1.0;
};

struct CatalogProblem {
    std::string name;
    ProblemData problem;
    std::function<CostData(const Grid&)> cost;
};

struct CatalogInfo {
    std::string name;
    std::string description;
};

const std::vector<CatalogInfo>& list_problems();

// Throws std::invalid_argument listing the valid names for an unknown entry.
CatalogProblem make_problem(const std::string& name, const ProblemParams& params);

// u(s) = (1-s)^(-1/2) / log(1-s) on [1/2, 1), zero elsewhere; sampled through
// the distance to T so graded meshes resolve the endpoint.
Eigen::VectorXd example_control(double t, double tail);

// Deterministic uniform draws in [0, 1) from a 64-bit Mersenne twister.
class Uniform {
public:
    explicit Uniform(std::uint64_t seed);
    double operator()();
    double operator()(double lo, double hi) { return lo + (hi - lo) * (*this)(); }

private:
    std::mt19937_64 rng_;
};

}  // namespace svlq::app
