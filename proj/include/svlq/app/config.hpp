#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "svlq/grid.hpp"

namespace svlq::app {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Tolerances {
    double mp = 1e-5;         // maximum principle vs oracle
    double causal = 1e-8;     // abstract causal representation vs oracle
    double feedback = 1e-6;   // Fredholm feedback (and general representation) vs oracle
    double value = 1e-8;      // reduced vs original optimal value
    double norm = 0.02;       // example-2-1 scenario norm, relative
};

struct RunConfig {
    std::string problem = "random-smooth";
    std::uint64_t seed = 1;
    double beta = 0.75;
    double T = 1.0;
    std::size_t n = 64;
    GridKind grid = GridKind::uniform;
    double grading = 2.0;
    std::string scenario = "equivalence";
    std::string m_solver = "direct";
    int iterations = 2;
    int subspace_dim = 16;
    std::size_t sigma = 0;
    std::string output_dir = "svlq-out";
    double a = 1.0;
    double b = 1.0;
    Tolerances tol;
    // Optional constant-in-time matrices, row-major comma separated, rows
    // separated by ';'. A, B, phi define problem=inline; the others override
    // the catalog cost.
    std::map<std::string, Eigen::MatrixXd> matrices;

    // Canonical key=value dump; the hash of this text identifies the run.
    std::string canonical() const;
    std::uint64_t hash() const;
    // Hash of the fields that fix the state equation and grid family; the
    // kernel cache adds n and beta to it.
    std::uint64_t problem_hash() const;
};

// Keys: problem seed beta T n grid grading scenario m_solver iterations
// subspace_dim sigma output_dir a b tol_mp tol_causal tol_feedback tol_value
// tol_norm and the matrices A B phi Q S R q rho G g.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
void validate(const RunConfig& cfg);

bool is_lq_scenario(const std::string& scenario);

std::uint64_t fnv1a64(const std::string& text);

}  // namespace svlq::app
