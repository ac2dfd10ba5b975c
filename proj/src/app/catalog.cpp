#include "svlq/app/catalog.hpp"

#include <array>
#include <cmath>
#include <memory>
#include <numbers>
#include <stdexcept>

namespace svlq::app {

Uniform::Uniform(std::uint64_t seed) : rng_(seed) {}

double Uniform::operator()() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

namespace {

using std::numbers::pi;

// c0 + c1 cos(pi t) + c2 sin(pi s) + c3 cos(pi (t - s)), entrywise.
struct TrigKernel {
    int rows, cols;
    std::vector<std::array<double, 4>> c;

    TrigKernel(int r, int k, Uniform& U, double amp) : rows(r), cols(k), c(static_cast<std::size_t>(r * k)) {
        for (auto& e : c)
            for (auto& v : e) v = U(-amp, amp);
    }
    Eigen::MatrixXd operator()(double t, double s) const {
        Eigen::MatrixXd M(rows, cols);
        double b1 = std::cos(pi * t), b2 = std::sin(pi * s), b3 = std::cos(pi * (t - s));
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j) {
                const auto& e = c[static_cast<std::size_t>(i * cols + j)];
                M(i, j) = e[0] + e[1] * b1 + e[2] * b2 + e[3] * b3;
            }
        return M;
    }
};

// c0 + c1 cos(pi t) + c2 sin(2 pi t), entrywise.
struct TrigCurve {
    int rows, cols;
    std::vector<std::array<double, 3>> c;

    TrigCurve(int r, int k, Uniform& U, double amp) : rows(r), cols(k), c(static_cast<std::size_t>(r * k)) {
        for (auto& e : c)
            for (auto& v : e) v = U(-amp, amp);
    }
    Eigen::MatrixXd operator()(double t) const {
        Eigen::MatrixXd M(rows, cols);
        double b1 = std::cos(pi * t), b2 = std::sin(2.0 * pi * t);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j) {
                const auto& e = c[static_cast<std::size_t>(i * cols + j)];
                M(i, j) = e[0] + e[1] * b1 + e[2] * b2;
            }
        return M;
    }
};

Eigen::MatrixXd random_matrix(int r, int c, Uniform& U, double amp) {
    Eigen::MatrixXd M(r, c);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) M(i, j) = U(-amp, amp);
    return M;
}

CatalogProblem constant_problem(const std::string& name, const ProblemParams& p, double a, double b,
                                double phi0) {
    CatalogProblem c;
    c.name = name;
    c.problem.beta = p.beta;
    c.problem.T = p.T;
    c.problem.A = [a](double, double) { return Eigen::MatrixXd::Constant(1, 1, a); };
    c.problem.B = [b](double, double) { return Eigen::MatrixXd::Constant(1, 1, b); };
    c.problem.phi = [phi0](double) { return Eigen::VectorXd::Constant(1, phi0); };
    return c;
}

struct SmoothData {
    int n = 2, m = 1;
    std::shared_ptr<TrigKernel> A, B;
    std::shared_ptr<TrigCurve> phi, q, Rvar, S, rho;
    Eigen::MatrixXd L, Mg, Rbase;
    Eigen::VectorXd g;
};

SmoothData smooth_data(std::uint64_t seed) {
    Uniform U(seed);
    SmoothData d;
    d.m = U() < 0.5 ? 1 : 2;
    d.A = std::make_shared<TrigKernel>(d.n, d.n, U, 0.5);
    d.B = std::make_shared<TrigKernel>(d.n, d.m, U, 1.0);
    d.phi = std::make_shared<TrigCurve>(d.n, 1, U, 1.0);
    d.q = std::make_shared<TrigCurve>(d.n, 1, U, 0.5);
    d.Rvar = std::make_shared<TrigCurve>(d.m, d.m, U, 0.2);
    d.L = random_matrix(d.n, d.n, U, 1.0);
    d.Mg = random_matrix(d.n, d.n, U, 1.0);
    Eigen::MatrixXd P = random_matrix(d.m, d.m, U, 0.5);
    d.Rbase = P * P.transpose() + Eigen::MatrixXd::Identity(d.m, d.m);
    d.g = random_matrix(d.n, 1, U, 0.5);
    d.S = std::make_shared<TrigCurve>(d.m, d.n, U, 0.6);
    d.rho = std::make_shared<TrigCurve>(d.m, 1, U, 0.5);
    return d;
}

CatalogProblem smooth_problem(const std::string& name, const ProblemParams& p, bool cross) {
    SmoothData d = smooth_data(p.seed);
    CatalogProblem c;
    c.name = name;
    c.problem.beta = p.beta;
    c.problem.T = p.T;
    c.problem.n = d.n;
    c.problem.m = d.m;
    auto A = d.A, B = d.B;
    auto phi = d.phi;
    c.problem.A = [A](double t, double s) { return (*A)(t, s); };
    c.problem.B = [B](double t, double s) { return (*B)(t, s); };
    c.problem.phi = [phi](double t) -> Eigen::VectorXd { return (*phi)(t); };
    c.cost = [d, cross](const Grid& grid) {
        CostData cost = zero_cost(grid.size(), d.n, d.m);
        Eigen::MatrixXd Q0 = d.L * d.L.transpose();
        double minR = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < grid.size(); ++i) {
            double t = grid[i];
            Eigen::MatrixXd v = (*d.Rvar)(t);
            // A symmetric perturbation bounded by the identity shift keeps R > 0.
            Eigen::MatrixXd Rv = 0.5 * (v + v.transpose());
            cost.R[i] = d.Rbase + Rv + (Rv.cwiseAbs().rowwise().sum().maxCoeff()) *
                                           Eigen::MatrixXd::Identity(d.m, d.m);
            cost.Q[i] = (1.0 + 0.5 * std::sin(pi * t)) * Q0;
            cost.q.col(static_cast<Eigen::Index>(i)) = (*d.q)(t);
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cost.R[i], Eigen::EigenvaluesOnly);
            minR = std::min(minR, es.eigenvalues()(0));
        }
        cost.G = d.Mg * d.Mg.transpose();
        cost.g = d.g;
        if (cross) {
            cost.delta = 0.5 * minR;
            Eigen::MatrixXd I = Eigen::MatrixXd::Identity(d.m, d.m);
            for (std::size_t i = 0; i < grid.size(); ++i) {
                double t = grid[i];
                cost.S[i] = (*d.S)(t);
                cost.rho.col(static_cast<Eigen::Index>(i)) = (*d.rho)(t);
                Eigen::MatrixXd shifted = cost.R[i] - cost.delta * I;
                cost.Q[i] += cost.S[i].transpose() * shifted.ldlt().solve(cost.S[i]);
                cost.Q[i] = (0.5 * (cost.Q[i] + cost.Q[i].transpose())).eval();
            }
        }
        return cost;
    };
    return c;
}

}  // namespace

Eigen::VectorXd example_control(double t, double tail) {
    Eigen::VectorXd u = Eigen::VectorXd::Zero(1);
    if (t >= 0.5 && tail > 0.0 && tail < 1.0) u(0) = 1.0 / (std::sqrt(tail) * std::log(tail));
    return u;
}

const std::vector<CatalogInfo>& list_problems() {
    static const std::vector<CatalogInfo> entries = {
        {"zero-cost", "scalar state, all cost weights zero except R = 1"},
        {"constant-coeff", "scalar A = a, B = b, phi = 1, Q = R = G = 1 (series oracle for Phi)"},
        {"example-2-1", "A = 0, B = 1, phi = 0 on [0,1]; the blow-up example control"},
        {"random-smooth", "n = 2, m in {1,2}; trigonometric coefficients drawn from the seed, S = rho = 0"},
        {"cross-term", "random-smooth data plus nonzero S and rho, delta = min R / 2"},
    };
    return entries;
}

CatalogProblem make_problem(const std::string& name, const ProblemParams& params) {
    if (name == "zero-cost") {
        CatalogProblem c = constant_problem(name, params, 0.5, 1.0, 1.0);
        c.cost = [](const Grid& g) { return zero_cost(g.size(), 1, 1); };
        return c;
    }
    if (name == "constant-coeff") {
        CatalogProblem c = constant_problem(name, params, params.a, params.b, 1.0);
        c.cost = [](const Grid& g) {
            CostData cost = zero_cost(g.size(), 1, 1);
            for (auto& Q : cost.Q) Q.setOnes();
            cost.G.setOnes();
            return cost;
        };
        return c;
    }
    if (name == "example-2-1") {
        CatalogProblem c = constant_problem(name, params, 0.0, 1.0, 0.0);
        c.cost = [](const Grid& g) {
            CostData cost = zero_cost(g.size(), 1, 1);
            for (auto& Q : cost.Q) Q.setOnes();
            cost.G.setOnes();
            cost.g.setOnes();
            return cost;
        };
        return c;
    }
    if (name == "random-smooth") return smooth_problem(name, params, false);
    if (name == "cross-term") return smooth_problem(name, params, true);
    std::string valid;
    for (const auto& e : list_problems()) valid += (valid.empty() ? "" : ", ") + e.name;
    throw std::invalid_argument("unknown problem '" + name + "' (valid: " + valid + ")");
}

}  // namespace svlq::app
