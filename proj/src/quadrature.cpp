#include "svlq/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

#include <boost/math/special_functions/beta.hpp>

namespace svlq {

namespace {

// Golub-Welsch on [-1, 1] for weight (1 - x)^a (1 + x)^b, mapped to [0, 1].
Rule golub_welsch(int n, double a, double b) {
    if (n < 1) throw std::invalid_argument("quadrature order must be positive");
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
    for (int k = 0; k < n; ++k) {
        double s = 2.0 * k + a + b;
        J(k, k) = k == 0 ? (b - a) / (a + b + 2.0) : (b * b - a * a) / (s * (s + 2.0));
        if (k + 1 < n) {
            double j = k + 1.0;
            double t = 2.0 * j + a + b;
            double sq = j == 1.0
                            ? 4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + a + b) * (2.0 + a + b) * (3.0 + a + b))
                            : 4.0 * j * (j + a) * (j + b) * (j + a + b) / (t * t * (t + 1.0) * (t - 1.0));
            double off = std::sqrt(sq);
            J(k, k + 1) = off;
            J(k + 1, k) = off;
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    double mu0 = std::exp((a + b + 1.0) * std::log(2.0) + std::lgamma(a + 1.0) +
                          std::lgamma(b + 1.0) - std::lgamma(a + b + 2.0));
    Rule r;
    r.x.resize(n);
    r.w.resize(n);
    double scale = std::pow(2.0, -(a + b + 1.0));
    for (int k = 0; k < n; ++k) {
        double v = es.eigenvectors()(0, k);
        r.x[k] = 0.5 * (1.0 + es.eigenvalues()(k));
        r.w[k] = mu0 * v * v * scale;
    }
    return r;
}

// int_{lo}^{hi} (1 - x)^(q-1) x^(p-1) dx with both endpoints given as (x, 1 - x).
double beta_piece(double p, double q, double xl, double yl, double xh, double yh) {
    using boost::math::ibeta;
    double B = boost::math::beta(p, q);
    if (xh <= 0.5) return B * (ibeta(p, q, xh) - ibeta(p, q, xl));
    if (xl >= 0.5) return B * (ibeta(q, p, yl) - ibeta(q, p, yh));
    return B * ((1.0 - ibeta(q, p, yh)) - ibeta(p, q, xl));
}

// Lagrange weights from monomial moments in a local variable v (v_k node values).
Eigen::VectorXd lagrange_from_moments(std::span<const double> v, const double* mom) {
    std::size_t k = v.size();
    Eigen::VectorXd w(k);
    if (k == 2) {
        double d = v[0] - v[1];
        w(0) = (mom[1] - v[1] * mom[0]) / d;
        w(1) = (v[0] * mom[0] - mom[1]) / d;
        return w;
    }
    for (std::size_t i = 0; i < 3; ++i) {
        std::size_t j1 = (i + 1) % 3, j2 = (i + 2) % 3;
        double d = (v[i] - v[j1]) * (v[i] - v[j2]);
        w(static_cast<Eigen::Index>(i)) =
            (mom[2] - (v[j1] + v[j2]) * mom[1] + v[j1] * v[j2] * mom[0]) / d;
    }
    return w;
}

}  // namespace

const Rule& gauss_legendre(int n) {
    static std::map<int, Rule> cache;
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, golub_welsch(n, 0.0, 0.0)).first;
    return it->second;
}

Rule gauss_jacobi(int n, double a, double b) {
    if (!(a > -1.0) || !(b > -1.0))
        throw std::invalid_argument("Jacobi exponents must exceed -1");
    // On [-1,1] the factor (1-x)^a maps to (1-u)^a, (1+x)^b to u^b.
    return golub_welsch(n, a, b);
}

Eigen::VectorXd panel_weights(std::span<const double> x, std::span<const double> y,
                              double a, double b, std::size_t from, std::size_t to) {
    std::size_t k = x.size();
    if ((k != 2 && k != 3) || y.size() != k)
        throw std::invalid_argument("panel needs 2 or 3 nodes");
    if (to == 0 || to >= k) to = k - 1;
    if (from >= to) throw std::invalid_argument("empty panel range");
    double lo = x[from], hi = x[to];
    double width = hi - lo;
    double ylo = y[to];  // 1 - hi
    double yhi = y[from];
    if (lo >= 2.0 * width && ylo >= 2.0 * width) {
        const Rule& gl = gauss_legendre(8);
        Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k));
        for (std::size_t g = 0; g < gl.x.size(); ++g) {
            double xi = lo + width * gl.x[g];
            double yi = yhi - width * gl.x[g];
            double f = gl.w[g] * width * std::pow(yi, a) * std::pow(xi, b);
            for (std::size_t i = 0; i < k; ++i) {
                double l = 1.0;
                for (std::size_t j = 0; j < k; ++j)
                    if (j != i) l *= (xi - x[j]) / (x[i] - x[j]);
                w(static_cast<Eigen::Index>(i)) += f * l;
            }
        }
        return w;
    }
    double mom[3];
    if (lo <= ylo) {
        // Expand in x: int (1-x)^a x^(b+p).
        for (std::size_t p = 0; p < k; ++p)
            mom[p] = beta_piece(b + 1.0 + p, a + 1.0, lo, yhi, hi, ylo);
        return lagrange_from_moments(x, mom);
    }
    // Expand in y = 1 - x: int y^(a+p) (1-y)^b over [ylo, yhi].
    for (std::size_t p = 0; p < k; ++p)
        mom[p] = beta_piece(a + 1.0 + p, b + 1.0, ylo, hi, yhi, lo);
    return lagrange_from_moments(y, mom);
}

}  // namespace svlq
