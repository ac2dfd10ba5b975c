#pragma once

// Reference values computed independently of the library.

#include <cmath>
#include <functional>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>

namespace oracle {

// Two-parameter Mittag-Leffler function by its power series (|z| modest).
inline double mittag_leffler(double alpha, double beta, double z) {
    long double sum = 0.0L, zk = 1.0L;
    for (int k = 0; k < 400; ++k) {
        long double term = zk / boost::math::tgamma(static_cast<long double>(alpha * k + beta));
        sum += term;
        if (k > 5 && std::fabs(term) < 1e-22L * std::fabs(sum)) break;
        zk *= z;
    }
    return static_cast<double>(sum);
}

// Resolvent of the scalar kernel a (t-s)^(beta-1):
//   Phi(r) = sum_k (a Gamma(beta))^k r^(k beta - 1) / Gamma(k beta).
inline double constant_resolvent(double a, double beta, double r) {
    double c = a * std::tgamma(beta);
    return c * std::pow(r, beta - 1.0) * mittag_leffler(beta, beta, c * std::pow(r, beta));
}

// X = 1 + a int_0^t (t-s)^(beta-1) X(s) ds  =>  X(t) = E_beta(a Gamma(beta) t^beta).
inline double constant_state(double a, double beta, double t) {
    return mittag_leffler(beta, 1.0, a * std::tgamma(beta) * std::pow(t, beta));
}

// int_lo^hi f(s) (t - s)^(beta-1) ds for lo < hi <= t, by tanh-sinh on the
// substitution s = t - x^(1/beta), which removes the singularity.
inline double singular_integral(const std::function<double(double)>& f, double t, double lo, double hi,
                                double beta) {
    boost::math::quadrature::tanh_sinh<double> ts;
    double xa = std::pow(t - hi, beta), xb = std::pow(t - lo, beta);
    auto g = [&](double x) { return f(t - std::pow(x, 1.0 / beta)) / beta; };
    return ts.integrate(g, xa, xb);
}

// Plain tanh-sinh integral on [lo, hi] (endpoint singularities allowed).
inline double integral(const std::function<double(double)>& f, double lo, double hi) {
    boost::math::quadrature::tanh_sinh<double> ts;
    return ts.integrate(f, lo, hi);
}

}  // namespace oracle
