#include "svlq/fredholm.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>
#include <unsupported/Eigen/KroneckerProduct>

#include "svlq/errors.hpp"
#include "detail.hpp"

namespace svlq {

namespace {

Eigen::MatrixXd block_diag_R(const CostData& cost, std::size_t from) {
    Eigen::Index m = cost.R.front().rows();
    auto n = static_cast<Eigen::Index>(cost.R.size() - from);
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n * m, n * m);
    for (Eigen::Index i = 0; i < n; ++i) blk(out, i, i, m, m) = cost.R[from + static_cast<std::size_t>(i)];
    return out;
}

Eigen::MatrixXd solve_R_rows(const CostData& cost, const Eigen::MatrixXd& X) {
    Eigen::Index m = cost.R.front().rows();
    Eigen::MatrixXd out(X.rows(), X.cols());
    for (std::size_t i = 0; i < cost.R.size(); ++i) {
        auto I = static_cast<Eigen::Index>(i);
        out.middleRows(I * m, m) = cost.R[i].ldlt().solve(X.middleRows(I * m, m));
    }
    return out;
}

Eigen::MatrixXd solve_checked(const Eigen::MatrixXd& A, const Eigen::MatrixXd& b, const char* what) {
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
    if (!(lu.rcond() > 1e-14)) throw NumericalError(what);
    return lu.solve(b);
}

}  // namespace

std::string method_name(FredholmMethod m) {
    switch (m) {
        case FredholmMethod::direct: return "direct";
        case FredholmMethod::galerkin: return "galerkin";
        case FredholmMethod::iterated: return "iterated";
        case FredholmMethod::superconvergent: return "superconvergent";
    }
    return "direct";
}

FredholmMethod parse_method(const std::string& name) {
    if (name == "direct") return FredholmMethod::direct;
    if (name == "galerkin") return FredholmMethod::galerkin;
    if (name == "iterated") return FredholmMethod::iterated;
    if (name == "superconvergent") return FredholmMethod::superconvergent;
    throw std::invalid_argument("unknown Fredholm method '" + name +
                                "' (valid: direct, galerkin, iterated, superconvergent)");
}

void save_feedback_kernel(const FeedbackKernel& k, double beta, std::ostream& out) {
    if (k.M.rows() != k.M.cols()) throw std::invalid_argument("feedback kernel must be square");
    auto cols = static_cast<std::size_t>(k.M.cols());
    auto m = static_cast<std::size_t>(k.m);
    if (m == 0 || cols % m) throw std::invalid_argument("feedback kernel block size mismatch");
    out << fmt::format("svlqm v1 sigma={} method={} nodes={} m={} beta={:.17g} residual={:.17g}\n",
                       k.sigma, method_name(k.method), cols / m, m, beta, k.residual);
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> r = k.M;
    detail::write_doubles(out, r.data(), static_cast<std::size_t>(r.size()));
}

FeedbackKernel load_feedback_kernel(std::istream& in, double* beta) {
    std::string header;
    if (!std::getline(in, header)) throw std::runtime_error("empty feedback kernel file");
    std::istringstream hs(header);
    std::string magic, version, tok;
    hs >> magic >> version;
    if (magic != "svlqm" || version != "v1") throw std::runtime_error("not a feedback kernel file");
    FeedbackKernel k;
    std::size_t nodes = 0, m = 0;
    double b = 0.0;
    while (hs >> tok) {
        auto eq = tok.find('=');
        if (eq == std::string::npos) throw std::runtime_error("bad feedback kernel header");
        std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
        if (key == "sigma") k.sigma = std::stoul(val);
        else if (key == "method") k.method = parse_method(val);
        else if (key == "nodes") nodes = std::stoul(val);
        else if (key == "m") m = std::stoul(val);
        else if (key == "beta") b = std::stod(val);
        else if (key == "residual") k.residual = std::stod(val);
    }
    if (nodes == 0 || m == 0) throw std::runtime_error("bad feedback kernel header");
    auto size = static_cast<Eigen::Index>(nodes * m);
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> r(size, size);
    detail::read_doubles(in, r.data(), static_cast<std::size_t>(r.size()));
    k.M = r;
    k.m = static_cast<int>(m);
    if (beta) *beta = b;
    return k;
}

Eigen::MatrixXd FredholmSystem::K_sigma() const {
    Eigen::Index a = active();
    return Kcal.bottomRightCorner(a, a) * wm.tail(a).asDiagonal();
}

FredholmSystem assemble_fredholm(const DiscreteLQ& dlq, const CostData& cost, std::size_t sigma) {
    if (sigma >= dlq.grid.size()) throw std::invalid_argument("sigma index out of range");
    if (cost.R.size() != dlq.grid.size()) throw std::invalid_argument("cost and grid size differ");
    FredholmSystem sys;
    sys.grid = dlq.grid;
    sys.sigma = sigma;
    sys.m = dlq.m;
    sys.w = dlq.w;
    sys.wm = dlq.wm;
    Eigen::MatrixXd K0 = dlq.gram;
    Eigen::Index m = dlq.m;
    for (Eigen::Index i = 0; i < dlq.w.size(); ++i)
        blk(K0, i, i, m, m) -= dlq.w(i) * cost.R[static_cast<std::size_t>(i)];
    Eigen::VectorXd inv = dlq.wm.cwiseInverse();
    sys.Kcal = -solve_R_rows(cost, inv.asDiagonal() * K0 * inv.asDiagonal());
    sys.f = sys.Kcal;
    return sys;
}

double fredholm_quadrature_check(const FredholmSystem& sys, const DiscreteLQ& dlq,
                                 const CostData& cost, int samples, unsigned seed) {
    if (cost.has_cross_terms())
        throw std::invalid_argument("quadrature check covers the problem without cross terms");
    int n = dlq.n, m = dlq.m;
    auto N = static_cast<Eigen::Index>(dlq.grid.size());
    auto psi_cell = [&](Eigen::Index k, Eigen::Index i) -> Eigen::MatrixXd {
        return blk(dlq.Theta, k, i, n, m) / dlq.w(i);
    };
    auto psi_T = [&](Eigen::Index i) -> Eigen::MatrixXd {
        return dlq.Theta_T.middleCols(i * m, m) / dlq.w(i);
    };
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<Eigen::Index> pick(0, N - 1);
    double scale = std::max(sys.Kcal.cwiseAbs().maxCoeff(), 1e-300);
    double worst = 0.0;
    for (int s = 0; s < samples; ++s) {
        Eigen::Index i = pick(rng), j = pick(rng);
        Eigen::MatrixXd acc = psi_T(i).transpose() * cost.G * psi_T(j);
        for (Eigen::Index k = std::max(i, j); k < N; ++k)
            acc += dlq.w(k) * psi_cell(k, i).transpose() * cost.Q[static_cast<std::size_t>(k)] *
                   psi_cell(k, j);
        Eigen::MatrixXd val = -cost.R[static_cast<std::size_t>(i)].ldlt().solve(acc);
        worst = std::max(worst, (val - blk(sys.Kcal, i, j, m, m)).cwiseAbs().maxCoeff() / scale);
    }
    return worst;
}

double fredholm_residual(const FredholmSystem& sys, const Eigen::MatrixXd& M) {
    Eigen::Index o = sys.offset(), a = sys.active();
    Eigen::MatrixXd act = M.bottomRows(a);
    Eigen::MatrixXd r = act - sys.f.bottomRows(a) - sys.K_sigma() * act;
    double fs = sys.f.cwiseAbs().maxCoeff();
    (void)o;
    return r.cwiseAbs().maxCoeff() / (fs > 0.0 ? fs : 1.0);
}

FeedbackKernel solve_direct(const FredholmSystem& sys) {
    Eigen::Index o = sys.offset(), a = sys.active();
    FeedbackKernel k;
    k.sigma = sys.sigma;
    k.m = sys.m;
    k.method = FredholmMethod::direct;
    k.M = Eigen::MatrixXd::Zero(sys.f.rows(), sys.f.cols());
    Eigen::MatrixXd I = Eigen::MatrixXd::Identity(a, a);
    k.M.bottomRows(a) = solve_checked(I - sys.K_sigma(), sys.f.bottomRows(a),
                                      "Fredholm system singular; check (A4)");
    if (o > 0)
        k.M.topRows(o) = sys.f.topRows(o) + sys.Kcal.topRightCorner(o, a) *
                                                sys.wm.tail(a).asDiagonal() * k.M.bottomRows(a);
    k.residual = fredholm_residual(sys, k.M);
    return k;
}

GalerkinState galerkin_setup(const FredholmSystem& sys, int subspace_dim) {
    std::size_t na = sys.grid.size() - sys.sigma;
    if (subspace_dim < 2 || static_cast<std::size_t>(subspace_dim) > na)
        throw std::invalid_argument("subspace dimension must lie in [2, active nodes]");
    GalerkinState st;
    st.dim = subspace_dim;
    for (int k = 0; k < subspace_dim; ++k)
        st.knots.push_back(sys.sigma + static_cast<std::size_t>(std::llround(
                                           static_cast<double>(k) * static_cast<double>(na - 1) /
                                           static_cast<double>(subspace_dim - 1))));
    int m = sys.m;
    auto rows = static_cast<Eigen::Index>(na);
    Eigen::MatrixXd hat = Eigen::MatrixXd::Zero(rows, subspace_dim);
    const Grid& g = sys.grid;
    for (int k = 0; k < subspace_dim; ++k) {
        std::size_t c = st.knots[static_cast<std::size_t>(k)];
        hat(static_cast<Eigen::Index>(c - sys.sigma), k) = 1.0;
        if (k > 0) {
            std::size_t l = st.knots[static_cast<std::size_t>(k - 1)];
            for (std::size_t i = l + 1; i < c; ++i)
                hat(static_cast<Eigen::Index>(i - sys.sigma), k) = g.gap(i, l) / g.gap(c, l);
        }
        if (k + 1 < subspace_dim) {
            std::size_t r = st.knots[static_cast<std::size_t>(k + 1)];
            for (std::size_t i = c + 1; i < r; ++i)
                hat(static_cast<Eigen::Index>(i - sys.sigma), k) = g.gap(r, i) / g.gap(r, c);
        }
    }
    st.basis = Eigen::kroneckerProduct(hat, Eigen::MatrixXd::Identity(m, m));
    Eigen::VectorXd w = sys.wm.tail(sys.active());
    st.gram = st.basis.transpose() * w.asDiagonal() * st.basis;
    st.projector = st.basis * st.gram.ldlt().solve(st.basis.transpose() * w.asDiagonal());
    st.projected_lu_matrix = st.gram - st.basis.transpose() * w.asDiagonal() * sys.K_sigma() * st.basis;
    return st;
}

namespace {

// Solves (I - P K) e = P g for e in the span of the basis.
Eigen::MatrixXd projected_solve(const FredholmSystem& sys, const GalerkinState& st,
                                const Eigen::MatrixXd& g) {
    Eigen::VectorXd w = sys.wm.tail(sys.active());
    Eigen::MatrixXd c = solve_checked(st.projected_lu_matrix,
                                      st.basis.transpose() * w.asDiagonal() * g,
                                      "projected Fredholm system singular; increase the subspace");
    return st.basis * c;
}

FeedbackKernel wrap(const FredholmSystem& sys, FredholmMethod method, const Eigen::MatrixXd& act) {
    FeedbackKernel k;
    k.sigma = sys.sigma;
    k.m = sys.m;
    k.method = method;
    k.M = Eigen::MatrixXd::Zero(sys.f.rows(), sys.f.cols());
    k.M.bottomRows(sys.active()) = act;
    k.residual = fredholm_residual(sys, k.M);
    return k;
}

}  // namespace

FeedbackKernel solve_galerkin(const FredholmSystem& sys, int subspace_dim) {
    GalerkinState st = galerkin_setup(sys, subspace_dim);
    return wrap(sys, FredholmMethod::galerkin, projected_solve(sys, st, sys.f.bottomRows(sys.active())));
}

FeedbackKernel solve_iterated_galerkin(const FredholmSystem& sys, const FeedbackKernel& galerkin) {
    Eigen::Index a = sys.active();
    Eigen::MatrixXd act = sys.f.bottomRows(a) + sys.K_sigma() * galerkin.M.bottomRows(a);
    return wrap(sys, FredholmMethod::iterated, act);
}

double kernel_error(const FredholmSystem& sys, const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    Eigen::Index r = sys.active();
    Eigen::MatrixXd d = (a - b).bottomRows(r);
    Eigen::VectorXd wr = sys.wm.tail(r);
    double s = 0.0;
    for (Eigen::Index j = 0; j < d.cols(); ++j)
        s += sys.wm(j) * d.col(j).cwiseAbs2().dot(wr);
    return std::sqrt(s);
}

SuperconvergentResult solve_superconvergent(const FredholmSystem& sys, int subspace_dim,
                                            int k_iters, const FeedbackKernel* oracle) {
    if (k_iters < 0) throw std::invalid_argument("iteration count must be non-negative");
    FeedbackKernel direct;
    if (!oracle) {
        direct = solve_direct(sys);
        oracle = &direct;
    }
    GalerkinState st = galerkin_setup(sys, subspace_dim);
    Eigen::Index a = sys.active();
    Eigen::MatrixXd f = sys.f.bottomRows(a);
    Eigen::MatrixXd K = sys.K_sigma();
    Eigen::MatrixXd Mg = projected_solve(sys, st, f);
    Eigen::MatrixXd M = f + K * Mg;
    SuperconvergentResult res;
    auto record = [&](const Eigen::MatrixXd& act) {
        Eigen::MatrixXd full = Eigen::MatrixXd::Zero(sys.f.rows(), sys.f.cols());
        full.bottomRows(a) = act;
        res.error_history.push_back(kernel_error(sys, full, oracle->M));
    };
    record(M);
    for (int k = 0; k < k_iters; ++k) {
        Eigen::MatrixXd Mt = f + K * M;
        Eigen::MatrixXd Mtt = f + K * Mt;
        Eigen::MatrixXd g = Mtt - Mt;
        Eigen::MatrixXd e = projected_solve(sys, st, g);
        M = K * e + Mtt;
        record(M);
    }
    res.kernel = wrap(sys, FredholmMethod::superconvergent, M);
    return res;
}

Eigen::MatrixXd reconstruct_in_s(const FeedbackKernel& k, const Grid& grid, std::size_t i, double s) {
    if (!(s >= 0.0 && s < grid.T())) throw std::invalid_argument("s must lie in [0,T)");
    auto m = static_cast<Eigen::Index>(k.M.rows() / static_cast<Eigen::Index>(grid.size()));
    std::size_t j = grid.locate(s);
    auto I = static_cast<Eigen::Index>(i), J = static_cast<Eigen::Index>(j);
    if (grid[j] == s) return blk(k.M, I, J, m, m);
    double th = (s - grid[j]) / (grid[j + 1] - grid[j]);
    return (1.0 - th) * blk(k.M, I, J, m, m) + th * blk(k.M, I, J + 1, m, m);
}

Eigen::MatrixXd feedback_gain_from_definition(const DiscreteLQ& dlq, const CostData& cost,
                                              std::size_t sigma) {
    if (sigma >= dlq.grid.size()) throw std::invalid_argument("sigma index out of range");
    Eigen::Index m = dlq.m;
    Eigen::Index o = static_cast<Eigen::Index>(sigma) * m;
    Eigen::Index a = dlq.gram.rows() - o;
    Eigen::MatrixXd K0 = dlq.gram;
    for (Eigen::Index i = 0; i < dlq.w.size(); ++i)
        blk(K0, i, i, m, m) -= dlq.w(i) * cost.R[static_cast<std::size_t>(i)];
    Eigen::LLT<Eigen::MatrixXd> llt(dlq.gram.bottomRightCorner(a, a));
    if (llt.info() != Eigen::Success) throw NumericalError("Lambda_sigma factorization failed");
    Eigen::MatrixXd inv_sigma_R =
        llt.solve(dlq.wm.tail(a).asDiagonal() * block_diag_R(cost, sigma));
    Eigen::MatrixXd Mop = -solve_R_rows(cost, dlq.wm.cwiseInverse().asDiagonal() * K0.rightCols(a) * inv_sigma_R);
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(dlq.gram.rows(), dlq.gram.cols());
    M.rightCols(a) = Mop * dlq.wm.tail(a).cwiseInverse().asDiagonal();
    return M;
}

namespace {

FeedbackKernel solve_with(const FredholmSystem& sys, const FeedbackOptions& opt) {
    auto na = static_cast<int>(sys.grid.size() - sys.sigma);
    int dim = std::min(opt.subspace_dim, na);
    if (opt.method == FredholmMethod::direct || dim < 2) return solve_direct(sys);
    if (opt.method == FredholmMethod::galerkin) return solve_galerkin(sys, dim);
    if (opt.method == FredholmMethod::iterated)
        return solve_iterated_galerkin(sys, solve_galerkin(sys, dim));
    // The oracle only feeds the error history, which is not needed here.
    FeedbackKernel none = wrap(sys, FredholmMethod::direct, sys.f.bottomRows(sys.active()));
    return solve_superconvergent(sys, dim, opt.iterations, &none).kernel;
}

}  // namespace

Eigen::MatrixXd feedback_control(const DiscreteLQ& dlq, const CostData& cost,
                                 const CausalTrajectories& traj, const FeedbackOptions& opt) {
    if (cost.has_cross_terms())
        throw std::invalid_argument("cross terms present; use the general representation");
    auto N = static_cast<Eigen::Index>(dlq.grid.size());
    Eigen::Index m = dlq.m;
    FredholmSystem base = assemble_fredholm(dlq, cost, 0);
    Eigen::MatrixXd u(m, N);
    for (Eigen::Index p = 0; p < N; ++p) {
        auto P = static_cast<std::size_t>(p);
        FredholmSystem sys = base;
        sys.sigma = P;
        FeedbackKernel k = solve_with(sys, opt);
        Eigen::MatrixXd G = causal_forcing(dlq, cost, traj.X_sigma[P], traj.X_aux.col(p));
        Eigen::MatrixXd RG = solve_nodewise(cost.R, G);
        Eigen::VectorXd v = -RG.col(p);
        for (Eigen::Index j = p; j < N; ++j) v -= blk(k.M, p, j, m, m) * dlq.w(j) * RG.col(j);
        u.col(p) = v;
    }
    return u;
}

Eigen::MatrixXd general_causal_control(const HatSystem& hat, const CausalTrajectories& hat_traj,
                                       const Eigen::MatrixXd& x_bar, const FeedbackOptions& opt) {
    Eigen::MatrixXd v = feedback_control(hat.dlq, hat.cost, hat_traj, opt);
    return hat.control_from_v(v, x_bar);
}

}  // namespace svlq
