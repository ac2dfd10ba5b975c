#include "svlq/app/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>
#include <vector>

#include <fmt/format.h>

#include "svlq/app/catalog.hpp"
#include "svlq/fredholm.hpp"
#include "svlq/app/scenarios.hpp"

namespace svlq::app {

namespace {

const std::set<std::string> kMatrixKeys = {"A", "B", "phi", "Q", "S", "R", "q", "rho", "G", "g"};

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v, int line) {
    double x = 0.0;
    auto r = std::from_chars(v.data(), v.data() + v.size(), x);
    if (r.ec != std::errc() || r.ptr != v.data() + v.size())
        throw ConfigError(fmt::format("line {}: {} expects a number, got '{}'", line, key, v));
    return x;
}

long long to_int(const std::string& key, const std::string& v, int line) {
    long long x = 0;
    auto r = std::from_chars(v.data(), v.data() + v.size(), x);
    if (r.ec != std::errc() || r.ptr != v.data() + v.size())
        throw ConfigError(fmt::format("line {}: {} expects an integer, got '{}'", line, key, v));
    return x;
}

Eigen::MatrixXd to_matrix(const std::string& key, const std::string& v, int line) {
    std::vector<std::vector<double>> rows;
    std::stringstream rs(v);
    std::string row;
    while (std::getline(rs, row, ';')) {
        std::vector<double> vals;
        std::stringstream cs(row);
        std::string cell;
        while (std::getline(cs, cell, ',')) {
            cell = trim(cell);
            if (cell.empty())
                throw ConfigError(fmt::format("line {}: malformed matrix for key {}", line, key));
            double x = 0.0;
            auto r = std::from_chars(cell.data(), cell.data() + cell.size(), x);
            if (r.ec != std::errc() || r.ptr != cell.data() + cell.size())
                throw ConfigError(fmt::format("line {}: malformed matrix for key {}", line, key));
            vals.push_back(x);
        }
        rows.push_back(std::move(vals));
    }
    if (rows.empty() || rows.front().empty())
        throw ConfigError(fmt::format("line {}: malformed matrix for key {}", line, key));
    for (const auto& r : rows)
        if (r.size() != rows.front().size())
            throw ConfigError(fmt::format("line {}: malformed matrix for key {} (ragged rows)", line, key));
    Eigen::MatrixXd M(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    // Vectors may be written on one line.
    if ((key == "phi" || key == "q" || key == "rho" || key == "g") && M.rows() == 1)
        M.transposeInPlace();
    return M;
}

std::string fmt_matrix(const Eigen::MatrixXd& M) {
    std::string s;
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
        if (i) s += ';';
        for (Eigen::Index j = 0; j < M.cols(); ++j) s += fmt::format("{}{:.17g}", j ? "," : "", M(i, j));
    }
    return s;
}

}  // namespace

std::uint64_t fnv1a64(const std::string& text) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string RunConfig::canonical() const {
    std::string s;
    s += fmt::format("problem={}\nseed={}\nbeta={:.17g}\nT={:.17g}\nn={}\ngrid={}\ngrading={:.17g}\n",
                     problem, seed, beta, T, n, grid == GridKind::uniform ? "uniform" : "graded",
                     grading);
    s += fmt::format("scenario={}\nm_solver={}\niterations={}\nsubspace_dim={}\nsigma={}\n", scenario,
                     m_solver, iterations, subspace_dim, sigma);
    s += fmt::format("a={:.17g}\nb={:.17g}\n", a, b);
    s += fmt::format("tol_mp={:.17g}\ntol_causal={:.17g}\ntol_feedback={:.17g}\ntol_value={:.17g}\ntol_norm={:.17g}\n",
                     tol.mp, tol.causal, tol.feedback, tol.value, tol.norm);
    for (const auto& [k, M] : matrices) s += fmt::format("{}={}\n", k, fmt_matrix(M));
    return s;
}

std::uint64_t RunConfig::hash() const { return fnv1a64(canonical()); }

std::uint64_t RunConfig::problem_hash() const {
    std::string s = fmt::format("{}|{}|{:.17g}|{}|{:.17g}|{:.17g}|{:.17g}", problem, seed, T,
                                grid == GridKind::uniform ? "uniform" : "graded", grading, a, b);
    for (const char* k : {"A", "B", "phi"}) {
        auto it = matrices.find(k);
        if (it != matrices.end()) s += fmt::format("|{}={}", k, fmt_matrix(it->second));
    }
    return fnv1a64(s);
}

RunConfig parse_config(const std::string& text) {
    RunConfig cfg;
    std::stringstream in(text);
    std::string raw;
    int line = 0;
    std::set<std::string> seen;
    while (std::getline(in, raw)) {
        ++line;
        auto hash = raw.find('#');
        std::string l = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (l.empty()) continue;
        auto eq = l.find('=');
        if (eq == std::string::npos)
            throw ConfigError(fmt::format("line {}: expected key=value", line));
        std::string key = trim(l.substr(0, eq)), v = trim(l.substr(eq + 1));
        if (key.empty()) throw ConfigError(fmt::format("line {}: empty key", line));
        if (!seen.insert(key).second) throw ConfigError(fmt::format("line {}: duplicate key {}", line, key));
        if (key == "problem") cfg.problem = v;
        else if (key == "seed") {
            long long s = to_int(key, v, line);
            if (s < 0) throw ConfigError(fmt::format("line {}: seed must be non-negative", line));
            cfg.seed = static_cast<std::uint64_t>(s);
        } else if (key == "beta") cfg.beta = to_double(key, v, line);
        else if (key == "T") cfg.T = to_double(key, v, line);
        else if (key == "n") {
            long long n = to_int(key, v, line);
            if (n < 0) throw ConfigError(fmt::format("line {}: n must be positive", line));
            cfg.n = static_cast<std::size_t>(n);
        } else if (key == "grid") {
            if (v == "uniform") cfg.grid = GridKind::uniform;
            else if (v == "graded") cfg.grid = GridKind::graded;
            else throw ConfigError(fmt::format("line {}: grid must be uniform or graded", line));
        } else if (key == "grading") cfg.grading = to_double(key, v, line);
        else if (key == "scenario") cfg.scenario = v;
        else if (key == "m_solver") cfg.m_solver = v;
        else if (key == "iterations") cfg.iterations = static_cast<int>(to_int(key, v, line));
        else if (key == "subspace_dim") cfg.subspace_dim = static_cast<int>(to_int(key, v, line));
        else if (key == "sigma") {
            long long s = to_int(key, v, line);
            if (s < 0) throw ConfigError(fmt::format("line {}: sigma must be non-negative", line));
            cfg.sigma = static_cast<std::size_t>(s);
        } else if (key == "output_dir") cfg.output_dir = v;
        else if (key == "a") cfg.a = to_double(key, v, line);
        else if (key == "b") cfg.b = to_double(key, v, line);
        else if (key == "tol_mp") cfg.tol.mp = to_double(key, v, line);
        else if (key == "tol_causal") cfg.tol.causal = to_double(key, v, line);
        else if (key == "tol_feedback") cfg.tol.feedback = to_double(key, v, line);
        else if (key == "tol_value") cfg.tol.value = to_double(key, v, line);
        else if (key == "tol_norm") cfg.tol.norm = to_double(key, v, line);
        else if (kMatrixKeys.count(key)) cfg.matrices[key] = to_matrix(key, v, line);
        else throw ConfigError(fmt::format("line {}: unknown key {}", line, key));
    }
    validate(cfg);
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

bool is_lq_scenario(const std::string& scenario) { return scenario != "example-2-1"; }

void validate(const RunConfig& cfg) {
    const auto& sc = list_scenarios();
    if (std::none_of(sc.begin(), sc.end(), [&](const auto& s) { return s.name == cfg.scenario; })) {
        std::string valid;
        for (const auto& s : sc) valid += (valid.empty() ? "" : ", ") + s.name;
        throw ConfigError("scenario: unknown scenario '" + cfg.scenario + "' (valid: " + valid + ")");
    }
    if (cfg.problem != "inline") {
        const auto& pr = list_problems();
        if (std::none_of(pr.begin(), pr.end(), [&](const auto& p) { return p.name == cfg.problem; })) {
            std::string valid = "inline";
            for (const auto& p : pr) valid += ", " + p.name;
            throw ConfigError("problem: unknown problem '" + cfg.problem + "' (valid: " + valid + ")");
        }
    } else {
        for (const char* k : {"A", "B", "phi"})
            if (!cfg.matrices.count(k)) throw ConfigError(std::string("problem: inline problem needs key ") + k);
    }
    if (cfg.scenario == "example-2-1" && cfg.problem != "example-2-1")
        throw ConfigError("problem: scenario example-2-1 runs on problem=example-2-1");
    if (cfg.scenario == "example-2-1" && cfg.T != 1.0)
        throw ConfigError("T: the example control is defined on [0, 1]; scenario example-2-1 needs T = 1");
    if (!(cfg.beta > 0.0 && cfg.beta < 1.0)) throw ConfigError("beta: must lie in (0,1)");
    if (is_lq_scenario(cfg.scenario) && !(cfg.beta > 0.5))
        throw ConfigError("beta: (A3) requires beta > 1/2 for scenario " + cfg.scenario);
    if (!(cfg.T > 0.0)) throw ConfigError("T: must be positive");
    if (cfg.n < 3) throw ConfigError("n: needs at least 3 nodes");
    if (cfg.grid == GridKind::graded && !(cfg.grading >= 1.0)) throw ConfigError("grading: must be >= 1");
    if (cfg.iterations < 0) throw ConfigError("iterations: must be non-negative");
    if (cfg.subspace_dim < 2 || static_cast<std::size_t>(cfg.subspace_dim) > cfg.n)
        throw ConfigError("subspace_dim: must lie in [2, n]");
    if (cfg.sigma >= cfg.n) throw ConfigError("sigma: must be a node index below n");
    try {
        (void)parse_method(cfg.m_solver);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("m_solver: ") + e.what());
    }
    for (const auto& [k, M] : cfg.matrices)
        if (!M.allFinite()) throw ConfigError(k + ": entries must be finite");
}

}  // namespace svlq::app
