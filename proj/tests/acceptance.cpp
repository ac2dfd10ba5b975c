// Runs every acceptance criterion and prints one PASS/FAIL line each.
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/core.h>

#include "oracles.hpp"
#include "svlq/app/catalog.hpp"
#include "svlq/app/config.hpp"
#include "svlq/app/scenarios.hpp"
#include "svlq/volterra.hpp"

using namespace svlq;
using namespace svlq::app;
namespace fs = std::filesystem;

namespace {

fs::path g_root;
int g_run = 0;

ScenarioReport run(const std::string& text) {
    RunConfig c = parse_config(text);
    validate(c);
    c.output_dir = (g_root / fmt::format("run{}", g_run++)).string();
    return run_scenario(c);
}

const ScenarioCheck& find(const ScenarioReport& r, const std::string& name) {
    for (const auto& c : r.checks)
        if (c.name == name) return c;
    throw std::runtime_error("scenario " + r.scenario + " has no check " + name);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

Outcome norm_example() {
    ScenarioReport r = run("problem = example-2-1\nscenario = example-2-1\nbeta = 0.75\nn = 4096\n"
                           "grid = graded\ngrading = 7\n");
    const auto& c = find(r, "norm_relative_error");
    return {c.pass && c.value <= 0.02, fmt::format("relative error {:.3e} (tol 2e-2)", c.value)};
}

Outcome blow_up() {
    ScenarioReport lo = run("problem = example-2-1\nscenario = example-2-1\nbeta = 0.4\nn = 4096\n"
                            "grid = graded\ngrading = 7\n");
    ScenarioReport hi = run("problem = example-2-1\nscenario = example-2-1\nbeta = 0.75\nn = 4096\n"
                            "grid = graded\ngrading = 7\n");
    const auto& g = find(lo, "xT_growth_over_doublings");
    const auto& c = find(hi, "xT_change_over_doublings");
    return {g.value >= 2.0 && c.value <= 0.05,
            fmt::format("beta=0.4 growth {:.3f} (>= 2), beta=0.75 change {:.3e} (<= 5e-2)", g.value, c.value)};
}

Outcome resolvent_identities() {
    ProblemParams p;
    CatalogProblem cp = make_problem("random-smooth", p);
    std::vector<ResolventResiduals> res;
    for (std::size_t n : {128, 255}) {
        Grid g = build_grid(n, p.T);
        res.push_back(resolvent_residuals(cp.problem, resolvent(cp.problem, g, Sampling::point)));
    }
    bool ok = res[0].phi <= 1e-3 && res[0].phi_star <= 1e-3 && res[1].phi < res[0].phi &&
              res[1].phi_star < res[0].phi_star;
    return {ok, fmt::format("n=128 Phi {:.3e} Phi* {:.3e}; n=255 Phi {:.3e} Phi* {:.3e}", res[0].phi,
                            res[0].phi_star, res[1].phi, res[1].phi_star)};
}

Outcome series_oracle() {
    const double beta = 0.75, a = 1.0;
    ProblemParams p;
    p.beta = beta;
    p.a = a;
    CatalogProblem cp = make_problem("constant-coeff", p);
    Grid g = build_grid(128, 1.0);
    FactoredKernel Phi = resolvent(cp.problem, g, Sampling::point);
    double h = g.max_step(), worst = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i)
        for (std::size_t j = 0; j < i; ++j) {
            double r = g.gap(i, j);
            if (r < 4.0 * h - 1e-12) continue;
            double ref = oracle::constant_resolvent(a, beta, r);
            worst = std::max(worst, std::abs(Phi.value(i, j)(0, 0) - ref) / std::abs(ref));
        }
    return {worst <= 1e-6, fmt::format("max relative error {:.3e} (tol 1e-6)", worst)};
}

std::vector<ScenarioReport> g_equivalence;

const std::vector<ScenarioReport>& equivalence_runs() {
    if (g_equivalence.empty())
        for (int seed : {1, 2, 3})
            g_equivalence.push_back(run(fmt::format("problem = random-smooth\nseed = {}\nn = 64\n", seed)));
    return g_equivalence;
}

Outcome three_way() {
    double mp = 0, ca = 0, fb = 0;
    bool ok = true;
    for (const auto& r : equivalence_runs()) {
        mp = std::max(mp, find(r, "oracle_vs_maximum_principle").value);
        ca = std::max(ca, find(r, "oracle_vs_abstract_causal").value);
        fb = std::max(fb, find(r, "oracle_vs_feedback").value);
    }
    ok = mp <= 1e-5 && ca <= 1e-8 && fb <= 1e-6;
    return {ok, fmt::format("seeds 1-3: mp {:.2e}, causal {:.2e}, feedback {:.2e}", mp, ca, fb)};
}

Outcome cross_term() {
    double ctrl = 0, value = 0;
    for (int seed : {1, 2, 3}) {
        ScenarioReport r = run(fmt::format("problem = cross-term\nseed = {}\nn = 64\nscenario = reduction\n", seed));
        ctrl = std::max(ctrl, find(r, "oracle_vs_general_feedback").value);
        value = std::max(value, find(r, "value_difference").value);
    }
    return {ctrl <= 1e-6 && value <= 1e-8,
            fmt::format("seeds 1-3: control {:.2e} (tol 1e-6), value {:.2e} (tol 1e-8)", ctrl, value)};
}

Outcome optimality() {
    double drop = 0, deriv = 0;
    for (const auto& r : equivalence_runs()) {
        drop = std::min(drop, find(r, "optimality_min_increase").value);
        deriv = std::max(deriv, find(r, "optimality_directional_derivative").value);
    }
    return {drop >= -1e-10 && deriv <= 1e-6,
            fmt::format("min increase {:.2e} (>= -1e-10), derivative/|v| {:.2e} (<= 1e-6)", drop, deriv)};
}

Outcome coercivity() {
    double worst = 1e300;
    std::string at;
    for (const auto& info : list_problems()) {
        ScenarioReport r = run(fmt::format("problem = {}\nn = 64\n", info.name));
        double v = find(r, "coercivity_over_delta").value;
        if (v < worst) {
            worst = v;
            at = info.name;
        }
    }
    return {worst >= 1.0 - 1e-6, fmt::format("min lambda/delta {:.9f} ({}) over all catalog problems", worst, at)};
}

Outcome hierarchy() {
    ScenarioReport r = run("problem = random-smooth\nscenario = fredholm-methods\nn = 64\nsubspace_dim = 16\n"
                           "iterations = 2\n");
    const auto& h = find(r, "hierarchy_trials");
    const auto& m = find(r, "monotone_trials");
    return {h.value >= 18 && m.value >= 20,
            fmt::format("hierarchy {}/20 (>= 18), monotone {}/20", h.value, m.value)};
}

Outcome non_anticipation() {
    double worst = 0;
    for (const auto& r : equivalence_runs()) worst = std::max(worst, find(r, "non_anticipation_change").value);
    return {worst == 0.0, fmt::format("max change {:.1e}", worst)};
}

Outcome determinism() {
    std::vector<std::string> configs = {
        "problem = random-smooth\nn = 33\n",
        "problem = cross-term\nn = 33\nscenario = reduction\n",
        "problem = random-smooth\nn = 33\nscenario = fredholm-methods\n",
        "problem = example-2-1\nscenario = example-2-1\nn = 512\ngrid = graded\ngrading = 7\n",
    };
    int files = 0;
    for (const auto& text : configs) {
        ScenarioReport a = run(text);
        ScenarioReport b = run(text);
        if (a.files.size() != b.files.size()) return {false, "different file lists"};
        for (std::size_t k = 0; k < a.files.size(); ++k) {
            if (slurp(a.files[k]) != slurp(b.files[k]))
                return {false, fmt::format("{} differs", fs::path(a.files[k]).filename().string())};
            ++files;
        }
    }
    return {true, fmt::format("{} output files identical across repeat runs", files)};
}

}  // namespace

int main() {
    g_root = fs::temp_directory_path() / "svlq-acceptance";
    fs::remove_all(g_root);
    fs::create_directories(g_root);
    setenv("SVLQ_CACHE_DIR", (g_root / "cache").c_str(), 1);

    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"example control norm", norm_example},
        {"blow-up dichotomy", blow_up},
        {"resolvent identities", resolvent_identities},
        {"constant-coefficient resolvent vs series", series_oracle},
        {"three-way control equivalence", three_way},
        {"cross-term equivalence and value", cross_term},
        {"optimality", optimality},
        {"coercivity", coercivity},
        {"Fredholm method hierarchy", hierarchy},
        {"non-anticipation", non_anticipation},
        {"determinism", determinism},
    };
    int failed = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        Outcome o;
        try {
            o = criteria[k].second();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        failed += !o.pass;
        fmt::print("{} criterion {}: {}: {}\n", o.pass ? "PASS" : "FAIL", k + 1, criteria[k].first, o.detail);
        std::fflush(stdout);
    }
    fs::remove_all(g_root);
    return failed == 0 ? 0 : 1;
}
