#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "svlq/app/config.hpp"
#include "svlq/app/csv.hpp"
#include "svlq/app/scenarios.hpp"

using namespace svlq;
using namespace svlq::app;
namespace fs = std::filesystem;

namespace {

std::string error_of(const std::string& text) {
    try {
        validate(parse_config(text));
    } catch (const ConfigError& e) {
        return e.what();
    }
    return {};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("svlq-test-app-" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

}  // namespace

TEST_CASE("minimal config takes the documented defaults") {
    RunConfig c = parse_config("problem = zero-cost\nbeta = 0.75\nT = 1\nn = 32\nscenario = equivalence\n");
    validate(c);
    CHECK(c.problem == "zero-cost");
    CHECK(c.n == 32);
    CHECK(c.seed == 1);
    CHECK(c.grid == GridKind::uniform);
    CHECK(c.m_solver == "direct");
    CHECK(c.iterations == 2);
    CHECK(c.subspace_dim == 16);
    CHECK(c.sigma == 0);
    CHECK(c.tol.mp == 1e-5);
    CHECK(c.tol.causal == 1e-8);
    CHECK(c.tol.feedback == 1e-6);
    CHECK(c.tol.value == 1e-8);
    CHECK(c.matrices.empty());
}

TEST_CASE("config errors") {
    CHECK(error_of("beta = 0.5\n").find("(A3)") != std::string::npos);
    CHECK(error_of("beta = 0.4\nscenario = equivalence\n").find("(A3)") != std::string::npos);
    // The blow-up example is the one place beta <= 1/2 is allowed.
    CHECK(error_of("problem = example-2-1\nscenario = example-2-1\nbeta = 0.4\n").empty());
    CHECK(error_of("problem = example-2-1\nscenario = example-2-1\nT = 2\n").find("T = 1") != std::string::npos);
    std::string unknown = error_of("# comment\nbeta = 0.75\nfoo = 1\n");
    CHECK(unknown.find("line 3") != std::string::npos);
    CHECK(unknown.find("foo") != std::string::npos);
    CHECK(error_of("n = 16\nn = 32\n").find("line 2") != std::string::npos);
    CHECK(error_of("Q = 1,2;3\n").find("malformed matrix for key Q") != std::string::npos);
    CHECK(error_of("problem = nope\n").find("random-smooth") != std::string::npos);
    CHECK(error_of("scenario = nope\n").find("equivalence") != std::string::npos);
    CHECK(!error_of("problem = inline\nA = 1\n").empty());
    CHECK(!error_of("n = 2\n").empty());
    CHECK(!error_of("T = 0\n").empty());
    CHECK(!error_of("m_solver = lu\n").empty());
    CHECK(!error_of("subspace_dim = 100\nn = 64\n").empty());
    CHECK(!error_of("beta = 0.8 0.9\n").empty());
    CHECK_THROWS_AS(load_config("/nonexistent/svlq.cfg"), ConfigError);
}

TEST_CASE("inline problem and matrix parsing") {
    RunConfig c = parse_config("problem = inline\nA = 0,1;-1,0\nB = 0;1\nphi = 1,0\nR = 2\n");
    validate(c);
    REQUIRE(c.matrices.count("A"));
    CHECK(c.matrices["A"](1, 0) == -1.0);
    CHECK(c.matrices["B"].rows() == 2);
    CHECK(c.matrices["phi"].cols() == 1);
    CHECK(c.matrices["phi"].rows() == 2);
    CatalogProblem p = build_problem(c);
    Grid g = build_grid(9, 1.0);
    CostData cost = p.cost(g);
    CHECK(cost.R[0](0, 0) == 2.0);
    CHECK(cost.Q[0].rows() == 2);
}

TEST_CASE("hashes") {
    RunConfig a = parse_config("problem = random-smooth\nn = 32\n");
    RunConfig b = parse_config("n = 32 # same run\nproblem=random-smooth\n");
    CHECK(a.hash() == b.hash());
    RunConfig c = parse_config("problem = random-smooth\nn = 64\nbeta = 0.8\n");
    CHECK(a.hash() != c.hash());
    CHECK(a.problem_hash() == c.problem_hash());
    RunConfig d = parse_config("problem = random-smooth\nseed = 2\n");
    CHECK(a.problem_hash() != d.problem_hash());
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("csv format") {
    CsvTable t;
    t.columns = {"k", "x", "label"};
    t.add({1LL, 0.1, std::string("a,b")});
    std::string text = format_csv(t, 0xabcULL);
    std::istringstream in(text);
    std::string first, header, row;
    std::getline(in, first);
    std::getline(in, header);
    std::getline(in, row);
    CHECK(first == "# config_hash=0000000000000abc version=" + code_version());
    CHECK(header == "k,x,label");
    CHECK(row == "1,0.10000000000000001,\"a,b\"");
}

TEST_CASE("scenarios on the command-line path") {
    fs::path root = scratch("run");
    setenv("SVLQ_CACHE_DIR", (root / "cache").c_str(), 1);

    SUBCASE("zero-cost equivalence gives zero controls") {
        RunConfig c = parse_config("problem = zero-cost\nn = 17\nscenario = equivalence\n");
        c.output_dir = (root / "zero").string();
        ScenarioReport r = run_scenario(c);
        CHECK(r.pass());
        std::istringstream in(slurp(root / "zero" / "equivalence.csv"));
        std::string line;
        std::getline(in, line);
        std::getline(in, line);
        std::vector<std::string> header;
        {
            std::istringstream cells(line);
            std::string cell;
            while (std::getline(cells, cell, ',')) header.push_back(cell);
        }
        int rows = 0;
        while (std::getline(in, line)) {
            std::istringstream cells(line);
            std::string cell;
            for (std::size_t k = 0; std::getline(cells, cell, ','); ++k)
                if (header.at(k).rfind("u_", 0) == 0) CHECK(std::stod(cell) == 0.0);
            ++rows;
        }
        CHECK(rows == 17);
    }
    SUBCASE("repeat runs are byte identical and the cache can be cleared") {
        RunConfig c = parse_config("problem = random-smooth\nn = 17\nscenario = equivalence\n");
        c.output_dir = (root / "a").string();
        CHECK(run_scenario(c).pass());
        c.output_dir = (root / "b").string();
        ScenarioReport r = run_scenario(c);
        CHECK(r.pass());
        for (const auto& f : r.files) {
            fs::path name = fs::path(f).filename();
            CHECK(slurp(root / "a" / name) == slurp(root / "b" / name));
        }
        CHECK(clear_cache() >= 1);
        CHECK(clear_cache() == 0);
    }
    fs::remove_all(root);
}
