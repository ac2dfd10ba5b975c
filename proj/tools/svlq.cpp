#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "svlq/app/catalog.hpp"
#include "svlq/app/config.hpp"
#include "svlq/app/csv.hpp"
#include "svlq/app/scenarios.hpp"
#include "svlq/errors.hpp"

using namespace svlq::app;

namespace {

int run(const std::string& path, const std::string& output_dir) {
    RunConfig cfg = load_config(path);
    if (!output_dir.empty()) cfg.output_dir = output_dir;
    ScenarioReport r = run_scenario(cfg);
    fmt::print("scenario {} config_hash={:016x} ({:.2f} s)\n", r.scenario, cfg.hash(), r.seconds);
    for (const auto& c : r.checks)
        fmt::print("  {:<36} {:>12.4e}  tol {:>10.3e}  {}\n", c.name, c.value, c.tolerance, c.pass ? "PASS" : "FAIL");
    for (const auto& f : r.files) fmt::print("  wrote {}\n", f);
    return r.pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Linear-quadratic control of singular Volterra equations"};
    app.set_version_flag("--version", code_version());
    app.require_subcommand(1);

    std::string config_path, output_dir;
    auto* run_cmd = app.add_subcommand("run", "run one scenario from a config file");
    run_cmd->add_option("-c,--config", config_path, "key=value config file")->required()->check(CLI::ExistingFile);
    run_cmd->add_option("-o,--output-dir", output_dir, "override output_dir from the config");
    auto* problems = app.add_subcommand("list-problems", "list the built-in problems");
    auto* scenarios = app.add_subcommand("list-scenarios", "list the scenarios");
    auto* clear = app.add_subcommand("clear-cache", "delete cached resolvent kernels");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run_cmd) return run(config_path, output_dir);
        if (*problems) {
            for (const auto& p : list_problems()) fmt::print("{:<16} {}\n", p.name, p.description);
            return 0;
        }
        if (*scenarios) {
            for (const auto& s : list_scenarios()) fmt::print("{:<18} {}\n", s.name, s.description);
            return 0;
        }
        if (*clear) {
            std::size_t n = clear_cache();
            fmt::print("removed {} file(s) from {}\n", n, cache_dir());
            return 0;
        }
    } catch (const ConfigError& e) {
        fmt::print(stderr, "config error: {}\n", e.what());
        return 2;
    } catch (const svlq::AssumptionError& e) {
        fmt::print(stderr, "assumption violated: {}\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return 4;
    }
    return 0;
}
