#pragma once

#include <string>
#include <vector>

#include "svlq/app/catalog.hpp"
#include "svlq/app/config.hpp"
#include "svlq/kernel.hpp"
#include "svlq/lq.hpp"
#include "svlq/volterra.hpp"

namespace svlq::app {

struct ScenarioCheck {
    std::string name;
    double value = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

struct ScenarioReport {
    std::string scenario;
    std::vector<ScenarioCheck> checks;
    std::vector<std::string> files;
    double seconds = 0.0;

    bool pass() const;
};

struct ScenarioInfo {
    std::string name;
    std::string description;
};

const std::vector<ScenarioInfo>& list_scenarios();

// The configured problem: a catalog entry or the inline constant
// coefficients, with any cost matrices from the config applied on top.
CatalogProblem build_problem(const RunConfig& cfg);

// Everything the LQ scenarios share, built once per grid.
struct Pipeline {
    CatalogProblem cp;
    Grid grid;
    CostData cost;
    DiscreteState ds;
    StateDecomposition dec;
    DiscreteLQ dlq;
};

Pipeline build_pipeline(const RunConfig& cfg, std::size_t n);

// Kernel cache directory: $SVLQ_CACHE_DIR, else ".svlq-cache".
std::string cache_dir();
// Removes the cache files; returns how many were deleted.
std::size_t clear_cache();
// Cell-sampled (operator-consistent) or point-sampled resolvent, loaded from
// the cache when a matching file exists.
FactoredKernel cached_resolvent(const RunConfig& cfg, const CatalogProblem& cp,
                                const DiscreteState& ds, Sampling scheme);

ScenarioReport run_scenario(const RunConfig& cfg);

}  // namespace svlq::app
