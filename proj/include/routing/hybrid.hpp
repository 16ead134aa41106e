#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "routing/mdp.hpp"

namespace routing {

/// One road segment. Stochastic edges carry a two-state cost chain; the
/// congestion term is (total flow over the edge) / capacity_scale.
struct HybridEdge {
    std::string name;
    PathModel model;
    double capacity_scale = 1.0;
    double belief0 = 0.0;  // initial hazard belief, stochastic edges only
};

/// A path is an edge list belonging to one origin. Each origin offers
/// exactly two paths: a mostly-deterministic alternative and a stochastic
/// option the mechanisms steer.
struct HybridPath {
    std::string name;
    std::size_t origin = 0;
    std::vector<std::size_t> edges;
    bool stochastic_option = false;
};

struct HybridNetwork {
    std::vector<HybridEdge> edges;
    std::vector<HybridPath> paths;
    std::vector<double> arrival_mean;  // per origin
    double arrival_std = 0.0;
    double rho = 0.95;
    double epsilon = 1.0;  // minimum recommended flow

    std::size_t num_origins() const { return arrival_mean.size(); }
    void validate() const;
};

/// Two-origin fixture: four stochastic roads with the published transition
/// matrices and initial beliefs, four deterministic connectors, arrival
/// rates 102 and 56 per slot with standard deviation 5.62, rho = 0.95,
/// epsilon = 1. Deterministic travel minutes and capacity scales are free
/// calibration parameters (the source data does not pin them down).
HybridNetwork build_shanghai_fixture();

/// Expected cost of one path: sum over its edges of the expected edge cost
/// under the given beliefs plus the congestion term from the current flows.
double hybrid_path_cost(const HybridNetwork& net, std::size_t path_index,
                        const std::vector<double>& path_flows, const std::vector<double>& beliefs);

struct HybridMechanismResult {
    MechanismKind mechanism = MechanismKind::Sharing;
    double mean_cost = 0.0;
    double std_error = 0.0;
    double ratio_to_optimum = 1.0;
    std::vector<double> per_seed_cost;
};

struct HybridExperimentOptions {
    int horizon = 30;
    std::size_t episodes = 100;
    std::uint64_t seed = 1;
    bool arrival_noise = true;
    unsigned threads = 0;
};

/// Runs every requested mechanism on matched seeds and reports discounted
/// social costs plus ratios against the social optimum (which is always run).
std::vector<HybridMechanismResult> run_hybrid_experiment(const HybridNetwork& net,
                                                         const std::vector<MechanismKind>& mechanisms,
                                                         const HybridExperimentOptions& opts);

/// Comparison table CSV: mechanism, mean cost, stderr, ratio columns.
void write_hybrid_report_csv(std::ostream& os, const std::vector<HybridMechanismResult>& rows);

std::string mechanism_name(MechanismKind kind);

}  // namespace routing
