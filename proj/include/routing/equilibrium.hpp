#pragma once

#include <functional>
#include <vector>

#include "routing/belief.hpp"
#include "routing/core.hpp"

namespace routing {

/// Decides whether a user facing an expensive stochastic path still explores
/// it with the minimum flow epsilon (the Q-value comparison of the selfish
/// single-user MDP). Arguments: current belief vector, stochastic path index
/// (1-based). A null oracle means "never explore".
using PathQOracle = std::function<bool(const std::vector<double>&, std::size_t)>;

struct EquilibriumResult {
    FlowAllocation flows;
    double common_cost = 0.0;               // equalized travel cost of used paths
    std::vector<std::size_t> used_set;      // paths with positive equilibrium flow
    std::vector<bool> exploration_flags;    // per path: flow pinned to epsilon
};

/// Selfish sharing equilibrium for the two-path network (N=1). Three cases:
/// epsilon-exploration when the stochastic path is dominated even at maximum
/// congestion, full flow when the deterministic path is dominated, and the
/// congestion-balancing split otherwise.
EquilibriumResult sharing_flow_two_path(const NetworkConfig& cfg, double x1,
                                        const PathQOracle& q_compare);

/// Selfish sharing equilibrium for any N: the unique Wardrop flow of the
/// parallel network with linear latencies, computed by sorted-cost water
/// filling, then epsilon-exploration carved out of path 0 where the Q-value
/// test mandates it.
EquilibriumResult sharing_flow_general(const NetworkConfig& cfg, const std::vector<double>& x,
                                       const PathQOracle& q_compare);

/// Per-class flows under information hiding (age-1 and age-2 classes per
/// stochastic path).
struct HidingFlows {
    std::vector<double> age1;   // f_{i,1}, stochastic paths only
    std::vector<double> age2;   // f_{i,2}
    FlowAllocation total;       // per path 0..N
};

HidingFlows hiding_flows(const NetworkConfig& cfg, const PrivateBeliefProfile& profile,
                         const FlowAllocation& prev_flows,
                         const PathQOracle& q_compare = nullptr);

/// Socially optimal flow for N=1 in closed form (marginal-cost equalization
/// clamped to [epsilon, arrival_mass]).
FlowAllocation social_optimal_flow_two_path(const NetworkConfig& cfg, double x1);

/// Socially optimal flow for any N: minimizes the immediate social cost
/// subject to conservation and f_i >= epsilon on every stochastic path.
FlowAllocation social_optimal_flow_general(const NetworkConfig& cfg,
                                           const std::vector<double>& x);

/// Maximum selfish exploit flow on one of n good-condition paths:
/// min{mass/n, (c0 + mass - E[c_i|q_lh]) / (n+1)}.
double max_exploit_flow(const NetworkConfig& cfg, std::size_t n, std::size_t path_index);

/// Common equalized cost of the Wardrop equilibrium over parallel links with
/// latencies a_p + w_p f_p and total mass. Used by the reduced single-user
/// evaluations and by the hybrid network.
double waterfill_common_cost(const std::vector<double>& a, const std::vector<double>& w,
                             double mass);

}  // namespace routing
