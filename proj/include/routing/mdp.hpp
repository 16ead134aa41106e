#pragma once

#include <cstdint>
#include <vector>

#include "routing/equilibrium.hpp"

namespace routing {

/// Collapsed belief state of the optimum's MDP: once a path has been observed
/// its belief is exactly q_lh or q_hh forever, so a bitmask (bit set = at
/// q_hh) indexes the whole reachable space.
using BeliefStateKey = std::uint32_t;

struct ValueFunction {
    std::vector<double> value;           // indexed by BeliefStateKey, size 2^N
    std::vector<FlowAllocation> policy;  // minimizing flow per state
    double bellman_residual = 0.0;
    int sweeps = 0;
};

/// Belief vector of a collapsed state.
std::vector<double> collapsed_beliefs(const NetworkConfig& cfg, BeliefStateKey key);

/// Fixed point of the Bellman operator over the 2^N collapsed states. The
/// optimum explores every stochastic path each slot (f_i >= epsilon), so the
/// next-state distribution is policy-independent and the inner minimization
/// is the immediate convex program.
ValueFunction value_iteration_optimum(const NetworkConfig& cfg);

/// Optimal long-run cost from an arbitrary (possibly continuous) initial
/// belief vector: one step of immediate cost plus the expectation over the
/// 2^N observation outcomes landing in the collapsed space.
double optimum_value_at(const NetworkConfig& cfg, const ValueFunction& vf,
                        const std::vector<double>& x0);

/// Horizon T such that rho^T * max_cost / (1 - rho) < tol.
int truncation_horizon(const NetworkConfig& cfg, double tol = 1e-6);

/// Q-value exploration test of the sharing equilibrium's first case: whether
/// a single user facing a dominated stochastic path i still benefits from the
/// epsilon exploration, comparing its discounted cost with and without the
/// observation. Continuations assume nobody else explores path i.
bool q_exploration_test(const NetworkConfig& cfg, const std::vector<double>& x, std::size_t path_index);

/// PathQOracle adapter around q_exploration_test.
PathQOracle make_q_oracle(const NetworkConfig& cfg);

enum class MechanismKind { Sharing, Hiding, DeterministicRecommendation, Upr, SocialOptimum };

struct PolicyCostEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t episodes = 0;
};

/// Mean discounted social cost of a mechanism over M seeded episodes.
PolicyCostEstimate evaluate_policy_cost(const NetworkConfig& cfg, MechanismKind mechanism,
                                        const std::vector<double>& x0, int horizon,
                                        std::size_t episodes, std::uint64_t seed,
                                        unsigned threads = 0);

}  // namespace routing
