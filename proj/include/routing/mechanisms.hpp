#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "routing/mdp.hpp"

namespace routing {

/// One per-class signal entry of a recommendation mechanism.
struct RecommendationSignal {
    std::size_t target_path = 0;  // recommended path
    std::size_t class_path = 0;   // user class: last-chosen path
    int class_age = 2;            // information age of the class
    double probability = 0.0;     // probability the class receives this signal
};

struct MechanismStepOutput {
    FlowAllocation flows;
    std::string disclosed;  // beliefs | previous flows | signals
    std::vector<RecommendationSignal> signals;
};

/// Everything a mechanism carries between slots.
struct MechanismState {
    PublicBelief pub;               // platform-side beliefs (always tracked)
    std::vector<double> x_prev;     // x(t-1), prior for recommendation posteriors
    PrivateBeliefProfile profile;   // user-side classes under hiding/UPR
    FlowAllocation prev_flows;      // f(t-1)
    bool has_history = false;       // false only before the first step

    static MechanismState initial(const NetworkConfig& cfg, const std::vector<double>& x0);
};

MechanismStepOutput step_sharing(const MechanismState& state, const NetworkConfig& cfg,
                                 const PathQOracle& q_compare);

MechanismStepOutput step_hiding(const MechanismState& state, const NetworkConfig& cfg,
                                const PathQOracle& q_compare);

/// Deterministic recommendations are ignored by users (they carry no belief
/// update), so realized flows equal the hiding flows; only the signal log
/// differs.
MechanismStepOutput step_deterministic_recommendation(const MechanismState& state,
                                                      const NetworkConfig& cfg,
                                                      const PathQOracle& q_compare);

/// Count of stochastic paths the platform currently classifies as being in
/// good condition (belief at or below the q_lh/q_hh midpoint).
std::size_t count_good_paths(const NetworkConfig& cfg, const std::vector<double>& x);

/// Recommendation probability of Def. 3 for a path in the candidate set
/// I(t) = {i : f_bar(n,t) > f_i(t-1)}. Flows are normalized by the arrival
/// mass so the published unit-flow formulas apply unchanged.
double upr_recommendation_probability(const NetworkConfig& cfg, const std::vector<double>& x,
                                      std::size_t path_index, std::size_t n_good,
                                      double prev_flow_i);

/// Bayesian posterior P(x_i = q_lh | pi = i) of an age-2 receiver, with prior
/// 1 - x_i(t-1).
double upr_posterior(const NetworkConfig& cfg, double x_prev_i, double f_bar_i,
                     double prev_flow_i);

/// Uniform draw in [0,1); used only by the finite-sample signal mode.
using UniformSampler = std::function<double()>;

struct UprOptions {
    bool finite_sample = false;   // draw a binomial user count instead of the fluid mean
    std::uint64_t num_users = 0;  // discrete users when finite_sample is set
};

MechanismStepOutput step_upr(const MechanismState& state, const NetworkConfig& cfg,
                             const PathQOracle& q_compare, const UniformSampler& rng = nullptr,
                             const UprOptions& opts = {});

/// Per-class interim-individual-rationality verdict under UPR.
struct ClassVerdict {
    std::size_t class_path = 0;
    int class_age = 2;
    std::size_t signal_path = 0;
    bool obedient = true;
    double obey_cost = 0.0;
    double best_deviation_cost = 0.0;
};

struct IirReport {
    std::vector<ClassVerdict> verdicts;
    bool all_obedient = true;
};

/// Checks that following each UPR signal costs no more than any single-step
/// deviation. A single non-atomic user cannot change which paths get
/// observed under UPR, so continuation values cancel between actions and the
/// comparison reduces to expected immediate costs under the signal posterior.
IirReport iir_check(const MechanismState& state, const NetworkConfig& cfg);

/// Dispatch over the mechanism kinds (SocialOptimum routes the planner flow).
MechanismStepOutput mechanism_step(MechanismKind kind, const MechanismState& state,
                                   const NetworkConfig& cfg, const PathQOracle& q_compare,
                                   const UniformSampler& rng = nullptr);

}  // namespace routing
