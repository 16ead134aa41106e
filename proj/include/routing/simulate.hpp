#pragma once

#include <cstdint>
#include <iosfwd>

#include "routing/mechanisms.hpp"

namespace routing {

/// Counter-based uniform generator: every draw is a pure function of
/// (seed, episode, step, stream), so traces are reproducible regardless of
/// thread schedule and streams never collide.
struct CounterRng {
    std::uint64_t seed = 0;
    std::uint64_t episode = 0;

    /// Uniform in [0, 1).
    double uniform(std::uint64_t step, std::uint64_t stream) const;
};

/// Stream identifiers; path index is folded in by the caller.
enum : std::uint64_t {
    kStreamInitState = 1ull << 32,
    kStreamChain = 2ull << 32,
    kStreamSignal = 3ull << 32,
    kStreamArrival = 4ull << 32,
};

struct StepRecord {
    int t = 0;
    std::vector<bool> true_high;     // realized state per stochastic path
    std::vector<double> x;           // public beliefs when flows were chosen
    FlowAllocation flows;
    std::vector<double> cost_contribs;  // f_p (c_p + w_p f_p) per path, realized
    double immediate_cost = 0.0;        // sum of cost_contribs in path order
    std::vector<RecommendationSignal> signals;
};

struct EpisodeTrace {
    std::vector<StepRecord> steps;
    double discounted_total = 0.0;
    std::uint64_t seed = 0;
    std::uint64_t episode = 0;
    int horizon = 0;
};

/// One seeded episode. Per slot: mechanism flows from the current state,
/// observation of the realized costs on paths carrying flow, realized cost
/// accumulation, chain transition, belief advance.
EpisodeTrace run_episode(const NetworkConfig& cfg, MechanismKind mechanism,
                         const std::vector<double>& x0, int horizon, std::uint64_t seed,
                         std::uint64_t episode = 0, const PathQOracle& q_compare = nullptr);

struct BatchSummary {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t episodes = 0;
};

/// Mean/stderr of the discounted social cost over M episodes (episode index
/// 0..M-1 under one seed). Episodes run concurrently; the reduction order is
/// fixed, so results do not depend on the thread count.
///
/// min_exploration drops the single-user exploration comparison and pins its
/// outcome to "never explore", the regime the worst-case inefficiency
/// analysis assumes; at finite parameters the comparison itself can flip.
BatchSummary run_batch(const NetworkConfig& cfg, MechanismKind mechanism,
                       const std::vector<double>& x0, int horizon, std::size_t episodes,
                       std::uint64_t seed, unsigned threads = 0,
                       std::vector<EpisodeTrace>* traces = nullptr, bool min_exploration = false);

/// Newline-delimited trace records: one row per (step, path) with columns
/// t,path,true_state,x_i,flow,cost_contrib,signal. true_state is -1 for the
/// deterministic path; signal is the probability mass recommended to the
/// path that slot. Header comments carry seed/episode/horizon/total.
void write_trace(std::ostream& os, const EpisodeTrace& trace);

/// Recomputes the discounted total of a serialized trace from its
/// cost_contrib columns; bit-exact against the stored total.
double replay_discounted_total(std::istream& is, double rho);

}  // namespace routing
