#pragma once

#include <optional>
#include <vector>

#include "routing/core.hpp"

namespace routing {

enum class CostObservation { Low, High };

/// Platform-side hazard beliefs, one per stochastic path.
struct PublicBelief {
    std::vector<double> x;       // prior P(c_i = c_high) at the current slot
    std::vector<double> x_post;  // posterior after this slot's observations

    static PublicBelief initial(const std::vector<double>& x0) {
        PublicBelief b;
        b.x = x0;
        b.x_post = x0;
        return b;
    }
};

/// Per-path private belief classes under information hiding. For each path i,
/// the flow that traveled i last slot holds the age-1 belief y1[i] (equal to
/// the platform's x_i); everyone else holds the flow-rectified age-2 belief
/// y2[i]. Rectification caps the age at 2.
struct PrivateBeliefProfile {
    std::vector<double> y1;          // age-1 belief per path, = x_i for travelers
    std::vector<double> y2;          // age-2 belief per path
    std::vector<double> flow_prev;   // f(t-1), stochastic paths only
    std::vector<double> flow_prev2;  // f(t-2) baseline for rectification

    static PrivateBeliefProfile initial(const std::vector<double>& x0) {
        PrivateBeliefProfile p;
        p.y1 = x0;
        p.y2 = x0;
        p.flow_prev.assign(x0.size(), 0.0);
        p.flow_prev2.assign(x0.size(), 0.0);
        return p;
    }
};

/// Posterior after this slot's observation: 1 on c_high, 0 on c_low,
/// unchanged when nobody traveled the path.
double observe_and_posterior(double x_prior, std::optional<CostObservation> observed);

/// One Markov-chain step of the hazard belief: x_post*q_hh + (1-x_post)*q_lh.
double advance_public_belief(double x_post, const PathModel& path);

/// Age-2 private belief given the rectified x_i(t-1).
double private_belief_age2(double x_prev_inferred, const PathModel& path);

/// Flow-based rectification of x_i(t-1): rising (or equal) flow is read as a
/// good condition q_lh, falling flow as q_hh.
double rectify_from_flows(double f_prev, double f_prev2, const PathModel& path);

/// Information age after one step: 1 if the user explored path i at t-1,
/// otherwise stuck at 2.
int advance_information_age(bool chose_path_i);

/// Whether a flow on a path counts as an observation of its cost state.
/// Flows below epsilon/2 are treated as zero so float dust cannot create
/// phantom observations.
inline bool flow_observes(double flow, double epsilon) { return flow >= epsilon / 2.0; }

}  // namespace routing
