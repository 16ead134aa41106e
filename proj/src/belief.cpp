#include "routing/belief.hpp"

namespace routing {

double observe_and_posterior(double x_prior, std::optional<CostObservation> observed) {
    require(x_prior >= 0.0 && x_prior <= 1.0, "observe_and_posterior: prior out of [0,1]");
    if (!observed) return x_prior;
    return *observed == CostObservation::High ? 1.0 : 0.0;
}

double advance_public_belief(double x_post, const PathModel& path) {
    require(x_post >= 0.0 && x_post <= 1.0, "advance_public_belief: posterior out of [0,1]");
    return x_post * path.q_hh + (1.0 - x_post) * path.q_lh;
}

double private_belief_age2(double x_prev_inferred, const PathModel& path) {
    require(x_prev_inferred >= 0.0 && x_prev_inferred <= 1.0,
            "private_belief_age2: belief out of [0,1]");
    return x_prev_inferred * path.q_hh + (1.0 - x_prev_inferred) * path.q_lh;
}

double rectify_from_flows(double f_prev, double f_prev2, const PathModel& path) {
    return f_prev >= f_prev2 ? path.q_lh : path.q_hh;
}

int advance_information_age(bool chose_path_i) { return chose_path_i ? 1 : 2; }

}  // namespace routing
