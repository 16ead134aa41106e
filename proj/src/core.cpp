#include "routing/core.hpp"

#include <cmath>

namespace routing {

bool NetworkConfig::non_trivial_regime() const {
    for (const auto& p : stoch_paths) {
        if (!(expected_internal_cost(p, p.q_lh) < c0())) return false;
        if (!(expected_internal_cost(p, p.q_hh) > c0())) return false;
    }
    return true;
}

void FlowAllocation::check_conserved(double arrival_mass, double tol) const {
    require(std::abs(total() - arrival_mass) <= tol, "FlowAllocation: flows do not sum to arrival mass");
    for (double v : f)
        require(v >= -tol && v <= arrival_mass + tol, "FlowAllocation: component out of [0, arrival_mass]");
}

double expected_internal_cost(const PathModel& path, double x) {
    require(path.is_stochastic(), "expected_internal_cost: path must be stochastic");
    require(x >= 0.0 && x <= 1.0, "expected_internal_cost: belief out of [0,1]");
    return x * path.c_high + (1.0 - x) * path.c_low;
}

double immediate_social_cost(const NetworkConfig& cfg, const FlowAllocation& flows,
                             const std::vector<double>& x) {
    require(flows.size() == cfg.num_paths(), "immediate_social_cost: flow dimension mismatch");
    require(x.size() == cfg.num_stochastic(), "immediate_social_cost: belief dimension mismatch");
    double cost = flows[0] * (cfg.c0() + cfg.coeff(0) * flows[0]);
    for (std::size_t i = 1; i < flows.size(); ++i) {
        double e = expected_internal_cost(cfg.stoch(i), x[i - 1]);
        cost += flows[i] * (e + cfg.coeff(i) * flows[i]);
    }
    return cost;
}

}  // namespace routing
