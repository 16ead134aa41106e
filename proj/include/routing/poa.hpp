#pragma once

#include <iosfwd>
#include <string>

#include "routing/simulate.hpp"

namespace routing {

/// Parameters of the closed-form inefficiency lower bounds.
struct PoaBoundParams {
    std::size_t n_paths = 1;  // number of stochastic paths N
    double rho = 0.95;
    double prod_x0 = 0.5;  // product of initial hazard beliefs
    double q_hh = 0.9;
    double delta = 1e-3;  // cutoff defining the learning horizon k
};

/// k = ceil(log_{q_hh} delta): slots until a bad path has likely recovered.
double learning_horizon(double q_hh, double delta);

/// Lower bound on the sharing mechanism's cost ratio:
/// (1-rho+rho*P) / (1-rho+(rho-rho^{k/N})*P), P = prod of x_i(0).
double sharing_poa_bound(const PoaBoundParams& p);

/// Lower bound for the hiding mechanism; the numerator becomes
/// 1-rho^2+rho^2*P because users stay blind one extra slot.
double hiding_poa_bound(const PoaBoundParams& p);

/// Exact worst-case ratio of the probabilistic recommendation mechanism:
/// 1 + 1/(4N+3).
double upr_poa_value(std::size_t n_paths);

enum class ScenarioKind { Prop1, Prop2, Prop3 };

/// A generated worst-case scenario. `dial` in (0,1) controls how close the
/// parameters sit to the (unreachable) limit regime.
struct PoAScenario {
    ScenarioKind kind = ScenarioKind::Prop1;
    double dial = 0.5;
    NetworkConfig cfg;
    std::vector<double> x0;
    double delta = 1e-3;

    PoaBoundParams bound_params() const;
    /// Horizon capturing all but a ~0.7% discounted tail.
    int suggested_horizon() const;
};

/// Worst-case generators.
///
/// Prop1/Prop2 (minimum exploration): 1-rho = 10^(-1-2*dial),
/// 1-q_hh = 10^(-0.5-dial), q_lh = (1-q_hh)^2, c0 = 1000,
/// c_high = 3*(c0+1)*10^(0.5+dial), x0 = (c0+1-2(N+1)eps)/c_high. The mapping
/// keeps three properties at every dial: the initial expected cost sits just
/// below c0+1 so selfish users sample each path once at t=0; after a bad
/// observation the drifting belief never becomes attractive again (the
/// stationary expected cost stays above c0+1); and the single-user value of
/// exploring a bad path stays below its cost, so selfish users never pay for
/// information. The closed-form bounds are approached from above as the dial
/// rises.
///
/// Prop3 (maximum exploration): c0 = 1/N, c_low = 0, x0 = q_lh =
/// 10^(-9-3*dial), so the selfish flow is exactly 1/N per stochastic path
/// forever while the optimum keeps 1/(2(N+1)) on the deterministic path.
PoAScenario worst_case_scenario(ScenarioKind kind, double dial, std::size_t n_paths);

struct PoaEstimate {
    double ratio = 1.0;
    PolicyCostEstimate mechanism_cost;
    PolicyCostEstimate optimum_cost;
};

/// Empirical cost ratio: mechanism and optimum simulated on matched seeds.
PoaEstimate poa_estimate(const NetworkConfig& cfg, MechanismKind mechanism,
                         const std::vector<double>& x0, int horizon, std::size_t episodes,
                         std::uint64_t seed, unsigned threads = 0);

struct PoaReportRow {
    std::string scenario;
    double dial = 0.0;
    std::size_t n_paths = 1;
    std::string mechanism;
    double empirical = 0.0;
    double bound = 0.0;
    double gap = 0.0;
};

void write_poa_report_csv(std::ostream& os, const std::vector<PoaReportRow>& rows);

}  // namespace routing
