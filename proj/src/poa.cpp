#include "routing/poa.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

namespace routing {

double learning_horizon(double q_hh, double delta) {
    require(q_hh > 0.0 && q_hh < 1.0, "learning_horizon: q_hh must lie in (0,1)");
    require(delta > 0.0 && delta < 1.0, "learning_horizon: delta must lie in (0,1)");
    return std::ceil(std::log(delta) / std::log(q_hh));
}

namespace {

void check_bound_params(const PoaBoundParams& p) {
    require(p.n_paths >= 1, "poa bound: need at least one stochastic path");
    require(p.rho > 0.0 && p.rho < 1.0, "poa bound: rho must lie in (0,1)");
    require(p.prod_x0 >= 0.0 && p.prod_x0 <= 1.0, "poa bound: prod_x0 out of [0,1]");
}

double bound_denominator(const PoaBoundParams& p) {
    const double k = learning_horizon(p.q_hh, p.delta);
    const double rho_k = std::pow(p.rho, k / static_cast<double>(p.n_paths));
    return 1.0 - p.rho + (p.rho - rho_k) * p.prod_x0;
}

}  // namespace

double sharing_poa_bound(const PoaBoundParams& p) {
    check_bound_params(p);
    return (1.0 - p.rho + p.rho * p.prod_x0) / bound_denominator(p);
}

double hiding_poa_bound(const PoaBoundParams& p) {
    check_bound_params(p);
    return (1.0 - p.rho * p.rho + p.rho * p.rho * p.prod_x0) / bound_denominator(p);
}

double upr_poa_value(std::size_t n_paths) {
    require(n_paths >= 1, "upr_poa_value: need at least one stochastic path");
    return 1.0 + 1.0 / (4.0 * static_cast<double>(n_paths) + 3.0);
}

PoaBoundParams PoAScenario::bound_params() const {
    PoaBoundParams p;
    p.n_paths = cfg.num_stochastic();
    p.rho = cfg.rho;
    p.prod_x0 = 1.0;
    for (double v : x0) p.prod_x0 *= v;
    p.q_hh = cfg.stoch(1).q_hh;
    p.delta = delta;
    return p;
}

int PoAScenario::suggested_horizon() const {
    return static_cast<int>(std::ceil(5.0 / (1.0 - cfg.rho)));
}

PoAScenario worst_case_scenario(ScenarioKind kind, double dial, std::size_t n_paths) {
    require(dial > 0.0 && dial < 1.0, "worst_case_scenario: dial must lie in (0,1)");
    require(n_paths >= 1, "worst_case_scenario: need at least one stochastic path");

    PoAScenario s;
    s.kind = kind;
    s.dial = dial;

    if (kind == ScenarioKind::Prop3) {
        const double n = static_cast<double>(n_paths);
        const double c0 = 1.0 / n;
        const double q_lh = std::pow(10.0, -9.0 - 3.0 * dial);
        const double c_high = c0 + 2.0;
        s.cfg.det_path = PathModel::deterministic(c0);
        for (std::size_t i = 0; i < n_paths; ++i)
            s.cfg.stoch_paths.push_back(PathModel::stochastic(0.0, c_high, q_lh, 0.6));
        s.cfg.rho = 0.95;
        s.cfg.epsilon = 1e-6;
        s.cfg.arrival_mass = 1.0;
        s.x0.assign(n_paths, q_lh);
        s.cfg.validate();
        return s;
    }

    const double c0 = 1000.0;
    const double eps = 1e-3;
    const double one_minus_rho = std::pow(10.0, -1.0 - 2.0 * dial);
    const double one_minus_qhh = std::pow(10.0, -0.5 - dial);
    const double q_hh = 1.0 - one_minus_qhh;
    const double q_lh = one_minus_qhh * one_minus_qhh;
    const double c_high = 3.0 * (c0 + 1.0) * std::pow(10.0, 0.5 + dial);
    const double tiny = 2.0 * static_cast<double>(n_paths + 1) * eps;
    const double x0 = (c0 + 1.0 - tiny) / c_high;

    s.cfg.det_path = PathModel::deterministic(c0);
    for (std::size_t i = 0; i < n_paths; ++i)
        s.cfg.stoch_paths.push_back(PathModel::stochastic(0.0, c_high, q_lh, q_hh));
    s.cfg.rho = 1.0 - one_minus_rho;
    s.cfg.epsilon = eps;
    s.cfg.arrival_mass = 1.0;
    s.x0.assign(n_paths, x0);
    s.cfg.validate();
    return s;
}

PoaEstimate poa_estimate(const NetworkConfig& cfg, MechanismKind mechanism,
                         const std::vector<double>& x0, int horizon, std::size_t episodes,
                         std::uint64_t seed, unsigned threads) {
    // The worst-case propositions analyze the minimum-exploration selfish
    // equilibrium (the exploration indicator evaluates to "never" in their
    // limit regime), so the empirical ratio is measured in that regime too.
    PoaEstimate e;
    const BatchSummary bm =
        run_batch(cfg, mechanism, x0, horizon, episodes, seed, threads, nullptr, true);
    const BatchSummary bo = run_batch(cfg, MechanismKind::SocialOptimum, x0, horizon, episodes,
                                      seed, threads, nullptr, true);
    e.mechanism_cost = {bm.mean, bm.std_error, bm.episodes};
    e.optimum_cost = {bo.mean, bo.std_error, bo.episodes};
    require(e.optimum_cost.mean > 0.0, "poa_estimate: nonpositive optimum cost");
    e.ratio = e.mechanism_cost.mean / e.optimum_cost.mean;
    return e;
}

void write_poa_report_csv(std::ostream& os, const std::vector<PoaReportRow>& rows) {
    os << "scenario,dial,n_paths,mechanism,empirical_ratio,bound,gap\n";
    char buf[256];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%s,%.6g,%zu,%s,%.10g,%.10g,%.10g\n", r.scenario.c_str(),
                      r.dial, r.n_paths, r.mechanism.c_str(), r.empirical, r.bound, r.gap);
        os << buf;
    }
}

}  // namespace routing
