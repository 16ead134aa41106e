#include "routing/mechanisms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace routing {

namespace {


bool path_good(const NetworkConfig& cfg, double x_i, std::size_t i) {
    const auto& p = cfg.stoch(i);
    return x_i <= 0.5 * (p.q_lh + p.q_hh);
}

// Expected UPR flow on path i when its condition is bad: leftover age-1
// selfish demand or the epsilon recommendation flow, whichever is larger.
double upr_bad_flow(const NetworkConfig& cfg, const std::vector<double>& x, std::size_t i,
                    double prev_flow_i, const PathQOracle& q_compare) {
    std::vector<double> v = x;
    v[i - 1] = cfg.stoch(i).q_hh;
    const auto fs = sharing_flow_general(cfg, v, q_compare);
    const double m = cfg.arrival_mass;
    return std::max(fs.flows[i], (1.0 - prev_flow_i / m) * cfg.epsilon);
}

}  // namespace

MechanismState MechanismState::initial(const NetworkConfig& cfg, const std::vector<double>& x0) {
    require(x0.size() == cfg.num_stochastic(), "MechanismState: belief dimension mismatch");
    MechanismState s;
    s.pub = PublicBelief::initial(x0);
    s.x_prev = x0;
    s.profile = PrivateBeliefProfile::initial(x0);
    s.prev_flows = FlowAllocation::zeros(cfg.num_paths());
    s.has_history = false;
    return s;
}

MechanismStepOutput step_sharing(const MechanismState& state, const NetworkConfig& cfg,
                                 const PathQOracle& q_compare) {
    MechanismStepOutput out;
    out.flows = sharing_flow_general(cfg, state.pub.x, q_compare).flows;
    out.disclosed = "beliefs";
    return out;
}

MechanismStepOutput step_hiding(const MechanismState& state, const NetworkConfig& cfg,
                                const PathQOracle& q_compare) {
    MechanismStepOutput out;
    out.flows = hiding_flows(cfg, state.profile, state.prev_flows, q_compare).total;
    out.disclosed = "previous flows";
    return out;
}

MechanismStepOutput step_deterministic_recommendation(const MechanismState& state,
                                                      const NetworkConfig& cfg,
                                                      const PathQOracle& q_compare) {
    MechanismStepOutput out = step_hiding(state, cfg, q_compare);
    out.disclosed = "previous flows + deterministic signals";

    // The platform recommends the planner's cheapest path, but the signal is
    // uninformative to users and leaves the flows untouched.
    const auto opt = social_optimal_flow_general(cfg, state.pub.x);
    std::size_t best = 0;
    double best_cost = cfg.c0() + cfg.coeff(0) * opt[0];
    for (std::size_t i = 1; i < opt.size(); ++i) {
        double c = expected_internal_cost(cfg.stoch(i), state.pub.x[i - 1]) + cfg.coeff(i) * opt[i];
        if (c < best_cost) {
            best_cost = c;
            best = i;
        }
    }
    for (std::size_t cls = 0; cls < cfg.num_paths(); ++cls)
        out.signals.push_back({best, cls, 2, 1.0});
    return out;
}

std::size_t count_good_paths(const NetworkConfig& cfg, const std::vector<double>& x) {
    std::size_t n = 0;
    for (std::size_t i = 1; i <= cfg.num_stochastic(); ++i)
        if (path_good(cfg, x[i - 1], i)) ++n;
    return n;
}

double upr_recommendation_probability(const NetworkConfig& cfg, const std::vector<double>& x,
                                      std::size_t path_index, std::size_t n_good,
                                      double prev_flow_i) {
    const double m = cfg.arrival_mass;
    if (path_good(cfg, x[path_index - 1], path_index)) {
        require(n_good >= 1, "upr_recommendation_probability: no good paths");
        const double f_bar = max_exploit_flow(cfg, n_good, path_index);
        require(f_bar > prev_flow_i, "upr_recommendation_probability: path not in I(t)");
        return (f_bar / m - prev_flow_i / m) / (1.0 - prev_flow_i / m);
    }
    return cfg.epsilon / m;
}

double upr_posterior(const NetworkConfig& cfg, double x_prev_i, double f_bar_i,
                     double prev_flow_i) {
    require(x_prev_i >= 0.0 && x_prev_i <= 1.0, "upr_posterior: prior out of [0,1]");
    const double m = cfg.arrival_mass;
    const double r = (f_bar_i / m - prev_flow_i / m) / (1.0 - prev_flow_i / m);
    const double num = r * (1.0 - x_prev_i);
    const double den = num + (cfg.epsilon / m) * x_prev_i;
    require(den > 0.0, "upr_posterior: zero-probability signal");
    return num / den;
}

MechanismStepOutput step_upr(const MechanismState& state, const NetworkConfig& cfg,
                             const PathQOracle& q_compare, const UniformSampler& rng,
                             const UprOptions& opts) {
    // No flow history yet: bootstrap with one sharing step so every belief
    // has a chance to collapse before recommendations start.
    if (!state.has_history) {
        MechanismStepOutput out = step_sharing(state, cfg, q_compare);
        out.disclosed = "beliefs (bootstrap)";
        return out;
    }

    const double m = cfg.arrival_mass;
    const std::size_t N = cfg.num_stochastic();
    const auto& x = state.pub.x;
    const std::size_t n_good = count_good_paths(cfg, x);

    MechanismStepOutput out;
    out.flows = FlowAllocation::zeros(N + 1);
    out.disclosed = "previous flows + probabilistic signals";

    double sum = 0.0;
    for (std::size_t i = 1; i <= N; ++i) {
        const double prev = state.prev_flows[i];
        double f;
        if (path_good(cfg, x[i - 1], i)) {
            f = max_exploit_flow(cfg, n_good, i);
            if (opts.finite_sample && f > prev) {
                // Draw the recommended age-2 takers instead of using the mean.
                require(rng != nullptr && opts.num_users > 0, "step_upr: finite sampling needs rng");
                const double p = (f / m - prev / m) / (1.0 - prev / m);
                const auto trials =
                    static_cast<std::uint64_t>(std::llround(opts.num_users * (1.0 - prev / m)));
                std::uint64_t hits = 0;
                for (std::uint64_t u = 0; u < trials; ++u)
                    if (rng() < p) ++hits;
                f = prev + m * static_cast<double>(hits) / static_cast<double>(opts.num_users);
            }
        } else {
            f = upr_bad_flow(cfg, x, i, prev, q_compare);
        }
        out.flows[i] = f;
        sum += f;
    }
    if (sum > m) {
        for (std::size_t i = 1; i <= N; ++i) out.flows[i] *= m / sum;
        sum = m;
    }
    out.flows[0] = m - sum;

    // Signal log: age-1 classes on good paths keep their selfish choice; the
    // age-2 pool receives the categorical recommendation over I(t) plus the
    // path-0 residual.
    for (std::size_t i = 1; i <= N; ++i)
        if (path_good(cfg, x[i - 1], i) && state.prev_flows[i] > 0.0)
            out.signals.push_back({i, i, 1, 1.0});
    double total_prob = 0.0;
    for (std::size_t i = 1; i <= N; ++i) {
        const double prev = state.prev_flows[i];
        const bool good = path_good(cfg, x[i - 1], i);
        const double f_bar = good ? max_exploit_flow(cfg, n_good, i)
                                  : max_exploit_flow(cfg, std::max<std::size_t>(n_good, 1), i);
        if (!(f_bar > prev)) continue;  // i not in I(t)
        double p = good ? (f_bar / m - prev / m) / (1.0 - prev / m) : cfg.epsilon / m;
        out.signals.push_back({i, 0, 2, p});
        total_prob += p;
    }
    if (total_prob > 1.0) {
        for (auto& s : out.signals)
            if (s.class_age == 2) s.probability /= total_prob;
        total_prob = 1.0;
    }
    out.signals.push_back({0, 0, 2, 1.0 - total_prob});
    return out;
}

IirReport iir_check(const MechanismState& state, const NetworkConfig& cfg) {
    const double m = cfg.arrival_mass;
    const std::size_t N = cfg.num_stochastic();
    const auto& x = state.pub.x;
    const std::size_t n_good = std::max<std::size_t>(count_good_paths(cfg, x), 1);

    // Expected mechanism flows conditional on each path's condition.
    std::vector<double> f_good(N + 1, 0.0), f_bad(N + 1, 0.0), p_good_prior(N + 1, 0.0);
    for (std::size_t i = 1; i <= N; ++i) {
        f_good[i] = max_exploit_flow(cfg, n_good, i);
        f_bad[i] = upr_bad_flow(cfg, x, i, state.prev_flows[i], nullptr);
        p_good_prior[i] = 1.0 - state.x_prev[i - 1];
    }
    auto expected_f0 = [&](const std::vector<double>& p_good) {
        double s = 0.0;
        for (std::size_t i = 1; i <= N; ++i)
            s += p_good[i] * f_good[i] + (1.0 - p_good[i]) * f_bad[i];
        return std::max(m - s, 0.0);
    };
    auto path_cost = [&](std::size_t p, const std::vector<double>& p_good) {
        if (p == 0) return cfg.c0() + cfg.coeff(0) * expected_f0(p_good);
        const auto& pm = cfg.stoch(p);
        const double e_lo = expected_internal_cost(pm, pm.q_lh);
        const double e_hi = expected_internal_cost(pm, pm.q_hh);
        return p_good[p] * (e_lo + cfg.coeff(p) * f_good[p]) +
               (1.0 - p_good[p]) * (e_hi + cfg.coeff(p) * f_bad[p]);
    };

    IirReport report;
    auto judge = [&](std::size_t cls_path, int age, std::size_t signal,
                     const std::vector<double>& p_good, bool forced_obedient = false) {
        ClassVerdict v;
        v.class_path = cls_path;
        v.class_age = age;
        v.signal_path = signal;
        v.obey_cost = path_cost(signal, p_good);
        v.best_deviation_cost = std::numeric_limits<double>::infinity();
        for (std::size_t p = 0; p <= N; ++p) {
            if (p == signal) continue;
            v.best_deviation_cost = std::min(v.best_deviation_cost, path_cost(p, p_good));
        }
        v.obedient = forced_obedient || v.obey_cost <= v.best_deviation_cost + kBoundaryTol;
        report.verdicts.push_back(v);
        report.all_obedient = report.all_obedient && v.obedient;
    };

    // Age-1 classes on good paths: the recommendation coincides with their
    // selfish choice.
    for (std::size_t i = 1; i <= N; ++i)
        if (path_good(cfg, x[i - 1], i) && state.prev_flows[i] > 0.0) {
            auto p = p_good_prior;
            p[i] = 1.0;  // they observed c_L themselves
            judge(i, 1, i, p, /*forced_obedient=*/true);
        }

    // Age-2 receivers of pi = i for every candidate path.
    double k_other = 0.0;  // aggregate probability mass of the other signals
    std::vector<double> rec_prob(N + 1, 0.0);
    for (std::size_t i = 1; i <= N; ++i) {
        const double prev = state.prev_flows[i];
        const double f_bar = max_exploit_flow(cfg, n_good, i);
        if (!(f_bar > prev)) continue;
        const bool good = path_good(cfg, x[i - 1], i);
        rec_prob[i] = good ? (f_bar / m - prev / m) / (1.0 - prev / m) : cfg.epsilon / m;
        k_other += rec_prob[i];
    }
    for (std::size_t i = 1; i <= N; ++i) {
        if (rec_prob[i] == 0.0) continue;
        auto p = p_good_prior;
        const double f_bar = max_exploit_flow(cfg, n_good, i);
        p[i] = upr_posterior(cfg, state.x_prev[i - 1], f_bar, state.prev_flows[i]);
        judge(0, 2, i, p);
    }

    // Age-2 receivers of pi = 0: every candidate path is now more likely bad.
    {
        auto p = p_good_prior;
        for (std::size_t i = 1; i <= N; ++i) {
            if (rec_prob[i] == 0.0) continue;
            const double r = rec_prob[i];
            const double others = std::min(k_other - r, 1.0 - r);
            const double pg = std::max(1.0 - r - others, 0.0) * p_good_prior[i];
            const double pb = std::max(1.0 - cfg.epsilon / m - others, 0.0) * (1.0 - p_good_prior[i]);
            p[i] = pg + pb > 0.0 ? pg / (pg + pb) : 0.0;
        }
        judge(0, 2, 0, p);
    }
    return report;
}

MechanismStepOutput mechanism_step(MechanismKind kind, const MechanismState& state,
                                   const NetworkConfig& cfg, const PathQOracle& q_compare,
                                   const UniformSampler& rng) {
    switch (kind) {
        case MechanismKind::Sharing:
            return step_sharing(state, cfg, q_compare);
        case MechanismKind::Hiding:
            return step_hiding(state, cfg, q_compare);
        case MechanismKind::DeterministicRecommendation:
            return step_deterministic_recommendation(state, cfg, q_compare);
        case MechanismKind::Upr:
            return step_upr(state, cfg, q_compare, rng);
        case MechanismKind::SocialOptimum: {
            MechanismStepOutput out;
            out.flows = social_optimal_flow_general(cfg, state.pub.x);
            out.disclosed = "optimal recommendation";
            return out;
        }
    }
    throw ContractViolation("mechanism_step: unknown mechanism");
}

}  // namespace routing
