#include "routing/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace routing {

namespace {

void require_unit_coeffs(const NetworkConfig& cfg, const char* who) {
    for (std::size_t p = 0; p < cfg.num_paths(); ++p)
        require(cfg.coeff(p) == 1.0, who);
}

double clamp(double v, double lo, double hi) { return std::min(hi, std::max(lo, v)); }

// Standalone costs a_p for path 0..N given beliefs.
std::vector<double> standalone_costs(const NetworkConfig& cfg, const std::vector<double>& x) {
    require(x.size() == cfg.num_stochastic(), "equilibrium: belief dimension mismatch");
    std::vector<double> a(cfg.num_paths());
    a[0] = cfg.c0();
    for (std::size_t i = 1; i < a.size(); ++i)
        a[i] = expected_internal_cost(cfg.stoch(i), x[i - 1]);
    return a;
}

}  // namespace

EquilibriumResult sharing_flow_two_path(const NetworkConfig& cfg, double x1,
                                        const PathQOracle& q_compare) {
    require(cfg.num_stochastic() == 1, "sharing_flow_two_path: requires N=1");
    require_unit_coeffs(cfg, "sharing_flow_two_path: requires unit congestion coefficients");
    const double m = cfg.arrival_mass;
    const double c0 = cfg.c0();
    const double e1 = expected_internal_cost(cfg.stoch(1), x1);

    EquilibriumResult r;
    r.flows = FlowAllocation::zeros(2);
    r.exploration_flags.assign(2, false);

    if (e1 > c0 + m + kBoundaryTol) {
        // Dominated even at maximum congestion; explore only if the Q-value
        // test says learning pays off.
        bool explore = q_compare && q_compare(std::vector<double>{x1}, 1);
        r.flows[1] = explore ? cfg.epsilon : 0.0;
        r.flows[0] = m - r.flows[1];
        r.exploration_flags[1] = explore;
        r.common_cost = c0 + r.flows[0];
        r.used_set = {0};
        return r;
    }
    double f1 = clamp(m / 2.0 + (c0 - e1) / 2.0, 0.0, m);
    r.flows[1] = f1;
    r.flows[0] = m - f1;
    if (f1 >= m) {
        r.common_cost = e1 + m;
        r.used_set = {1};
    } else if (f1 <= 0.0) {
        r.common_cost = c0 + m;
        r.used_set = {0};
    } else {
        r.common_cost = c0 + r.flows[0];
        r.used_set = {0, 1};
    }
    return r;
}

EquilibriumResult sharing_flow_general(const NetworkConfig& cfg, const std::vector<double>& x,
                                       const PathQOracle& q_compare) {
    cfg.validate();
    const double m = cfg.arrival_mass;
    const auto a = standalone_costs(cfg, x);
    const std::size_t P = a.size();

    // Sorted-cost water filling: grow the used set while the implied common
    // cost exceeds the next path's standalone cost.
    std::vector<std::size_t> order(P);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) { return a[l] < a[r]; });

    double inv_w = 0.0, a_over_w = 0.0, lambda = 0.0;
    std::size_t used = 0;
    for (std::size_t k = 0; k < P; ++k) {
        std::size_t p = order[k];
        inv_w += 1.0 / cfg.coeff(p);
        a_over_w += a[p] / cfg.coeff(p);
        double lam = (m + a_over_w) / inv_w;
        if (k + 1 < P && a[order[k + 1]] < lam) {
            lambda = lam;
            used = k + 1;
            continue;
        }
        lambda = lam;
        used = k + 1;
        break;
    }

    EquilibriumResult r;
    r.flows = FlowAllocation::zeros(P);
    r.exploration_flags.assign(P, false);
    r.common_cost = lambda;
    for (std::size_t k = 0; k < used; ++k) {
        std::size_t p = order[k];
        r.flows[p] = (lambda - a[p]) / cfg.coeff(p);
        r.used_set.push_back(p);
    }
    std::sort(r.used_set.begin(), r.used_set.end());

    // Epsilon-exploration on strictly dominated stochastic paths, carved out
    // of the deterministic path's share.
    double carved = 0.0;
    for (std::size_t i = 1; i < P; ++i) {
        if (r.flows[i] > 0.0) continue;
        if (a[i] <= lambda + kBoundaryTol) continue;  // boundary tie: no exploration
        if (q_compare && q_compare(x, i)) {
            r.flows[i] = cfg.epsilon;
            r.exploration_flags[i] = true;
            carved += cfg.epsilon;
        }
    }
    if (carved > 0.0) {
        require(r.flows[0] >= carved, "sharing_flow_general: cannot carve exploration from path 0");
        r.flows[0] -= carved;
    }
    return r;
}

HidingFlows hiding_flows(const NetworkConfig& cfg, const PrivateBeliefProfile& profile,
                         const FlowAllocation& prev_flows, const PathQOracle& q_compare) {
    const std::size_t N = cfg.num_stochastic();
    require(profile.y1.size() == N && profile.y2.size() == N, "hiding_flows: profile dimension mismatch");
    require(prev_flows.size() == N + 1, "hiding_flows: prev flow dimension mismatch");
    const double m = cfg.arrival_mass;

    const auto fs2 = sharing_flow_general(cfg, profile.y2, q_compare);

    HidingFlows h;
    h.age1.assign(N, 0.0);
    h.age2.assign(N, 0.0);
    h.total = FlowAllocation::zeros(N + 1);

    for (std::size_t i = 1; i <= N; ++i) {
        const double prev = prev_flows[i];
        // Age-2 users only hold the aged belief y2; each picks path i with the
        // equilibrium probability implied by it.
        h.age2[i - 1] = (1.0 - prev / m) * fs2.flows[i];

        // Age-1 users know x_i exactly; they fill toward the sharing target
        // for their belief, capped by their own mass.
        std::vector<double> v = profile.y2;
        v[i - 1] = profile.y1[i - 1];
        const auto fs1 = sharing_flow_general(cfg, v, q_compare);
        h.age1[i - 1] = std::min(std::max(fs1.flows[i] - h.age2[i - 1], 0.0), prev);

        h.total[i] = h.age1[i - 1] + h.age2[i - 1];
    }

    double sum = 0.0;
    for (std::size_t i = 1; i <= N; ++i) sum += h.total[i];
    if (sum > m) {
        // Demands can slightly overshoot the mass when classes disagree;
        // scale the stochastic flows back onto the simplex.
        const double scale = m / sum;
        for (std::size_t i = 1; i <= N; ++i) {
            h.age1[i - 1] *= scale;
            h.age2[i - 1] *= scale;
            h.total[i] *= scale;
        }
        sum = m;
    }
    h.total[0] = m - sum;
    return h;
}

FlowAllocation social_optimal_flow_two_path(const NetworkConfig& cfg, double x1) {
    require(cfg.num_stochastic() == 1, "social_optimal_flow_two_path: requires N=1");
    require_unit_coeffs(cfg, "social_optimal_flow_two_path: requires unit congestion coefficients");
    const double m = cfg.arrival_mass;
    const double e1 = expected_internal_cost(cfg.stoch(1), x1);
    double f1 = clamp(m / 2.0 + (cfg.c0() - e1) / 4.0, cfg.epsilon, m);
    FlowAllocation f = FlowAllocation::zeros(2);
    f[1] = f1;
    f[0] = m - f1;
    return f;
}

FlowAllocation social_optimal_flow_general(const NetworkConfig& cfg, const std::vector<double>& x) {
    cfg.validate();
    const double m = cfg.arrival_mass;
    const std::size_t N = cfg.num_stochastic();
    require(static_cast<double>(N) * cfg.epsilon <= m,
            "social_optimal_flow_general: exploration floor exceeds arrival mass");
    const auto a = standalone_costs(cfg, x);

    // KKT water filling on marginal costs a_p + 2 w_p f_p, with f_i >= eps on
    // stochastic paths and f_0 >= 0. Total flow is monotone in the marginal
    // level mu, so bisection pins it down.
    auto flow_at = [&](double mu, FlowAllocation& f) {
        f[0] = std::max(0.0, (mu - a[0]) / (2.0 * cfg.coeff(0)));
        for (std::size_t i = 1; i <= N; ++i)
            f[i] = std::max(cfg.epsilon, (mu - a[i]) / (2.0 * cfg.coeff(i)));
        return f.total();
    };

    double lo = *std::min_element(a.begin(), a.end()) - 1.0;
    double hi = *std::max_element(a.begin(), a.end()) + 2.0 * m + 1.0;
    for (std::size_t p = 0; p < cfg.num_paths(); ++p)
        hi = std::max(hi, a[p] + 2.0 * cfg.coeff(p) * m + 1.0);

    FlowAllocation f = FlowAllocation::zeros(N + 1);
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        if (flow_at(mid, f) < m)
            lo = mid;
        else
            hi = mid;
    }
    flow_at(hi, f);
    f[0] += m - f.total();  // absorb bisection residual
    if (f[0] < 0.0) {
        // Residual pushed path 0 below zero; shift onto the cheapest
        // stochastic path instead.
        std::size_t best = 1;
        for (std::size_t i = 2; i <= N; ++i)
            if (f[i] > f[best]) best = i;
        f[best] += f[0];
        f[0] = 0.0;
    }
    return f;
}

double waterfill_common_cost(const std::vector<double>& a, const std::vector<double>& w,
                             double mass) {
    require(!a.empty() && a.size() == w.size(), "waterfill_common_cost: bad inputs");
    std::vector<std::size_t> order(a.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) { return a[l] < a[r]; });
    double inv_w = 0.0, a_over_w = 0.0, lambda = 0.0;
    for (std::size_t k = 0; k < order.size(); ++k) {
        std::size_t p = order[k];
        inv_w += 1.0 / w[p];
        a_over_w += a[p] / w[p];
        lambda = (mass + a_over_w) / inv_w;
        if (k + 1 < order.size() && a[order[k + 1]] < lambda) continue;
        break;
    }
    return lambda;
}

double max_exploit_flow(const NetworkConfig& cfg, std::size_t n, std::size_t path_index) {
    require(n >= 1 && n <= cfg.num_stochastic(), "max_exploit_flow: n out of range");
    const double m = cfg.arrival_mass;
    const auto& p = cfg.stoch(path_index);
    const double e_good = expected_internal_cost(p, p.q_lh);
    return std::min(m / static_cast<double>(n),
                    (cfg.c0() + m - e_good) / static_cast<double>(n + 1));
}

}  // namespace routing
