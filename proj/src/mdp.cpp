#include "routing/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <unordered_map>

namespace routing {

namespace {

double max_immediate_cost(const NetworkConfig& cfg) {
    double a_max = cfg.c0();
    double w_max = cfg.coeff(0);
    for (std::size_t i = 1; i <= cfg.num_stochastic(); ++i) {
        a_max = std::max(a_max, cfg.stoch(i).c_high);
        w_max = std::max(w_max, cfg.coeff(i));
    }
    const double m = cfg.arrival_mass;
    return m * (a_max + w_max * m);
}

}  // namespace

std::vector<double> collapsed_beliefs(const NetworkConfig& cfg, BeliefStateKey key) {
    const std::size_t N = cfg.num_stochastic();
    std::vector<double> x(N);
    for (std::size_t i = 0; i < N; ++i)
        x[i] = (key >> i) & 1u ? cfg.stoch(i + 1).q_hh : cfg.stoch(i + 1).q_lh;
    return x;
}

ValueFunction value_iteration_optimum(const NetworkConfig& cfg) {
    cfg.validate();
    const std::size_t N = cfg.num_stochastic();
    require(N <= 16, "value_iteration_optimum: exact DP limited to N <= 16");
    const std::size_t S = std::size_t{1} << N;

    ValueFunction vf;
    vf.value.assign(S, 0.0);
    vf.policy.resize(S);

    // The optimum observes every stochastic path each slot, so the next-state
    // distribution depends only on the current beliefs: bit i flips to 1 with
    // probability x_i. Immediate cost is the convex-program minimum.
    std::vector<double> immediate(S);
    std::vector<std::vector<double>> beliefs(S);
    for (std::size_t s = 0; s < S; ++s) {
        beliefs[s] = collapsed_beliefs(cfg, static_cast<BeliefStateKey>(s));
        vf.policy[s] = social_optimal_flow_general(cfg, beliefs[s]);
        immediate[s] = immediate_social_cost(cfg, vf.policy[s], beliefs[s]);
    }

    const double tol = (1.0 - cfg.rho) * 1e-8;
    std::vector<double> next(S), work(S);
    for (int sweep = 0; sweep < 1000000; ++sweep) {
        // E[V(next) | s] via per-path marginalization: O(N 2^N).
        work = vf.value;
        for (std::size_t i = 0; i < N; ++i) {
            const std::size_t bit = std::size_t{1} << i;
            for (std::size_t s = 0; s < S; ++s) {
                if (s & bit) continue;
                const double vh_lo = work[s], vh_hi = work[s | bit];
                const double x_lo = beliefs[s][i];        // belief when bit i clear
                const double x_hi = beliefs[s | bit][i];  // belief when bit i set
                work[s] = x_lo * vh_hi + (1.0 - x_lo) * vh_lo;
                work[s | bit] = x_hi * vh_hi + (1.0 - x_hi) * vh_lo;
            }
        }
        double diff = 0.0;
        for (std::size_t s = 0; s < S; ++s) {
            next[s] = immediate[s] + cfg.rho * work[s];
            diff = std::max(diff, std::abs(next[s] - vf.value[s]));
        }
        vf.value.swap(next);
        vf.sweeps = sweep + 1;
        if (diff < tol) {
            vf.bellman_residual = diff;
            return vf;
        }
    }
    throw std::runtime_error("value_iteration_optimum: no convergence after 1e6 sweeps");
}

double optimum_value_at(const NetworkConfig& cfg, const ValueFunction& vf,
                        const std::vector<double>& x0) {
    const std::size_t N = cfg.num_stochastic();
    require(x0.size() == N, "optimum_value_at: belief dimension mismatch");
    const auto flow = social_optimal_flow_general(cfg, x0);
    double v = immediate_social_cost(cfg, flow, x0);
    double expect = 0.0;
    const std::size_t S = std::size_t{1} << N;
    for (std::size_t s = 0; s < S; ++s) {
        double p = 1.0;
        for (std::size_t i = 0; i < N; ++i)
            p *= (s >> i) & 1u ? x0[i] : 1.0 - x0[i];
        expect += p * vf.value[s];
    }
    return v + cfg.rho * expect;
}

int truncation_horizon(const NetworkConfig& cfg, double tol) {
    const double mc = max_immediate_cost(cfg);
    const double target = tol * (1.0 - cfg.rho) / mc;
    const int T = static_cast<int>(std::ceil(std::log(target) / std::log(cfg.rho)));
    return std::max(T, 1);
}

namespace {

// Reduced single-user evaluation for the Q-value exploration test. Path i is
// played against the rest of the network held at its current equilibrium
// (beliefs of the other paths frozen); the user pays the common equilibrium
// cost each slot. Solves the two collapsed continuation values V(q_lh),
// V(q_hh) from the linear fixed point, following the drift chain while the
// path stays dominated.
struct ReducedEval {
    const NetworkConfig& cfg;
    std::vector<double> x;  // full belief vector, component i-1 varied
    std::size_t path;       // 1-based
    double c_rest;          // per-user cost when path i carries no flow
    double v_lo = 0.0, v_hi = 0.0;

    double attract_threshold() const {
        // Path draws positive sharing flow once its standalone cost falls
        // below the rest-equilibrium common cost.
        return c_rest;
    }

    bool attractive(double z) const {
        return expected_internal_cost(cfg.stoch(path), z) < attract_threshold() - kBoundaryTol;
    }

    double common_cost_at(double z) const {
        std::vector<double> v = x;
        v[path - 1] = z;
        return sharing_flow_general(cfg, v, nullptr).common_cost;
    }

    // Discounted cost along the unobserved drift chain starting at z until the
    // path becomes attractive again, expressed as affine coefficients in
    // (V_hi, V_lo): cost = k0 + kh*V_hi + kl*V_lo.
    struct Affine {
        double k0 = 0.0, kh = 0.0, kl = 0.0;
    };

    Affine chain_value(double z) const {
        const auto& p = cfg.stoch(path);
        Affine a;
        double disc = 1.0;
        // The drift converges geometrically; bound the walk well past any
        // practical discount horizon.
        for (int t = 0; t < 200000; ++t) {
            if (attractive(z)) {
                a.k0 += disc * common_cost_at(z);
                a.kh += disc * cfg.rho * z;
                a.kl += disc * cfg.rho * (1.0 - z);
                return a;
            }
            a.k0 += disc * c_rest;
            disc *= cfg.rho;
            if (disc < 1e-14) return a;
            const double zn = advance_public_belief(z, p);
            if (std::abs(zn - z) < 1e-15) {
                // Stationary and still dominated: dominated forever.
                a.k0 += disc * c_rest / (1.0 - cfg.rho);
                return a;
            }
            z = zn;
        }
        return a;
    }

    void solve() {
        const auto& p = cfg.stoch(path);
        // V(z) for collapsed z in {q_lh, q_hh}; attractive states recurse into
        // the observed two-point mix, dominated states follow the drift chain.
        Affine lo, hi;
        if (attractive(p.q_lh)) {
            lo.k0 = common_cost_at(p.q_lh);
            lo.kh = cfg.rho * p.q_lh;
            lo.kl = cfg.rho * (1.0 - p.q_lh);
        } else {
            lo = chain_value(p.q_lh);
        }
        if (attractive(p.q_hh)) {
            hi.k0 = common_cost_at(p.q_hh);
            hi.kh = cfg.rho * p.q_hh;
            hi.kl = cfg.rho * (1.0 - p.q_hh);
        } else {
            hi = chain_value(p.q_hh);
        }
        // Solve v_hi = hi.k0 + hi.kh v_hi + hi.kl v_lo,
        //       v_lo = lo.k0 + lo.kh v_hi + lo.kl v_lo.
        const double a11 = 1.0 - hi.kh, a12 = -hi.kl;
        const double a21 = -lo.kh, a22 = 1.0 - lo.kl;
        const double det = a11 * a22 - a12 * a21;
        require(std::abs(det) > 1e-14, "q_exploration_test: singular continuation system");
        v_hi = (hi.k0 * a22 - a12 * lo.k0) / det;
        v_lo = (a11 * lo.k0 - hi.k0 * a21) / det;
    }
};

}  // namespace

bool q_exploration_test(const NetworkConfig& cfg, const std::vector<double>& x,
                        std::size_t path_index) {
    require(path_index >= 1 && path_index <= cfg.num_stochastic(),
            "q_exploration_test: path index out of range");
    const auto& p = cfg.stoch(path_index);
    const double xi = x[path_index - 1];
    const double e_i = expected_internal_cost(p, xi);

    // Equilibrium among the remaining paths decides what the user pays when
    // skipping path i.
    std::vector<double> a, w;
    a.push_back(cfg.c0());
    w.push_back(cfg.coeff(0));
    for (std::size_t j = 1; j <= cfg.num_stochastic(); ++j) {
        if (j == path_index) continue;
        a.push_back(expected_internal_cost(cfg.stoch(j), x[j - 1]));
        w.push_back(cfg.coeff(j));
    }
    const double c_rest = waterfill_common_cost(a, w, cfg.arrival_mass);

    ReducedEval ev{cfg, x, path_index, c_rest};
    ev.solve();

    // Q(x|eps): pay the dominated path now, learn its state.
    const double q_explore = e_i + cfg.coeff(path_index) * cfg.epsilon +
                             cfg.rho * (xi * ev.v_hi + (1.0 - xi) * ev.v_lo);
    // Q(x|0): stay off, the belief drifts unobserved.
    const auto tail = ev.chain_value(advance_public_belief(xi, p));
    const double q_stay = c_rest + cfg.rho * (tail.k0 + tail.kh * ev.v_hi + tail.kl * ev.v_lo);
    return q_explore <= q_stay;
}

PathQOracle make_q_oracle(const NetworkConfig& cfg) {
    // Memoized per belief vector; the drift chains revisit the same beliefs
    // across episodes.
    auto cache = std::make_shared<std::unordered_map<std::uint64_t, bool>>();
    return [cfg, cache](const std::vector<double>& x, std::size_t i) {
        std::uint64_t h = 1469598103934665603ull ^ i;
        for (double v : x) {
            auto k = static_cast<std::uint64_t>(std::llround(v * 1e12));
            h = (h ^ k) * 1099511628211ull;
        }
        auto it = cache->find(h);
        if (it != cache->end()) return it->second;
        bool r = q_exploration_test(cfg, x, i);
        (*cache)[h] = r;
        return r;
    };
}

}  // namespace routing
