#include "routing/hybrid.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <thread>

#include "routing/datafit.hpp"
#include "routing/simulate.hpp"

namespace routing {

namespace {

double expected_edge_cost(const HybridEdge& e, double belief) {
    if (!e.model.is_stochastic()) return e.model.c_fixed;
    return expected_internal_cost(e.model, belief);
}

std::vector<double> edge_flows(const HybridNetwork& net, const std::vector<double>& path_flows) {
    std::vector<double> load(net.edges.size(), 0.0);
    for (std::size_t p = 0; p < net.paths.size(); ++p)
        for (std::size_t e : net.paths[p].edges) load[e] += path_flows[p];
    return load;
}

struct OriginPaths {
    std::size_t alt = 0;    // mostly-deterministic alternative
    std::size_t stoch = 0;  // steered stochastic option
};

std::vector<OriginPaths> origin_paths(const HybridNetwork& net) {
    std::vector<OriginPaths> op(net.num_origins());
    for (std::size_t p = 0; p < net.paths.size(); ++p) {
        auto& slot = op[net.paths[p].origin];
        (net.paths[p].stochastic_option ? slot.stoch : slot.alt) = p;
    }
    return op;
}

// Stochastic edges that distinguish the origin's two options (shared edges
// cancel out of the user's comparison).
std::vector<std::size_t> condition_edges(const HybridNetwork& net, const OriginPaths& op) {
    std::vector<std::size_t> out;
    const auto& alt = net.paths[op.alt].edges;
    for (std::size_t e : net.paths[op.stoch].edges) {
        if (!net.edges[e].model.is_stochastic()) continue;
        if (std::find(alt.begin(), alt.end(), e) != alt.end()) continue;
        out.push_back(e);
    }
    return out;
}

// Equalizes the two options of every origin given per-origin base costs
// a[path] (expected internal costs, no congestion). factor = 1 yields the
// selfish equilibrium, factor = 2 the planner's marginal-cost solution.
// floors[path] is the minimum flow of that path.
std::vector<double> solve_splits(const HybridNetwork& net, const std::vector<double>& a,
                                 const std::vector<double>& arrivals,
                                 const std::vector<double>& floors, double factor) {
    const auto op = origin_paths(net);
    std::vector<double> f(net.paths.size(), 0.0);
    for (std::size_t o = 0; o < op.size(); ++o) {
        f[op[o].stoch] = 0.5 * arrivals[o];
        f[op[o].alt] = 0.5 * arrivals[o];
    }
    for (int it = 0; it < 500; ++it) {
        double change = 0.0;
        for (std::size_t o = 0; o < op.size(); ++o) {
            const std::size_t ps = op[o].stoch, pa = op[o].alt;
            const double mass = arrivals[o];
            const double lo = std::min(floors[ps], mass);
            const double hi = std::max(mass - floors[pa], lo);

            // D(fs) = cost_s - cost_a is affine in fs; s_e = +-1 marks edges
            // exclusive to one option.
            auto load = edge_flows(net, f);
            double d0 = a[ps] - a[pa];
            double slope = 0.0;
            const double fs_cur = f[ps];
            auto side = [&](std::size_t e) {
                const auto& se = net.paths[ps].edges;
                const auto& ae = net.paths[pa].edges;
                const bool in_s = std::find(se.begin(), se.end(), e) != se.end();
                const bool in_a = std::find(ae.begin(), ae.end(), e) != ae.end();
                return static_cast<double>(in_s) - static_cast<double>(in_a);
            };
            for (std::size_t e = 0; e < net.edges.size(); ++e) {
                const double s = side(e);
                if (s == 0.0) continue;
                // flow_e(fs) = load_e - s*fs_cur + s*fs (the alternative gains
                // what the stochastic option loses through mass conservation).
                const double w = factor / net.edges[e].capacity_scale;
                d0 += w * (load[e] - s * fs_cur) * s;
                slope += w * s * s;
            }
            double fs = slope > 0.0 ? -d0 / slope : (d0 < 0.0 ? hi : lo);
            fs = std::min(hi, std::max(lo, fs));
            change = std::max(change, std::abs(fs - f[ps]));
            f[ps] = fs;
            f[pa] = mass - fs;
        }
        if (change < 1e-10 * (1.0 + arrivals[0])) return f;
    }
    return f;  // near-fixed point; the game is a contraction in practice
}

}  // namespace

void HybridNetwork::validate() const {
    require(!edges.empty() && !paths.empty(), "HybridNetwork: empty network");
    require(num_origins() >= 1, "HybridNetwork: need at least one origin");
    std::vector<int> options(num_origins(), 0), alts(num_origins(), 0);
    for (const auto& p : paths) {
        require(!p.edges.empty(), "HybridNetwork: path with no edges");
        require(p.origin < num_origins(), "HybridNetwork: path origin out of range");
        for (std::size_t e : p.edges)
            require(e < edges.size(), "HybridNetwork: edge index out of range");
        (p.stochastic_option ? options : alts)[p.origin] += 1;
    }
    for (std::size_t o = 0; o < num_origins(); ++o) {
        require(options[o] == 1 && alts[o] == 1,
                "HybridNetwork: each origin needs one alternative and one stochastic option");
        require(arrival_mean[o] > 0.0, "HybridNetwork: arrival rate must be positive");
    }
    for (const auto& e : edges) {
        require(e.capacity_scale > 0.0, "HybridNetwork: capacity scale must be positive");
        e.model.validate();
    }
    require(rho > 0.0 && rho < 1.0, "HybridNetwork: rho must lie in (0,1)");
    require(epsilon > 0.0, "HybridNetwork: epsilon must be positive");
}

HybridNetwork build_shanghai_fixture() {
    HybridNetwork net;
    const auto& fx = road_chain_fixtures();
    auto chain = [&](const char* name) -> const TransitionMatrix& {
        for (const auto& f : fx)
            if (f.name == name) return f.matrix;
        throw ContractViolation("build_shanghai_fixture: unknown fixture road");
    };
    auto stoch_edge = [&](std::string name, const char* fixture, double c_low, double c_high,
                          double cap, double x0) {
        const auto& m = chain(fixture);
        HybridEdge e;
        e.name = std::move(name);
        e.model = PathModel::stochastic(c_low, c_high, m[0][1], m[1][1]);
        e.capacity_scale = cap;
        e.belief0 = x0;
        return e;
    };
    auto det_edge = [&](std::string name, double cost, double cap) {
        HybridEdge e;
        e.name = std::move(name);
        e.model = PathModel::deterministic(cost);
        e.capacity_scale = cap;
        return e;
    };

    // Travel minutes and capacity scales are calibration choices; the chain
    // matrices, initial beliefs, arrivals, rho and epsilon come from the
    // measured fixture.
    net.edges = {
        det_edge("first_haining", 7.3, 20.0),           // 0
        det_edge("henan", 7.3, 20.0),                   // 1
        stoch_edge("north_chengdu", "N_CD", 6.0, 10.0, 36.0, 0.5),   // 2
        stoch_edge("yanan_elevated", "YA_E", 7.5, 12.5, 36.0, 0.6),  // 3
        stoch_edge("east_yanan", "E_YA", 4.0, 14.0, 36.0, 0.7),      // 4
        stoch_edge("north_south_elevated", "NS_E", 5.0, 16.0, 36.0, 0.3),  // 5
        det_edge("south_zhongshan", 11.0, 20.0),        // 6
        det_edge("east_zhongshan_2", 11.0, 20.0),       // 7
    };
    net.paths = {
        {"1-1", 0, {0, 1}, false},
        {"1-2", 0, {2, 3, 4}, true},
        {"2-1", 1, {5, 3, 4}, true},
        {"2-2", 1, {6, 7}, false},
    };
    net.arrival_mean = {102.0, 56.0};
    net.arrival_std = 5.62;
    net.rho = 0.95;
    net.epsilon = 1.0;
    net.validate();
    return net;
}

double hybrid_path_cost(const HybridNetwork& net, std::size_t path_index,
                        const std::vector<double>& path_flows, const std::vector<double>& beliefs) {
    require(path_index < net.paths.size(), "hybrid_path_cost: path index out of range");
    require(path_flows.size() == net.paths.size(), "hybrid_path_cost: flow dimension mismatch");
    require(beliefs.size() == net.edges.size(), "hybrid_path_cost: belief dimension mismatch");
    const auto load = edge_flows(net, path_flows);
    double cost = 0.0;
    for (std::size_t e : net.paths[path_index].edges)
        cost += expected_edge_cost(net.edges[e], beliefs[e]) + load[e] / net.edges[e].capacity_scale;
    return cost;
}

namespace {

struct HybridEpisodeState {
    std::vector<double> x;         // public belief per edge
    std::vector<bool> high;        // realized state per edge
    std::vector<double> prev_s;    // previous stochastic-option flow per origin
    std::vector<double> prev2_s;   // the one before
    std::vector<double> prev_mass; // arrival mass of the previous slot
};

std::vector<double> base_costs(const HybridNetwork& net, const std::vector<double>& beliefs) {
    std::vector<double> a(net.paths.size(), 0.0);
    for (std::size_t p = 0; p < net.paths.size(); ++p)
        for (std::size_t e : net.paths[p].edges)
            a[p] += expected_edge_cost(net.edges[e], beliefs[e]);
    return a;
}

std::vector<double> mechanism_flows(const HybridNetwork& net, MechanismKind kind,
                                    const HybridEpisodeState& st,
                                    const std::vector<double>& arrivals, int t) {
    const auto op = origin_paths(net);
    const std::size_t P = net.paths.size();
    std::vector<double> floors(P, 0.0);

    switch (kind) {
        case MechanismKind::Sharing:
            return solve_splits(net, base_costs(net, st.x), arrivals, floors, 1.0);

        case MechanismKind::SocialOptimum: {
            // Exploration floor only where the option would carry flow under
            // the most optimistic beliefs; a dominated option is never probed.
            std::vector<double> x_opt = st.x;
            for (std::size_t e = 0; e < net.edges.size(); ++e)
                if (net.edges[e].model.is_stochastic()) x_opt[e] = net.edges[e].model.q_lh;
            const auto f_opt = solve_splits(net, base_costs(net, x_opt), arrivals, floors, 2.0);
            for (std::size_t o = 0; o < op.size(); ++o)
                if (f_opt[op[o].stoch] >= net.epsilon)
                    floors[op[o].stoch] = std::min(net.epsilon, arrivals[o]);
            return solve_splits(net, base_costs(net, st.x), arrivals, floors, 2.0);
        }

        case MechanismKind::Hiding:
        case MechanismKind::DeterministicRecommendation: {
            if (t == 0) return solve_splits(net, base_costs(net, st.x), arrivals, floors, 1.0);
            // Age-2 users rectify each distinguishing edge of their origin's
            // stochastic option from the disclosed flow trend, then drift.
            std::vector<double> y2 = st.x;
            for (std::size_t o = 0; o < op.size(); ++o) {
                // A trend needs flow behind it: slots below the observation
                // threshold disclose nothing, so the stale public belief
                // stands in.
                if (std::max(st.prev_s[o], st.prev2_s[o]) < 0.5 * net.epsilon) continue;
                const bool rising = st.prev_s[o] >= st.prev2_s[o];
                for (std::size_t e : condition_edges(net, op[o])) {
                    const auto& m = net.edges[e].model;
                    y2[e] = advance_public_belief(rising ? m.q_lh : m.q_hh, m);
                }
            }
            const auto f2 = solve_splits(net, base_costs(net, y2), arrivals, floors, 1.0);
            const auto f1 = solve_splits(net, base_costs(net, st.x), arrivals, floors, 1.0);
            std::vector<double> f(P, 0.0);
            for (std::size_t o = 0; o < op.size(); ++o) {
                const double mass = arrivals[o];
                const double frac_a1 = std::min(st.prev_s[o] / std::max(st.prev_mass[o], 1e-12), 1.0);
                const double age2 = (1.0 - frac_a1) * f2[op[o].stoch];
                const double age1 =
                    std::min(std::max(f1[op[o].stoch] - age2, 0.0), frac_a1 * mass);
                f[op[o].stoch] = std::min(age1 + age2, mass);
                f[op[o].alt] = mass - f[op[o].stoch];
            }
            return f;
        }

        case MechanismKind::Upr: {
            if (t == 0) return solve_splits(net, base_costs(net, st.x), arrivals, floors, 1.0);
            // Condition classification per origin, then maximum exploit flow
            // for good options and epsilon-scaled recommendations for bad.
            std::vector<double> x_good = st.x;
            std::vector<bool> good(op.size(), false);
            for (std::size_t o = 0; o < op.size(); ++o) {
                double e_now = 0.0, e_lo = 0.0, e_hi = 0.0;
                for (std::size_t e : condition_edges(net, op[o])) {
                    const auto& m = net.edges[e].model;
                    e_now += expected_internal_cost(m, st.x[e]);
                    e_lo += expected_internal_cost(m, m.q_lh);
                    e_hi += expected_internal_cost(m, m.q_hh);
                    x_good[e] = m.q_lh;
                }
                good[o] = e_now <= 0.5 * (e_lo + e_hi);
            }
            const auto f_bar = solve_splits(net, base_costs(net, x_good), arrivals, floors, 1.0);
            const auto fs = solve_splits(net, base_costs(net, st.x), arrivals, floors, 1.0);
            std::vector<double> f(P, 0.0);
            for (std::size_t o = 0; o < op.size(); ++o) {
                const double mass = arrivals[o];
                // Recommendation between the selfish and marginal-cost splits
                // (users still prefer it to the stale outside option), with a
                // guaranteed exploration floor; in good condition the full
                // epsilon mass is steered so the option stays observed even
                // when every user carries fresh news.
                const double frac = std::min(st.prev_s[o] / std::max(st.prev_mass[o], 1e-12), 1.0);
                double v = fs[op[o].stoch];
                if (f_bar[op[o].stoch] >= net.epsilon)
                    v = std::max(v, (good[o] ? 1.0 : std::max(1.0 - frac, 0.5)) * net.epsilon);
                f[op[o].stoch] = std::min(v, mass);
                f[op[o].alt] = mass - f[op[o].stoch];
            }
            return f;
        }
    }
    throw ContractViolation("mechanism_flows: unknown mechanism");
}

double run_hybrid_episode(const HybridNetwork& net, MechanismKind kind,
                          const HybridExperimentOptions& opts, std::uint64_t episode) {
    const CounterRng rng{opts.seed, episode};
    const auto op = origin_paths(net);
    const std::size_t E = net.edges.size();

    HybridEpisodeState st;
    st.x.assign(E, 0.0);
    st.high.assign(E, false);
    for (std::size_t e = 0; e < E; ++e) {
        if (!net.edges[e].model.is_stochastic()) continue;
        st.x[e] = net.edges[e].belief0;
        st.high[e] = rng.uniform(0, kStreamInitState + e) < st.x[e];
    }
    st.prev_s.assign(op.size(), 0.0);
    st.prev2_s.assign(op.size(), 0.0);
    st.prev_mass = net.arrival_mean;

    double total = 0.0;
    for (int t = 0; t < opts.horizon; ++t) {
        std::vector<double> arrivals = net.arrival_mean;
        if (opts.arrival_noise) {
            for (std::size_t o = 0; o < op.size(); ++o) {
                const double u1 = rng.uniform(t, kStreamArrival + 2 * o);
                const double u2 = rng.uniform(t, kStreamArrival + 2 * o + 1);
                const double z =
                    std::sqrt(-2.0 * std::log(std::max(u1, 1e-300))) * std::cos(6.283185307179586 * u2);
                arrivals[o] = std::max(net.arrival_mean[o] + net.arrival_std * z, 2.0 * net.epsilon);
            }
        }

        const auto f = mechanism_flows(net, kind, st, arrivals, t);
        const auto load = edge_flows(net, f);

        double slot_cost = 0.0;
        for (std::size_t p = 0; p < net.paths.size(); ++p) {
            double c = 0.0;
            for (std::size_t e : net.paths[p].edges) {
                const auto& m = net.edges[e].model;
                const double edge_cost =
                    m.is_stochastic() ? (st.high[e] ? m.c_high : m.c_low) : m.c_fixed;
                c += edge_cost + load[e] / net.edges[e].capacity_scale;
            }
            slot_cost += f[p] * c;
        }
        total += std::pow(net.rho, t) * slot_cost;

        // Observe loaded stochastic edges, advance chains and beliefs.
        for (std::size_t e = 0; e < E; ++e) {
            const auto& m = net.edges[e].model;
            if (!m.is_stochastic()) continue;
            std::optional<CostObservation> obs;
            if (flow_observes(load[e], net.epsilon))
                obs = st.high[e] ? CostObservation::High : CostObservation::Low;
            const double post = observe_and_posterior(st.x[e], obs);
            st.x[e] = advance_public_belief(post, m);
            st.high[e] = rng.uniform(t, kStreamChain + e) < (st.high[e] ? m.q_hh : m.q_lh);
        }
        for (std::size_t o = 0; o < op.size(); ++o) {
            st.prev2_s[o] = st.prev_s[o];
            st.prev_s[o] = f[op[o].stoch];
            st.prev_mass[o] = arrivals[o];
        }
    }
    return total;
}

}  // namespace

std::vector<HybridMechanismResult> run_hybrid_experiment(const HybridNetwork& net,
                                                         const std::vector<MechanismKind>& mechanisms,
                                                         const HybridExperimentOptions& opts) {
    net.validate();
    require(opts.episodes >= 1 && opts.horizon >= 1, "run_hybrid_experiment: bad options");

    std::vector<MechanismKind> todo = mechanisms;
    if (std::find(todo.begin(), todo.end(), MechanismKind::SocialOptimum) == todo.end())
        todo.push_back(MechanismKind::SocialOptimum);

    std::vector<HybridMechanismResult> results(todo.size());
    unsigned threads = opts.threads == 0 ? std::max(1u, std::thread::hardware_concurrency())
                                         : opts.threads;
    for (std::size_t k = 0; k < todo.size(); ++k) {
        auto& r = results[k];
        r.mechanism = todo[k];
        r.per_seed_cost.assign(opts.episodes, 0.0);
        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            for (;;) {
                const std::size_t e = next.fetch_add(1);
                if (e >= opts.episodes) return;
                r.per_seed_cost[e] = run_hybrid_episode(net, todo[k], opts, e);
            }
        };
        const unsigned nt = static_cast<unsigned>(std::min<std::size_t>(threads, opts.episodes));
        if (nt <= 1) {
            worker();
        } else {
            std::vector<std::thread> pool;
            for (unsigned i = 0; i < nt; ++i) pool.emplace_back(worker);
            for (auto& th : pool) th.join();
        }
        for (double v : r.per_seed_cost) r.mean_cost += v;
        r.mean_cost /= static_cast<double>(opts.episodes);
        if (opts.episodes > 1) {
            double ss = 0.0;
            for (double v : r.per_seed_cost) ss += (v - r.mean_cost) * (v - r.mean_cost);
            r.std_error = std::sqrt(ss / static_cast<double>(opts.episodes - 1) /
                                    static_cast<double>(opts.episodes));
        }
    }
    const auto opt_it = std::find_if(results.begin(), results.end(), [](const auto& r) {
        return r.mechanism == MechanismKind::SocialOptimum;
    });
    for (auto& r : results) r.ratio_to_optimum = r.mean_cost / opt_it->mean_cost;
    return results;
}

std::string mechanism_name(MechanismKind kind) {
    switch (kind) {
        case MechanismKind::Sharing: return "sharing";
        case MechanismKind::Hiding: return "hiding";
        case MechanismKind::DeterministicRecommendation: return "deterministic";
        case MechanismKind::Upr: return "upr";
        case MechanismKind::SocialOptimum: return "optimum";
    }
    return "unknown";
}

void write_hybrid_report_csv(std::ostream& os, const std::vector<HybridMechanismResult>& rows) {
    os << "mechanism,mean_cost,std_error,ratio_to_optimum\n";
    char buf[160];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%s,%.10g,%.10g,%.10g\n", mechanism_name(r.mechanism).c_str(),
                      r.mean_cost, r.std_error, r.ratio_to_optimum);
        os << buf;
    }
}

}  // namespace routing
