#include "routing/simulate.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace routing {

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

std::vector<double> realized_cost_contribs(const NetworkConfig& cfg, const FlowAllocation& f,
                                           const std::vector<bool>& high) {
    std::vector<double> c(f.size());
    c[0] = f[0] * (cfg.c0() + cfg.coeff(0) * f[0]);
    for (std::size_t i = 1; i <= cfg.num_stochastic(); ++i) {
        const auto& p = cfg.stoch(i);
        const double ci = high[i - 1] ? p.c_high : p.c_low;
        c[i] = f[i] * (ci + cfg.coeff(i) * f[i]);
    }
    return c;
}

}  // namespace

double CounterRng::uniform(std::uint64_t step, std::uint64_t stream) const {
    std::uint64_t h = splitmix64(seed);
    h = splitmix64(h ^ episode);
    h = splitmix64(h ^ step);
    h = splitmix64(h ^ stream);
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

EpisodeTrace run_episode(const NetworkConfig& cfg, MechanismKind mechanism,
                         const std::vector<double>& x0, int horizon, std::uint64_t seed,
                         std::uint64_t episode, const PathQOracle& q_compare) {
    cfg.validate();
    require(x0.size() == cfg.num_stochastic(), "run_episode: belief dimension mismatch");
    require(horizon >= 1, "run_episode: horizon must be >= 1");

    const std::size_t N = cfg.num_stochastic();
    const CounterRng rng{seed, episode};

    std::vector<bool> high(N);
    for (std::size_t i = 0; i < N; ++i)
        high[i] = rng.uniform(0, kStreamInitState + i) < x0[i];

    MechanismState state = MechanismState::initial(cfg, x0);

    EpisodeTrace trace;
    trace.seed = seed;
    trace.episode = episode;
    trace.horizon = horizon;
    trace.steps.reserve(static_cast<std::size_t>(horizon));

    for (int t = 0; t < horizon; ++t) {
        std::uint64_t signal_draw = 0;
        UniformSampler sampler = [&](void) {
            return rng.uniform(static_cast<std::uint64_t>(t), kStreamSignal + signal_draw++);
        };
        MechanismStepOutput out = [&] {
            if (mechanism == MechanismKind::Upr)
                return step_upr(state, cfg, q_compare, sampler);
            return mechanism_step(mechanism, state, cfg, q_compare, sampler);
        }();
        out.flows.check_conserved(cfg.arrival_mass);

        StepRecord rec;
        rec.t = t;
        rec.true_high = high;
        rec.x = state.pub.x;
        rec.flows = out.flows;
        rec.signals = out.signals;
        rec.cost_contribs = realized_cost_contribs(cfg, out.flows, high);
        for (double c : rec.cost_contribs) rec.immediate_cost += c;
        trace.discounted_total += std::pow(cfg.rho, t) * rec.immediate_cost;
        trace.steps.push_back(std::move(rec));

        // Observation of the realized states, then the chain moves on and
        // every belief class advances one slot.
        std::vector<double> x_post(N), x_next(N);
        for (std::size_t i = 0; i < N; ++i) {
            const auto& p = cfg.stoch(i + 1);
            std::optional<CostObservation> obs;
            if (flow_observes(out.flows[i + 1], cfg.epsilon))
                obs = high[i] ? CostObservation::High : CostObservation::Low;
            x_post[i] = observe_and_posterior(state.pub.x[i], obs);
            x_next[i] = advance_public_belief(x_post[i], p);

            const double q = high[i] ? p.q_hh : p.q_lh;
            high[i] = rng.uniform(static_cast<std::uint64_t>(t), kStreamChain + i) < q;
        }

        // Age-2 users of the next slot rectify x_i(t) from the flow change
        // f_i(t) vs f_i(t-1), then drift it once.
        for (std::size_t i = 0; i < N; ++i) {
            const auto& p = cfg.stoch(i + 1);
            // At the end of slot 0 there is only one flow on record, so no
            // comparison is possible; age-2 users drift the prior instead.
            const double inferred =
                t == 0 ? state.pub.x[i]
                       : rectify_from_flows(out.flows[i + 1], state.profile.flow_prev[i], p);
            state.profile.y2[i] = private_belief_age2(inferred, p);
            state.profile.y1[i] =
                flow_observes(out.flows[i + 1], cfg.epsilon) ? x_next[i] : state.profile.y2[i];
            state.profile.flow_prev2[i] = state.profile.flow_prev[i];
            state.profile.flow_prev[i] = out.flows[i + 1];
        }
        state.x_prev = state.pub.x;
        state.pub.x_post = x_post;
        state.pub.x = x_next;
        state.prev_flows = out.flows;
        state.has_history = true;
    }
    return trace;
}

BatchSummary run_batch(const NetworkConfig& cfg, MechanismKind mechanism,
                       const std::vector<double>& x0, int horizon, std::size_t episodes,
                       std::uint64_t seed, unsigned threads,
                       std::vector<EpisodeTrace>* traces, bool min_exploration) {
    require(episodes >= 1, "run_batch: episodes must be >= 1");
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, episodes));

    std::vector<double> totals(episodes, 0.0);
    if (traces) traces->resize(episodes);

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        // One oracle per worker: the memo cache is not shared across threads.
        const PathQOracle oracle = min_exploration ? PathQOracle{} : make_q_oracle(cfg);
        for (;;) {
            const std::size_t e = next.fetch_add(1);
            if (e >= episodes) return;
            EpisodeTrace tr = run_episode(cfg, mechanism, x0, horizon, seed, e, oracle);
            totals[e] = tr.discounted_total;
            if (traces) (*traces)[e] = std::move(tr);
        }
    };
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    // Fixed-order reduction keeps the summary independent of the schedule.
    BatchSummary s;
    s.episodes = episodes;
    for (double v : totals) s.mean += v;
    s.mean /= static_cast<double>(episodes);
    if (episodes > 1) {
        double ss = 0.0;
        for (double v : totals) ss += (v - s.mean) * (v - s.mean);
        s.std_error = std::sqrt(ss / static_cast<double>(episodes - 1) /
                                static_cast<double>(episodes));
    }
    return s;
}

void write_trace(std::ostream& os, const EpisodeTrace& trace) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "# seed=%llu episode=%llu horizon=%d total=%.17g\n",
                  static_cast<unsigned long long>(trace.seed),
                  static_cast<unsigned long long>(trace.episode), trace.horizon,
                  trace.discounted_total);
    os << buf;
    os << "# t,path,true_state,x_i,flow,cost_contrib,signal\n";
    for (const auto& rec : trace.steps) {
        const std::size_t P = rec.flows.size();
        for (std::size_t p = 0; p < P; ++p) {
            int ts = -1;
            double x = 0.0;
            if (p >= 1) {
                ts = rec.true_high[p - 1] ? 1 : 0;
                x = rec.x[p - 1];
            }
            double signal_mass = 0.0;
            for (const auto& s : rec.signals)
                if (s.target_path == p) signal_mass += s.probability;
            std::snprintf(buf, sizeof(buf), "%d,%zu,%d,%.17g,%.17g,%.17g,%.17g\n", rec.t, p, ts, x,
                          rec.flows[p], rec.cost_contribs[p], signal_mass);
            os << buf;
        }
    }
}

double replay_discounted_total(std::istream& is, double rho) {
    std::string line;
    std::vector<double> per_step;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        int t = 0, path = 0, ts = 0;
        double x = 0, f = 0, contrib = 0, sig = 0;
        if (std::sscanf(line.c_str(), "%d,%d,%d,%lf,%lf,%lf,%lf", &t, &path, &ts, &x, &f, &contrib,
                        &sig) != 7)
            throw ContractViolation("replay_discounted_total: malformed trace row");
        if (per_step.size() <= static_cast<std::size_t>(t)) per_step.resize(t + 1, 0.0);
        per_step[t] += contrib;
    }
    double total = 0.0;
    for (std::size_t t = 0; t < per_step.size(); ++t)
        total += std::pow(rho, static_cast<double>(t)) * per_step[t];
    return total;
}

PolicyCostEstimate evaluate_policy_cost(const NetworkConfig& cfg, MechanismKind mechanism,
                                        const std::vector<double>& x0, int horizon,
                                        std::size_t episodes, std::uint64_t seed,
                                        unsigned threads) {
    const BatchSummary s = run_batch(cfg, mechanism, x0, horizon, episodes, seed, threads);
    return PolicyCostEstimate{s.mean, s.std_error, s.episodes};
}

}  // namespace routing
