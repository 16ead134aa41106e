#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "routing/simulate.hpp"

using namespace routing;

namespace {

NetworkConfig basic_config() {
    NetworkConfig cfg;
    cfg.det_path = PathModel::deterministic(3.0);
    cfg.stoch_paths.push_back(PathModel::stochastic(0.0, 10.0, 0.2, 0.8));
    cfg.rho = 0.9;
    cfg.validate();
    return cfg;
}

}  // namespace

TEST_CASE("counter rng is a pure function of its coordinates") {
    CounterRng a{42, 3};
    CounterRng b{42, 3};
    CHECK(a.uniform(7, kStreamChain) == b.uniform(7, kStreamChain));
    CHECK(a.uniform(7, kStreamChain) != a.uniform(7, kStreamArrival));
    CHECK(a.uniform(7, kStreamChain) != a.uniform(8, kStreamChain));
    CounterRng c{43, 3};
    CHECK(a.uniform(7, kStreamChain) != c.uniform(7, kStreamChain));
    const double u = a.uniform(0, kStreamInitState);
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
}

TEST_CASE("same seed twice gives an identical trace") {
    auto cfg = basic_config();
    auto t1 = run_episode(cfg, MechanismKind::Hiding, {0.5}, 25, 11, 2);
    auto t2 = run_episode(cfg, MechanismKind::Hiding, {0.5}, 25, 11, 2);
    CHECK(t1.discounted_total == t2.discounted_total);
    REQUIRE(t1.steps.size() == t2.steps.size());
    for (std::size_t t = 0; t < t1.steps.size(); ++t) {
        CHECK(t1.steps[t].flows[1] == t2.steps[t].flows[1]);
        CHECK(t1.steps[t].x[0] == t2.steps[t].x[0]);
    }
}

TEST_CASE("unvisited path beliefs follow the pure drift iteration") {
    auto cfg = basic_config();
    // E[c|0.6] = 6 > c0 + 1 and the drift limit 0.5 never re-attracts flow,
    // so with no exploration oracle nobody ever observes the path.
    auto tr = run_episode(cfg, MechanismKind::Sharing, {0.6}, 30, 5, 0, nullptr);
    double x = 0.6;
    for (const auto& rec : tr.steps) {
        CHECK(rec.flows[1] == 0.0);
        CHECK(rec.x[0] == doctest::Approx(x).epsilon(1e-14));
        x = 0.2 + 0.6 * x;
    }
}

TEST_CASE("degenerate chain makes every mechanism cost the same") {
    NetworkConfig cfg;
    cfg.det_path = PathModel::deterministic(3.0);
    cfg.stoch_paths.push_back(PathModel::stochastic(3.0, 3.0, 0.2, 0.8));
    cfg.rho = 0.9;
    cfg.validate();
    const double ref =
        run_episode(cfg, MechanismKind::SocialOptimum, {0.5}, 20, 3).discounted_total;
    for (auto mk : {MechanismKind::Sharing, MechanismKind::Hiding,
                    MechanismKind::DeterministicRecommendation, MechanismKind::Upr})
        CHECK(run_episode(cfg, mk, {0.5}, 20, 3).discounted_total ==
              doctest::Approx(ref).epsilon(1e-9));
}

TEST_CASE("singleton batch equals the episode total") {
    auto cfg = basic_config();
    auto b = run_batch(cfg, MechanismKind::Sharing, {0.5}, 20, 1, 9);
    auto tr = run_episode(cfg, MechanismKind::Sharing, {0.5}, 20, 9, 0, make_q_oracle(cfg));
    CHECK(b.mean == tr.discounted_total);
    CHECK(b.std_error == 0.0);
}

TEST_CASE("batch summary does not depend on the thread count") {
    auto cfg = basic_config();
    auto a = run_batch(cfg, MechanismKind::Upr, {0.5}, 15, 16, 4, 1);
    auto b = run_batch(cfg, MechanismKind::Upr, {0.5}, 15, 16, 4, 4);
    CHECK(a.mean == b.mean);
    CHECK(a.std_error == b.std_error);
}

TEST_CASE("standard error shrinks like the square root of the batch size") {
    auto cfg = basic_config();
    auto small = run_batch(cfg, MechanismKind::Sharing, {0.5}, 20, 50, 17);
    auto large = run_batch(cfg, MechanismKind::Sharing, {0.5}, 20, 200, 17);
    const double ratio = small.std_error / large.std_error;
    CHECK(ratio == doctest::Approx(2.0).epsilon(0.2));
}

TEST_CASE("disjoint seed ranges agree within sampling error") {
    auto cfg = basic_config();
    auto a = run_batch(cfg, MechanismKind::Hiding, {0.5}, 20, 200, 1);
    auto b = run_batch(cfg, MechanismKind::Hiding, {0.5}, 20, 200, 987654321);
    const double sigma = std::sqrt(a.std_error * a.std_error + b.std_error * b.std_error);
    CHECK(std::abs(a.mean - b.mean) <= 3.0 * sigma);
}

TEST_CASE("trace serialization replays to the exact discounted total") {
    auto cfg = basic_config();
    for (auto mk : {MechanismKind::Sharing, MechanismKind::Upr, MechanismKind::SocialOptimum}) {
        auto tr = run_episode(cfg, mk, {0.5}, 25, 13, 1);
        std::stringstream ss;
        write_trace(ss, tr);
        CHECK(replay_discounted_total(ss, cfg.rho) == tr.discounted_total);
    }
}

TEST_CASE("replay rejects malformed rows") {
    std::stringstream ss("0,1,garbage\n");
    CHECK_THROWS_AS(replay_discounted_total(ss, 0.9), ContractViolation);
}

TEST_CASE("unobserved chain visits the high state at its stationary rate") {
    const double q_lh = 0.2, q_hh = 0.8;
    const CounterRng rng{77, 0};
    bool high = rng.uniform(0, kStreamInitState) < 0.5;
    const int n = 100000;
    long hits = 0;
    for (int t = 0; t < n; ++t) {
        if (high) ++hits;
        const double q = high ? q_hh : q_lh;
        high = rng.uniform(static_cast<std::uint64_t>(t), kStreamChain) < q;
    }
    const double p = q_lh / (q_lh + 1.0 - q_hh);
    // Markov-chain CLT: var of the mean inflated by (1+r)/(1-r), r = q_hh - q_lh.
    const double r = q_hh - q_lh;
    const double sigma = std::sqrt(p * (1.0 - p) * (1.0 + r) / (1.0 - r) / n);
    CHECK(std::abs(static_cast<double>(hits) / n - p) <= 3.0 * sigma);
}
