#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>

#include "routing/equilibrium.hpp"

using namespace routing;

namespace {

std::uint64_t splitmix(std::uint64_t& s) {
    std::uint64_t z = (s += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

double unif(std::uint64_t& s) { return static_cast<double>(splitmix(s) >> 11) * 0x1.0p-53; }

NetworkConfig random_config(std::uint64_t& s, std::size_t n_paths) {
    NetworkConfig cfg;
    cfg.det_path = PathModel::deterministic(0.5 + 5.0 * unif(s));
    for (std::size_t i = 0; i < n_paths; ++i) {
        const double c_low = 4.0 * unif(s);
        const double c_high = c_low + 0.5 + 8.0 * unif(s);
        const double q_lh = 0.01 + 0.48 * unif(s);
        const double q_hh = 0.51 + 0.48 * unif(s);
        cfg.stoch_paths.push_back(PathModel::stochastic(c_low, c_high, q_lh, q_hh));
    }
    cfg.epsilon = 1e-3;
    cfg.validate();
    return cfg;
}

std::vector<double> random_beliefs(std::uint64_t& s, const NetworkConfig& cfg) {
    std::vector<double> x;
    for (std::size_t i = 1; i <= cfg.num_stochastic(); ++i) {
        const auto& p = cfg.stoch(i);
        x.push_back(p.q_lh + (p.q_hh - p.q_lh) * unif(s));
    }
    return x;
}

// Cost of path p at the given flows: expected internal cost plus congestion.
double path_cost(const NetworkConfig& cfg, const std::vector<double>& x, const FlowAllocation& f,
                 std::size_t p) {
    const double base = p == 0 ? cfg.c0() : expected_internal_cost(cfg.stoch(p), x[p - 1]);
    return base + cfg.coeff(p) * f[p];
}

// Largest cost reduction any delta of flow can get by switching paths.
double max_deviation_gain(const NetworkConfig& cfg, const std::vector<double>& x,
                          const EquilibriumResult& eq, double delta) {
    double gain = 0.0;
    for (std::size_t from = 0; from < cfg.num_paths(); ++from) {
        if (eq.flows[from] < delta) continue;
        if (from > 0 && eq.exploration_flags[from]) continue;  // pinned exploration flow
        for (std::size_t to = 0; to < cfg.num_paths(); ++to) {
            if (to == from) continue;
            const double before = path_cost(cfg, x, eq.flows, from);
            FlowAllocation moved = eq.flows;
            moved[from] -= delta;
            moved[to] += delta;
            const double after = path_cost(cfg, x, moved, to);
            gain = std::max(gain, before - after);
        }
    }
    return gain;
}

const PathQOracle kNever = nullptr;

}  // namespace

TEST_CASE("two-path sharing equilibrium cases") {
    NetworkConfig cfg;
    cfg.det_path = PathModel::deterministic(3.0);
    cfg.stoch_paths.push_back(PathModel::stochastic(2.0, 6.0, 0.2, 0.8));
    cfg.validate();

    // E[c_1 | 0.25] = 3 = c0: symmetric split.
    auto eq = sharing_flow_two_path(cfg, 0.25, kNever);
    CHECK(eq.flows[1] == doctest::Approx(0.5).epsilon(1e-12));

    // E = 1.5 <= c0 - 1: everyone on the stochastic path.
    NetworkConfig cheap = cfg;
    cheap.stoch_paths[0] = PathModel::stochastic(0.0, 6.0, 0.25, 0.75);
    auto eq2 = sharing_flow_two_path(cheap, 0.25, kNever);
    CHECK(eq2.flows[1] == doctest::Approx(1.0));

    // E = 4.5 > c0 + 1 with an exploration-positive oracle: epsilon flow.
    PathQOracle always = [](const std::vector<double>&, std::size_t) { return true; };
    auto eq3 = sharing_flow_two_path(cfg, 0.75, always);
    CHECK(eq3.flows[1] == doctest::Approx(cfg.epsilon));
    CHECK(eq3.exploration_flags[1]);
    auto eq4 = sharing_flow_two_path(cfg, 0.75, kNever);
    CHECK(eq4.flows[1] == 0.0);
}

TEST_CASE("general sharing equilibrium equalizes used paths") {
    NetworkConfig cfg;
    cfg.det_path = PathModel::deterministic(3.0);
    cfg.stoch_paths.push_back(PathModel::stochastic(2.0, 6.0, 0.2, 0.8));
    cfg.stoch_paths.push_back(PathModel::stochastic(2.0, 6.0, 0.2, 0.8));
    cfg.validate();

    auto eq = sharing_flow_general(cfg, {0.25, 0.25}, kNever);
    CHECK(eq.flows[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(eq.flows[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(eq.flows[2] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

    NetworkConfig cfg2 = cfg;
    cfg2.stoch_paths[1] = PathModel::stochastic(0.0, 200.0, 0.2, 0.8);
    auto eq2 = sharing_flow_general(cfg2, {0.25, 0.5}, kNever);  // path 2 at E = 100
    CHECK(eq2.flows[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(eq2.flows[1] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(eq2.flows[2] == 0.0);
}

TEST_CASE("general solver matches the two-path closed form on N=1") {
    std::uint64_t s = 7;
    for (int trial = 0; trial < 1000; ++trial) {
        auto cfg = random_config(s, 1);
        auto x = random_beliefs(s, cfg);
        auto a = sharing_flow_two_path(cfg, x[0], kNever);
        auto b = sharing_flow_general(cfg, x, kNever);
        for (std::size_t p = 0; p < 2; ++p) CHECK(std::abs(a.flows[p] - b.flows[p]) < 1e-10);
    }
}

TEST_CASE("no profitable deviation at the sharing equilibrium") {
    std::uint64_t s = 99;
    const double delta = 1e-4;
    double worst = 0.0;
    for (int trial = 0; trial < 300; ++trial) {
        auto cfg = random_config(s, 1 + trial % 3);
        auto x = random_beliefs(s, cfg);
        auto eq = sharing_flow_general(cfg, x, kNever);
        worst = std::max(worst, max_deviation_gain(cfg, x, eq, delta));
    }
    CHECK(worst < 1e-8);
}

TEST_CASE("hiding flows combine age classes per the disclosed flow") {
    NetworkConfig cfg;
    cfg.det_path = PathModel::deterministic(3.0);
    cfg.stoch_paths.push_back(PathModel::stochastic(2.0, 6.0, 0.2, 0.8));
    cfg.validate();

    PrivateBeliefProfile prof = PrivateBeliefProfile::initial({0.25});
    prof.y1 = {0.25};  // f^s(y1) = 0.5
    prof.y2 = {0.25};  // f^s(y2) = 0.5
    FlowAllocation prev = FlowAllocation::zeros(2);
    prev[0] = 0.7;
    prev[1] = 0.3;
    auto h = hiding_flows(cfg, prof, prev);
    CHECK(h.age2[0] == doctest::Approx(0.35).epsilon(1e-12));  // (1 - 0.3) * 0.5
    CHECK(h.age1[0] == doctest::Approx(0.15).epsilon(1e-12));
    CHECK(h.total[1] == doctest::Approx(0.5).epsilon(1e-12));

    prev[1] = 0.0;  // no age-1 users exist
    prev[0] = 1.0;
    auto h2 = hiding_flows(cfg, prof, prev);
    CHECK(h2.age1[0] == 0.0);
}

TEST_CASE("two-path social optimum cases") {
    NetworkConfig cfg;
    cfg.det_path = PathModel::deterministic(3.0);
    cfg.stoch_paths.push_back(PathModel::stochastic(2.0, 6.0, 0.2, 0.8));
    cfg.validate();

    auto f = social_optimal_flow_two_path(cfg, 0.25);  // E = 3 = c0
    CHECK(f[1] == doctest::Approx(0.5).epsilon(1e-12));

    auto g = social_optimal_flow_two_path(cfg, 1.0);  // E = 6 >= c0 + 2
    CHECK(g[1] == doctest::Approx(cfg.epsilon));

    NetworkConfig rich = cfg;
    rich.det_path = PathModel::deterministic(5.0);
    auto h = social_optimal_flow_two_path(rich, 0.0);  // E = 2 <= c0 - 2
    CHECK(h[1] == doctest::Approx(1.0));
}

TEST_CASE("general social optimum matches the closed form on N=1") {
    std::uint64_t s = 21;
    for (int trial = 0; trial < 1000; ++trial) {
        auto cfg = random_config(s, 1);
        auto x = random_beliefs(s, cfg);
        auto a = social_optimal_flow_two_path(cfg, x[0]);
        auto b = social_optimal_flow_general(cfg, x);
        for (std::size_t p = 0; p < 2; ++p) CHECK(std::abs(a[p] - b[p]) < 1e-10);
    }
}

TEST_CASE("symmetric social optimum splits evenly") {
    NetworkConfig cfg;
    cfg.det_path = PathModel::deterministic(3.0);
    cfg.stoch_paths.push_back(PathModel::stochastic(2.0, 6.0, 0.2, 0.8));
    cfg.stoch_paths.push_back(PathModel::stochastic(2.0, 6.0, 0.2, 0.8));
    cfg.validate();
    auto f = social_optimal_flow_general(cfg, {0.25, 0.25});
    CHECK(f[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
    CHECK(f[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
}

TEST_CASE("planner keeps 1/(2(N+1)) on the deterministic path in the good regime") {
    for (std::size_t n : {1u, 2u, 4u}) {
        NetworkConfig cfg;
        cfg.det_path = PathModel::deterministic(1.0 / static_cast<double>(n));
        const double q_lh = 1e-9;
        for (std::size_t i = 0; i < n; ++i)
            cfg.stoch_paths.push_back(
                PathModel::stochastic(0.0, cfg.c0() + 2.0, q_lh, 0.6));
        cfg.epsilon = 1e-6;
        cfg.validate();
        std::vector<double> x(n, q_lh);
        auto f = social_optimal_flow_general(cfg, x);
        CHECK(f[0] == doctest::Approx(1.0 / (2.0 * (n + 1.0))).epsilon(1e-6));
    }
}

TEST_CASE("maximum exploit flow") {
    NetworkConfig cfg;
    cfg.det_path = PathModel::deterministic(3.0);
    // E[c|q_lh] = 2.4: c0 + 1 - E = 1.6.
    cfg.stoch_paths.push_back(PathModel::stochastic(2.0, 4.0, 0.2, 0.8));
    cfg.validate();
    CHECK(max_exploit_flow(cfg, 1, 1) == doctest::Approx(0.8).epsilon(1e-12));

    NetworkConfig cfg2;
    cfg2.det_path = PathModel::deterministic(3.0);
    // E[c|q_lh] = 1: c0 + 1 - E = 3; n = 2 caps at mass/n = 0.5.
    cfg2.stoch_paths.push_back(PathModel::stochastic(0.8, 1.8, 0.2, 0.8));
    cfg2.stoch_paths.push_back(PathModel::stochastic(0.8, 1.8, 0.2, 0.8));
    cfg2.validate();
    CHECK(max_exploit_flow(cfg2, 2, 1) == doctest::Approx(0.5).epsilon(1e-12));

    NetworkConfig cfg3;
    cfg3.det_path = PathModel::deterministic(3.0);
    // E[c|q_lh] = 2: both branches equal 1.
    cfg3.stoch_paths.push_back(PathModel::stochastic(1.75, 3.0, 0.2, 0.8));
    cfg3.validate();
    CHECK(max_exploit_flow(cfg3, 1, 1) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("water-filling common cost on symmetric links") {
    // Two identical links a + f: half the mass each, cost a + mass/2.
    CHECK(waterfill_common_cost({3.0, 3.0}, {1.0, 1.0}, 1.0) == doctest::Approx(3.5));
    // Expensive second link stays unused.
    CHECK(waterfill_common_cost({1.0, 10.0}, {1.0, 1.0}, 1.0) == doctest::Approx(2.0));
}
