#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "routing/poa.hpp"

using namespace routing;

TEST_CASE("learning horizon") {
    CHECK(learning_horizon(0.99, 1e-3) == 688.0);
    CHECK(learning_horizon(0.5, 0.5) == 1.0);
    CHECK_THROWS_AS(learning_horizon(1.0, 1e-3), ContractViolation);
    CHECK_THROWS_AS(learning_horizon(0.9, 0.0), ContractViolation);
}

TEST_CASE("inefficiency bounds collapse to one without a future or a hazard") {
    PoaBoundParams p;
    p.n_paths = 1;
    p.rho = 1e-9;
    p.prod_x0 = 0.5;
    p.q_hh = 0.99;
    p.delta = 1e-3;
    CHECK(sharing_poa_bound(p) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(hiding_poa_bound(p) == doctest::Approx(1.0).epsilon(1e-6));
    p.rho = 0.9;
    p.prod_x0 = 0.0;
    CHECK(sharing_poa_bound(p) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("formula value at the reference point") {
    PoaBoundParams p;
    p.n_paths = 1;
    p.rho = 0.9;
    p.prod_x0 = 0.5;
    p.q_hh = 0.99;
    p.delta = 1e-3;  // k = 688
    const double denom = 1.0 - 0.9 + (0.9 - std::pow(0.9, 688.0)) * 0.5;
    CHECK(sharing_poa_bound(p) == doctest::Approx((1.0 - 0.9 + 0.9 * 0.5) / denom).epsilon(1e-12));
    CHECK(sharing_poa_bound(p) >= 1.0);
}

TEST_CASE("hiding bound dominates the sharing bound across a grid") {
    PoaBoundParams p;
    p.q_hh = 0.97;
    p.delta = 1e-3;
    for (std::size_t n : {std::size_t{1}, std::size_t{2}, std::size_t{5}})
        for (double rho : {0.1, 0.5, 0.9, 0.99})
            for (double prod : {0.01, 0.3, 0.7, 0.99}) {
                p.n_paths = n;
                p.rho = rho;
                p.prod_x0 = prod;
                const double s = sharing_poa_bound(p);
                const double h = hiding_poa_bound(p);
                CHECK(s >= 1.0 - 1e-12);
                CHECK(h >= s - 1e-12);
            }
}

TEST_CASE("hiding bound approaches 1 + rho with many paths and a vanishing hazard product") {
    PoaBoundParams p;
    p.n_paths = 1000000;
    p.rho = 0.9;
    p.prod_x0 = 1e-9;
    p.q_hh = 0.99;
    p.delta = 1e-3;
    CHECK(hiding_poa_bound(p) == doctest::Approx(1.9).epsilon(1e-4));
}

TEST_CASE("recommendation mechanism inefficiency values") {
    CHECK(upr_poa_value(1) == doctest::Approx(8.0 / 7.0).epsilon(1e-15));
    CHECK(upr_poa_value(2) == doctest::Approx(12.0 / 11.0).epsilon(1e-15));
    CHECK(upr_poa_value(1000000) == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("adversarial planner scenario routes 1/N selfish flow per path at the start") {
    for (std::size_t n : {std::size_t{1}, std::size_t{2}}) {
        auto sc = worst_case_scenario(ScenarioKind::Prop3, 0.5, n);
        auto eq = sharing_flow_general(sc.cfg, sc.x0, nullptr);
        for (std::size_t i = 1; i <= n; ++i)
            CHECK(eq.flows[i] == doctest::Approx(1.0 / static_cast<double>(n)).epsilon(1e-6));
    }
}

TEST_CASE("scenario bounds grow with the dial and hiding stays above sharing") {
    double prev_s = 0.0;
    for (double dial : {0.1, 0.5, 0.9}) {
        auto s1 = worst_case_scenario(ScenarioKind::Prop1, dial, 1);
        auto s2 = worst_case_scenario(ScenarioKind::Prop2, dial, 1);
        const double bs = sharing_poa_bound(s1.bound_params());
        const double bh = hiding_poa_bound(s2.bound_params());
        CHECK(bs > prev_s);
        CHECK(bh >= bs - 1e-12);
        prev_s = bs;
    }
}

TEST_CASE("scenario horizon covers the discount tail") {
    auto sc = worst_case_scenario(ScenarioKind::Prop3, 0.5, 1);
    CHECK(sc.suggested_horizon() == static_cast<int>(std::ceil(5.0 / (1.0 - sc.cfg.rho))));
}

TEST_CASE("self-ratio of the optimum is one") {
    NetworkConfig cfg;
    cfg.det_path = PathModel::deterministic(3.0);
    cfg.stoch_paths.push_back(PathModel::stochastic(0.0, 10.0, 0.2, 0.8));
    cfg.rho = 0.9;
    cfg.validate();
    auto e = poa_estimate(cfg, MechanismKind::SocialOptimum, {0.5}, 20, 10, 3);
    CHECK(e.ratio == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("report csv carries the documented header") {
    std::stringstream ss;
    write_poa_report_csv(ss, {{"prop3", 0.5, 1, "upr", 8.0 / 7.0, 8.0 / 7.0, 0.0}});
    std::string header;
    std::getline(ss, header);
    CHECK(header == "scenario,dial,n_paths,mechanism,empirical_ratio,bound,gap");
    std::string row;
    std::getline(ss, row);
    CHECK(row.substr(0, 15) == "prop3,0.5,1,upr");
}
