#include "datamkt/simulator.hpp"

#include "datamkt/solver.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <cmath>

using namespace datamkt;
using datamkt::testing::bilinear_market;

TEST_CASE("sampled types stay in the support") {
    const TypeDistribution u = TypeDistribution::uniform(1.0, 10.0);
    const auto types = sample_population(u, 100000, 99);
    for (double t : types) {
        REQUIRE(t >= 1.0);
        REQUIRE(t <= 10.0);
    }
}

TEST_CASE("sample mean of the uniform population") {
    const TypeDistribution u = TypeDistribution::uniform(1.0, 10.0);
    const int n = 200000;
    const auto types = sample_population(u, n, 7);
    double sum = 0.0;
    for (double t : types)
        sum += t;
    const double mean = sum / n;
    const double sigma = std::sqrt(81.0 / 12.0); // uniform width 9
    CHECK(std::abs(mean - 5.5) <= 3.0 * sigma / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("a single draw is deterministic per seed") {
    const TypeDistribution u = TypeDistribution::uniform(1.0, 10.0);
    const auto a = sample_population(u, 1, 424242);
    const auto b = sample_population(u, 1, 424242);
    REQUIRE(a.size() == 1);
    CHECK(a[0] == b[0]);
    const auto c = sample_population(u, 1, 424243);
    CHECK(a[0] != c[0]); // different stream
}

TEST_CASE("welfare simulation reproduces the quadrature totals") {
    const MarketSpec spec = bilinear_market();
    const MechanismSolution solution = solve(spec, Objective::Welfare, 128);
    SimConfig cfg;
    cfg.n_sellers = 50000;
    cfg.n_buyers = 50000;
    cfg.seed = 20240817;
    const SimResult sim = simulate(spec, solution, cfg);

    CHECK(std::abs(sim.welfare_per_capita - 28.875) <= 3.0 * sim.welfare_std_err);
    CHECK(std::abs(sim.revenue_per_capita - 5.25) <= 3.0 * sim.revenue_std_err + 1e-6);
    // Complete matching: every agent is matched to the full opposite side.
    CHECK(sim.seller.total_matched_mass == doctest::Approx(1.0));
    CHECK(sim.buyer.total_matched_mass == doctest::Approx(1.0));
}

TEST_CASE("identical seeds reproduce identical results") {
    const MarketSpec spec = bilinear_market();
    const MechanismSolution solution = solve(spec, Objective::Revenue, 128);
    SimConfig cfg;
    cfg.n_sellers = 20000;
    cfg.n_buyers = 20000;
    cfg.seed = 5;
    const SimResult a = simulate(spec, solution, cfg);
    const SimResult b = simulate(spec, solution, cfg);
    CHECK(a.welfare_per_capita == b.welfare_per_capita);
    CHECK(a.revenue_per_capita == b.revenue_per_capita);
    REQUIRE(a.seller.agents.size() == b.seller.agents.size());
    for (std::size_t i = 0; i < a.seller.agents.size(); i += 997) {
        CHECK(a.seller.agents[i].type == b.seller.agents[i].type);
        CHECK(a.seller.agents[i].utility == b.seller.agents[i].utility);
        CHECK(a.seller.agents[i].payment == b.seller.agents[i].payment);
    }
}

TEST_CASE("matched masses agree across the two sides") {
    const MarketSpec spec = bilinear_market();
    const MechanismSolution solution = solve(spec, Objective::Revenue, 256);
    SimConfig cfg;
    cfg.n_sellers = 30000;
    cfg.n_buyers = 40000; // asymmetric populations
    cfg.seed = 11;
    const SimResult sim = simulate(spec, solution, cfg);
    // Each matched pair is counted once from each side, so the per-side mean
    // masses can only differ through the populations' sizes.
    const double seller_pairs =
        sim.seller.total_matched_mass * cfg.n_sellers * cfg.n_buyers;
    const double buyer_pairs =
        sim.buyer.total_matched_mass * cfg.n_buyers * cfg.n_sellers;
    CHECK(std::abs(seller_pairs - buyer_pairs) / (static_cast<double>(cfg.n_sellers) * cfg.n_buyers) <=
          1.0 / std::min(cfg.n_sellers, cfg.n_buyers));
    for (const AgentRecord& a : sim.seller.agents) {
        REQUIRE(a.matched_mass >= 0.0);
        REQUIRE(a.matched_mass <= 1.0);
    }
}

TEST_CASE("unmatched agents earn and pay nothing") {
    const MarketSpec spec = bilinear_market();
    const MechanismSolution solution = solve(spec, Objective::Revenue, 128);
    SimConfig cfg;
    cfg.n_sellers = 5000;
    cfg.n_buyers = 5000;
    cfg.seed = 23;
    const SimResult sim = simulate(spec, solution, cfg);
    const double delta_s = solution.rule.seller.threshold;
    for (const AgentRecord& a : sim.seller.agents) {
        if (a.type < delta_s) {
            CHECK(a.utility == 0.0);
            CHECK(a.payment == 0.0);
            CHECK(a.matched_mass == 0.0);
        }
    }
}

TEST_CASE("empty rule leaves everyone unmatched") {
    const MarketSpec spec = bilinear_market();
    MechanismSolution solution = solve(spec, Objective::Welfare, 64);
    for (Side s : {Side::Seller, Side::Buyer}) {
        CutoffCurve& c = solution.rule.side(s);
        c.threshold = 10.0;
        c.lambdas = {10.0};
        c.taus = {10.0};
        solution.payments.side(s).lambdas = {10.0};
        solution.payments.side(s).phis = {0.0};
    }
    SimConfig cfg;
    cfg.n_sellers = 1000;
    cfg.n_buyers = 1000;
    cfg.seed = 3;
    const SimResult sim = simulate(spec, solution, cfg);
    CHECK(sim.welfare_per_capita == 0.0);
    CHECK(sim.revenue_per_capita == 0.0);
}

TEST_CASE("empirical welfare tightens as the population grows") {
    const MarketSpec spec = bilinear_market();
    const MechanismSolution solution = solve(spec, Objective::Welfare, 128);
    const double target = solution.objective_value; // 28.875 by quadrature

    auto mean_abs_err = [&](int n) {
        double err = 0.0;
        for (std::uint64_t seed : {101u, 202u, 303u, 404u}) {
            SimConfig cfg;
            cfg.n_sellers = n;
            cfg.n_buyers = n;
            cfg.seed = seed;
            err += std::abs(simulate(spec, solution, cfg).welfare_per_capita - target);
        }
        return err / 4.0;
    };

    const double e3 = mean_abs_err(1000);
    const double e4 = mean_abs_err(10000);
    const double e5 = mean_abs_err(100000);
    // Monte-Carlo error shrinks roughly like 1/sqrt(n); the fixed seeds make
    // this deterministic on one platform.
    CHECK(e4 < e3);
    CHECK(e5 < e4);
    CHECK(e5 < 0.1);
}
