#include "datamkt/mechanism.hpp"

#include "helpers.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace datamkt;
using datamkt::testing::bilinear_market;
using datamkt::testing::linspace;

namespace {

// Complete matching: everyone matched down to the opponent bottom.
CutoffRule complete_rule(int n = 129) {
    CutoffRule rule;
    for (Side s : {Side::Seller, Side::Buyer}) {
        CutoffCurve& c = rule.side(s);
        c.threshold = 1.0;
        c.lambdas = linspace(1.0, 10.0, n);
        c.taus.assign(c.lambdas.size(), 1.0);
    }
    return rule;
}

// Revenue-optimal rule from the closed forms, built without the solver:
// tau_S(s) = (10 s - 5)/(4 s - 11) on [7/2, 10],
// tau_B(b) = (11 b - 5)/(4 b - 10) on [95/29, 10].
CutoffRule revenue_rule_closed_form(int n = 513) {
    CutoffRule rule;
    rule.seller.threshold = 3.5;
    rule.seller.lambdas = linspace(3.5, 10.0, n);
    rule.seller.taus.resize(rule.seller.lambdas.size());
    for (std::size_t i = 0; i < rule.seller.lambdas.size(); ++i) {
        const double s = rule.seller.lambdas[i];
        rule.seller.taus[i] = (10.0 * s - 5.0) / (4.0 * s - 11.0);
    }
    rule.buyer.threshold = 95.0 / 29.0;
    rule.buyer.lambdas = linspace(95.0 / 29.0, 10.0, n);
    rule.buyer.taus.resize(rule.buyer.lambdas.size());
    for (std::size_t i = 0; i < rule.buyer.lambdas.size(); ++i) {
        const double b = rule.buyer.lambdas[i];
        rule.buyer.taus[i] = (11.0 * b - 5.0) / (4.0 * b - 10.0);
    }
    return rule;
}

CutoffRule empty_rule() {
    CutoffRule rule;
    for (Side s : {Side::Seller, Side::Buyer}) {
        CutoffCurve& c = rule.side(s);
        c.threshold = 10.0;
        c.lambdas = {10.0};
        c.taus = {10.0};
    }
    return rule;
}

} // namespace

TEST_CASE("utility closed forms") {
    const MarketSpec spec = bilinear_market();
    // int_1^10 0.5*2*x/9 dx = 49.5/9 = 5.5
    CHECK(utility(spec, Side::Seller, 2.0, 1.0) == doctest::Approx(5.5).epsilon(1e-10));
    // int_1^10 0.5*2*(x-0.5)/9 dx = 5.0
    CHECK(utility(spec, Side::Buyer, 2.0, 1.0) == doctest::Approx(5.0).epsilon(1e-10));
    CHECK(utility(spec, Side::Seller, 2.0, 10.0) == 0.0);
}

TEST_CASE("marginal utility closed forms") {
    const MarketSpec spec = bilinear_market();
    // int_1^10 0.5*x/9 dx = 2.75, independent of the own type.
    CHECK(marginal_utility(spec, Side::Seller, 2.0, 1.0) == doctest::Approx(2.75).epsilon(1e-10));
    CHECK(marginal_utility(spec, Side::Seller, 8.0, 1.0) == doctest::Approx(2.75).epsilon(1e-10));
    CHECK(marginal_utility(spec, Side::Buyer, 4.0, 1.0) == doctest::Approx(2.5).epsilon(1e-10));
    CHECK(marginal_utility(spec, Side::Buyer, 4.0, 10.0) == 0.0);
}

TEST_CASE("information rent along the complete rule") {
    const MarketSpec spec = bilinear_market();
    const CutoffRule rule = complete_rule();
    CHECK(information_rent(spec, Side::Seller, rule, 3.0, 1.0) ==
          doctest::Approx(5.5).epsilon(1e-9)); // 2.75 * (3 - 1)
    CHECK(information_rent(spec, Side::Seller, rule, 4.0, 4.0) == 0.0);
    CHECK(information_rent(spec, Side::Buyer, rule, 10.0, 1.0) ==
          doctest::Approx(22.5).epsilon(1e-9)); // 2.5 * 9
}

TEST_CASE("per-match effect") {
    const MarketSpec spec = bilinear_market();
    CHECK(per_match_effect(spec, Side::Seller, 9.0) == doctest::Approx(1.0));
    CHECK(per_match_effect(spec, Side::Buyer, 9.0) == doctest::Approx(0.5));

    SideSpec seller{TypeDistribution::uniform(1.0, 10.0), Expr::parse("0*lam", ExprSignature{"lam"})};
    SideSpec buyer{TypeDistribution::uniform(1.0, 10.0), Expr::parse("lam", ExprSignature{"lam"})};
    DirectKernels kernels{Expr::parse("x", ExprSignature{"lam", "x"}),
                          Expr::parse("x", ExprSignature{"lam", "x"})};
    const MarketSpec zero_gamma(std::move(seller), std::move(buyer), std::move(kernels));
    CHECK(per_match_effect(zero_gamma, Side::Seller, 5.0) == 0.0);
}

TEST_CASE("direct marginal effect closed forms") {
    const MarketSpec spec = bilinear_market();
    // Welfare: R * f_opp * f_own = 0.5*2*3/81 = 1/27.
    CHECK(direct_marginal_effect(spec, Objective::Welfare, Side::Seller, 2.0, 3.0) ==
          doctest::Approx(1.0 / 27.0));
    // Revenue: the seller-side effect vanishes on the lam = 5 line.
    for (double x : {1.0, 4.0, 9.5})
        CHECK(std::abs(direct_marginal_effect(spec, Objective::Revenue, Side::Seller, 5.0, x)) <=
              5e-15);
    // (x/81)(lam - 5) away from it.
    CHECK(direct_marginal_effect(spec, Objective::Revenue, Side::Seller, 7.0, 3.0) ==
          doctest::Approx(3.0 * 2.0 / 81.0));
}

TEST_CASE("direct marginal effect vanishes with the opponent density") {
    SideSpec seller{TypeDistribution::uniform(1.0, 10.0), Expr::parse("lam", ExprSignature{"lam"})};
    SideSpec buyer{TypeDistribution::power(1.0, 10.0, 2.0), Expr::parse("lam", ExprSignature{"lam"})};
    DirectKernels kernels{Expr::parse("lam*x", ExprSignature{"lam", "x"}),
                          Expr::parse("lam*x", ExprSignature{"lam", "x"})};
    const MarketSpec spec(std::move(seller), std::move(buyer), std::move(kernels));
    // Buyer density vanishes at the bottom of its power-law support.
    CHECK(direct_marginal_effect(spec, Objective::Welfare, Side::Seller, 5.0, 1.0) == 0.0);
}

TEST_CASE("joint marginal effect calibration values") {
    const MarketSpec spec = bilinear_market();
    CHECK(joint_marginal_effect(spec, Objective::Welfare, 1.0, 1.0) ==
          doctest::Approx(0.75 / 81.0)); // > 0: everyone worth matching
    CHECK(joint_marginal_effect(spec, Objective::Revenue, 1.0, 1.0) ==
          doctest::Approx(-6.0 / 81.0));
    CHECK(std::abs(joint_marginal_effect(spec, Objective::Revenue, 5.0, 5.0)) <= 5e-15);
    // Signs at the inconsistent corner reported in the source material: only
    // the sign is pinned, and it is negative.
    CHECK(joint_marginal_effect(spec, Objective::Revenue, 1.0, 10.0) < 0.0);
    CHECK(joint_marginal_effect(spec, Objective::Revenue, 10.0, 1.0) < 0.0);
}

TEST_CASE("joint marginal effect is the sum of the two direct effects, bitwise") {
    const MarketSpec spec = bilinear_market();
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> type(1.0, 10.0);
    for (Objective obj : {Objective::Welfare, Objective::Revenue})
        for (int i = 0; i < 100; ++i) {
            const double s = type(rng), b = type(rng);
            CHECK(joint_marginal_effect(spec, obj, s, b) ==
                  direct_marginal_effect(spec, obj, Side::Seller, s, b) +
                      direct_marginal_effect(spec, obj, Side::Buyer, b, s));
        }
}

TEST_CASE("virtual surplus closed forms") {
    const MarketSpec spec = bilinear_market();
    CHECK(virtual_surplus(spec, Objective::Welfare, Side::Seller, 2.0, 1.0) ==
          doctest::Approx(5.5).epsilon(1e-10));
    // Top type: hazard complement zero, so the revenue surplus equals utility.
    CHECK(virtual_surplus(spec, Objective::Revenue, Side::Seller, 10.0, 1.0) ==
          doctest::Approx(27.5).epsilon(1e-10));
    // Bottom type: 2.75 - 2.75 * 9 = -22.
    CHECK(virtual_surplus(spec, Objective::Revenue, Side::Seller, 1.0, 1.0) ==
          doctest::Approx(-22.0).epsilon(1e-10));
}

TEST_CASE("welfare payments are the constant closed forms") {
    const MarketSpec spec = bilinear_market();
    const CutoffRule rule = complete_rule();
    for (double lam : {1.0, 2.5, 7.0, 10.0}) {
        CHECK(payment(spec, Side::Seller, rule, lam) == doctest::Approx(2.75).epsilon(1e-10));
        CHECK(payment(spec, Side::Buyer, rule, lam) == doctest::Approx(2.5).epsilon(1e-10));
    }
}

TEST_CASE("revenue payments vanish at the thresholds") {
    const MarketSpec spec = bilinear_market();
    const CutoffRule rule = revenue_rule_closed_form();
    CHECK(std::abs(payment(spec, Side::Seller, rule, 3.5)) <= 1e-9);
    CHECK(std::abs(payment(spec, Side::Buyer, rule, 95.0 / 29.0)) <= 1e-9);
    // Unmatched types pay nothing.
    CHECK(payment(spec, Side::Seller, rule, 2.0) == 0.0);
}

TEST_CASE("payment curve sampling agrees with the from-scratch construction") {
    const MarketSpec spec = bilinear_market();
    const CutoffRule rule = revenue_rule_closed_form(129);
    const PaymentCurve curve = build_payment_curve(spec, Side::Seller, rule);
    REQUIRE(curve.lambdas.size() == rule.seller.lambdas.size());
    for (std::size_t i = 0; i < curve.lambdas.size(); i += 16) {
        const double direct = payment(spec, Side::Seller, rule, curve.lambdas[i]);
        CHECK(curve.phis[i] == doctest::Approx(direct).epsilon(1e-8));
    }
}

TEST_CASE("payment_at anchors at samples and matches payment between them") {
    const MarketSpec spec = bilinear_market();
    const CutoffRule rule = revenue_rule_closed_form(129);
    const PaymentCurve curve = build_payment_curve(spec, Side::Seller, rule);
    // Exactly at a stored sample: the stored value.
    CHECK(payment_at(spec, Side::Seller, rule, curve, curve.lambdas[40]) == curve.phis[40]);
    // Between samples: the envelope continuation equals the full construction.
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> u(3.5, 10.0);
    for (int i = 0; i < 25; ++i) {
        const double lam = u(rng);
        CHECK(payment_at(spec, Side::Seller, rule, curve, lam) ==
              doctest::Approx(payment(spec, Side::Seller, rule, lam)).epsilon(1e-9));
    }
    CHECK(payment_at(spec, Side::Seller, rule, curve, 2.0) == 0.0);
}

TEST_CASE("objective values on the calibration market") {
    const MarketSpec spec = bilinear_market();
    const CutoffRule rule = complete_rule();
    PaymentSchedule payments;
    payments.seller = build_payment_curve(spec, Side::Seller, rule);
    payments.buyer = build_payment_curve(spec, Side::Buyer, rule);

    CHECK(objective_value(spec, Objective::Welfare, rule, payments) ==
          doctest::Approx(28.875).epsilon(1e-9)); // 5.25 * 5.5
    CHECK(objective_value(spec, Objective::Revenue, rule, payments) ==
          doctest::Approx(5.25).epsilon(1e-9)); // constant payments 2.75 + 2.5

    const CutoffRule nothing = empty_rule();
    PaymentSchedule no_payments;
    no_payments.seller = build_payment_curve(spec, Side::Seller, nothing);
    no_payments.buyer = build_payment_curve(spec, Side::Buyer, nothing);
    CHECK(objective_value(spec, Objective::Welfare, nothing, no_payments) == 0.0);
    CHECK(objective_value(spec, Objective::Revenue, nothing, no_payments) == 0.0);
}

TEST_CASE("revenue identity: payments route equals virtual-surplus route") {
    const MarketSpec spec = bilinear_market();
    for (const CutoffRule& rule : {complete_rule(), revenue_rule_closed_form(257)}) {
        PaymentSchedule payments;
        payments.seller = build_payment_curve(spec, Side::Seller, rule);
        payments.buyer = build_payment_curve(spec, Side::Buyer, rule);
        const double by_payments = revenue_by_payments(spec, rule, payments);
        const double by_virtual = revenue_by_virtual_surplus(spec, rule);
        CHECK(std::abs(by_payments - by_virtual) <= 1e-6);
    }
}

TEST_CASE("utility is monotone in its arguments on the calibration market") {
    const MarketSpec spec = bilinear_market();
    for (Side s : {Side::Seller, Side::Buyer}) {
        // Non-increasing in the matched-set cut: shrinking the set cannot help.
        const auto in_t = monotone_scan(
            [&](double t) { return utility(spec, s, 4.0, t); }, 1.0, 10.0, 32,
            ScanDirection::NonIncreasing);
        CHECK(in_t.pass);
        // Non-decreasing in the own type.
        const auto in_lambda = monotone_scan(
            [&](double lam) { return -utility(spec, s, lam, 1.0); }, 1.0, 10.0, 32,
            ScanDirection::NonIncreasing);
        CHECK(in_lambda.pass);
    }
}

TEST_CASE("payoff derivative matches the marginal utility along the rule") {
    const MarketSpec spec = bilinear_market();
    const CutoffRule rule = revenue_rule_closed_form(257);
    const PaymentCurve curve = build_payment_curve(spec, Side::Seller, rule);
    Tolerances tight;
    tight.quad_abs = tight.quad_rel = 1e-12;
    for (double lam : {4.0, 5.5, 7.0, 9.0}) {
        const double h = 1e-4;
        auto payoff = [&](double v) {
            return utility(spec, Side::Seller, v, rule.seller.tau_at(v), tight) -
                   payment_at(spec, Side::Seller, rule, curve, v, tight);
        };
        const double fd = (payoff(lam + h) - payoff(lam - h)) / (2.0 * h);
        const double expected =
            marginal_utility(spec, Side::Seller, lam, rule.seller.tau_at(lam), tight);
        CHECK(std::abs(fd - expected) <= 1e-4 * std::max(1.0, std::abs(expected)));
    }
}

TEST_CASE("cutoff curve interpolation and inversion") {
    CutoffCurve c;
    c.threshold = 1.0;
    c.lambdas = {1.0, 2.0, 3.0, 4.0};
    c.taus = {8.0, 6.0, 6.0, 2.0};
    CHECK(c.tau_at(1.5) == doctest::Approx(7.0));
    CHECK(c.tau_at(0.5) == 8.0);  // clamped below
    CHECK(c.tau_at(9.0) == 2.0);  // clamped above
    CHECK(c.inverse_tau(8.0) == doctest::Approx(1.0));
    CHECK(c.inverse_tau(7.0) == doctest::Approx(1.5));
    CHECK(c.inverse_tau(6.0) == doctest::Approx(2.0)); // first lambda reaching 6
    CHECK(c.inverse_tau(4.0) == doctest::Approx(3.5));
    CHECK(c.inverse_tau(2.0) == doctest::Approx(4.0));
    CHECK(std::isinf(c.inverse_tau(1.0)));
    CHECK(c.inverse_tau(9.0) == 1.0); // cut already below everywhere
}
