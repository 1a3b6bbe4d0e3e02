#include "datamkt/mechanism.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace datamkt {

std::size_t CutoffCurve::segment_index(double lambda) const {
    // Index i with lambdas[i] <= lambda <= lambdas[i+1] (clamped).
    const auto it = std::upper_bound(lambdas.begin(), lambdas.end(), lambda);
    if (it == lambdas.begin())
        return 0;
    std::size_t i = static_cast<std::size_t>(it - lambdas.begin()) - 1;
    if (i + 1 >= lambdas.size())
        i = lambdas.size() >= 2 ? lambdas.size() - 2 : 0;
    return i;
}

double CutoffCurve::tau_at(double lambda) const {
    if (lambdas.empty())
        throw std::logic_error("CutoffCurve::tau_at: empty curve");
    if (lambda <= lambdas.front())
        return taus.front();
    if (lambda >= lambdas.back())
        return taus.back();
    const std::size_t i = segment_index(lambda);
    const double h = lambdas[i + 1] - lambdas[i];
    if (h == 0.0)
        return taus[i];
    const double w = (lambda - lambdas[i]) / h;
    return taus[i] + w * (taus[i + 1] - taus[i]);
}

double CutoffCurve::inverse_tau(double y) const {
    if (lambdas.empty())
        throw std::logic_error("CutoffCurve::inverse_tau: empty curve");
    // tau is non-increasing; find the first lambda where it drops to <= y.
    if (taus.front() <= y)
        return lambdas.front();
    if (taus.back() > y)
        return std::numeric_limits<double>::infinity();
    std::size_t lo = 0, hi = taus.size() - 1; // taus[lo] > y >= taus[hi]
    while (hi - lo > 1) {
        const std::size_t mid = (lo + hi) / 2;
        if (taus[mid] <= y)
            hi = mid;
        else
            lo = mid;
    }
    const double dt = taus[hi] - taus[lo];
    if (dt == 0.0)
        return lambdas[hi];
    const double w = (y - taus[lo]) / dt;
    return lambdas[lo] + w * (lambdas[hi] - lambdas[lo]);
}

double PaymentCurve::phi_linear(double lambda) const {
    if (lambdas.empty())
        return 0.0;
    if (lambda <= lambdas.front())
        return phis.front();
    if (lambda >= lambdas.back())
        return phis.back();
    const auto it = std::upper_bound(lambdas.begin(), lambdas.end(), lambda);
    const std::size_t i = static_cast<std::size_t>(it - lambdas.begin()) - 1;
    const double h = lambdas[i + 1] - lambdas[i];
    if (h == 0.0)
        return phis[i];
    const double w = (lambda - lambdas[i]) / h;
    return phis[i] + w * (phis[i + 1] - phis[i]);
}

double utility(const MarketSpec& spec, Side s, double lambda, double t, const Tolerances& tol) {
    const TypeDistribution& opp = spec.dist(opposite(s));
    if (t >= opp.hi())
        return 0.0;
    return integrate(
        [&](double x) { return spec.reward_kernel(s, lambda, x) * opp.density(x); }, t, opp.hi(),
        tol);
}

double marginal_utility(const MarketSpec& spec, Side s, double lambda, double t,
                        const Tolerances& tol) {
    const TypeDistribution& opp = spec.dist(opposite(s));
    if (t >= opp.hi())
        return 0.0;
    return integrate(
        [&](double x) { return spec.reward_kernel_dlam(s, lambda, x) * opp.density(x); }, t,
        opp.hi(), tol);
}

namespace {

// Integrates g over [a, b] splitting at the rule's sample nodes, so each
// adaptive call sees a smooth integrand despite the piecewise-linear tau.
template <typename G>
double integrate_along_rule(const CutoffCurve& curve, double a, double b, const Tolerances& tol,
                            G&& g) {
    if (a == b)
        return 0.0;
    double total = 0.0;
    double from = a;
    for (std::size_t i = 0; i + 1 < curve.lambdas.size() && from < b; ++i) {
        const double node = curve.lambdas[i + 1];
        if (node <= from)
            continue;
        const double to = std::min(node, b);
        total += integrate(g, from, to, tol);
        from = to;
    }
    if (from < b)
        total += integrate(g, from, b, tol);
    return total;
}

} // namespace

double information_rent(const MarketSpec& spec, Side s, const CutoffRule& rule, double lambda,
                        double base, const Tolerances& tol) {
    const CutoffCurve& curve = rule.side(s);
    return integrate_along_rule(curve, base, lambda, tol, [&](double x) {
        return marginal_utility(spec, s, x, curve.tau_at(x), tol);
    });
}

double per_match_effect(const MarketSpec& spec, Side s, double lambda) {
    return spec.gamma(s, lambda) * spec.dist(s).density(lambda);
}

double direct_marginal_effect(const MarketSpec& spec, Objective obj, Side s, double lambda,
                              double x) {
    const double f_own = spec.dist(s).density(lambda);
    const double f_opp = spec.dist(opposite(s)).density(x);
    const double reward = spec.reward_kernel(s, lambda, x);
    if (obj == Objective::Welfare)
        return reward * f_opp * f_own;
    const double survivor = 1.0 - spec.dist(s).cdf(lambda);
    return f_opp * (reward * f_own - survivor * spec.reward_kernel_dlam(s, lambda, x));
}

double joint_marginal_effect(const MarketSpec& spec, Objective obj, double lambda_seller,
                             double lambda_buyer) {
    return direct_marginal_effect(spec, obj, Side::Seller, lambda_seller, lambda_buyer) +
           direct_marginal_effect(spec, obj, Side::Buyer, lambda_buyer, lambda_seller);
}

double virtual_surplus(const MarketSpec& spec, Objective obj, Side s, double lambda, double t,
                       const Tolerances& tol) {
    const double u = utility(spec, s, lambda, t, tol);
    if (obj == Objective::Welfare)
        return u;
    return u - marginal_utility(spec, s, lambda, t, tol) * spec.dist(s).hazard_complement(lambda);
}

double payment(const MarketSpec& spec, Side s, const CutoffRule& rule, double lambda,
               const Tolerances& tol) {
    const CutoffCurve& curve = rule.side(s);
    if (!curve.matched(lambda))
        return 0.0;
    const double u = utility(spec, s, lambda, curve.tau_at(lambda), tol);
    const double rent = information_rent(spec, s, rule, lambda, curve.threshold, tol);
    return u - rent; // baseline payoff of the lowest matched type is zero
}

PaymentCurve build_payment_curve(const MarketSpec& spec, Side s, const CutoffRule& rule,
                                 const Tolerances& tol) {
    const CutoffCurve& curve = rule.side(s);
    PaymentCurve out;
    out.lambdas = curve.lambdas;
    out.phis.resize(out.lambdas.size());
    double rent = 0.0;
    for (std::size_t i = 0; i < out.lambdas.size(); ++i) {
        if (i > 0) {
            rent += integrate(
                [&](double x) { return marginal_utility(spec, s, x, curve.tau_at(x), tol); },
                out.lambdas[i - 1], out.lambdas[i], tol);
        }
        out.phis[i] = utility(spec, s, out.lambdas[i], curve.taus[i], tol) - rent;
    }
    return out;
}

namespace {

// Envelope continuation from stored sample j: the same utility-minus-rent
// construction as `payment`, restarted at the sample's published value.
double continued_payment(const MarketSpec& spec, Side s, const CutoffRule& rule,
                         const PaymentCurve& curve, std::size_t j, double anchor_u, double lambda,
                         const Tolerances& tol) {
    const CutoffCurve& rule_curve = rule.side(s);
    const double anchor_lambda = curve.lambdas[j];
    if (lambda == anchor_lambda)
        return curve.phis[j];
    const double u = utility(spec, s, lambda, rule_curve.tau_at(lambda), tol);
    const double rent = integrate_along_rule(
        rule_curve, std::min(anchor_lambda, lambda), std::max(anchor_lambda, lambda), tol,
        [&](double x) { return marginal_utility(spec, s, x, rule_curve.tau_at(x), tol); });
    const double signed_rent = lambda > anchor_lambda ? rent : -rent;
    return curve.phis[j] + (u - anchor_u) - signed_rent;
}

} // namespace

double payment_at(const MarketSpec& spec, Side s, const CutoffRule& rule,
                  const PaymentCurve& curve, double lambda, const Tolerances& tol) {
    const CutoffCurve& rule_curve = rule.side(s);
    if (!rule_curve.matched(lambda) || curve.lambdas.empty())
        return 0.0;
    // Nearest stored sample at or below lambda (the last sample for the top).
    const auto it = std::upper_bound(curve.lambdas.begin(), curve.lambdas.end(), lambda);
    const std::size_t j = it == curve.lambdas.begin()
                              ? 0
                              : static_cast<std::size_t>(it - curve.lambdas.begin()) - 1;
    if (lambda == curve.lambdas[j])
        return curve.phis[j];
    const double anchor_u =
        utility(spec, s, curve.lambdas[j], rule_curve.tau_at(curve.lambdas[j]), tol);
    return continued_payment(spec, s, rule, curve, j, anchor_u, lambda, tol);
}

double welfare_value(const MarketSpec& spec, const CutoffRule& rule, const Tolerances& tol) {
    double total = 0.0;
    for (Side s : {Side::Seller, Side::Buyer}) {
        const CutoffCurve& curve = rule.side(s);
        const TypeDistribution& own = spec.dist(s);
        if (curve.threshold >= own.hi())
            continue;
        total += integrate_along_rule(curve, curve.threshold, own.hi(), tol, [&](double x) {
            return utility(spec, s, x, curve.tau_at(x), tol) * own.density(x);
        });
    }
    return total;
}

double revenue_by_payments(const MarketSpec& spec, const CutoffRule& rule,
                           const PaymentSchedule& payments, const Tolerances& tol) {
    double total = 0.0;
    for (Side s : {Side::Seller, Side::Buyer}) {
        const CutoffCurve& rule_curve = rule.side(s);
        const TypeDistribution& own = spec.dist(s);
        if (rule_curve.threshold >= own.hi())
            continue;
        const PaymentCurve& schedule = payments.side(s);
        if (schedule.lambdas.empty())
            continue;
        // Integrate segment by segment with the anchor pinned to the left
        // sample. A schedule whose samples disagree with the continuation is
        // discontinuous exactly at the samples, and a pointwise evaluation
        // would make the adaptive quadrature chase those jumps forever.
        const double hi = own.hi();
        for (std::size_t j = 0; j < schedule.lambdas.size(); ++j) {
            const double from = std::max(schedule.lambdas[j], rule_curve.threshold);
            const double to = j + 1 < schedule.lambdas.size()
                                  ? std::min(schedule.lambdas[j + 1], hi)
                                  : hi;
            if (from >= to)
                continue;
            const double anchor_u =
                utility(spec, s, schedule.lambdas[j], rule_curve.tau_at(schedule.lambdas[j]), tol);
            total += integrate_along_rule(rule_curve, from, to, tol, [&](double x) {
                return continued_payment(spec, s, rule, schedule, j, anchor_u, x, tol) *
                       own.density(x);
            });
        }
    }
    return total;
}

double revenue_by_virtual_surplus(const MarketSpec& spec, const CutoffRule& rule,
                                  const Tolerances& tol) {
    double total = 0.0;
    for (Side s : {Side::Seller, Side::Buyer}) {
        const CutoffCurve& curve = rule.side(s);
        const TypeDistribution& own = spec.dist(s);
        if (curve.threshold >= own.hi())
            continue;
        // Integrand written as u*f - D*(1-F): identical to the virtual
        // surplus times the density, but defined even where f vanishes.
        total += integrate_along_rule(curve, curve.threshold, own.hi(), tol, [&](double x) {
            const double t = curve.tau_at(x);
            return utility(spec, s, x, t, tol) * own.density(x) -
                   marginal_utility(spec, s, x, t, tol) * (1.0 - own.cdf(x));
        });
    }
    return total;
}

double objective_value(const MarketSpec& spec, Objective obj, const CutoffRule& rule,
                       const PaymentSchedule& payments, const Tolerances& tol) {
    return obj == Objective::Welfare ? welfare_value(spec, rule, tol)
                                     : revenue_by_payments(spec, rule, payments, tol);
}

} // namespace datamkt
