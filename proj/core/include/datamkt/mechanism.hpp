#pragma once

#include "datamkt/market.hpp"
#include "datamkt/numerics.hpp"

#include <array>
#include <optional>
#include <vector>

namespace datamkt {

enum class Objective { Welfare, Revenue };

constexpr const char* objective_name(Objective o) {
    return o == Objective::Welfare ? "welfare" : "revenue";
}

/// One side's cut-off rule: types below `threshold` are unmatched; a type
/// lambda >= threshold is matched to every opponent type in
/// [tau(lambda), top of opponent support]. tau is stored as samples at
/// ascending lambdas covering [threshold, top of own support] and evaluated
/// between samples by linear interpolation.
struct CutoffCurve {
    double threshold = 0.0;
    std::vector<double> lambdas;
    std::vector<double> taus;

    bool matched(double lambda) const { return lambda >= threshold; }
    std::size_t segment_index(double lambda) const;
    double tau_at(double lambda) const;
    /// inf{lambda : tau(lambda) <= y}, +inf when tau stays above y.
    double inverse_tau(double y) const;
};

struct CutoffRule {
    CutoffCurve seller, buyer;
    const CutoffCurve& side(Side s) const { return s == Side::Seller ? seller : buyer; }
    CutoffCurve& side(Side s) { return s == Side::Seller ? seller : buyer; }
};

/// Sampled payment function of one side; types below the rule threshold pay
/// zero. The payoff of the lowest matched type is pinned to `baseline` = 0.
struct PaymentCurve {
    std::vector<double> lambdas;
    std::vector<double> phis;
    double baseline = 0.0;

    /// Plain linear interpolation of the samples (statistical consumers).
    double phi_linear(double lambda) const;
};

struct PaymentSchedule {
    PaymentCurve seller, buyer;
    const PaymentCurve& side(Side s) const { return s == Side::Seller ? seller : buyer; }
    PaymentCurve& side(Side s) { return s == Side::Seller ? seller : buyer; }
};

enum class MatchPattern { CompleteMatched, BottomEliminated };

constexpr const char* pattern_name(MatchPattern p) {
    return p == MatchPattern::CompleteMatched ? "complete-matched" : "bottom-eliminated";
}

struct SidePattern {
    MatchPattern label = MatchPattern::CompleteMatched;
    bool top_reserved = false;
};

/// Corner evaluations of the joint marginal effect used by classification.
struct CornerSign {
    double lambda_seller = 0.0;
    double lambda_buyer = 0.0;
    double eta = 0.0;
};

struct PatternReport {
    SidePattern seller, buyer;
    std::array<CornerSign, 4> corners{};
    const SidePattern& side(Side s) const { return s == Side::Seller ? seller : buyer; }
    SidePattern& side(Side s) { return s == Side::Seller ? seller : buyer; }
};

struct SolverDiagnostics {
    bool tau_monotone = true;
    bool reciprocity_ok = true;
    double reciprocity_max_err = 0.0; // normalized by own support width
    bool kappa_bracket_ok = true;     // false if any interior root solve failed
    double revenue_by_payments = 0.0;
    double revenue_by_virtual = 0.0;
};

struct MechanismSolution {
    Objective objective = Objective::Welfare;
    CutoffRule rule;
    PaymentSchedule payments;
    double objective_value = 0.0;
    PatternReport patterns;
    SolverDiagnostics diagnostics;
};

// --- formula layer ---------------------------------------------------------

/// Expected reward of a side-`s` participant of type `lambda` matched to all
/// opponent types in [t, top]: the kernel integrated against the opponent
/// density. t = top gives exactly zero.
double utility(const MarketSpec& spec, Side s, double lambda, double t,
               const Tolerances& tol = Tolerances{});

/// Partial derivative of `utility` in the own type, holding the matched set
/// fixed; uses the symbolic derivative of the kernel.
double marginal_utility(const MarketSpec& spec, Side s, double lambda, double t,
                        const Tolerances& tol = Tolerances{});

/// Economic rent accumulated between `base` and `lambda` along the rule:
/// the integral of marginal_utility evaluated on the rule's cut-offs.
double information_rent(const MarketSpec& spec, Side s, const CutoffRule& rule, double lambda,
                        double base, const Tolerances& tol = Tolerances{});

/// Marginal effect of a side-`s` participant on each matched opponent:
/// gamma_s(lambda) * f_s(lambda).
double per_match_effect(const MarketSpec& spec, Side s, double lambda);

/// Direct marginal effect of matching a side-`s` type `lambda` down to the
/// opponent type `x`, on the chosen objective. Closed form, no quadrature.
double direct_marginal_effect(const MarketSpec& spec, Objective obj, Side s, double lambda,
                              double x);

/// Joint marginal effect of matching the seller type to the buyer type: the
/// two direct effects summed. Its zero set defines the optimal cut-off curve.
double joint_marginal_effect(const MarketSpec& spec, Objective obj, double lambda_seller,
                             double lambda_buyer);

/// Pointwise objective integrand: utility for welfare; utility minus the
/// hazard-weighted marginal for revenue.
double virtual_surplus(const MarketSpec& spec, Objective obj, Side s, double lambda, double t,
                       const Tolerances& tol = Tolerances{});

/// Incentive-compatible payment of a matched type under the rule, built from
/// scratch: utility at the truthful match minus the rent accumulated from the
/// threshold (the lowest matched type's payoff is pinned to zero). Types
/// below the threshold pay zero.
double payment(const MarketSpec& spec, Side s, const CutoffRule& rule, double lambda,
               const Tolerances& tol = Tolerances{});

/// Samples the payment function on the rule's own grid via cumulative rent
/// integration (one pass, consistent with `payment`).
PaymentCurve build_payment_curve(const MarketSpec& spec, Side s, const CutoffRule& rule,
                                 const Tolerances& tol = Tolerances{});

/// Payment at an arbitrary matched type, anchored at the nearest stored
/// sample and continued with the same utility/rent construction. Keeps the
/// sampled schedule incentive compatible at off-grid reports, which plain
/// linear interpolation cannot do near a steep threshold.
double payment_at(const MarketSpec& spec, Side s, const CutoffRule& rule,
                  const PaymentCurve& curve, double lambda, const Tolerances& tol = Tolerances{});

/// Expected welfare of the rule: both sides' utilities integrated over the
/// matched types.
double welfare_value(const MarketSpec& spec, const CutoffRule& rule,
                     const Tolerances& tol = Tolerances{});

/// Platform revenue as the integral of the payment schedule.
double revenue_by_payments(const MarketSpec& spec, const CutoffRule& rule,
                           const PaymentSchedule& payments, const Tolerances& tol = Tolerances{});

/// Platform revenue in virtual-surplus form; must agree with
/// `revenue_by_payments` for any incentive-compatible schedule.
double revenue_by_virtual_surplus(const MarketSpec& spec, const CutoffRule& rule,
                                  const Tolerances& tol = Tolerances{});

/// Headline objective value: welfare_value or revenue_by_payments.
double objective_value(const MarketSpec& spec, Objective obj, const CutoffRule& rule,
                       const PaymentSchedule& payments, const Tolerances& tol = Tolerances{});

} // namespace datamkt
