#include "datamkt/solver.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace datamkt {

namespace {

constexpr double kZeroEta = 1e-12;

double eta_oriented(const MarketSpec& spec, Objective obj, Side s, double lambda_own,
                    double lambda_opp) {
    return s == Side::Seller ? joint_marginal_effect(spec, obj, lambda_own, lambda_opp)
                             : joint_marginal_effect(spec, obj, lambda_opp, lambda_own);
}

} // namespace

PatternReport classify(const MarketSpec& spec, Objective obj) {
    const double lo_s = spec.dist(Side::Seller).lo();
    const double hi_s = spec.dist(Side::Seller).hi();
    const double lo_b = spec.dist(Side::Buyer).lo();
    const double hi_b = spec.dist(Side::Buyer).hi();

    PatternReport report;
    report.corners[0] = {lo_s, lo_b, joint_marginal_effect(spec, obj, lo_s, lo_b)};
    report.corners[1] = {hi_s, lo_b, joint_marginal_effect(spec, obj, hi_s, lo_b)};
    report.corners[2] = {lo_s, hi_b, joint_marginal_effect(spec, obj, lo_s, hi_b)};
    report.corners[3] = {hi_s, hi_b, joint_marginal_effect(spec, obj, hi_s, hi_b)};

    const double eta_bottom = report.corners[0].eta;
    if (eta_bottom >= -kZeroEta) {
        // Non-negative joint effect at the weakest pair: everyone matched.
        report.seller = {MatchPattern::CompleteMatched, false};
        report.buyer = {MatchPattern::CompleteMatched, false};
        return report;
    }

    // Orientation K: the sign of eta(top of K, bottom of K-bar) decides the
    // reservation flag of side K and the completeness of the opposite side.
    auto apply = [&](Side k, double eta_top_bottom) {
        SidePattern& other = report.side(opposite(k));
        if (eta_top_bottom > kZeroEta) {
            report.side(k).top_reserved = true;
            other.label = MatchPattern::CompleteMatched;
        } else if (eta_top_bottom < -kZeroEta) {
            report.side(k).top_reserved = false;
            other.label = MatchPattern::BottomEliminated;
        } else {
            report.side(k).top_reserved = false;
            other.label = MatchPattern::CompleteMatched;
        }
    };
    apply(Side::Seller, report.corners[1].eta);
    apply(Side::Buyer, report.corners[2].eta);
    return report;
}

KappaResult solve_kappa(const MarketSpec& spec, Objective obj, Side s, double lambda,
                        const Tolerances& tol) {
    const TypeDistribution& opp = spec.dist(opposite(s));
    const double at_floor = eta_oriented(spec, obj, s, lambda, opp.lo());
    if (at_floor >= -kZeroEta)
        return {KappaResult::Kind::Floor, opp.lo(), true};
    const double at_top = eta_oriented(spec, obj, s, lambda, opp.hi());
    if (at_top < -kZeroEta)
        return {KappaResult::Kind::AboveTop, opp.hi(), true};
    if (at_top <= kZeroEta)
        return {KappaResult::Kind::Interior, opp.hi(), true};
    try {
        const double root = find_root(
            [&](double x) { return eta_oriented(spec, obj, s, lambda, x); }, opp.lo(), opp.hi(),
            tol);
        return {KappaResult::Kind::Interior, root, true};
    } catch (const NumericsError&) {
        // Regularity violation; report rather than crash.
        return {KappaResult::Kind::Interior, opp.hi(), false};
    }
}

double solve_threshold(const MarketSpec& spec, Objective obj, Side s, const Tolerances& tol) {
    const PatternReport patterns = classify(spec, obj);
    const TypeDistribution& own = spec.dist(s);
    if (patterns.side(s).label == MatchPattern::CompleteMatched)
        return own.lo();
    const TypeDistribution& opp = spec.dist(opposite(s));
    auto g = [&](double lambda) { return eta_oriented(spec, obj, s, lambda, opp.hi()); };
    const double g_top = g(own.hi());
    if (g_top < -kZeroEta)
        return own.hi(); // even the top type loses against the best opponent
    if (g(own.lo()) >= -kZeroEta)
        return own.lo();
    return find_root(g, own.lo(), own.hi(), tol);
}

CutoffRule build_rule(const MarketSpec& spec, Objective obj, int grid_n, const Tolerances& tol,
                      SolverDiagnostics* diag) {
    if (grid_n < 32)
        throw std::invalid_argument("build_rule: requires grid_n >= 32");

    SolverDiagnostics local;
    SolverDiagnostics& d = diag ? *diag : local;

    CutoffRule rule;
    for (Side s : {Side::Seller, Side::Buyer}) {
        const TypeDistribution& own = spec.dist(s);
        const TypeDistribution& opp = spec.dist(opposite(s));
        CutoffCurve& curve = rule.side(s);
        curve.threshold = solve_threshold(spec, obj, s, tol);
        curve.lambdas.resize(static_cast<std::size_t>(grid_n));
        curve.taus.resize(static_cast<std::size_t>(grid_n));
        for (int i = 0; i < grid_n; ++i) {
            const double w = grid_n == 1 ? 0.0 : static_cast<double>(i) / (grid_n - 1);
            const double lambda = curve.threshold + w * (own.hi() - curve.threshold);
            const KappaResult kappa = solve_kappa(spec, obj, s, lambda, tol);
            if (!kappa.bracket_ok)
                d.kappa_bracket_ok = false;
            double t = kappa.value;
            if (kappa.kind == KappaResult::Kind::AboveTop)
                t = opp.hi(); // matched set collapses to the top point (measure zero)
            curve.lambdas[static_cast<std::size_t>(i)] = lambda;
            curve.taus[static_cast<std::size_t>(i)] = std::clamp(t, opp.lo(), opp.hi());
        }
        for (std::size_t i = 0; i + 1 < curve.taus.size(); ++i) {
            if (curve.taus[i + 1] > curve.taus[i] + 1e-12) {
                d.tau_monotone = false;
                break;
            }
        }
    }

    // Reciprocity audit on the strictly decreasing ranges: mapping a type
    // through one curve and back through the other must return it.
    for (Side s : {Side::Seller, Side::Buyer}) {
        const CutoffCurve& curve = rule.side(s);
        const CutoffCurve& back = rule.side(opposite(s));
        const double width = spec.dist(s).width();
        for (std::size_t i = 0; i < curve.lambdas.size(); ++i) {
            if (i + 1 < curve.taus.size() && !(curve.taus[i + 1] < curve.taus[i] - 1e-9))
                continue; // flat stretch: the inverse is not single-valued there
            const double t = curve.taus[i];
            if (t <= back.threshold)
                continue;
            const double round_trip = back.tau_at(t);
            const double err = std::abs(round_trip - curve.lambdas[i]) / width;
            d.reciprocity_max_err = std::max(d.reciprocity_max_err, err);
        }
    }
    if (d.reciprocity_max_err > 1e-4)
        d.reciprocity_ok = false;

    return rule;
}

RegularityReport check_regularity(const MarketSpec& spec, Objective obj, int grid_n,
                                  const Tolerances& tol) {
    (void)tol;
    if (grid_n < 8)
        throw std::invalid_argument("check_regularity: requires grid_n >= 8");
    RegularityReport report;
    report.eta_bottom_corner = joint_marginal_effect(spec, obj, spec.dist(Side::Seller).lo(),
                                                     spec.dist(Side::Buyer).lo());
    report.uniqueness_precondition = report.eta_bottom_corner < -kZeroEta;

    for (Side s : {Side::Seller, Side::Buyer}) {
        const TypeDistribution& own = spec.dist(s);
        const TypeDistribution& opp = spec.dist(opposite(s));
        // Half-step inset keeps the scan off boundary points where the
        // per-match effect may vanish (power-family endpoints).
        const double inset = own.width() / (2.0 * grid_n);
        const double a = own.lo() + inset;
        const double b = own.hi() - inset;
        for (int q = 0; q < 5; ++q) {
            RegularityScan scan;
            scan.side = s;
            scan.x_probe = opp.lo() + opp.width() * (0.1 + 0.2 * q);
            bool zero_weight = false;
            auto ratio = [&](double lambda) {
                const double w = per_match_effect(spec, s, lambda);
                if (w == 0.0) {
                    zero_weight = true;
                    return 0.0;
                }
                return direct_marginal_effect(spec, obj, s, lambda, scan.x_probe) / w;
            };
            scan.scan = monotone_scan(ratio, a, b, grid_n, ScanDirection::Increasing);
            scan.skipped_zero_weight = zero_weight;
            if (zero_weight)
                scan.scan = ScanResult{}; // scan skipped, not failed
            else if (!scan.scan.pass)
                report.all_pass = false;
            report.scans.push_back(scan);
        }
    }
    return report;
}

MechanismSolution solve(const MarketSpec& spec, Objective obj, int grid_n, const Tolerances& tol) {
    MechanismSolution solution;
    solution.objective = obj;
    solution.patterns = classify(spec, obj);
    solution.rule = build_rule(spec, obj, grid_n, tol, &solution.diagnostics);
    solution.payments.seller = build_payment_curve(spec, Side::Seller, solution.rule, tol);
    solution.payments.buyer = build_payment_curve(spec, Side::Buyer, solution.rule, tol);
    solution.diagnostics.revenue_by_payments =
        revenue_by_payments(spec, solution.rule, solution.payments, tol);
    solution.diagnostics.revenue_by_virtual = revenue_by_virtual_surplus(spec, solution.rule, tol);
    solution.objective_value = obj == Objective::Welfare
                                   ? welfare_value(spec, solution.rule, tol)
                                   : solution.diagnostics.revenue_by_payments;
    return solution;
}

} // namespace datamkt
