#include "datamkt/verification.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace datamkt {

namespace {

// Audits run with tighter quadrature than the solver so that finite
// differences of audited quantities sit well above the numerical noise.
Tolerances audit_tolerances() {
    Tolerances tol;
    tol.quad_abs = 1e-12;
    tol.quad_rel = 1e-12;
    tol.root_x = 1e-12;
    return tol;
}

std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> v(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        v[static_cast<std::size_t>(i)] = a + (b - a) * (n == 1 ? 0.0 : static_cast<double>(i) / (n - 1));
    return v;
}

// Equilibrium payoff of a true type under the published mechanism surfaces.
double truthful_payoff(const MarketSpec& spec, const MechanismSolution& solution, Side s,
                       double lambda, const Tolerances& tol) {
    const CutoffCurve& curve = solution.rule.side(s);
    if (!curve.matched(lambda))
        return 0.0;
    const double u = utility(spec, s, lambda, curve.tau_at(lambda), tol);
    const double phi = payment_at(spec, s, solution.rule, solution.payments.side(s), lambda, tol);
    return u - phi;
}

} // namespace

std::array<double, 2> ic_audit(const MarketSpec& spec, const MechanismSolution& solution,
                               int n_true, int n_report) {
    if (n_true < 51 || n_report < 51)
        throw std::invalid_argument("ic_audit: requires n_true, n_report >= 51");
    const Tolerances tol = audit_tolerances();
    std::array<double, 2> gains{};
    for (Side s : {Side::Seller, Side::Buyer}) {
        const TypeDistribution& own = spec.dist(s);
        const CutoffCurve& curve = solution.rule.side(s);
        const PaymentCurve& schedule = solution.payments.side(s);
        const auto trues = linspace(own.lo(), own.hi(), n_true);
        const auto reports = linspace(own.lo(), own.hi(), n_report);

        // Per-report matched set and payment; shared across all true types.
        struct ReportCell {
            bool matched;
            double tau;
            double phi;
        };
        std::vector<ReportCell> cells;
        cells.reserve(reports.size());
        for (double r : reports) {
            ReportCell cell{curve.matched(r), 0.0, 0.0};
            if (cell.matched) {
                cell.tau = curve.tau_at(r);
                cell.phi = payment_at(spec, s, solution.rule, schedule, r, tol);
            }
            cells.push_back(cell);
        }

        double max_gain = -std::numeric_limits<double>::infinity();
        for (double lambda : trues) {
            const double truthful = truthful_payoff(spec, solution, s, lambda, tol);
            double best_dev = 0.0; // staying out is always available
            for (const ReportCell& cell : cells) {
                if (!cell.matched)
                    continue; // unmatched report: payoff 0, covered by best_dev init
                const double dev = utility(spec, s, lambda, cell.tau, tol) - cell.phi;
                best_dev = std::max(best_dev, dev);
            }
            max_gain = std::max(max_gain, best_dev - truthful);
        }
        gains[AuditReport::index(s)] = max_gain;
    }
    return gains;
}

IrResult ir_audit(const MarketSpec& spec, const MechanismSolution& solution, int n) {
    if (n < 51)
        throw std::invalid_argument("ir_audit: requires n >= 51");
    const Tolerances tol = audit_tolerances();
    IrResult result;
    for (Side s : {Side::Seller, Side::Buyer}) {
        const TypeDistribution& own = spec.dist(s);
        const CutoffCurve& curve = solution.rule.side(s);
        double min_payoff = std::numeric_limits<double>::infinity();
        for (double lambda : linspace(own.lo(), own.hi(), n))
            min_payoff = std::min(min_payoff, truthful_payoff(spec, solution, s, lambda, tol));
        result.min_payoff[AuditReport::index(s)] = min_payoff;
        result.lowest_matched_payoff[AuditReport::index(s)] =
            truthful_payoff(spec, solution, s, std::min(curve.threshold, own.hi()), tol);
    }
    return result;
}

std::array<double, 2> icfoc_audit(const MarketSpec& spec, const MechanismSolution& solution,
                                  int n) {
    if (n < 51)
        throw std::invalid_argument("icfoc_audit: requires n >= 51");
    const Tolerances tol = audit_tolerances();
    std::array<double, 2> errs{};
    for (Side s : {Side::Seller, Side::Buyer}) {
        const TypeDistribution& own = spec.dist(s);
        const CutoffCurve& curve = solution.rule.side(s);
        const double delta = curve.threshold;
        if (delta >= own.hi()) {
            errs[AuditReport::index(s)] = 0.0; // empty side: nothing to check
            continue;
        }
        const double grid_step = (own.hi() - delta) / (n - 1);

        // The payoff is kinked where the cut-off hits the opponent floor;
        // find the first sample of that flat stretch.
        double floor_kink = std::numeric_limits<double>::infinity();
        const double opp_lo = spec.dist(opposite(s)).lo();
        for (std::size_t i = 0; i < curve.taus.size(); ++i) {
            if (curve.taus[i] <= opp_lo + 1e-12) {
                floor_kink = curve.lambdas[i];
                break;
            }
        }

        double max_rel = 0.0;
        for (int k = 0; k < n; ++k) {
            const double lambda = delta + grid_step * k;
            if (lambda - delta < grid_step || own.hi() - lambda < grid_step)
                continue; // endpoints of the matched range
            if (std::abs(lambda - floor_kink) <= grid_step)
                continue; // adjacent to the floor kink
            // Differentiate within a single rule segment so the finite
            // difference never straddles an interpolation node.
            const std::size_t seg = curve.segment_index(lambda);
            const double seg_lo = curve.lambdas[seg];
            const double seg_hi = curve.lambdas[seg + 1];
            const double h = 0.03 * (seg_hi - seg_lo);
            if (h <= 0.0)
                continue;
            const double c = std::clamp(lambda, seg_lo + 2.0 * h, seg_hi - 2.0 * h);
            const double j_plus = truthful_payoff(spec, solution, s, c + h, tol);
            const double j_minus = truthful_payoff(spec, solution, s, c - h, tol);
            const double fd = (j_plus - j_minus) / (2.0 * h);
            const double expected = marginal_utility(spec, s, c, curve.tau_at(c), tol);
            const double rel = std::abs(fd - expected) / std::max(std::abs(expected), 1e-9);
            max_rel = std::max(max_rel, rel);
        }
        errs[AuditReport::index(s)] = max_rel;
    }
    return errs;
}

std::array<double, 2> reciprocity_audit(const MarketSpec& spec, const MechanismSolution& solution,
                                        int n) {
    if (n < 32)
        throw std::invalid_argument("reciprocity_audit: requires n >= 32");
    std::array<double, 2> errs{};
    for (Side s : {Side::Seller, Side::Buyer}) {
        const CutoffCurve& curve = solution.rule.side(s);
        const CutoffCurve& back = solution.rule.side(opposite(s));
        if (curve.lambdas.empty() || back.lambdas.empty())
            continue;
        const double width = spec.dist(s).width();
        // Restrict to the strictly decreasing range: stop before the floor.
        double range_hi = curve.lambdas.back();
        for (std::size_t i = 0; i + 1 < curve.taus.size(); ++i) {
            if (!(curve.taus[i + 1] < curve.taus[i] - 1e-9)) {
                range_hi = curve.lambdas[i];
                break;
            }
        }
        double max_err = 0.0;
        const double lo = curve.lambdas.front();
        if (range_hi > lo) {
            for (double lambda : linspace(lo, range_hi, n)) {
                const double t = curve.tau_at(lambda);
                if (t <= back.threshold)
                    continue;
                const double round_trip = back.tau_at(t);
                max_err = std::max(max_err, std::abs(round_trip - lambda) / width);
            }
        }
        errs[AuditReport::index(s)] = max_err;
    }
    return errs;
}

double objective_cross_check(const MarketSpec& spec, const MechanismSolution& solution) {
    const Tolerances tol = audit_tolerances();
    const double by_payments = revenue_by_payments(spec, solution.rule, solution.payments, tol);
    const double by_virtual = revenue_by_virtual_surplus(spec, solution.rule, tol);
    return std::abs(by_payments - by_virtual);
}

AuditReport audit(const MarketSpec& spec, const MechanismSolution& solution,
                  const AuditOptions& options) {
    AuditReport report;
    report.ic_max_gain = ic_audit(spec, solution, options.n_true, options.n_report);
    const IrResult ir = ir_audit(spec, solution, options.n_payoff);
    report.ir_min_payoff = ir.min_payoff;
    report.lowest_matched_payoff = ir.lowest_matched_payoff;
    report.icfoc_max_rel_err = icfoc_audit(spec, solution, options.n_payoff);
    report.reciprocity_max_err = reciprocity_audit(spec, solution, options.n_reciprocity);
    report.objective_cross_err = objective_cross_check(spec, solution);

    auto both = [](const std::array<double, 2>& v, auto pred) { return pred(v[0]) && pred(v[1]); };
    report.ic_pass =
        both(report.ic_max_gain, [&](double g) { return g <= options.ic_tolerance; });
    report.ir_pass =
        both(report.ir_min_payoff, [&](double p) { return p >= -options.ir_tolerance; }) &&
        both(report.lowest_matched_payoff,
             [&](double p) { return std::abs(p) <= options.threshold_payoff_tolerance; });
    report.icfoc_pass =
        both(report.icfoc_max_rel_err, [&](double e) { return e <= options.icfoc_tolerance; });
    report.reciprocity_pass = both(report.reciprocity_max_err,
                                   [&](double e) { return e <= options.reciprocity_tolerance; });
    report.cross_pass = report.objective_cross_err <= options.cross_tolerance;
    report.pass = report.ic_pass && report.ir_pass && report.icfoc_pass &&
                  report.reciprocity_pass && report.cross_pass;
    return report;
}

} // namespace datamkt
