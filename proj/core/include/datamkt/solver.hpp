#pragma once

#include "datamkt/mechanism.hpp"

#include <vector>

namespace datamkt {

/// Evaluates the joint marginal effect at the support corners and applies the
/// pattern truth table per orientation. |eta| <= 1e-12 counts as zero and
/// resolves to the boundary cases rather than the strict branches.
PatternReport classify(const MarketSpec& spec, Objective obj);

/// Cut-off type matched to a given own type: the floor of the opponent
/// support when even the weakest opponent contributes non-negatively, a root
/// of the joint marginal effect when it changes sign, or above the top of the
/// opponent support when no opponent is worth matching.
struct KappaResult {
    enum class Kind { Floor, Interior, AboveTop } kind = Kind::Floor;
    double value = 0.0;
    bool bracket_ok = true;
};

KappaResult solve_kappa(const MarketSpec& spec, Objective obj, Side s, double lambda,
                        const Tolerances& tol = Tolerances{});

/// Threshold of side `s`: the bottom of the support when the side is
/// complete-matched, otherwise the own type whose joint marginal effect with
/// the very top opponent is exactly zero. Returns the top of the support when
/// even the best pair contributes negatively (empty side).
double solve_threshold(const MarketSpec& spec, Objective obj, Side s,
                       const Tolerances& tol = Tolerances{});

/// Builds the full cut-off rule on a uniform grid of `grid_n` samples per
/// side and audits it (monotonicity, reciprocity). Audit failures set
/// diagnostics flags; the rule is never silently repaired.
CutoffRule build_rule(const MarketSpec& spec, Objective obj, int grid_n,
                      const Tolerances& tol = Tolerances{}, SolverDiagnostics* diag = nullptr);

struct RegularityScan {
    Side side = Side::Seller;
    double x_probe = 0.0;
    bool skipped_zero_weight = false; // per-match effect vanished on the scan range
    ScanResult scan;
};

struct RegularityReport {
    std::vector<RegularityScan> scans;
    bool all_pass = true;
    /// Joint marginal effect at the bottom corner is strictly negative: the
    /// precondition under which the cut-off curve is strictly decreasing.
    bool uniqueness_precondition = false;
    double eta_bottom_corner = 0.0;
};

/// Scans the ratio of the direct marginal effect to the per-match effect in
/// the own type, at five fixed opponent probes per side.
RegularityReport check_regularity(const MarketSpec& spec, Objective obj, int grid_n,
                                  const Tolerances& tol = Tolerances{});

/// End-to-end solve: classify, thresholds, cut-off curves, payments,
/// objective value and diagnostics.
MechanismSolution solve(const MarketSpec& spec, Objective obj, int grid_n = 512,
                        const Tolerances& tol = Tolerances{});

} // namespace datamkt
