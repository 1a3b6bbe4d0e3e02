#pragma once

#include "datamkt/mechanism.hpp"

#include <array>

namespace datamkt {

/// Grid sizes and pass thresholds for the audit suite.
struct AuditOptions {
    int n_true = 201;
    int n_report = 201;
    int n_payoff = 201;
    int n_reciprocity = 129;
    double ic_tolerance = 1e-6;
    double ir_tolerance = 1e-9;          // payoffs may not drop below -ir_tolerance
    double icfoc_tolerance = 1e-4;       // max relative envelope error
    double reciprocity_tolerance = 1e-4; // normalized by support width
    double cross_tolerance = 1e-6;
    double threshold_payoff_tolerance = 1e-9;
};

struct AuditReport {
    std::array<double, 2> ic_max_gain{};            // indexed by Side
    std::array<double, 2> ir_min_payoff{};
    std::array<double, 2> lowest_matched_payoff{};
    std::array<double, 2> icfoc_max_rel_err{};
    std::array<double, 2> reciprocity_max_err{};
    double objective_cross_err = 0.0;

    bool ic_pass = false;
    bool ir_pass = false;
    bool icfoc_pass = false;
    bool reciprocity_pass = false;
    bool cross_pass = false;
    bool pass = false;

    static std::size_t index(Side s) { return s == Side::Seller ? 0 : 1; }
};

/// Brute-force deviation test: every true type on one grid against every
/// report on another (plus the implicit stay-out report). Returns the largest
/// payoff gain any deviation achieves over truthful reporting.
std::array<double, 2> ic_audit(const MarketSpec& spec, const MechanismSolution& solution,
                               int n_true, int n_report);

/// Minimum equilibrium payoff per side over a type grid, and the payoff of
/// the lowest matched type (which the payment construction pins to zero).
struct IrResult {
    std::array<double, 2> min_payoff{};
    std::array<double, 2> lowest_matched_payoff{};
};
IrResult ir_audit(const MarketSpec& spec, const MechanismSolution& solution, int n);

/// Envelope condition: central finite differences of the equilibrium payoff
/// against the marginal utility along the rule, excluding points adjacent to
/// the threshold and the cut-off floor where the payoff is kinked.
std::array<double, 2> icfoc_audit(const MarketSpec& spec, const MechanismSolution& solution,
                                  int n);

/// Mutual-inverse check of the two cut-off curves over their strictly
/// decreasing ranges, normalized by the own-side support width.
std::array<double, 2> reciprocity_audit(const MarketSpec& spec, const MechanismSolution& solution,
                                        int n);

/// |revenue via payments - revenue via virtual surplus|.
double objective_cross_check(const MarketSpec& spec, const MechanismSolution& solution);

/// Runs every audit and fills the verdict flags.
AuditReport audit(const MarketSpec& spec, const MechanismSolution& solution,
                  const AuditOptions& options = AuditOptions{});

} // namespace datamkt
