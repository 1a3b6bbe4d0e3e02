#pragma once

#include "datamkt/distribution.hpp"
#include "datamkt/expr.hpp"

#include <optional>
#include <string>
#include <vector>

namespace datamkt {

enum class Side { Seller, Buyer };

constexpr Side opposite(Side s) { return s == Side::Seller ? Side::Buyer : Side::Seller; }
constexpr const char* side_name(Side s) { return s == Side::Seller ? "seller" : "buyer"; }

/// One side's declarative description: its type distribution and its reward
/// primitive (the value this side contributes to each matched opponent),
/// an expression in the single variable `lam`.
struct SideSpec {
    TypeDistribution dist;
    Expr gamma;
};

/// Cross-side reward kernels, either given directly as R(lam, x) per side
/// (lam = own type, x = opponent type) or assembled from the monetary
/// valuation primitives M(r, lam):
///   seller:  R_S(lam, x) = M_S(gamma_B(x), lam)
///   buyer:   R_B(lam, x) = M_B(gamma_S(x), lam) - gamma_B(lam)
struct DirectKernels {
    Expr seller; // R_S(lam, x)
    Expr buyer;  // R_B(lam, x)
};

struct PrimitiveKernels {
    Expr seller_valuation; // M_S(r, lam)
    Expr buyer_valuation;  // M_B(r, lam)
};

struct ValidationIssue {
    std::string predicate;
    Side side;
    double lambda_own = 0.0;
    double lambda_opp = 0.0;
    std::string detail;
};

struct ValidationReport {
    std::vector<ValidationIssue> violations;
    bool ok() const { return violations.empty(); }
};

/// Full market description. Immutable after construction; all evaluation
/// methods are pure and safe to call concurrently.
class MarketSpec {
public:
    MarketSpec(SideSpec seller, SideSpec buyer, DirectKernels kernels);
    MarketSpec(SideSpec seller, SideSpec buyer, PrimitiveKernels kernels);

    const SideSpec& side(Side s) const { return s == Side::Seller ? seller_ : buyer_; }
    const TypeDistribution& dist(Side s) const { return side(s).dist; }
    bool primitive_mode() const { return primitive_mode_; }

    /// gamma of side `s` at a point of that side's support.
    double gamma(Side s, double lambda) const;

    /// R of side `s` at (own type, opponent type).
    double reward_kernel(Side s, double lambda_own, double lambda_opp) const;
    /// Partial derivative of R in the own type, via the symbolic derivatives
    /// of the configured expressions.
    double reward_kernel_dlam(Side s, double lambda_own, double lambda_opp) const;

private:
    void finalize();
    [[noreturn]] void rethrow_with_context(const EvalError& e, Side s, double lo, double lp) const;

    SideSpec seller_, buyer_;
    bool primitive_mode_;

    // Compiled fast paths. In direct mode: R and dR/dlam per side.
    // In primitive mode: M, dM/dlam per side plus gamma and its derivative.
    struct CompiledSide {
        CompiledExpr gamma, dgamma;
        CompiledExpr kernel, kernel_dlam;       // direct mode
        CompiledExpr valuation, valuation_dlam; // primitive mode: M(r, lam)
    };
    CompiledSide cs_[2];
    const CompiledSide& cside(Side s) const { return cs_[s == Side::Seller ? 0 : 1]; }
};

/// Samples an n-by-n lattice of interior points and reports every violated
/// standing assumption with a witness: (i) each R non-decreasing in the
/// opponent type, (ii) in primitive mode, the buyer's reward cost does not
/// exceed its monetary value to the seller, (iii) densities positive.
ValidationReport validate_spec(const MarketSpec& spec, int grid_n);

} // namespace datamkt
