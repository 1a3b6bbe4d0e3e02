#pragma once

#include "datamkt/market.hpp"

#include <vector>

namespace datamkt::testing {

/// Uniform [1,10] market with gamma_S = lam, gamma_B = lam/2 and the
/// bilinear kernels given directly. Closed forms used throughout the tests:
///   utility_S(lam, t)  = lam (100 - t^2) / 36
///   utility_B(lam, t)  = lam (100 - t^2) / 36 - lam (10 - t) / 18
///   eta_W(s, b)        = b (4 s - 1) / 324
///   eta_R(s, b)        = (2 s b - 5 s - 5.5 b + 2.5) / 81
///   revenue cut-offs   tau_S(s) = (10 s - 5) / (4 s - 11), thresholds 7/2
///                      and 95/29.
inline MarketSpec bilinear_market() {
    SideSpec seller{TypeDistribution::uniform(1.0, 10.0),
                    Expr::parse("lam", ExprSignature{"lam"})};
    SideSpec buyer{TypeDistribution::uniform(1.0, 10.0),
                   Expr::parse("0.5*lam", ExprSignature{"lam"})};
    DirectKernels kernels{Expr::parse("0.5*lam*x", ExprSignature{"lam", "x"}),
                          Expr::parse("0.5*lam*(x-0.5)", ExprSignature{"lam", "x"})};
    return MarketSpec(std::move(seller), std::move(buyer), std::move(kernels));
}

/// Same market through the valuation primitives M_S = lam*r, M_B = lam*r/2.
/// Note the assembled buyer kernel is lam*(x-1)/2, not lam*(x-0.5)/2.
inline MarketSpec bilinear_market_primitives() {
    SideSpec seller{TypeDistribution::uniform(1.0, 10.0),
                    Expr::parse("lam", ExprSignature{"lam"})};
    SideSpec buyer{TypeDistribution::uniform(1.0, 10.0),
                   Expr::parse("0.5*lam", ExprSignature{"lam"})};
    PrimitiveKernels kernels{Expr::parse("lam*r", ExprSignature{"r", "lam"}),
                             Expr::parse("0.5*lam*r", ExprSignature{"r", "lam"})};
    return MarketSpec(std::move(seller), std::move(buyer), std::move(kernels));
}

/// Asymmetric market whose welfare optimum is complete-matched on both sides
/// with reserved top groups: eta_W(s, b) = (s b + s - 3) / 81, so
/// tau_S(s) = max(1, 3/s - 1) and tau_B(b) = 3 / (b + 1).
inline MarketSpec top_reserved_market() {
    SideSpec seller{TypeDistribution::uniform(1.0, 10.0),
                    Expr::parse("lam", ExprSignature{"lam"})};
    SideSpec buyer{TypeDistribution::uniform(1.0, 10.0),
                   Expr::parse("lam", ExprSignature{"lam"})};
    DirectKernels kernels{Expr::parse("lam*x", ExprSignature{"lam", "x"}),
                          Expr::parse("x-3", ExprSignature{"lam", "x"})};
    return MarketSpec(std::move(seller), std::move(buyer), std::move(kernels));
}

inline std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> v(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        v[static_cast<std::size_t>(i)] =
            a + (b - a) * (n == 1 ? 0.0 : static_cast<double>(i) / (n - 1));
    return v;
}

} // namespace datamkt::testing
