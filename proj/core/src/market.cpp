#include "datamkt/market.hpp"

#include <cmath>
#include <stdexcept>

namespace datamkt {

namespace {

void require_signature(const Expr& e, std::initializer_list<std::string_view> names,
                       const std::string& what) {
    const auto& sig = e.signature().names();
    if (sig.size() != names.size())
        throw std::invalid_argument("MarketSpec: " + what + " must have " +
                                    std::to_string(names.size()) + " variables");
    std::size_t i = 0;
    for (std::string_view n : names) {
        if (sig[i] != n)
            throw std::invalid_argument("MarketSpec: " + what + " variable " + std::to_string(i) +
                                        " must be named '" + std::string(n) + "'");
        ++i;
    }
}

} // namespace

MarketSpec::MarketSpec(SideSpec seller, SideSpec buyer, DirectKernels kernels)
    : seller_(std::move(seller)), buyer_(std::move(buyer)), primitive_mode_(false) {
    require_signature(seller_.gamma, {"lam"}, "seller gamma");
    require_signature(buyer_.gamma, {"lam"}, "buyer gamma");
    require_signature(kernels.seller, {"lam", "x"}, "R_S");
    require_signature(kernels.buyer, {"lam", "x"}, "R_B");
    cs_[0].kernel = kernels.seller.compile();
    cs_[0].kernel_dlam = kernels.seller.differentiate("lam").compile();
    cs_[1].kernel = kernels.buyer.compile();
    cs_[1].kernel_dlam = kernels.buyer.differentiate("lam").compile();
    finalize();
}

MarketSpec::MarketSpec(SideSpec seller, SideSpec buyer, PrimitiveKernels kernels)
    : seller_(std::move(seller)), buyer_(std::move(buyer)), primitive_mode_(true) {
    require_signature(seller_.gamma, {"lam"}, "seller gamma");
    require_signature(buyer_.gamma, {"lam"}, "buyer gamma");
    require_signature(kernels.seller_valuation, {"r", "lam"}, "M_S");
    require_signature(kernels.buyer_valuation, {"r", "lam"}, "M_B");
    cs_[0].valuation = kernels.seller_valuation.compile();
    cs_[0].valuation_dlam = kernels.seller_valuation.differentiate("lam").compile();
    cs_[1].valuation = kernels.buyer_valuation.compile();
    cs_[1].valuation_dlam = kernels.buyer_valuation.differentiate("lam").compile();
    finalize();
}

void MarketSpec::finalize() {
    cs_[0].gamma = seller_.gamma.compile();
    cs_[0].dgamma = seller_.gamma.differentiate("lam").compile();
    cs_[1].gamma = buyer_.gamma.compile();
    cs_[1].dgamma = buyer_.gamma.differentiate("lam").compile();
}

void MarketSpec::rethrow_with_context(const EvalError& e, Side s, double lo, double lp) const {
    throw EvalError(std::string("reward kernel evaluation failed on the ") + side_name(s) +
                        " side at (lam=" + std::to_string(lo) + ", x=" + std::to_string(lp) +
                        "): " + e.what(),
                    e.where);
}

double MarketSpec::gamma(Side s, double lambda) const { return cside(s).gamma(lambda); }

double MarketSpec::reward_kernel(Side s, double lambda_own, double lambda_opp) const {
    try {
        if (!primitive_mode_)
            return cside(s).kernel(lambda_own, lambda_opp);
        if (s == Side::Seller) {
            const double r = cs_[1].gamma(lambda_opp);
            return cs_[0].valuation(r, lambda_own);
        }
        const double r = cs_[0].gamma(lambda_opp);
        return cs_[1].valuation(r, lambda_own) - cs_[1].gamma(lambda_own);
    } catch (const EvalError& e) {
        rethrow_with_context(e, s, lambda_own, lambda_opp);
    }
}

double MarketSpec::reward_kernel_dlam(Side s, double lambda_own, double lambda_opp) const {
    try {
        if (!primitive_mode_)
            return cside(s).kernel_dlam(lambda_own, lambda_opp);
        if (s == Side::Seller) {
            const double r = cs_[1].gamma(lambda_opp);
            return cs_[0].valuation_dlam(r, lambda_own);
        }
        const double r = cs_[0].gamma(lambda_opp);
        return cs_[1].valuation_dlam(r, lambda_own) - cs_[1].dgamma(lambda_own);
    } catch (const EvalError& e) {
        rethrow_with_context(e, s, lambda_own, lambda_opp);
    }
}

ValidationReport validate_spec(const MarketSpec& spec, int grid_n) {
    if (grid_n < 16)
        throw std::invalid_argument("validate_spec: requires grid_n >= 16");
    ValidationReport report;

    // Interior cell midpoints; avoids boundary artifacts such as the power
    // family's vanishing endpoint density.
    auto midpoints = [&](Side s) {
        const auto& d = spec.dist(s);
        std::vector<double> pts(static_cast<std::size_t>(grid_n));
        for (int i = 0; i < grid_n; ++i)
            pts[static_cast<std::size_t>(i)] = d.lo() + d.width() * (i + 0.5) / grid_n;
        return pts;
    };

    for (Side s : {Side::Seller, Side::Buyer}) {
        const auto own = midpoints(s);
        const auto opp = midpoints(opposite(s));

        // (iii) positive density on the open support.
        for (double x : own) {
            if (spec.dist(s).density(x) <= 0.0) {
                report.violations.push_back(
                    {"density_positive", s, x, 0.0,
                     "f(" + std::to_string(x) + ") <= 0 on the " + side_name(s) + " side"});
                break;
            }
        }

        // (i) R non-decreasing in the opponent type (attractiveness order).
        bool monotone_done = false;
        for (double lo : own) {
            if (monotone_done)
                break;
            for (std::size_t j = 0; j + 1 < opp.size(); ++j) {
                const double a = spec.reward_kernel(s, lo, opp[j]);
                const double b = spec.reward_kernel(s, lo, opp[j + 1]);
                const double slack = 1e-12 * std::max({1.0, std::abs(a), std::abs(b)});
                if (b < a - slack) {
                    report.violations.push_back(
                        {"reward_monotone_in_opponent", s, lo, opp[j],
                         "R(" + std::to_string(lo) + ", x) decreases from x = " + std::to_string(opp[j]) +
                             " to x = " + std::to_string(opp[j + 1])});
                    monotone_done = true;
                    break;
                }
            }
        }
    }

    // (ii) primitive mode: the buyer's offered reward costs no more than its
    // monetary value as perceived by the seller.
    if (spec.primitive_mode()) {
        const auto sellers = midpoints(Side::Seller);
        const auto buyers = midpoints(Side::Buyer);
        bool done = false;
        for (double lb : buyers) {
            if (done)
                break;
            const double offered = spec.gamma(Side::Buyer, lb);
            for (double ls : sellers) {
                const double value = spec.reward_kernel(Side::Seller, ls, lb);
                if (offered > value + 1e-12 * std::max(1.0, std::abs(value))) {
                    report.violations.push_back(
                        {"reward_cost_bound", Side::Buyer, lb, ls,
                         "gamma_B = " + std::to_string(offered) + " exceeds M_S = " +
                             std::to_string(value)});
                    done = true;
                    break;
                }
            }
        }
    }

    return report;
}

} // namespace datamkt
