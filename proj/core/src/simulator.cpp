#include "datamkt/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace datamkt {

namespace {

struct KahanSum {
    double sum = 0.0;
    double carry = 0.0;
    void add(double v) {
        const double y = v - carry;
        const double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
};

double uniform01(std::mt19937_64& rng) {
    // 53 random bits; avoids the unspecified std::uniform_real_distribution.
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    // splitmix64 step keeps the two sides' streams decorrelated.
    std::uint64_t z = seed + stream * 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// Equal-count summary of a sorted opponent population: per-bin counts and
/// means plus suffix sums, so a suffix average of the kernel costs O(bins)
/// instead of O(population). Bin contributions evaluate the kernel at the
/// bin's conditional mean, which reproduces the exact suffix sum whenever the
/// kernel is linear in the opponent type.
class OpponentSummary {
public:
    OpponentSummary(std::vector<double> sorted, int bins) : sorted_(std::move(sorted)) {
        const std::size_t m = sorted_.size();
        suffix_sum_.resize(m + 1, 0.0);
        for (std::size_t j = m; j-- > 0;)
            suffix_sum_[j] = suffix_sum_[j + 1] + sorted_[j];
        const std::size_t b = std::min<std::size_t>(static_cast<std::size_t>(bins), m);
        starts_.resize(b + 1);
        for (std::size_t i = 0; i <= b; ++i)
            starts_[i] = i * m / b;
    }

    std::size_t size() const { return sorted_.size(); }

    std::size_t count_from(double cutoff) const {
        return static_cast<std::size_t>(
            sorted_.end() - std::lower_bound(sorted_.begin(), sorted_.end(), cutoff));
    }

    /// (1/m) * sum of kernel(x_j) over all x_j >= cutoff.
    template <typename Kernel>
    double suffix_mean(double cutoff, Kernel&& kernel) const {
        const std::size_t m = sorted_.size();
        const std::size_t first = m - count_from(cutoff);
        if (first >= m)
            return 0.0;
        // Bin containing `first`: its tail is averaged separately.
        const std::size_t bin = static_cast<std::size_t>(
            std::upper_bound(starts_.begin(), starts_.end(), first) - starts_.begin() - 1);
        KahanSum total;
        const std::size_t bin_end = std::min(starts_[bin + 1], m);
        const std::size_t head_count = bin_end - first;
        if (head_count > 0) {
            const double head_mean = (suffix_sum_[first] - suffix_sum_[bin_end]) /
                                     static_cast<double>(head_count);
            total.add(static_cast<double>(head_count) * kernel(head_mean));
        }
        for (std::size_t b = bin + 1; b + 1 < starts_.size(); ++b) {
            const std::size_t s0 = starts_[b];
            const std::size_t s1 = starts_[b + 1];
            if (s0 >= s1)
                continue;
            const double mean = (suffix_sum_[s0] - suffix_sum_[s1]) / static_cast<double>(s1 - s0);
            total.add(static_cast<double>(s1 - s0) * kernel(mean));
        }
        return total.sum / static_cast<double>(m);
    }

private:
    std::vector<double> sorted_;
    std::vector<double> suffix_sum_;
    std::vector<std::size_t> starts_;
};

} // namespace

std::vector<double> sample_population(const TypeDistribution& dist, int n, std::uint64_t seed) {
    if (n < 1)
        throw std::invalid_argument("sample_population: requires n >= 1");
    std::mt19937_64 rng(seed);
    std::vector<double> types(static_cast<std::size_t>(n));
    for (double& t : types)
        t = dist.inverse_cdf(uniform01(rng));
    return types;
}

SimResult simulate(const MarketSpec& spec, const MechanismSolution& solution,
                   const SimConfig& config) {
    if (config.n_sellers < 1 || config.n_buyers < 1)
        throw std::invalid_argument("simulate: population counts must be >= 1");

    SimResult result;
    result.seed = config.seed;

    const std::vector<double> seller_types =
        sample_population(spec.dist(Side::Seller), config.n_sellers, derive_seed(config.seed, 1));
    const std::vector<double> buyer_types =
        sample_population(spec.dist(Side::Buyer), config.n_buyers, derive_seed(config.seed, 2));

    constexpr int kBins = 256;
    auto sorted = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        return v;
    };
    const OpponentSummary seller_summary(sorted(seller_types), kBins);
    const OpponentSummary buyer_summary(sorted(buyer_types), kBins);

    auto run_side = [&](Side s, const std::vector<double>& types,
                        const OpponentSummary& opponents) {
        SimSideResult side_result;
        side_result.agents.resize(types.size());
        const CutoffCurve& own_curve = solution.rule.side(s);
        const CutoffCurve& opp_curve = solution.rule.side(opposite(s));
        const PaymentCurve& schedule = solution.payments.side(s);
        const double m = static_cast<double>(opponents.size());

        KahanSum utility_sum, payment_sum, mass_sum;
        for (std::size_t i = 0; i < types.size(); ++i) {
            AgentRecord& rec = side_result.agents[i];
            rec.type = types[i];
            if (!own_curve.matched(rec.type))
                continue;
            // A pair is matched only when both curves agree; both conditions
            // reduce to a single opponent cutoff.
            const double cutoff =
                std::max(own_curve.tau_at(rec.type), opp_curve.inverse_tau(rec.type));
            rec.matched_mass = static_cast<double>(opponents.count_from(cutoff)) / m;
            rec.utility = opponents.suffix_mean(
                cutoff, [&](double x) { return spec.reward_kernel(s, rec.type, x); });
            rec.payment = schedule.phi_linear(rec.type);
            utility_sum.add(rec.utility);
            payment_sum.add(rec.payment);
            mass_sum.add(rec.matched_mass);
        }
        const double n = static_cast<double>(types.size());
        side_result.mean_utility = utility_sum.sum / n;
        side_result.mean_payment = payment_sum.sum / n;
        side_result.total_matched_mass = mass_sum.sum / n;

        KahanSum var_u, var_p;
        for (const AgentRecord& rec : side_result.agents) {
            var_u.add((rec.utility - side_result.mean_utility) *
                      (rec.utility - side_result.mean_utility));
            var_p.add((rec.payment - side_result.mean_payment) *
                      (rec.payment - side_result.mean_payment));
        }
        const double denom = types.size() > 1 ? n - 1.0 : 1.0;
        side_result.sd_utility = std::sqrt(var_u.sum / denom);
        side_result.sd_payment = std::sqrt(var_p.sum / denom);
        return side_result;
    };

    result.seller = run_side(Side::Seller, seller_types, buyer_summary);
    result.buyer = run_side(Side::Buyer, buyer_types, seller_summary);

    result.welfare_per_capita = result.seller.mean_utility + result.buyer.mean_utility;
    result.revenue_per_capita = result.seller.mean_payment + result.buyer.mean_payment;
    const double n_s = static_cast<double>(config.n_sellers);
    const double n_b = static_cast<double>(config.n_buyers);
    result.welfare_std_err = std::sqrt(result.seller.sd_utility * result.seller.sd_utility / n_s +
                                       result.buyer.sd_utility * result.buyer.sd_utility / n_b);
    result.revenue_std_err = std::sqrt(result.seller.sd_payment * result.seller.sd_payment / n_s +
                                       result.buyer.sd_payment * result.buyer.sd_payment / n_b);
    return result;
}

} // namespace datamkt
