#pragma once

#include "datamkt/mechanism.hpp"

#include <cstdint>
#include <vector>

namespace datamkt {

struct SimConfig {
    int n_sellers = 10000;
    int n_buyers = 10000;
    std::uint64_t seed = 1;
};

struct AgentRecord {
    double type = 0.0;
    double matched_mass = 0.0; // fraction of the opponent population matched
    double utility = 0.0;
    double payment = 0.0;
};

struct SimSideResult {
    std::vector<AgentRecord> agents;
    double mean_utility = 0.0;
    double mean_payment = 0.0;
    double sd_utility = 0.0;
    double sd_payment = 0.0;
    double total_matched_mass = 0.0; // mean matched mass over the side
};

/// Finite-population realization of a solved mechanism. Per-capita totals are
/// per-side means summed across the two sides, matching the quadrature
/// objectives they estimate.
struct SimResult {
    SimSideResult seller, buyer;
    double welfare_per_capita = 0.0;
    double revenue_per_capita = 0.0;
    double welfare_std_err = 0.0;
    double revenue_std_err = 0.0;
    std::uint64_t seed = 0;

    const SimSideResult& side(Side s) const { return s == Side::Seller ? seller : buyer; }
};

/// n independent draws from the distribution via a seeded deterministic
/// uniform stream. Same seed, same platform: same types.
std::vector<double> sample_population(const TypeDistribution& dist, int n, std::uint64_t seed);

/// Applies the solved rule to sampled populations. Each agent's utility is
/// the empirical average of the kernel over the matched opponents; matching
/// is realized symmetrically (both sides' cut-off conditions), so the two
/// sides' total matched masses agree by construction. Payments interpolate
/// the solution's schedule; unmatched agents earn and pay nothing.
SimResult simulate(const MarketSpec& spec, const MechanismSolution& solution,
                   const SimConfig& config);

} // namespace datamkt
