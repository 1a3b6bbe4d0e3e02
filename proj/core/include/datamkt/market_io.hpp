#pragma once

#include "datamkt/market.hpp"
#include "datamkt/mechanism.hpp"
#include "datamkt/numerics.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace datamkt {

/// Market-file or option parsing failure, with 1-based position when known.
struct ConfigError : std::runtime_error {
    ConfigError(const std::string& msg, int line = 0, int column = 0)
        : std::runtime_error(msg), line(line), column(column) {}
    int line;
    int column;
};

/// Parses a market description file.
///
/// Format: `key = value` lines under `[seller]`, `[buyer]`, `[kernels]` and
/// an optional `[options]` section; `#` starts a comment; whitespace is
/// insignificant. Side keys: `support = [lo, hi]`, `dist = uniform | power`,
/// `power_k = <number>`, `gamma = "<expr in lam>"`. Kernels: either
/// `R_S` / `R_B` as expressions in (lam, x), or `M_S` / `M_B` as expressions
/// in (r, lam).
MarketSpec load_market(const std::filesystem::path& path);
MarketSpec load_market_text(const std::string& text, const std::string& origin = "<string>");

enum class Command { Validate, Solve, Verify, Simulate, Report };

std::optional<Command> parse_command(std::string_view name);

struct RunConfig {
    std::filesystem::path market_path;
    Objective objective = Objective::Welfare;
    int grid_n = 512;
    Tolerances tolerances;
    int n_sellers = 10000;
    int n_buyers = 10000;
    std::uint64_t seed = 1;
    std::filesystem::path out_dir = ".";
};

/// Exit statuses of run_command.
inline constexpr int kExitOk = 0;
inline constexpr int kExitAuditFailure = 1;
inline constexpr int kExitInputError = 2;
inline constexpr int kExitNumericalFailure = 3;

/// Executes one command end to end and writes its output files into
/// cfg.out_dir:
///   validate -> validation.txt
///   solve    -> rule_<side>.csv, payments_<side>.csv, solution.txt
///   verify   -> audit.txt
///   simulate -> sim.csv, sim_summary.txt
///   report   -> all of the above plus report.txt
/// Failures print a single `error: ...` line to stderr and map to the exit
/// statuses above. Output bytes depend only on the inputs.
int run_command(Command cmd, const RunConfig& cfg);

} // namespace datamkt
