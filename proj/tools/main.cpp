#include "datamkt/market_io.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <string>

int main(int argc, char** argv) {
    CLI::App app{"two-sided market mechanism engine: cut-off matching rules, "
                 "incentive-compatible payments, audits and simulation"};
    app.require_subcommand(1);

    datamkt::RunConfig cfg;
    std::string objective = "welfare";

    auto add_common = [&](CLI::App* sub, bool needs_objective) {
        sub->add_option("market", cfg.market_path, "market description file")
            ->required()
            ->check(CLI::ExistingFile);
        sub->add_option("-o,--out", cfg.out_dir, "output directory (default: current)");
        sub->add_option("--grid-n", cfg.grid_n, "cut-off grid resolution per side")
            ->check(CLI::Range(32, 1 << 20));
        if (needs_objective)
            sub->add_option("--objective", objective, "welfare | revenue")
                ->check(CLI::IsMember({"welfare", "revenue"}));
    };

    CLI::App* validate = app.add_subcommand("validate", "check the standing assumptions on a grid");
    add_common(validate, false);

    CLI::App* solve = app.add_subcommand("solve", "compute the optimal cut-off rule and payments");
    add_common(solve, true);

    CLI::App* verify = app.add_subcommand("verify", "solve, then audit IC/IR/ICFOC/reciprocity");
    add_common(verify, true);

    CLI::App* simulate = app.add_subcommand("simulate", "solve, then run a seeded finite-population simulation");
    add_common(simulate, true);
    simulate->add_option("--sellers", cfg.n_sellers, "seller population size")->check(CLI::PositiveNumber);
    simulate->add_option("--buyers", cfg.n_buyers, "buyer population size")->check(CLI::PositiveNumber);
    simulate->add_option("--seed", cfg.seed, "simulation seed");

    CLI::App* report = app.add_subcommand("report", "validate, solve, verify and simulate in one run");
    add_common(report, true);
    report->add_option("--sellers", cfg.n_sellers, "seller population size")->check(CLI::PositiveNumber);
    report->add_option("--buyers", cfg.n_buyers, "buyer population size")->check(CLI::PositiveNumber);
    report->add_option("--seed", cfg.seed, "simulation seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() != 0)
            std::cerr << "error: " << e.what() << "\n";
        return e.get_exit_code() == 0 ? 0 : datamkt::kExitInputError;
    }

    cfg.objective = objective == "revenue" ? datamkt::Objective::Revenue
                                           : datamkt::Objective::Welfare;

    const auto cmd = datamkt::parse_command(app.get_subcommands().front()->get_name());
    return datamkt::run_command(*cmd, cfg);
}
