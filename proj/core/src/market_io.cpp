#include "datamkt/market_io.hpp"

#include "datamkt/simulator.hpp"
#include "datamkt/solver.hpp"
#include "datamkt/verification.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

namespace datamkt {

namespace {

struct KeyValue {
    std::string value;
    int line = 0;
    bool used = false;
};

using Section = std::map<std::string, KeyValue>;

struct ParsedFile {
    std::map<std::string, Section> sections;
    std::string origin;
};

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b])))
        ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1])))
        --e;
    return std::string(s.substr(b, e - b));
}

ParsedFile parse_config_text(const std::string& text, const std::string& origin) {
    ParsedFile file;
    file.origin = origin;
    std::istringstream in(text);
    std::string raw;
    std::string current;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        // Strip comments; '#' inside a quoted value stays.
        bool quoted = false;
        std::string line;
        for (char c : raw) {
            if (c == '"')
                quoted = !quoted;
            if (c == '#' && !quoted)
                break;
            line.push_back(c);
        }
        const std::string stripped = trim(line);
        if (stripped.empty())
            continue;
        if (stripped.front() == '[') {
            if (stripped.back() != ']')
                throw ConfigError(origin + ":" + std::to_string(line_no) +
                                      ": unterminated section header",
                                  line_no, 1);
            current = trim(stripped.substr(1, stripped.size() - 2));
            if (current.empty())
                throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty section name",
                                  line_no, 1);
            file.sections[current]; // create
            continue;
        }
        const auto eq = stripped.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(line_no) +
                                  ": expected `key = value`",
                              line_no, 1);
        if (current.empty())
            throw ConfigError(origin + ":" + std::to_string(line_no) +
                                  ": key outside of any [section]",
                              line_no, 1);
        const std::string key = trim(stripped.substr(0, eq));
        std::string value = trim(stripped.substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
            value = value.substr(1, value.size() - 2);
        if (key.empty())
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty key", line_no, 1);
        file.sections[current][key] = KeyValue{value, line_no, false};
    }
    return file;
}

Section& require_section(ParsedFile& file, const std::string& name) {
    const auto it = file.sections.find(name);
    if (it == file.sections.end())
        throw ConfigError(file.origin + ": missing [" + name + "] section");
    return it->second;
}

KeyValue& require_key(ParsedFile& file, Section& section, const std::string& section_name,
                      const std::string& key) {
    const auto it = section.find(key);
    if (it == section.end())
        throw ConfigError(file.origin + ": missing key `" + key + "` in [" + section_name + "]");
    it->second.used = true;
    return it->second;
}

KeyValue* optional_key(Section& section, const std::string& key) {
    const auto it = section.find(key);
    if (it == section.end())
        return nullptr;
    it->second.used = true;
    return &it->second;
}

double parse_number(const ParsedFile& file, const KeyValue& kv, const std::string& what) {
    const std::string v = trim(kv.value);
    double out = 0.0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc{} || res.ptr != v.data() + v.size())
        throw ConfigError(file.origin + ":" + std::to_string(kv.line) + ": " + what +
                              " is not a number: `" + kv.value + "`",
                          kv.line, 1);
    return out;
}

std::pair<double, double> parse_interval(const ParsedFile& file, const KeyValue& kv,
                                         const std::string& what) {
    const std::string v = trim(kv.value);
    if (v.size() < 2 || v.front() != '[' || v.back() != ']')
        throw ConfigError(file.origin + ":" + std::to_string(kv.line) + ": " + what +
                              " must look like [lo, hi]",
                          kv.line, 1);
    const std::string body = v.substr(1, v.size() - 2);
    const auto comma = body.find(',');
    if (comma == std::string::npos)
        throw ConfigError(file.origin + ":" + std::to_string(kv.line) + ": " + what +
                              " must contain two comma-separated numbers",
                          kv.line, 1);
    const KeyValue lo_kv{trim(body.substr(0, comma)), kv.line, true};
    const KeyValue hi_kv{trim(body.substr(comma + 1)), kv.line, true};
    return {parse_number(file, lo_kv, what + " lower bound"),
            parse_number(file, hi_kv, what + " upper bound")};
}

Expr parse_expr_key(const ParsedFile& file, const KeyValue& kv, const std::string& what,
                    ExprSignature signature) {
    try {
        return Expr::parse(kv.value, std::move(signature));
    } catch (const ParseError& e) {
        throw ConfigError(file.origin + ":" + std::to_string(kv.line) + ": in " + what + ": " +
                              e.what(),
                          kv.line, static_cast<int>(e.offset) + 1);
    }
}

SideSpec parse_side(ParsedFile& file, const std::string& name) {
    Section& section = require_section(file, name);
    const auto [lo, hi] = parse_interval(file, require_key(file, section, name, "support"),
                                         name + " support");
    if (!(lo < hi))
        throw ConfigError(file.origin + ": [" + name + "] support requires lo < hi");
    const std::string dist_name = trim(require_key(file, section, name, "dist").value);
    TypeDistribution dist = TypeDistribution::uniform(lo, hi);
    if (dist_name == "uniform") {
        if (optional_key(section, "power_k"))
            throw ConfigError(file.origin + ": [" + name + "] power_k is only valid for dist = power");
    } else if (dist_name == "power") {
        const KeyValue& k = require_key(file, section, name, "power_k");
        dist = TypeDistribution::power(lo, hi, parse_number(file, k, name + " power_k"));
    } else {
        throw ConfigError(file.origin + ": [" + name + "] dist must be `uniform` or `power`, got `" +
                          dist_name + "`");
    }
    Expr gamma = parse_expr_key(file, require_key(file, section, name, "gamma"), name + " gamma",
                                ExprSignature{"lam"});
    return SideSpec{dist, std::move(gamma)};
}

} // namespace

MarketSpec load_market_text(const std::string& text, const std::string& origin) {
    ParsedFile file = parse_config_text(text, origin);
    SideSpec seller = parse_side(file, "seller");
    SideSpec buyer = parse_side(file, "buyer");

    Section& kernels = require_section(file, "kernels");
    KeyValue* r_s = optional_key(kernels, "R_S");
    KeyValue* r_b = optional_key(kernels, "R_B");
    KeyValue* m_s = optional_key(kernels, "M_S");
    KeyValue* m_b = optional_key(kernels, "M_B");

    if ((r_s != nullptr) != (r_b != nullptr))
        throw ConfigError(file.origin + ": [kernels] R_S and R_B must be given together");
    if ((m_s != nullptr) != (m_b != nullptr))
        throw ConfigError(file.origin + ": [kernels] M_S and M_B must be given together");
    if (r_s && m_s)
        throw ConfigError(file.origin + ": [kernels] give either R_S/R_B or M_S/M_B, not both");
    if (!r_s && !m_s)
        throw ConfigError(file.origin + ": [kernels] requires R_S/R_B or M_S/M_B");

    if (r_s) {
        DirectKernels direct{
            parse_expr_key(file, *r_s, "R_S", ExprSignature{"lam", "x"}),
            parse_expr_key(file, *r_b, "R_B", ExprSignature{"lam", "x"}),
        };
        return MarketSpec(std::move(seller), std::move(buyer), std::move(direct));
    }
    PrimitiveKernels primitives{
        parse_expr_key(file, *m_s, "M_S", ExprSignature{"r", "lam"}),
        parse_expr_key(file, *m_b, "M_B", ExprSignature{"r", "lam"}),
    };
    return MarketSpec(std::move(seller), std::move(buyer), std::move(primitives));
}

MarketSpec load_market(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError("cannot open market file: " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return load_market_text(buffer.str(), path.string());
}

std::optional<Command> parse_command(std::string_view name) {
    if (name == "validate") return Command::Validate;
    if (name == "solve") return Command::Solve;
    if (name == "verify") return Command::Verify;
    if (name == "simulate") return Command::Simulate;
    if (name == "report") return Command::Report;
    return std::nullopt;
}

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

std::string fmt6(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

std::ofstream open_out(const RunConfig& cfg, const std::string& name) {
    std::filesystem::create_directories(cfg.out_dir);
    std::ofstream out(cfg.out_dir / name, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write output file: " + (cfg.out_dir / name).string());
    return out;
}

void write_curve_csv(const RunConfig& cfg, const std::string& name, const char* value_column,
                     const std::vector<double>& xs, const std::vector<double>& ys) {
    std::ofstream out = open_out(cfg, name);
    out << "lambda," << value_column << "\n";
    for (std::size_t i = 0; i < xs.size(); ++i)
        out << fmt(xs[i]) << "," << fmt(ys[i]) << "\n";
}

void write_solution_files(const RunConfig& cfg, const MechanismSolution& solution) {
    write_curve_csv(cfg, "rule_seller.csv", "tau", solution.rule.seller.lambdas,
                    solution.rule.seller.taus);
    write_curve_csv(cfg, "rule_buyer.csv", "tau", solution.rule.buyer.lambdas,
                    solution.rule.buyer.taus);
    write_curve_csv(cfg, "payments_seller.csv", "phi", solution.payments.seller.lambdas,
                    solution.payments.seller.phis);
    write_curve_csv(cfg, "payments_buyer.csv", "phi", solution.payments.buyer.lambdas,
                    solution.payments.buyer.phis);

    std::ofstream out = open_out(cfg, "solution.txt");
    out << "objective = " << objective_name(solution.objective) << "\n";
    out << "delta_S = " << fmt6(solution.rule.seller.threshold) << "\n";
    out << "delta_B = " << fmt6(solution.rule.buyer.threshold) << "\n";
    out << "pattern = " << pattern_name(solution.patterns.seller.label) << " / "
        << pattern_name(solution.patterns.buyer.label) << "\n";
    out << "top_reserved = " << (solution.patterns.seller.top_reserved ? "true" : "false") << " / "
        << (solution.patterns.buyer.top_reserved ? "true" : "false") << "\n";
    out << "objective_value = " << fmt(solution.objective_value) << "\n";
    out << "revenue_by_payments = " << fmt(solution.diagnostics.revenue_by_payments) << "\n";
    out << "revenue_by_virtual = " << fmt(solution.diagnostics.revenue_by_virtual) << "\n";
    out << "tau_monotone = " << (solution.diagnostics.tau_monotone ? "true" : "false") << "\n";
    out << "reciprocity_ok = " << (solution.diagnostics.reciprocity_ok ? "true" : "false") << "\n";
    out << "reciprocity_max_err = " << fmt(solution.diagnostics.reciprocity_max_err) << "\n";
    out << "kappa_bracket_ok = " << (solution.diagnostics.kappa_bracket_ok ? "true" : "false")
        << "\n";
}

int write_validation(const RunConfig& cfg, const MarketSpec& spec) {
    const ValidationReport report = validate_spec(spec, std::max(16, cfg.grid_n / 8));
    std::ofstream out = open_out(cfg, "validation.txt");
    if (report.ok()) {
        out << "violations = 0\nverdict = PASS\n";
        return kExitOk;
    }
    out << "violations = " << report.violations.size() << "\n";
    for (const ValidationIssue& v : report.violations)
        out << v.predicate << " side=" << side_name(v.side) << " lambda=" << fmt(v.lambda_own)
            << " opponent=" << fmt(v.lambda_opp) << " : " << v.detail << "\n";
    out << "verdict = FAIL\n";
    return kExitAuditFailure;
}

int write_audit(const RunConfig& cfg, const MarketSpec& spec, const MechanismSolution& solution) {
    const AuditReport report = audit(spec, solution);
    std::ofstream out = open_out(cfg, "audit.txt");
    auto row = [&](const char* name, const std::array<double, 2>& v) {
        out << name << "_seller = " << fmt(v[0]) << "\n";
        out << name << "_buyer = " << fmt(v[1]) << "\n";
    };
    row("ic_max_gain", report.ic_max_gain);
    row("ir_min_payoff", report.ir_min_payoff);
    row("lowest_matched_payoff", report.lowest_matched_payoff);
    row("icfoc_max_rel_err", report.icfoc_max_rel_err);
    row("reciprocity_max_err", report.reciprocity_max_err);
    out << "objective_cross_err = " << fmt(report.objective_cross_err) << "\n";
    auto flag = [&](const char* name, bool ok) { out << name << " = " << (ok ? "PASS" : "FAIL") << "\n"; };
    flag("ic", report.ic_pass);
    flag("ir", report.ir_pass);
    flag("icfoc", report.icfoc_pass);
    flag("reciprocity", report.reciprocity_pass);
    flag("objective_identity", report.cross_pass);
    out << "verdict = " << (report.pass ? "PASS" : "FAIL") << "\n";
    return report.pass ? kExitOk : kExitAuditFailure;
}

void write_sim_files(const RunConfig& cfg, const SimResult& sim) {
    {
        std::ofstream out = open_out(cfg, "sim.csv");
        out << "side,type,matched_mass,utility,payment\n";
        for (Side s : {Side::Seller, Side::Buyer})
            for (const AgentRecord& a : sim.side(s).agents)
                out << side_name(s) << "," << fmt(a.type) << "," << fmt(a.matched_mass) << ","
                    << fmt(a.utility) << "," << fmt(a.payment) << "\n";
    }
    std::ofstream out = open_out(cfg, "sim_summary.txt");
    out << "seed = " << sim.seed << "\n";
    out << "n_sellers = " << sim.seller.agents.size() << "\n";
    out << "n_buyers = " << sim.buyer.agents.size() << "\n";
    out << "welfare_per_capita = " << fmt(sim.welfare_per_capita) << "\n";
    out << "welfare_std_err = " << fmt(sim.welfare_std_err) << "\n";
    out << "revenue_per_capita = " << fmt(sim.revenue_per_capita) << "\n";
    out << "revenue_std_err = " << fmt(sim.revenue_std_err) << "\n";
    for (Side s : {Side::Seller, Side::Buyer}) {
        const SimSideResult& r = sim.side(s);
        out << side_name(s) << "_mean_utility = " << fmt(r.mean_utility) << "\n";
        out << side_name(s) << "_mean_payment = " << fmt(r.mean_payment) << "\n";
        out << side_name(s) << "_matched_mass = " << fmt(r.total_matched_mass) << "\n";
    }
}

} // namespace

int run_command(Command cmd, const RunConfig& cfg) {
    try {
        const MarketSpec spec = load_market(cfg.market_path);

        if (cmd == Command::Validate)
            return write_validation(cfg, spec);

        int status = kExitOk;
        if (cmd == Command::Report)
            status = std::max(status, write_validation(cfg, spec));

        const MechanismSolution solution = solve(spec, cfg.objective, cfg.grid_n, cfg.tolerances);

        if (cmd == Command::Solve || cmd == Command::Report)
            write_solution_files(cfg, solution);
        if (cmd == Command::Verify || cmd == Command::Report)
            status = std::max(status, write_audit(cfg, spec, solution));
        if (cmd == Command::Simulate || cmd == Command::Report) {
            SimConfig sim_cfg;
            sim_cfg.n_sellers = cfg.n_sellers;
            sim_cfg.n_buyers = cfg.n_buyers;
            sim_cfg.seed = cfg.seed;
            write_sim_files(cfg, simulate(spec, solution, sim_cfg));
        }

        if (cmd == Command::Report) {
            std::ofstream out = open_out(cfg, "report.txt");
            out << "market = " << cfg.market_path.filename().string() << "\n";
            out << "objective = " << objective_name(cfg.objective) << "\n";
            out << "grid_n = " << cfg.grid_n << "\n";
            out << "status = " << (status == kExitOk ? "PASS" : "FAIL") << "\n";
            out << "outputs = validation.txt solution.txt audit.txt sim_summary.txt\n";
        }
        return status;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInputError;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInputError;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInputError;
    } catch (const NumericsError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumericalFailure;
    } catch (const EvalError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumericalFailure;
    } catch (const DomainError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumericalFailure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumericalFailure;
    }
}

} // namespace datamkt
