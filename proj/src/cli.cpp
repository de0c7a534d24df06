#include "mmh/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <memory>
#include <ostream>
#include <set>

#include <CLI11.hpp>

#include "mmh/errors.hpp"
#include "mmh/regime_expectation.hpp"
#include "mmh/riccati.hpp"
#include "mmh/simulate.hpp"
#include "mmh/value_strategy.hpp"

namespace mmh::cli {

namespace {

// Maps library exceptions onto the exit-code contract.
int guarded(std::ostream& err, const std::function<int()>& body)
{
    try {
        return body();
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
}

// Output file or the given stream.
class Sink {
public:
    Sink(const std::string& path, std::ostream& fallback, std::ios::openmode mode = std::ios::out)
    {
        if (path.empty() || path == "-") {
            stream_ = &fallback;
        } else {
            file_ = std::make_unique<std::ofstream>(path, mode);
            if (!*file_) throw ConfigError("cannot open output file '" + path + "'");
            stream_ = file_.get();
        }
        *stream_ << std::setprecision(17);
    }
    std::ostream& operator*() { return *stream_; }

private:
    std::unique_ptr<std::ofstream> file_;
    std::ostream* stream_ = nullptr;
};

void provenance(std::ostream& os, const RunConfig& cfg, std::uint64_t seed)
{
    os << "# config_hash=" << cfg.hash << " seed=" << seed << '\n';
}

// Loads the config and checks Feller and the solvability conditions.
RunConfig load_checked(const std::string& path)
{
    RunConfig cfg = load_config(path);
    require_feller(cfg.model);
    require_solution_assumptions(cfg.model);
    return cfg;
}

std::vector<double> merged(std::vector<double> times, std::vector<double> extra)
{
    times.insert(times.end(), extra.begin(), extra.end());
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
    return times;
}

// xi for a separable model on the config's method; MC only evaluates at `times`.
XiTable compute_xi(const RunConfig& cfg, const std::vector<double>& times)
{
    const RegimeIntegrand f = upsilon_heston(cfg.model);
    if (cfg.xi_method == XiMethod::ODE) return xi_ode(cfg.chain, f, cfg.grid_step);
    return xi_mc_table(cfg.chain, f, times, {cfg.n_paths_xi, cfg.solver_seed, cfg.workers});
}

std::vector<double> uniform_grid(double horizon, std::size_t intervals)
{
    std::vector<double> t(intervals + 1);
    for (std::size_t k = 0; k <= intervals; ++k) {
        t[k] = horizon * static_cast<double>(k) / static_cast<double>(intervals);
    }
    t.back() = horizon;
    return t;
}

}  // namespace

StrategyFn parse_strategy(const std::string& text, const HestonRegimeParams& p)
{
    if (text == "optimal") return optimal_policy(p);
    const std::string prefix = "const:";
    if (text.rfind(prefix, 0) == 0) {
        const std::string num = text.substr(prefix.size());
        char* end = nullptr;
        const double w = std::strtod(num.c_str(), &end);
        if (num.empty() || *end != '\0' || !std::isfinite(w)) {
            throw ConfigError("bad constant weight in strategy '" + text + "'");
        }
        return constant_policy(w);
    }
    throw ConfigError("strategy must be 'optimal' or 'const:<weight>', got '" + text + "'");
}

int cmd_validate(const std::string& config, std::ostream& out, std::ostream& err)
{
    return guarded(err, [&] {
        const RunConfig cfg = load_config(config);
        const auto& p = cfg.model;
        out << std::setprecision(17);
        out << "variant " << to_string(p.variant) << ", " << p.n_states() << " states, vartheta "
            << p.vartheta() << '\n';
        const ValidationReport feller = validate_feller(p);
        const ValidationReport solution = validate_solution_assumptions(p);
        for (const auto* report : {&feller, &solution}) {
            for (const auto& c : report->checks) {
                out << (c.passed ? "PASS " : "FAIL ") << c.name;
                if (c.state) out << " state " << *c.state + 1;
                out << ": " << c.lhs << ' ' << c.relation << ' ' << c.rhs << '\n';
            }
        }
        if (!feller.ok()) err << "FellerViolated: " << feller.describe_failures() << '\n';
        if (!solution.ok()) err << "AssumptionViolated: " << solution.describe_failures() << '\n';
        if (!feller.ok() || !solution.ok()) return kExitFailure;
        out << "all checks passed\n";
        return kExitOk;
    });
}

int cmd_solve(const SolveArgs& args, std::ostream& out, std::ostream& err)
{
    return guarded(err, [&] {
        if (args.t_grid == 0) throw ConfigError("--t-grid must be at least 1");
        const RunConfig cfg = load_checked(args.config);
        const auto& p = cfg.model;
        const auto times = uniform_grid(p.horizon, args.t_grid);
        Sink sink(args.out, out);
        auto& os = *sink;
        provenance(os, cfg, cfg.solver_seed);
        os << "t,state,phi,xi,D_or_B,pi_mv,pi_h,pi_total\n";

        if (p.variant == Variant::MMH) {
            // Only the chain is random; xi and the separable coefficient do not exist.
            const PartialMcOptions mc{cfg.n_paths_xi, cfg.solver_seed, cfg.workers};
            for (double t : times) {
                for (std::size_t e = 0; e < p.n_states(); ++e) {
                    const auto phi = value_mmh_general(p, cfg.chain, {t, cfg.v0, cfg.x0, e}, mc);
                    const auto s = optimal_strategy(p, t, e);
                    os << t << ',' << e + 1 << ',' << phi.mean << ",,," << s.pi_mv << ',' << s.pi_h
                       << ',' << s.pi_total << '\n';
                }
            }
            return kExitOk;
        }

        const XiTable xi = compute_xi(cfg, times);
        const SeparableCoefficient coeff(p);
        for (double t : times) {
            for (std::size_t e = 0; e < p.n_states(); ++e) {
                const double phi = value_separable(p, {t, cfg.v0, cfg.x0, e}, xi);
                const auto s = optimal_strategy(p, t, e);
                os << t << ',' << e + 1 << ',' << phi << ',' << xi.value(t, e) << ',' << coeff(t) << ','
                   << s.pi_mv << ',' << s.pi_h << ',' << s.pi_total << '\n';
            }
        }
        return kExitOk;
    });
}

int cmd_simulate(const SimulateArgs& args, std::ostream& out, std::ostream& err)
{
    return guarded(err, [&] {
        if (args.bins == 0) throw ConfigError("--bins must be at least 1");
        if (!(args.overflow_at > 0.0)) throw ConfigError("--overflow-at must be positive");
        const RunConfig cfg = load_checked(args.config);
        const auto& p = cfg.model;
        SimConfig sim = cfg.sim_config();
        if (args.paths) sim.n_paths = *args.paths;
        if (args.steps_per_year) sim.steps_per_year = *args.steps_per_year;
        if (args.seed) sim.seed = *args.seed;
        const StrategyFn strategy = parse_strategy(args.strategy, p);

        const auto start = std::chrono::steady_clock::now();
        const PathBundle bundle = simulate_paths(p, cfg.chain, strategy, sim);
        const McEstimate eu = expected_utility_mc(bundle, p.delta);
        const double runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

        std::vector<double> edges(args.bins + 1);
        for (std::size_t j = 0; j <= args.bins; ++j) {
            edges[j] = args.overflow_at * static_cast<double>(j) / static_cast<double>(args.bins);
        }
        const Histogram hist = terminal_wealth_histogram(bundle, edges);

        Sink sink(args.out, out);
        auto& os = *sink;
        provenance(os, cfg, sim.seed);
        os << "n_paths,steps_per_year,strategy,mean,std_err,q05,q95,runtime_s\n";
        os << sim.n_paths << ',' << sim.steps_per_year << ',' << args.strategy << ',' << eu.mean << ',';
        if (eu.n > 1) os << eu.std_err;
        os << ',' << hist.q05 << ',' << hist.q95 << ',' << runtime << '\n';

        if (!args.hist_out.empty()) {
            Sink hs(args.hist_out, out);
            provenance(*hs, cfg, sim.seed);
            hist.write_csv(*hs);
        }
        if (!args.dump.empty()) {
            Sink ds(args.dump, out, std::ios::out | std::ios::binary);
            stream_path_dump(*ds, p, cfg.chain, strategy, sim);
        }
        return kExitOk;
    });
}

int cmd_diagnose(const DiagnoseArgs& args, std::ostream& out, std::ostream& err)
{
    return guarded(err, [&] {
        const RunConfig cfg = load_checked(args.config);
        const auto& p = cfg.model;
        if (p.variant == Variant::MMH) throw DomainViolation("diagnose needs a separable variant");
        std::vector<double> checkpoints = args.checkpoints;
        if (checkpoints.empty()) {
            for (double t = 0.0; t <= p.horizon + 1e-12; t += 1.0) checkpoints.push_back(std::min(t, p.horizon));
        }
        for (double t : checkpoints) {
            if (!(t >= 0.0 && t <= p.horizon)) throw ConfigError("checkpoint outside [0, T]");
        }
        SimConfig sim = cfg.sim_config();
        if (args.paths) sim.n_paths = *args.paths;
        if (args.seed) sim.seed = *args.seed;
        const XiTable xi = compute_xi(cfg, merged(checkpoints, {0.0}));
        const auto series =
            martingale_diagnostic(p, cfg.chain, xi, sim, checkpoints, parse_strategy(args.strategy, p));

        Sink sink(args.out, out);
        auto& os = *sink;
        provenance(os, cfg, sim.seed);
        os << "t,mean_phi,std_err,z_score\n";
        for (const auto& m : series) os << m.t << ',' << m.mean_phi << ',' << m.std_err << ',' << m.z_score << '\n';
        return kExitOk;
    });
}

int cmd_compare(const CompareArgs& args, std::ostream& out, std::ostream& err)
{
    return guarded(err, [&] {
        const RunConfig cfg = load_checked(args.config);
        const auto& p = cfg.model;
        if (p.variant == Variant::MMH) throw DomainViolation("compare needs a separable variant");
        const ValueQuery q0{0.0, cfg.v0, cfg.x0, cfg.state0};
        const RegimeIntegrand f = upsilon_heston(p);

        const double phi_ode = value_separable(p, q0, xi_ode(cfg.chain, f, cfg.grid_step));
        const XiTable xi_mc = xi_mc_table(cfg.chain, f, {0.0}, {cfg.n_paths_xi, cfg.solver_seed, cfg.workers});
        const double phi_mc = value_separable(p, q0, xi_mc);
        const double phi_mc_err = phi_mc / xi_mc.value(0.0, cfg.state0) * xi_mc.error(0.0, cfg.state0);

        SimConfig sim = cfg.sim_config();
        if (args.paths) sim.n_paths = *args.paths;
        const auto eu = expected_utility_mc(simulate_paths(p, cfg.chain, optimal_policy(p), sim), p.delta);

        Sink sink(args.out, out);
        auto& os = *sink;
        provenance(os, cfg, sim.seed);
        os << "method,phi,std_err,z_vs_ode\n";
        os << "formula_ode," << phi_ode << ",0,0\n";
        auto z = [&](double v, double se) { return se > 0.0 ? (v - phi_ode) / se : 0.0; };
        os << "formula_xi_mc," << phi_mc << ',' << std::abs(phi_mc_err) << ',' << z(phi_mc, std::abs(phi_mc_err)) << '\n';
        os << "full_mc," << eu.mean << ',' << eu.std_err << ',' << z(eu.mean, eu.std_err) << '\n';
        return kExitOk;
    });
}

int run(int argc, char** argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Portfolio optimisation in a Markov-modulated Heston market"};
    app.require_subcommand(1);

    std::string validate_cfg;
    auto* validate = app.add_subcommand("validate", "Check Feller and solvability conditions");
    validate->add_option("config", validate_cfg, "Config file")->required();

    SolveArgs solve_args;
    auto* solve = app.add_subcommand("solve", "Value function and optimal strategy on a time grid");
    solve->add_option("config", solve_args.config, "Config file")->required();
    solve->add_option("--t-grid", solve_args.t_grid, "Number of intervals on [0, T]");
    solve->add_option("--out", solve_args.out, "Output CSV (default: stdout)");

    SimulateArgs sim_args;
    auto* simulate = app.add_subcommand("simulate", "Full Monte Carlo of the wealth process");
    simulate->add_option("config", sim_args.config, "Config file")->required();
    simulate->add_option("--paths", sim_args.paths, "Number of paths");
    simulate->add_option("--steps-per-year", sim_args.steps_per_year, "Time steps per year");
    simulate->add_option("--seed", sim_args.seed, "Random seed");
    simulate->add_option("--strategy", sim_args.strategy, "optimal or const:<weight>");
    simulate->add_option("--out", sim_args.out, "Expected-utility CSV (default: stdout)");
    simulate->add_option("--hist-out", sim_args.hist_out, "Terminal wealth histogram CSV");
    simulate->add_option("--bins", sim_args.bins, "Histogram bins below the overflow threshold");
    simulate->add_option("--overflow-at", sim_args.overflow_at, "Wealth collected in the last bar");
    simulate->add_option("--dump", sim_args.dump, "Binary path dump");

    DiagnoseArgs diag_args;
    auto* diagnose = app.add_subcommand("diagnose", "Martingale check of the value process");
    diagnose->add_option("config", diag_args.config, "Config file")->required();
    diagnose->add_option("--checkpoints", diag_args.checkpoints, "Comma-separated times")->delimiter(',');
    diagnose->add_option("--paths", diag_args.paths, "Number of paths");
    diagnose->add_option("--seed", diag_args.seed, "Random seed");
    diagnose->add_option("--strategy", diag_args.strategy, "optimal or const:<weight>");
    diagnose->add_option("--out", diag_args.out, "Output CSV (default: stdout)");

    CompareArgs cmp_args;
    auto* compare = app.add_subcommand("compare", "Formula value against full simulation");
    compare->add_option("config", cmp_args.config, "Config file")->required();
    compare->add_option("--paths", cmp_args.paths, "Number of simulated paths");
    compare->add_option("--out", cmp_args.out, "Output CSV (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    if (*validate) return cmd_validate(validate_cfg, out, err);
    if (*solve) return cmd_solve(solve_args, out, err);
    if (*simulate) return cmd_simulate(sim_args, out, err);
    if (*diagnose) return cmd_diagnose(diag_args, out, err);
    if (*compare) return cmd_compare(cmp_args, out, err);
    return kExitUsage;
}

}  // namespace mmh::cli
