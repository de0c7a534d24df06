#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mmh/config.hpp"

namespace mmh::cli {

// Stable exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // validation or domain failure
inline constexpr int kExitUsage = 2;    // usage or parse failure

struct SolveArgs {
    std::string config;
    std::size_t t_grid = 50;  // number of intervals on [0, T]
    std::string out;          // empty: standard output
};

struct SimulateArgs {
    std::string config;
    std::optional<std::size_t> paths;
    std::optional<std::size_t> steps_per_year;
    std::optional<std::uint64_t> seed;
    std::string strategy = "optimal";  // or const:<weight>
    std::string out;
    std::string hist_out;
    std::size_t bins = 30;
    double overflow_at = 150.0;
    std::string dump;
};

struct DiagnoseArgs {
    std::string config;
    std::vector<double> checkpoints;  // empty: 0, 1, ..., floor(T)
    std::optional<std::size_t> paths;
    std::optional<std::uint64_t> seed;
    std::string strategy = "optimal";
    std::string out;
};

struct CompareArgs {
    std::string config;
    std::optional<std::size_t> paths;
    std::string out;
};

int cmd_validate(const std::string& config, std::ostream& out, std::ostream& err);
int cmd_solve(const SolveArgs& args, std::ostream& out, std::ostream& err);
int cmd_simulate(const SimulateArgs& args, std::ostream& out, std::ostream& err);
int cmd_diagnose(const DiagnoseArgs& args, std::ostream& out, std::ostream& err);
int cmd_compare(const CompareArgs& args, std::ostream& out, std::ostream& err);

// Parses "optimal" or "const:<weight>"; throws ConfigError.
StrategyFn parse_strategy(const std::string& text, const HestonRegimeParams& p);

// Argument parsing and dispatch for the command-line tool.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace mmh::cli
