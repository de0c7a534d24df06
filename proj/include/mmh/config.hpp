#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>

#include <Eigen/Dense>

#include "mmh/markov_chain.hpp"
#include "mmh/models.hpp"
#include "mmh/regime_expectation.hpp"
#include "mmh/simulate.hpp"

namespace mmh {

// Everything a CLI run needs, read from a flat sectioned key = value file:
//
//   [model]    variant, r.i, nu.i, kappa(.i), theta.i, chi(.i), d or
//              lambda_hat.i, rho, delta, horizon, optional n_states
//   [chain]    q.i.j for i != j (diagonal optional, must match -row sum)
//   [initial]  v0, x0, state0 (1-based)
//   [solver]   xi_method (ode | mc), grid_step, n_paths_xi, seed
//   [sim]      n_paths, steps_per_year, seed, workers
//
// A key without an index is broadcast to every state.
struct RunConfig {
    HestonRegimeParams model;
    MarkovChainSpec chain = validate_intensity(Eigen::MatrixXd::Zero(1, 1));
    double v0 = 1.0;
    double x0 = 0.0;
    std::size_t state0 = 0;  // 0-based

    XiMethod xi_method = XiMethod::ODE;
    double grid_step = 0.0;  // 0: T / 5000
    std::size_t n_paths_xi = 10'000;
    std::uint64_t solver_seed = 1;

    std::size_t sim_paths = 100'000;
    std::size_t steps_per_year = 250;
    std::uint64_t sim_seed = 1;
    std::size_t workers = 0;

    std::string hash;  // FNV-1a of the file bytes, 16 hex digits

    SimConfig sim_config() const;
};

std::uint64_t fnv1a(const std::string& bytes);

// Throws ConfigError with a "line N:" prefix; structural model or chain
// problems point at the section header.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

}  // namespace mmh
