#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

#include "mmh/markov_chain.hpp"
#include "mmh/models.hpp"
#include "mmh/statistics.hpp"

namespace mmh {

// upsilon(t, e) in xi(t, e) = E[exp(int_t^T upsilon(s, MC(s)) ds) | MC(t) = e].
struct RegimeIntegrand {
    std::size_t n_states = 0;
    double horizon = 0.0;
    RegimeFunction upsilon;

    double operator()(double t, std::size_t e) const { return upsilon(t, e); }
};

// upsilon(t, e) = delta r(e) + coeff(t) kappa(e) theta(e), with coeff the
// D (leverage) or B (no leverage) evaluator.
RegimeIntegrand upsilon_heston(const HestonRegimeParams& p, std::function<double(double)> coeff);

// upsilon_heston with the closed-form coefficient of a separable variant.
RegimeIntegrand upsilon_heston(const HestonRegimeParams& p);

enum class XiMethod { MC, ODE };

const char* to_string(XiMethod m);

// xi on an ascending time grid; values[k][e].
struct XiTable {
    std::vector<double> t;
    std::vector<std::vector<double>> values;
    std::vector<std::vector<double>> std_err;  // filled for MC only
    XiMethod method = XiMethod::ODE;

    std::size_t n_states() const { return values.empty() ? 0 : values.front().size(); }
    // Linear interpolation in t.
    double value(double time, std::size_t state) const;
    double error(double time, std::size_t state) const;

    // Columns t, state, xi, std_err, method. States are written 1-based.
    void write_csv(std::ostream& out) const;
};

struct XiMcOptions {
    std::size_t n_paths = 10'000;
    std::uint64_t seed = 1;
    std::size_t workers = 0;  // 0: hardware concurrency
};

// Sample mean of exp(occupation integral) over independent chain paths
// started in `state` at time t. Deterministic for fixed (seed, n_paths).
McEstimate xi_mc(const MarkovChainSpec& spec, const RegimeIntegrand& integrand, double t,
                 std::size_t state, const XiMcOptions& options);

// xi_mc at every grid time and state, collected as an MC-tagged table.
XiTable xi_mc_table(const MarkovChainSpec& spec, const RegimeIntegrand& integrand,
                    const std::vector<double>& times, const XiMcOptions& options);

// Backward RK4 for d xi/dt = -upsilon xi - Q xi, xi(T) = 1. A step that loses
// positivity or finiteness is retried with halved substeps; below 1e-10 the
// integrator throws StepFailure. grid_step <= 0 selects T / 5000.
XiTable xi_ode(const MarkovChainSpec& spec, const RegimeIntegrand& integrand,
               double grid_step = 0.0);

}  // namespace mmh
