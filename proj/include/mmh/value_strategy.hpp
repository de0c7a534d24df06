#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

#include "mmh/markov_chain.hpp"
#include "mmh/models.hpp"
#include "mmh/regime_expectation.hpp"
#include "mmh/riccati.hpp"
#include "mmh/statistics.hpp"

namespace mmh {

struct ValueQuery {
    double t = 0.0;
    double v = 1.0;  // wealth, > 0
    double x = 0.0;  // factor level, >= 0
    std::size_t state = 0;

    // Throws InvalidInput when t is outside [0, horizon], v <= 0 or x < 0.
    void validate(double horizon, std::size_t n_states) const;
};

// pi_total = pi_mv + pi_h.
struct StrategyPoint {
    double pi_mv = 0.0;
    double pi_h = 0.0;
    double pi_total = 0.0;
};

// Value of the time-dependent model induced by a fixed chain path:
//   U(v) exp(int_t^T delta r(m(s)) ds) exp(vartheta A^m(t) + vartheta B^m(t) x).
// The path must start at or before q.t and end at the horizon.
double value_timedep_heston(const HestonRegimeParams& p, const RegimePath& path, const ValueQuery& q);

// Same, reusing an already composed PiecewiseAB for the path.
double value_timedep_heston(const HestonRegimeParams& p, const RegimePath& path,
                            const PiecewiseAB& coeffs, const ValueQuery& q);

struct PartialMcOptions {
    std::size_t n_paths = 10'000;
    std::uint64_t seed = 1;
    std::size_t workers = 0;
};

// MMH with rho = 0: average of the path-wise values over simulated chain
// paths started in q.state at q.t. Only the chain is simulated.
McEstimate value_mmh_general(const HestonRegimeParams& p, const MarkovChainSpec& chain,
                             const ValueQuery& q, const PartialMcOptions& options);

// U(v) xi_bar(t, e) exp(B(t) x) for SMMH.
double value_smmh(const HestonRegimeParams& p, const ValueQuery& q, const XiTable& xi);

// U(v) xi(t, e) exp(D(t) x) for SMMH_RHO.
double value_smmh_rho(const HestonRegimeParams& p, const ValueQuery& q, const XiTable& xi);

// Dispatches to value_smmh or value_smmh_rho.
double value_separable(const HestonRegimeParams& p, const ValueQuery& q, const XiTable& xi);

// Optimal weight in the risky asset for the Markov-switching model. Defined
// for the separable variants and for MMH with rho = 0; for MMH with rho != 0
// the optimum depends on the whole chain path (use the PiecewiseAB overload).
StrategyPoint optimal_strategy(const HestonRegimeParams& p, double t, std::size_t state);

// Optimal weight in the time-dependent model of a fixed path.
StrategyPoint optimal_strategy(const HestonRegimeParams& p, const PiecewiseAB& coeffs, double t,
                               std::size_t state);

// Weight in the risky asset as a function of (t, state).
using StrategyFn = std::function<double(double, std::size_t)>;

// pi_total of optimal_strategy with the closed-form coefficient precomputed,
// cheap enough to call once per simulation step.
StrategyFn optimal_policy(const HestonRegimeParams& p);

// Constant weight in every state.
StrategyFn constant_policy(double weight);

// Columns t, state, pi_mv, pi_h, pi_total on the given times (states 1-based).
void write_strategy_csv(std::ostream& out, const HestonRegimeParams& p, const std::vector<double>& times);

}  // namespace mmh
