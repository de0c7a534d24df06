#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mmh/markov_chain.hpp"
#include "mmh/models.hpp"
#include "mmh/regime_expectation.hpp"
#include "mmh/statistics.hpp"
#include "mmh/value_strategy.hpp"

namespace mmh {

struct SimConfig {
    std::size_t n_paths = 100'000;
    std::size_t steps_per_year = 250;
    double horizon = 0.0;  // 0: the model horizon
    std::uint64_t seed = 1;
    double v0 = 1.0;
    double x0 = 0.0;
    std::size_t state0 = 0;
    std::size_t workers = 0;  // 0: hardware concurrency

    // Each step draws this many normal pairs and uses their scaled sum. A run
    // with step 2h and substeps 2 shares its Brownian path with a run at step
    // h, which makes step-size comparisons coupled.
    std::size_t brownian_substeps = 1;

    // Times whose per-path state is kept (snapped to the step grid); t = 0 and
    // the horizon are always recorded.
    std::vector<double> record_times;
    bool record_all_steps = false;

    // Replaces the simulated chain by a fixed path starting at 0.
    std::optional<RegimePath> frozen_path;

    // Throws ConfigError.
    void validate(const HestonRegimeParams& p) const;
    double effective_horizon(const HestonRegimeParams& p) const;
    std::size_t n_steps(const HestonRegimeParams& p) const;
};

// Simulated paths at the recorded grid points, path-major:
// element (path i, record k) sits at i * n_records() + k.
struct PathBundle {
    double dt = 0.0;
    std::vector<double> step_times;          // full grid t_0 .. t_N
    std::vector<std::size_t> record_steps;   // ascending indices into step_times
    std::size_t n_paths = 0;
    std::uint64_t seed = 0;                  // path i uses stream (seed, i)

    std::vector<std::size_t> state;  // chain state at the record time (0-based)
    std::vector<double> factor;      // X, truncated at zero
    std::vector<double> asset;       // P1 with P1(0) = 1
    std::vector<double> wealth;      // V

    std::size_t n_records() const { return record_steps.size(); }
    double record_time(std::size_t k) const { return step_times[record_steps[k]]; }
    std::size_t index(std::size_t path, std::size_t k) const { return path * n_records() + k; }
    // Record index of time t; throws InvalidInput if t is not recorded.
    std::size_t record_of(double t) const;
    std::vector<double> terminal_wealth() const;
};

// Euler-type simulation of chain, factor, asset and wealth under the given
// strategy, rebalanced every step. Throws ConfigError on invalid input.
PathBundle simulate_paths(const HestonRegimeParams& p, const MarkovChainSpec& chain,
                          const StrategyFn& strategy, const SimConfig& cfg);

// Mean and standard error of U(V(T)).
McEstimate expected_utility_mc(const PathBundle& bundle, double delta);

struct Histogram {
    std::vector<double> edges;
    std::vector<std::size_t> counts;  // counts[j] for [edges[j], edges[j+1])
    std::size_t underflow = 0;        // below edges.front()
    std::size_t overflow = 0;         // at or above edges.back()
    double q05 = 0.0;
    double q95 = 0.0;

    // Columns bin_lo, bin_hi, count; the under/overflow bins use -inf/inf.
    void write_csv(std::ostream& out) const;
};

// Empirical quantile, the smallest sample with CDF >= level.
double empirical_quantile(std::vector<double> samples, double level);

Histogram terminal_wealth_histogram(const PathBundle& bundle, const std::vector<double>& edges);

struct MartingalePoint {
    double t = 0.0;
    double mean_phi = 0.0;
    double std_err = 0.0;
    double z_score = 0.0;  // (mean_phi - phi0) / std_err, 0 when std_err = 0
};

// Value function of a separable model evaluated along simulated paths at the
// checkpoints, compared with its value at the start. cfg.record_times is
// replaced by the checkpoints.
std::vector<MartingalePoint> martingale_diagnostic(const HestonRegimeParams& p,
                                                   const MarkovChainSpec& chain, const XiTable& xi,
                                                   const SimConfig& cfg,
                                                   const std::vector<double>& checkpoints,
                                                   const StrategyFn& strategy);

// Same with the optimal strategy.
std::vector<MartingalePoint> martingale_diagnostic(const HestonRegimeParams& p,
                                                   const MarkovChainSpec& chain, const XiTable& xi,
                                                   const SimConfig& cfg,
                                                   const std::vector<double>& checkpoints);

// nu(state)^2 X on every recorded point, laid out like the bundle arrays.
std::vector<double> variance_observable(const PathBundle& bundle, const HestonRegimeParams& p);

// Binary path dump: "RAPB1", uint64 n_paths, uint64 n_times, uint64 n_fields,
// each field name as uint64 length + bytes, n_times record times, then per
// path and field n_times values. All numbers little endian; states are stored
// 1-based as doubles.
inline const std::vector<std::string> kDumpFields{"state", "X", "P1", "V"};

void write_path_dump(std::ostream& out, const PathBundle& bundle);

struct PathDump {
    std::size_t n_paths = 0;
    std::vector<std::string> fields;
    std::vector<double> times;
    std::vector<double> data;  // [path][field][time]

    double at(std::size_t path, std::size_t field, std::size_t k) const
    {
        return data[(path * fields.size() + field) * times.size() + k];
    }
};

// Throws InvalidInput on a malformed stream.
PathDump read_path_dump(std::istream& in);

// Simulates in blocks of block_size paths recording every step and appends
// each block to the dump, so memory stays bounded for large path counts.
// Produces the same bytes as write_path_dump of a single full run.
void stream_path_dump(std::ostream& out, const HestonRegimeParams& p, const MarkovChainSpec& chain,
                      const StrategyFn& strategy, const SimConfig& cfg,
                      std::size_t block_size = 10'000);

}  // namespace mmh
