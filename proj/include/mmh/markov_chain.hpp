#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "mmh/random.hpp"

namespace mmh {

// Finite-state continuous-time Markov chain given by its intensity matrix.
// States are 0-based internally; files and CSV output use 1-based labels.
class MarkovChainSpec {
public:
    std::size_t n_states() const { return static_cast<std::size_t>(intensity_.rows()); }
    const Eigen::MatrixXd& intensity() const { return intensity_; }
    double rate(std::size_t i, std::size_t j) const { return intensity_(i, j); }
    // Total rate of leaving state i, -q_ii.
    double exit_rate(std::size_t i) const { return -intensity_(i, i); }

private:
    friend MarkovChainSpec validate_intensity(const Eigen::MatrixXd& matrix);
    explicit MarkovChainSpec(Eigen::MatrixXd q) : intensity_(std::move(q)) {}
    Eigen::MatrixXd intensity_;
};

inline constexpr double kRowSumTolerance = 1e-12;

// Throws NegativeRate, RowSumNonZero or InvalidInput (non-square / empty).
MarkovChainSpec validate_intensity(const Eigen::MatrixXd& matrix);

// Piecewise-constant path of the chain on [start, horizon]. states[0] holds on
// [start, jump_times[0]), states[j] on [jump_times[j-1], jump_times[j]), and the
// last state up to the horizon.
struct RegimePath {
    double start = 0.0;
    double horizon = 0.0;
    std::vector<double> jump_times;
    std::vector<std::size_t> states;

    std::size_t n_jumps() const { return jump_times.size(); }
    std::size_t n_segments() const { return states.size(); }
    double segment_begin(std::size_t j) const { return j == 0 ? start : jump_times[j - 1]; }
    double segment_end(std::size_t j) const { return j < jump_times.size() ? jump_times[j] : horizon; }
    // Index of the segment containing t; right-continuous at jump times.
    std::size_t segment_at(double t) const;
    std::size_t state_at(double t) const { return states[segment_at(t)]; }

    // Path that never leaves `state` on [start, horizon].
    static RegimePath constant(std::size_t state, double start, double horizon);
    // Checks ordering, state changes and bounds; throws InvalidInput.
    void validate(std::size_t n_states) const;
};

// Holding times are Exponential(-q_ii), the next state is drawn with
// probability q_ij / (-q_ii); absorbing states never jump.
RegimePath sample_path(const MarkovChainSpec& spec, double t0, double horizon,
                       std::size_t state0, PathStream& stream);

// exp(Q t) by scaling and squaring. The series runs on the shifted matrix
// Q + lambda*I (lambda = max exit rate), whose terms are all nonnegative.
Eigen::MatrixXd transition_probabilities(const MarkovChainSpec& spec, double t);

// Per-state integrand g(s, state).
using RegimeFunction = std::function<double(double, std::size_t)>;

// Sum over the path segments of the integral of g(., m_j) on [t, u] ∩ segment j.
// Each piece is integrated by adaptive Gauss-Kronrod (relative tolerance 1e-11;
// tighter targets stall on round-off for short segments).
double occupation_integral(const RegimePath& path, const RegimeFunction& g,
                           double t, double u);

}  // namespace mmh
