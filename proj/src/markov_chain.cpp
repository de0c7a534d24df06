#include "mmh/markov_chain.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "mmh/errors.hpp"

namespace mmh {

MarkovChainSpec validate_intensity(const Eigen::MatrixXd& matrix)
{
    if (matrix.rows() == 0 || matrix.rows() != matrix.cols()) {
        throw InvalidInput("intensity matrix must be square and non-empty");
    }
    const auto n = matrix.rows();
    for (Eigen::Index i = 0; i < n; ++i) {
        double row_sum = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) {
            const double q = matrix(i, j);
            if (!std::isfinite(q)) throw InvalidInput("intensity matrix has a non-finite entry");
            if (i != j && q < 0.0) {
                std::ostringstream msg;
                msg << "negative rate q(" << i + 1 << "," << j + 1 << ") = " << q;
                throw NegativeRate(msg.str());
            }
            row_sum += q;
        }
        if (std::abs(row_sum) > kRowSumTolerance) {
            std::ostringstream msg;
            msg << "row " << i + 1 << " of the intensity matrix sums to " << row_sum;
            throw RowSumNonZero(msg.str());
        }
    }
    return MarkovChainSpec(matrix);
}

std::size_t RegimePath::segment_at(double t) const
{
    // first jump strictly greater than t
    const auto it = std::upper_bound(jump_times.begin(), jump_times.end(), t);
    return static_cast<std::size_t>(it - jump_times.begin());
}

RegimePath RegimePath::constant(std::size_t state, double start, double horizon)
{
    RegimePath path;
    path.start = start;
    path.horizon = horizon;
    path.states.push_back(state);
    return path;
}

void RegimePath::validate(std::size_t n_states) const
{
    if (!(start <= horizon)) throw InvalidInput("regime path start exceeds its horizon");
    if (states.size() != jump_times.size() + 1) {
        throw InvalidInput("regime path needs exactly one more state than jump times");
    }
    double prev = start;
    for (double t : jump_times) {
        if (!(t > prev) || t > horizon) {
            throw InvalidInput("regime path jump times must be strictly increasing within (start, horizon]");
        }
        prev = t;
    }
    for (std::size_t j = 0; j < states.size(); ++j) {
        if (states[j] >= n_states) throw InvalidInput("regime path state out of range");
        if (j > 0 && states[j] == states[j - 1]) {
            throw InvalidInput("consecutive regime path states must differ");
        }
    }
}

RegimePath sample_path(const MarkovChainSpec& spec, double t0, double horizon,
                       std::size_t state0, PathStream& stream)
{
    if (!(t0 < horizon)) throw InvalidInput("sample_path requires t0 < horizon");
    if (state0 >= spec.n_states()) throw InvalidInput("initial state out of range");

    RegimePath path = RegimePath::constant(state0, t0, horizon);
    std::size_t state = state0;
    double t = t0;
    while (true) {
        const double exit_rate = spec.exit_rate(state);
        if (exit_rate <= 0.0) break;  // absorbing
        t += stream.exponential(exit_rate);
        if (t > horizon) break;

        const double target = stream.uniform() * exit_rate;
        std::size_t next = state;
        double acc = 0.0;
        for (std::size_t j = 0; j < spec.n_states(); ++j) {
            if (j == state) continue;
            const double q = spec.rate(state, j);
            if (q <= 0.0) continue;
            acc += q;
            next = j;
            if (target < acc) break;
        }
        path.jump_times.push_back(t);
        path.states.push_back(next);
        state = next;
    }
    return path;
}

Eigen::MatrixXd transition_probabilities(const MarkovChainSpec& spec, double t)
{
    if (!(t >= 0.0)) throw InvalidInput("transition_probabilities requires t >= 0");
    const auto n = static_cast<Eigen::Index>(spec.n_states());
    const Eigen::MatrixXd& q = spec.intensity();

    double lambda = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) lambda = std::max(lambda, -q(i, i));
    if (lambda == 0.0 || t == 0.0) return Eigen::MatrixXd::Identity(n, n);

    // exp(Qt) = exp(-lambda t) exp(M t), M = Q + lambda I >= 0 entrywise.
    const Eigen::MatrixXd m = (q + lambda * Eigen::MatrixXd::Identity(n, n)) * t;
    const double norm = m.cwiseAbs().rowwise().sum().maxCoeff();
    int squarings = 0;
    if (norm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
    const double scale = std::ldexp(1.0, -squarings);
    const Eigen::MatrixXd a = m * scale;

    Eigen::MatrixXd result = Eigen::MatrixXd::Identity(n, n);
    Eigen::MatrixXd term = Eigen::MatrixXd::Identity(n, n);
    for (int k = 1; k < 64; ++k) {
        term = term * a / static_cast<double>(k);
        result += term;
        if (term.cwiseAbs().maxCoeff() < 1e-16) break;
    }
    result *= std::exp(-lambda * t * scale);
    for (int s = 0; s < squarings; ++s) result = result * result;
    return result;
}

double occupation_integral(const RegimePath& path, const RegimeFunction& g,
                           double t, double u)
{
    if (!(t <= u)) throw InvalidInput("occupation_integral requires t <= u");
    if (t < path.start || u > path.horizon) {
        throw InvalidInput("occupation_integral interval outside the path");
    }
    using boost::math::quadrature::gauss_kronrod;
    double total = 0.0;
    for (std::size_t j = 0; j < path.n_segments(); ++j) {
        const double lo = std::max(t, path.segment_begin(j));
        const double hi = std::min(u, path.segment_end(j));
        if (!(hi > lo)) continue;
        const std::size_t state = path.states[j];
        auto f = [&](double s) { return g(s, state); };
        total += gauss_kronrod<double, 15>::integrate(f, lo, hi, 10, 1e-11);
    }
    return total;
}

}  // namespace mmh
