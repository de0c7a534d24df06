#include "mmh/regime_expectation.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>

#include "mmh/errors.hpp"
#include "mmh/parallel.hpp"
#include "mmh/random.hpp"
#include "mmh/riccati.hpp"

namespace mmh {

RegimeIntegrand upsilon_heston(const HestonRegimeParams& p, std::function<double(double)> coeff)
{
    RegimeIntegrand out;
    out.n_states = p.n_states();
    out.horizon = p.horizon;
    std::vector<double> bond(p.n_states());
    std::vector<double> drift(p.n_states());
    for (std::size_t e = 0; e < p.n_states(); ++e) {
        bond[e] = p.delta * p.r[e];
        drift[e] = p.kappa[e] * p.theta[e];
    }
    out.upsilon = [bond, drift, coeff = std::move(coeff)](double t, std::size_t e) {
        return bond[e] + coeff(t) * drift[e];
    };
    return out;
}

RegimeIntegrand upsilon_heston(const HestonRegimeParams& p)
{
    require_solution_assumptions(p);
    if (p.variant == Variant::SMMH && p.rho != 0.0) throw DomainViolation("SMMH needs rho = 0");
    return upsilon_heston(p, [coeff = SeparableCoefficient(p)](double t) { return coeff(t); });
}

const char* to_string(XiMethod m)
{
    return m == XiMethod::MC ? "MC" : "ODE";
}

namespace {

// Index k with t[k] <= time <= t[k+1], plus the interpolation weight.
std::pair<std::size_t, double> locate(const std::vector<double>& grid, double time)
{
    const double tol = 1e-12 * std::max(1.0, std::abs(grid.back()));
    if (time < grid.front() - tol || time > grid.back() + tol) {
        throw InvalidInput("XiTable queried outside its time grid");
    }
    if (grid.size() == 1 || time <= grid.front()) return {0, 0.0};
    if (time >= grid.back()) return {grid.size() - 2, 1.0};
    const auto it = std::upper_bound(grid.begin(), grid.end(), time);
    const std::size_t k = static_cast<std::size_t>(it - grid.begin()) - 1;
    const double w = (time - grid[k]) / (grid[k + 1] - grid[k]);
    return {k, w};
}

}  // namespace

double XiTable::value(double time, std::size_t state) const
{
    if (state >= n_states()) throw InvalidInput("XiTable state out of range");
    const auto [k, w] = locate(t, time);
    if (t.size() == 1) return values[0][state];
    if (w == 0.0) return values[k][state];
    if (w == 1.0) return values[k + 1][state];
    return (1.0 - w) * values[k][state] + w * values[k + 1][state];
}

double XiTable::error(double time, std::size_t state) const
{
    if (std_err.empty()) return 0.0;
    const auto [k, w] = locate(t, time);
    if (t.size() == 1) return std_err[0][state];
    return (1.0 - w) * std_err[k][state] + w * std_err[k + 1][state];
}

void XiTable::write_csv(std::ostream& out) const
{
    out << "t,state,xi,std_err,method\n";
    out << std::setprecision(17);
    for (std::size_t k = 0; k < t.size(); ++k) {
        for (std::size_t e = 0; e < n_states(); ++e) {
            out << t[k] << ',' << e + 1 << ',' << values[k][e] << ',';
            if (!std_err.empty()) out << std_err[k][e];
            out << ',' << to_string(method) << '\n';
        }
    }
}

McEstimate xi_mc(const MarkovChainSpec& spec, const RegimeIntegrand& integrand, double t,
                 std::size_t state, const XiMcOptions& options)
{
    if (options.n_paths == 0) throw InvalidInput("xi_mc needs n_paths >= 1");
    if (state >= spec.n_states()) throw InvalidInput("xi_mc state out of range");
    if (integrand.n_states != spec.n_states()) throw InvalidInput("integrand and chain disagree on state count");
    const double horizon = integrand.horizon;
    if (!(t >= 0.0 && t <= horizon)) throw InvalidInput("xi_mc time outside [0, T]");

    std::vector<double> samples(options.n_paths, 1.0);
    if (t < horizon) {
        parallel_for(options.n_paths, options.workers, [&](std::size_t i) {
            PathStream stream(options.seed, i);
            const RegimePath path = sample_path(spec, t, horizon, state, stream);
            samples[i] = std::exp(occupation_integral(path, integrand.upsilon, t, horizon));
        });
    }
    return summarize(samples);
}

XiTable xi_mc_table(const MarkovChainSpec& spec, const RegimeIntegrand& integrand,
                    const std::vector<double>& times, const XiMcOptions& options)
{
    if (times.empty() || !std::is_sorted(times.begin(), times.end())) {
        throw InvalidInput("xi_mc_table needs an ascending, non-empty time grid");
    }
    XiTable table;
    table.method = XiMethod::MC;
    table.t = times;
    const std::size_t n = spec.n_states();
    table.values.assign(times.size(), std::vector<double>(n));
    table.std_err.assign(times.size(), std::vector<double>(n));
    for (std::size_t k = 0; k < times.size(); ++k) {
        for (std::size_t e = 0; e < n; ++e) {
            XiMcOptions sub = options;
            sub.seed = derive_seed(options.seed, k * n + e);
            const auto est = xi_mc(spec, integrand, times[k], e, sub);
            table.values[k][e] = est.mean;
            table.std_err[k][e] = est.std_err;
        }
    }
    return table;
}

namespace {

constexpr double kMinSubstep = 1e-10;

// One RK4 step backwards in time from `time` to `time - h`.
Eigen::VectorXd rk4_back(const Eigen::MatrixXd& q, const RegimeIntegrand& f, double time,
                         double h, const Eigen::VectorXd& xi)
{
    const auto n = xi.size();
    // In time-to-go the system reads dxi/ds = upsilon(t) xi + Q xi.
    auto rhs = [&](double t, const Eigen::VectorXd& x) {
        Eigen::VectorXd out = q * x;
        for (Eigen::Index e = 0; e < n; ++e) out(e) += f(t, static_cast<std::size_t>(e)) * x(e);
        return out;
    };
    const Eigen::VectorXd k1 = rhs(time, xi);
    const Eigen::VectorXd k2 = rhs(time - 0.5 * h, xi + 0.5 * h * k1);
    const Eigen::VectorXd k3 = rhs(time - 0.5 * h, xi + 0.5 * h * k2);
    const Eigen::VectorXd k4 = rhs(time - h, xi + h * k3);
    return xi + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

bool healthy(const Eigen::VectorXd& xi)
{
    for (Eigen::Index e = 0; e < xi.size(); ++e) {
        if (!std::isfinite(xi(e)) || !(xi(e) > 0.0)) return false;
    }
    return true;
}

Eigen::VectorXd guarded_step(const Eigen::MatrixXd& q, const RegimeIntegrand& f, double time,
                             double h, const Eigen::VectorXd& xi)
{
    Eigen::VectorXd next = rk4_back(q, f, time, h, xi);
    if (healthy(next)) return next;
    const double half = 0.5 * h;
    if (half < kMinSubstep) {
        throw StepFailure("xi_ode lost positivity or finiteness near t = " + std::to_string(time));
    }
    const Eigen::VectorXd mid = guarded_step(q, f, time, half, xi);
    return guarded_step(q, f, time - half, half, mid);
}

}  // namespace

XiTable xi_ode(const MarkovChainSpec& spec, const RegimeIntegrand& integrand, double grid_step)
{
    if (integrand.n_states != spec.n_states()) throw InvalidInput("integrand and chain disagree on state count");
    const double horizon = integrand.horizon;
    if (!(horizon > 0.0)) throw InvalidInput("xi_ode needs a positive horizon");
    if (grid_step <= 0.0) grid_step = horizon / 5000.0;
    const auto steps = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(horizon / grid_step - 1e-9)));
    const double h = horizon / static_cast<double>(steps);
    const auto n = static_cast<Eigen::Index>(spec.n_states());

    XiTable table;
    table.method = XiMethod::ODE;
    table.t.resize(steps + 1);
    table.values.assign(steps + 1, std::vector<double>(spec.n_states()));

    Eigen::VectorXd xi = Eigen::VectorXd::Ones(n);
    for (std::size_t k = steps + 1; k-- > 0;) {
        const double time = k == steps ? horizon : static_cast<double>(k) * h;
        table.t[k] = time;
        for (Eigen::Index e = 0; e < n; ++e) table.values[k][static_cast<std::size_t>(e)] = xi(e);
        if (k == 0) break;
        xi = guarded_step(spec.intensity(), integrand, time, time - static_cast<double>(k - 1) * h, xi);
    }
    return table;
}

}  // namespace mmh
