#include "mmh/value_strategy.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>

#include "mmh/errors.hpp"
#include "mmh/parallel.hpp"
#include "mmh/random.hpp"

namespace mmh {

void ValueQuery::validate(double horizon, std::size_t n_states) const
{
    if (!(t >= 0.0 && t <= horizon)) throw InvalidInput("query time outside [0, T]");
    if (!(v > 0.0)) throw InvalidInput("wealth must be strictly positive");
    if (!(x >= 0.0)) throw InvalidInput("factor level must be nonnegative");
    if (state >= n_states) throw InvalidInput("query state out of range");
}

double value_timedep_heston(const HestonRegimeParams& p, const RegimePath& path,
                            const PiecewiseAB& coeffs, const ValueQuery& q)
{
    q.validate(p.horizon, p.n_states());
    if (q.t < path.start) throw InvalidInput("query time precedes the regime path");
    const double bond = occupation_integral(
        path, [&p](double, std::size_t e) { return p.delta * p.r[e]; }, q.t, p.horizon);
    const double vt = coeffs.vartheta();
    return p.utility()(q.v) * std::exp(bond + vt * coeffs.A(q.t) + vt * coeffs.B(q.t) * q.x);
}

double value_timedep_heston(const HestonRegimeParams& p, const RegimePath& path, const ValueQuery& q)
{
    require_solution_assumptions(p);
    return value_timedep_heston(p, path, compose_piecewise(path, p), q);
}

McEstimate value_mmh_general(const HestonRegimeParams& p, const MarkovChainSpec& chain,
                             const ValueQuery& q, const PartialMcOptions& options)
{
    if (p.rho != 0.0) throw DomainViolation("value_mmh_general needs rho = 0");
    if (chain.n_states() != p.n_states()) throw InvalidInput("chain and model disagree on state count");
    if (options.n_paths == 0) throw InvalidInput("value_mmh_general needs n_paths >= 1");
    require_solution_assumptions(p);
    q.validate(p.horizon, p.n_states());

    std::vector<double> samples(options.n_paths);
    parallel_for(options.n_paths, options.workers, [&](std::size_t i) {
        PathStream stream(options.seed, i);
        const RegimePath path = q.t < p.horizon
                                    ? sample_path(chain, q.t, p.horizon, q.state, stream)
                                    : RegimePath::constant(q.state, q.t, p.horizon);
        samples[i] = value_timedep_heston(p, path, compose_piecewise(path, p), q);
    });
    return summarize(samples);
}

double value_smmh(const HestonRegimeParams& p, const ValueQuery& q, const XiTable& xi)
{
    if (p.variant == Variant::MMH || p.rho != 0.0) throw DomainViolation("value_smmh needs SMMH with rho = 0");
    require_solution_assumptions(p);
    q.validate(p.horizon, p.n_states());
    return p.utility()(q.v) * xi.value(q.t, q.state) * std::exp(B_separable(p, q.t) * q.x);
}

double value_smmh_rho(const HestonRegimeParams& p, const ValueQuery& q, const XiTable& xi)
{
    if (p.variant == Variant::MMH) throw DomainViolation("value_smmh_rho needs a separable variant");
    require_solution_assumptions(p);
    q.validate(p.horizon, p.n_states());
    return p.utility()(q.v) * xi.value(q.t, q.state) * std::exp(D_leverage(p, q.t) * q.x);
}

double value_separable(const HestonRegimeParams& p, const ValueQuery& q, const XiTable& xi)
{
    return p.variant == Variant::SMMH ? value_smmh(p, q, xi) : value_smmh_rho(p, q, xi);
}

StrategyPoint optimal_strategy(const HestonRegimeParams& p, double t, std::size_t state)
{
    if (state >= p.n_states()) throw InvalidInput("strategy state out of range");
    if (!(t >= 0.0 && t <= p.horizon)) throw InvalidInput("strategy time outside [0, T]");
    const double scale = 1.0 / (1.0 - p.delta);
    const double nu = p.nu[state];
    StrategyPoint s;
    switch (p.variant) {
        case Variant::MMH:
            if (p.rho != 0.0) {
                throw DomainViolation("MMH with rho != 0: the optimal weight depends on the chain path");
            }
            s.pi_mv = scale * p.lambda_hat[state] / (nu * nu);
            break;
        case Variant::SMMH:
            s.pi_mv = scale * p.d / nu;
            break;
        case Variant::SMMH_RHO:
            s.pi_mv = scale * p.d / nu;
            // + 0.0 turns the -0 at the horizon into 0
            if (p.rho != 0.0) s.pi_h = scale * p.rho * p.chi[state] / nu * D_leverage(p, t) + 0.0;
            break;
    }
    s.pi_total = s.pi_mv + s.pi_h;
    return s;
}

StrategyPoint optimal_strategy(const HestonRegimeParams& p, const PiecewiseAB& coeffs, double t,
                               std::size_t state)
{
    if (state >= p.n_states()) throw InvalidInput("strategy state out of range");
    const double scale = 1.0 / (1.0 - p.delta);
    const double nu = p.nu[state];
    StrategyPoint s;
    s.pi_mv = scale * p.excess_slope(state) / (nu * nu);
    if (p.rho != 0.0) s.pi_h = scale * p.rho * p.chi[state] / nu * coeffs.vartheta() * coeffs.B(t);
    s.pi_total = s.pi_mv + s.pi_h;
    return s;
}

StrategyFn optimal_policy(const HestonRegimeParams& p)
{
    p.validate();
    if (p.variant == Variant::MMH && p.rho != 0.0) {
        throw DomainViolation("MMH with rho != 0: the optimal weight depends on the chain path");
    }
    const double scale = 1.0 / (1.0 - p.delta);
    std::vector<double> myopic(p.n_states());
    std::vector<double> hedge(p.n_states());
    for (std::size_t e = 0; e < p.n_states(); ++e) {
        myopic[e] = scale * p.excess_slope(e) / (p.nu[e] * p.nu[e]);
        hedge[e] = scale * p.rho * p.chi[e] / p.nu[e];
    }
    if (p.rho == 0.0) {
        return [myopic](double, std::size_t e) { return myopic[e]; };
    }
    return [myopic, hedge, coeff = SeparableCoefficient(p)](double t, std::size_t e) {
        return myopic[e] + hedge[e] * coeff(t);
    };
}

StrategyFn constant_policy(double weight)
{
    return [weight](double, std::size_t) { return weight; };
}

void write_strategy_csv(std::ostream& out, const HestonRegimeParams& p, const std::vector<double>& times)
{
    out << "t,state,pi_mv,pi_h,pi_total\n" << std::setprecision(17);
    for (double t : times) {
        for (std::size_t e = 0; e < p.n_states(); ++e) {
            const auto s = optimal_strategy(p, t, e);
            out << t << ',' << e + 1 << ',' << s.pi_mv << ',' << s.pi_h << ',' << s.pi_total << '\n';
        }
    }
}

}  // namespace mmh
