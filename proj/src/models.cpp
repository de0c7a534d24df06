#include "mmh/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "mmh/errors.hpp"

namespace mmh {

Utility::Utility(double delta) : delta_(delta)
{
    if (!std::isfinite(delta) || !(delta < 1.0) || delta == 0.0) {
        throw InvalidInput("utility exponent delta must satisfy delta < 1 and delta != 0");
    }
}

double Utility::operator()(double wealth) const
{
    if (!(wealth > 0.0)) throw InvalidInput("wealth must be strictly positive");
    return std::pow(wealth, delta_) / delta_;
}

const char* to_string(Variant v)
{
    switch (v) {
        case Variant::MMH: return "MMH";
        case Variant::SMMH: return "SMMH";
        case Variant::SMMH_RHO: return "SMMH_RHO";
    }
    return "?";
}

Variant parse_variant(const std::string& text)
{
    if (text == "MMH") return Variant::MMH;
    if (text == "SMMH") return Variant::SMMH;
    if (text == "SMMH_RHO") return Variant::SMMH_RHO;
    throw InvalidInput("unknown model variant '" + text + "' (expected MMH, SMMH or SMMH_RHO)");
}

double HestonRegimeParams::vartheta() const
{
    if (rho == 0.0) return 1.0;
    return (1.0 - delta) / (1.0 - delta + delta * rho * rho);
}

void HestonRegimeParams::validate() const
{
    const std::size_t n = r.size();
    if (n == 0) throw InvalidInput("model needs at least one state");
    auto sized = [n](const std::vector<double>& v) { return v.size() == n; };
    if (!sized(nu) || !sized(kappa) || !sized(theta) || !sized(chi)) {
        throw InvalidInput("per-state parameter tables must all have one entry per state");
    }
    if (variant == Variant::MMH && !sized(lambda_hat)) {
        throw InvalidInput("MMH variant needs lambda_hat for every state");
    }
    Utility{delta};
    if (!(horizon > 0.0)) throw InvalidInput("horizon T must be positive");
    if (!(rho >= -1.0 && rho <= 1.0)) throw InvalidInput("rho must lie in [-1, 1]");
    for (std::size_t e = 0; e < n; ++e) {
        if (!(kappa[e] > 0.0)) throw InvalidInput("kappa must be positive in every state");
        if (!(theta[e] > 0.0)) throw InvalidInput("theta must be positive in every state");
        // chi = 0 (deterministic factor) is allowed here; the closed forms reject it.
        if (!(chi[e] >= 0.0)) throw InvalidInput("chi must be nonnegative in every state");
        if (nu[e] == 0.0 || !std::isfinite(nu[e])) throw InvalidInput("nu must be finite and nonzero");
        if (!std::isfinite(r[e])) throw InvalidInput("r must be finite");
    }
    if (variant != Variant::MMH) {
        for (std::size_t e = 1; e < n; ++e) {
            if (kappa[e] != kappa[0] || chi[e] != chi[0]) {
                throw InvalidInput("separable variants need state-independent kappa and chi");
            }
        }
        if (!std::isfinite(d)) throw InvalidInput("d must be finite");
    }
    if (variant == Variant::SMMH && rho != 0.0) {
        throw InvalidInput("SMMH variant requires rho = 0 (use SMMH_RHO for leverage)");
    }
}

HestonRegimeParams make_separable(Variant variant, std::vector<double> r, std::vector<double> nu,
                                  double kappa, std::vector<double> theta, double chi,
                                  double d, double rho, double delta, double horizon)
{
    HestonRegimeParams p;
    p.variant = variant;
    const std::size_t n = r.size();
    p.r = std::move(r);
    p.nu = std::move(nu);
    p.kappa.assign(n, kappa);
    p.theta = std::move(theta);
    p.chi.assign(n, chi);
    p.d = d;
    p.rho = rho;
    p.delta = delta;
    p.horizon = horizon;
    p.validate();
    return p;
}

AffineCoefficients to_affine_coefficients(const HestonRegimeParams& p)
{
    p.validate();
    const std::size_t n = p.n_states();
    AffineCoefficients a;
    a.rho = p.rho;
    a.delta = p.delta;
    a.r = p.r;
    a.gamma1.assign(n, 0.0);
    a.sigma1.assign(n, 0.0);
    a.zeta1.assign(n, 0.0);
    a.gamma2.resize(n);
    a.mu1.resize(n);
    a.mu2.resize(n);
    a.sigma2.resize(n);
    a.zeta2.resize(n);
    for (std::size_t e = 0; e < n; ++e) {
        const double lam = p.excess_slope(e);
        a.gamma2[e] = lam * lam / (p.nu[e] * p.nu[e]);
        a.mu1[e] = p.kappa[e] * p.theta[e];
        a.mu2[e] = -p.kappa[e];
        a.sigma2[e] = p.chi[e] * p.chi[e];
        a.zeta2[e] = p.rho == 0.0 ? 0.0 : p.rho * lam * p.chi[e] / p.nu[e];
    }
    return a;
}

bool ValidationReport::ok() const
{
    return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
}

std::vector<ValidationCheck> ValidationReport::failures() const
{
    std::vector<ValidationCheck> out;
    std::copy_if(checks.begin(), checks.end(), std::back_inserter(out),
                 [](const auto& c) { return !c.passed; });
    return out;
}

std::string ValidationReport::describe_failures() const
{
    std::ostringstream out;
    bool first = true;
    for (const auto& c : failures()) {
        if (!first) out << "; ";
        first = false;
        out << c.name;
        if (c.state) out << " (state " << *c.state + 1 << ")";
        out << ": " << c.lhs << " " << c.relation << " " << c.rhs << " does not hold";
    }
    return out.str();
}

ValidationReport validate_feller(const HestonRegimeParams& p)
{
    ValidationReport report;
    report.vartheta = p.vartheta();
    for (std::size_t e = 0; e < p.n_states(); ++e) {
        ValidationCheck c;
        c.name = "feller";
        c.state = e;
        c.lhs = 2.0 * p.kappa[e] * p.theta[e];
        c.rhs = p.chi[e] * p.chi[e];
        c.relation = ">=";
        c.passed = c.lhs >= c.rhs;
        report.checks.push_back(c);
    }
    return report;
}

void require_feller(const HestonRegimeParams& p)
{
    const auto report = validate_feller(p);
    if (!report.ok()) throw FellerViolated(report.describe_failures());
}

double tilted_kappa(const HestonRegimeParams& p, std::size_t e)
{
    const double q = p.delta / (1.0 - p.delta);
    if (p.rho == 0.0) return p.kappa[e];
    // The leverage closed form is stated with |d|.
    const double slope = p.variant == Variant::SMMH_RHO ? std::abs(p.d)
                                                        : p.excess_slope(e) / p.nu[e];
    return p.kappa[e] - q * p.rho * p.chi[e] * slope;
}

double riccati_beta(const HestonRegimeParams& p, std::size_t e)
{
    const double q = p.delta / (1.0 - p.delta);
    const double mpr = p.excess_slope(e) / p.nu[e];
    return 0.5 / p.vartheta() * q * mpr * mpr;
}

namespace {

ValidationCheck make_check(std::string name, std::optional<std::size_t> state, double lhs,
                           const char* relation, double rhs)
{
    ValidationCheck c;
    c.name = std::move(name);
    c.state = state;
    c.lhs = lhs;
    c.rhs = rhs;
    c.relation = relation;
    const std::string rel = relation;
    if (rel == "<") c.passed = lhs < rhs;
    else if (rel == "<=") c.passed = lhs <= rhs;
    else if (rel == ">") c.passed = lhs > rhs;
    else c.passed = lhs >= rhs;
    return c;
}

}  // namespace

ValidationReport validate_solution_assumptions(const HestonRegimeParams& p)
{
    p.validate();
    ValidationReport report;
    report.vartheta = p.vartheta();
    const double q = p.delta / (1.0 - p.delta);

    switch (p.variant) {
        case Variant::MMH: {
            double max_low = -std::numeric_limits<double>::infinity();
            double min_high = std::numeric_limits<double>::infinity();
            bool roots_defined = true;
            for (std::size_t e = 0; e < p.n_states(); ++e) {
                const double kt = tilted_kappa(p, e);
                const double chi2 = p.chi[e] * p.chi[e];
                report.checks.push_back(make_check("tilted_kappa_positive", e, kt, ">", 0.0));
                const double beta = riccati_beta(p, e);
                report.checks.push_back(
                    make_check("beta_bound", e, beta, "<", kt * kt / (2.0 * chi2)));
                const double disc = kt * kt - 2.0 * beta * chi2;
                if (disc < 0.0) {
                    roots_defined = false;
                    continue;
                }
                const double a = std::sqrt(disc);
                max_low = std::max(max_low, (kt - a) / chi2);
                min_high = std::min(min_high, (kt + a) / chi2);
            }
            if (roots_defined) {
                report.checks.push_back(make_check("max_min_roots", std::nullopt, max_low, "<=", min_high));
            }
            break;
        }
        case Variant::SMMH: {
            const double chi2 = p.chi[0] * p.chi[0];
            report.checks.push_back(
                make_check("separable_bound", std::nullopt, q * p.d * p.d, "<", p.kappa[0] * p.kappa[0] / chi2));
            break;
        }
        case Variant::SMMH_RHO: {
            const double kt = tilted_kappa(p, 0);
            const double chi2 = p.chi[0] * p.chi[0];
            report.checks.push_back(make_check("tilted_kappa_positive", std::nullopt, 0.0, "<", kt));
            report.checks.push_back(make_check("leverage_bound", std::nullopt, q * p.d * p.d, "<",
                                               report.vartheta * kt * kt / chi2));
            break;
        }
    }
    return report;
}

void require_solution_assumptions(const HestonRegimeParams& p)
{
    const auto report = validate_solution_assumptions(p);
    if (!report.ok()) throw AssumptionViolated(report.describe_failures());
}

}  // namespace mmh
