#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace mmh {

// Power utility U(v) = v^delta / delta with delta < 1, delta != 0.
class Utility {
public:
    explicit Utility(double delta);
    double delta() const { return delta_; }
    double operator()(double wealth) const;
    // delta / (1 - delta), the factor that recurs in every solution.
    double leverage_ratio() const { return delta_ / (1.0 - delta_); }

private:
    double delta_;
};

enum class Variant {
    MMH,       // general Markov-modulated Heston, per-state lambda_hat
    SMMH,      // separable, rho = 0
    SMMH_RHO,  // separable with leverage
};

const char* to_string(Variant v);
Variant parse_variant(const std::string& text);

// Markov-modulated Heston market:
//   dP1/P1 = (r + lambda_hat X) dt + nu sqrt(X) dW_P
//   dX     = kappa (theta - X) dt + chi sqrt(X) dW_X,  d<W_P, W_X> = rho dt
// with every coefficient indexed by the chain state. The separable variants
// share kappa and chi across states and use lambda_hat(e) = d * nu(e).
struct HestonRegimeParams {
    Variant variant = Variant::SMMH_RHO;
    std::vector<double> r;
    std::vector<double> nu;
    std::vector<double> kappa;
    std::vector<double> theta;
    std::vector<double> chi;
    std::vector<double> lambda_hat;  // MMH only
    double d = 0.0;                  // separable variants only
    double rho = 0.0;
    double delta = 0.5;
    double horizon = 1.0;

    std::size_t n_states() const { return r.size(); }
    double excess_slope(std::size_t e) const
    {
        return variant == Variant::MMH ? lambda_hat[e] : d * nu[e];
    }
    Utility utility() const { return Utility(delta); }
    // (1 - delta) / (1 - delta + delta rho^2); exactly 1 when rho = 0.
    double vartheta() const;

    // Structural checks (sizes, signs, variant constraints). Feller and
    // solvability are separate reports. Throws InvalidInput.
    void validate() const;
};

// Builds separable-variant parameters from state-independent kappa and chi.
HestonRegimeParams make_separable(Variant variant, std::vector<double> r, std::vector<double> nu,
                                  double kappa, std::vector<double> theta, double chi,
                                  double d, double rho, double delta, double horizon);

struct AffineCoefficients {
    std::vector<double> gamma1, gamma2;
    std::vector<double> mu1, mu2;
    std::vector<double> sigma1, sigma2;
    std::vector<double> zeta1, zeta2;
    std::vector<double> r;
    double rho = 0.0;
    double delta = 0.5;
};

AffineCoefficients to_affine_coefficients(const HestonRegimeParams& p);

struct ValidationCheck {
    std::string name;
    std::optional<std::size_t> state;  // 0-based, when the check is per state
    bool passed = false;
    double lhs = 0.0;
    double rhs = 0.0;
    std::string relation;  // e.g. ">=", "<"
};

struct ValidationReport {
    std::vector<ValidationCheck> checks;
    double vartheta = 1.0;

    bool ok() const;
    std::vector<ValidationCheck> failures() const;
    std::string describe_failures() const;
};

// 2 kappa theta >= chi^2 per state.
ValidationReport validate_feller(const HestonRegimeParams& p);
// Throws FellerViolated naming the failing states.
void require_feller(const HestonRegimeParams& p);

// Solvability conditions of the closed-form solution for the chosen variant.
ValidationReport validate_solution_assumptions(const HestonRegimeParams& p);
// Throws AssumptionViolated naming the first failed inequality.
void require_solution_assumptions(const HestonRegimeParams& p);

// Tilted mean reversion kappa - (delta/(1-delta)) rho chi lambda_hat / nu.
double tilted_kappa(const HestonRegimeParams& p, std::size_t e);
// (1/(2 vartheta)) (delta/(1-delta)) lambda_hat^2 / nu^2.
double riccati_beta(const HestonRegimeParams& p, std::size_t e);

}  // namespace mmh
