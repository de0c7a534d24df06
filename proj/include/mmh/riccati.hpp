#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mmh/markov_chain.hpp"
#include "mmh/models.hpp"

namespace mmh {

// A(tau), B(tau) of E[exp(alpha X(T) + beta int_t^T X ds) | X(t) = x]
//   = exp(A(T - t) + B(T - t) x)
// for a CIR factor dX = kappa (theta - X) dt + chi sqrt(X) dW. They solve
//   B' = chi^2 B^2 / 2 - kappa B + beta,  B(0) = alpha
//   A' = kappa theta B,                   A(0) = 0.
struct CharFnCoeffs {
    double A = 0.0;
    double B = 0.0;
};

// Closed form, defined for beta <= kappa^2/(2 chi^2) and
// alpha <= (kappa + a)/chi^2 with a = sqrt(kappa^2 - 2 beta chi^2).
// Throws DomainViolation outside that region.
CharFnCoeffs char_fn_coeffs(double kappa, double theta, double chi, double alpha,
                            double beta, double tau);

// Constant coefficients on [begin, end).
struct RiccatiSegment {
    double begin = 0.0;
    double end = 0.0;
    double kappa = 0.0;
    double theta = 0.0;
    double chi = 0.0;
    double beta = 0.0;
};

struct RiccatiSamples {
    std::vector<double> t;  // ascending; segment boundaries are grid points
    std::vector<double> A;
    std::vector<double> B;
};

inline constexpr double kRiccatiBlowUp = 1e8;

// Classical RK4 from (A, B)(end) = (0, terminal_alpha) backwards in calendar
// time through contiguous segments. Throws BlowUp when |B| > 1e8.
RiccatiSamples riccati_numeric(std::span<const RiccatiSegment> segments, double terminal_alpha,
                               double grid_step);

// A^m, B^m of the time-dependent Heston model induced by a chain path, built
// by applying char_fn_coeffs backwards from the horizon with tilted
// coefficients.
class PiecewiseAB {
public:
    struct Segment {
        double begin = 0.0;
        double end = 0.0;
        std::size_t state = 0;
        double kappa = 0.0;   // tilted
        double theta = 0.0;   // tilted, kappa * theta unchanged
        double chi = 0.0;
        double beta = 0.0;
        double alpha = 0.0;   // B at the segment end
        double a_tail = 0.0;  // sum of A over all later segments
    };

    double A(double t) const;
    double B(double t) const;
    double horizon() const { return horizon_; }
    double vartheta() const { return vartheta_; }
    const std::vector<Segment>& segments() const { return segments_; }
    // The same coefficients as input for riccati_numeric.
    std::vector<RiccatiSegment> riccati_segments() const;

private:
    friend PiecewiseAB compose_piecewise(const RegimePath&, const HestonRegimeParams&);
    const Segment& segment_for(double t) const;

    std::vector<Segment> segments_;
    double horizon_ = 0.0;
    double vartheta_ = 1.0;
};

// Expects validate_solution_assumptions(p) to pass; propagates DomainViolation.
PiecewiseAB compose_piecewise(const RegimePath& path, const HestonRegimeParams& p);

// Closed-form coefficient of the separable variants with its constants
// precomputed: D(t) for SMMH_RHO, B(t) for SMMH (where vartheta = 1 and the
// two formulas coincide). Throws DomainViolation when the solvability
// conditions fail.
class SeparableCoefficient {
public:
    explicit SeparableCoefficient(const HestonRegimeParams& p);
    double operator()(double t) const;
    // Time derivative, read off the Riccati equation.
    double derivative(double t) const;
    double horizon() const { return horizon_; }

private:
    double horizon_ = 0.0;
    double kappa_ = 0.0;  // tilted
    double a_ = 0.0;
    double c_ = 0.0;
    double chi2_ = 0.0;
    double vartheta_ = 1.0;
    double source_ = 0.0;  // (delta/(1-delta)) d^2 / 2
};

// B(t) of the separable model without leverage (SMMH).
double B_separable(const HestonRegimeParams& p, double t);
// D(t) of the separable model with leverage (SMMH_RHO).
double D_leverage(const HestonRegimeParams& p, double t);
// D_leverage or B_separable depending on the variant.
double separable_coefficient(const HestonRegimeParams& p, double t);

}  // namespace mmh
