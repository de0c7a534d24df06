#include "mmh/riccati.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "mmh/errors.hpp"

namespace mmh {

CharFnCoeffs char_fn_coeffs(double kappa, double theta, double chi, double alpha,
                            double beta, double tau)
{
    if (!(kappa > 0.0) || !(theta > 0.0) || !(chi > 0.0)) {
        throw DomainViolation("char_fn_coeffs needs kappa, theta, chi > 0");
    }
    if (!(tau >= 0.0)) throw DomainViolation("char_fn_coeffs needs tau >= 0");
    const double chi2 = chi * chi;
    const double beta_max = kappa * kappa / (2.0 * chi2);
    if (!(beta <= beta_max)) {
        std::ostringstream msg;
        msg << "beta = " << beta << " exceeds kappa^2/(2 chi^2) = " << beta_max;
        throw DomainViolation(msg.str());
    }
    const double a = std::sqrt(std::max(kappa * kappa - 2.0 * beta * chi2, 0.0));
    const double alpha_max = (kappa + a) / chi2;
    const double boundary_tol = 1e-12 * std::max(1.0, std::abs(alpha_max));
    if (alpha > alpha_max + boundary_tol) {
        std::ostringstream msg;
        msg << "alpha = " << alpha << " exceeds (kappa + a)/chi^2 = " << alpha_max;
        throw DomainViolation(msg.str());
    }
    if (tau == 0.0) return {0.0, alpha};
    if (std::abs(alpha - alpha_max) <= boundary_tol) {
        // Stationary solution sitting on the upper root.
        return {kappa * theta * alpha_max * tau, alpha_max};
    }
    if (a == 0.0) {
        throw DomainViolation("degenerate a = 0 with alpha below the double root");
    }

    const double c = (-alpha * chi2 + kappa - a) / (-alpha * chi2 + kappa + a);
    const double decay = std::exp(-a * tau);
    const double den = 1.0 - c * decay;
    if (!(den > 0.0)) throw DomainViolation("char_fn_coeffs denominator vanished");
    const double B = (-c * (kappa + a) * decay + kappa - a) / (chi2 * den);
    const double A =
        kappa * theta / chi2 * ((kappa - a) * tau - 2.0 * std::log(den / (1.0 - c)));
    return {A, B};
}

RiccatiSamples riccati_numeric(std::span<const RiccatiSegment> segments, double terminal_alpha,
                               double grid_step)
{
    if (!(grid_step > 0.0)) throw InvalidInput("riccati_numeric needs grid_step > 0");
    if (segments.empty()) throw InvalidInput("riccati_numeric needs at least one segment");
    for (std::size_t j = 0; j < segments.size(); ++j) {
        if (segments[j].end < segments[j].begin) throw InvalidInput("segment with negative length");
        if (j > 0 && segments[j].begin != segments[j - 1].end) {
            throw InvalidInput("riccati_numeric segments must be contiguous");
        }
    }

    // Backwards in calendar time = forwards in time-to-go s.
    std::vector<double> ts{segments.back().end};
    std::vector<double> as{0.0};
    std::vector<double> bs{terminal_alpha};
    double A = 0.0;
    double B = terminal_alpha;

    for (auto it = segments.rbegin(); it != segments.rend(); ++it) {
        const auto& seg = *it;
        const double length = seg.end - seg.begin;
        if (length == 0.0) continue;
        const auto n = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(length / grid_step - 1e-9)));
        const double h = length / static_cast<double>(n);
        const double half_chi2 = 0.5 * seg.chi * seg.chi;
        const double kt = seg.kappa * seg.theta;
        auto dB = [&](double b) { return half_chi2 * b * b - seg.kappa * b + seg.beta; };

        for (std::size_t k = 1; k <= n; ++k) {
            const double k1 = dB(B);
            const double k2 = dB(B + 0.5 * h * k1);
            const double k3 = dB(B + 0.5 * h * k2);
            const double k4 = dB(B + h * k3);
            // dA/ds = kappa theta B, evaluated at the same stages
            A += h / 6.0 * kt * (B + 2.0 * (B + 0.5 * h * k1) + 2.0 * (B + 0.5 * h * k2) + (B + h * k3));
            B += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            if (!std::isfinite(B) || std::abs(B) > kRiccatiBlowUp) {
                std::ostringstream msg;
                msg << "Riccati solution escaped (|B| > " << kRiccatiBlowUp << ") near t = "
                    << seg.end - static_cast<double>(k) * h;
                throw BlowUp(msg.str());
            }
            ts.push_back(k == n ? seg.begin : seg.end - static_cast<double>(k) * h);
            as.push_back(A);
            bs.push_back(B);
        }
    }

    RiccatiSamples out;
    out.t.assign(ts.rbegin(), ts.rend());
    out.A.assign(as.rbegin(), as.rend());
    out.B.assign(bs.rbegin(), bs.rend());
    return out;
}

const PiecewiseAB::Segment& PiecewiseAB::segment_for(double t) const
{
    if (t < segments_.front().begin || t > horizon_) {
        throw InvalidInput("PiecewiseAB evaluated outside its time range");
    }
    const auto it = std::upper_bound(segments_.begin(), segments_.end(), t,
                                     [](double x, const Segment& s) { return x < s.end; });
    return it == segments_.end() ? segments_.back() : *it;
}

double PiecewiseAB::A(double t) const
{
    const auto& s = segment_for(t);
    return s.a_tail + char_fn_coeffs(s.kappa, s.theta, s.chi, s.alpha, s.beta, s.end - t).A;
}

double PiecewiseAB::B(double t) const
{
    const auto& s = segment_for(t);
    return char_fn_coeffs(s.kappa, s.theta, s.chi, s.alpha, s.beta, s.end - t).B;
}

std::vector<RiccatiSegment> PiecewiseAB::riccati_segments() const
{
    std::vector<RiccatiSegment> out;
    out.reserve(segments_.size());
    for (const auto& s : segments_) out.push_back({s.begin, s.end, s.kappa, s.theta, s.chi, s.beta});
    return out;
}

PiecewiseAB compose_piecewise(const RegimePath& path, const HestonRegimeParams& p)
{
    if (path.horizon != p.horizon) throw InvalidInput("regime path horizon differs from model horizon");
    path.validate(p.n_states());

    PiecewiseAB out;
    out.horizon_ = p.horizon;
    out.vartheta_ = p.vartheta();
    out.segments_.resize(path.n_segments());

    double alpha = 0.0;
    double a_tail = 0.0;
    for (std::size_t j = path.n_segments(); j-- > 0;) {
        auto& s = out.segments_[j];
        const std::size_t e = path.states[j];
        s.begin = path.segment_begin(j);
        s.end = path.segment_end(j);
        s.state = e;
        s.kappa = tilted_kappa(p, e);
        if (!(s.kappa > 0.0)) throw DomainViolation("tilted mean reversion is not positive");
        s.theta = p.kappa[e] * p.theta[e] / s.kappa;
        s.chi = p.chi[e];
        s.beta = riccati_beta(p, e);
        s.alpha = alpha;
        s.a_tail = a_tail;
        const auto full = char_fn_coeffs(s.kappa, s.theta, s.chi, alpha, s.beta, s.end - s.begin);
        alpha = full.B;
        a_tail += full.A;
    }
    return out;
}

SeparableCoefficient::SeparableCoefficient(const HestonRegimeParams& p)
{
    if (p.variant == Variant::MMH) throw DomainViolation("closed form needs a separable variant");
    if (!(p.chi[0] > 0.0)) throw DomainViolation("closed form needs chi > 0");
    const double q = p.delta / (1.0 - p.delta);
    horizon_ = p.horizon;
    vartheta_ = p.vartheta();
    kappa_ = tilted_kappa(p, 0);
    chi2_ = p.chi[0] * p.chi[0];
    source_ = 0.5 * q * p.d * p.d;
    if (!(kappa_ > 0.0)) {
        throw DomainViolation("kappa - (delta/(1-delta)) rho chi |d| must be positive");
    }
    const double disc = kappa_ * kappa_ - q * chi2_ / vartheta_ * p.d * p.d;
    if (!(disc > 0.0)) {
        throw DomainViolation("(delta/(1-delta)) d^2 < vartheta kappa_tilde^2 / chi^2 does not hold");
    }
    a_ = std::sqrt(disc);
    c_ = (kappa_ - a_) / (kappa_ + a_);
}

double SeparableCoefficient::operator()(double t) const
{
    if (!(t >= 0.0 && t <= horizon_)) throw DomainViolation("t outside [0, T]");
    if (t == horizon_) return 0.0;
    const double decay = std::exp(-a_ * (horizon_ - t));
    const double den = 1.0 - c_ * decay;
    if (!(den > 0.0)) throw DomainViolation("closed-form denominator vanished");
    return vartheta_ * (-c_ * (kappa_ + a_) * decay + kappa_ - a_) / (chi2_ * den);
}

double SeparableCoefficient::derivative(double t) const
{
    const double value = (*this)(t);
    return -source_ + kappa_ * value - 0.5 * chi2_ * value * value / vartheta_;
}

double B_separable(const HestonRegimeParams& p, double t)
{
    if (p.rho != 0.0) throw DomainViolation("B_separable needs rho = 0");
    return SeparableCoefficient(p)(t);
}

double D_leverage(const HestonRegimeParams& p, double t)
{
    return SeparableCoefficient(p)(t);
}

double separable_coefficient(const HestonRegimeParams& p, double t)
{
    return p.variant == Variant::SMMH ? B_separable(p, t) : D_leverage(p, t);
}

}  // namespace mmh
