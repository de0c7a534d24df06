#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "char_fn_properties.hpp"
#include "mmh/errors.hpp"
#include "mmh/riccati.hpp"
#include "oracles.hpp"

using namespace mmh;

namespace {

HestonRegimeParams set1(double delta = 0.3, double rho = -0.8)
{
    return make_separable(Variant::SMMH_RHO, {0.03, 0.01}, {1.0, 1.3}, 4.0, {0.02, 0.04}, 0.35, 1.7, rho,
                          delta, 5.0);
}

HestonRegimeParams mmh_three_state()
{
    HestonRegimeParams p;
    p.variant = Variant::MMH;
    p.r = {0.03, 0.01, 0.02};
    p.nu = {1.0, 1.3, 0.8};
    p.kappa = {4.0, 2.5, 3.0};
    p.theta = {0.02, 0.06, 0.04};
    p.chi = {0.35, 0.45, 0.3};
    p.lambda_hat = {1.7, 1.2, 0.9};
    p.rho = -0.5;
    p.delta = 0.3;
    p.horizon = 5.0;
    return p;
}

RegimePath two_jump_path(double horizon)
{
    RegimePath path;
    path.start = 0.0;
    path.horizon = horizon;
    path.jump_times = {1.3, 3.1};
    path.states = {0, 1, 0};
    return path;
}

}  // namespace

TEST(CharFnCoeffs, ZeroExponents)
{
    for (double tau : {0.0, 0.5, 7.0}) {
        const auto c = char_fn_coeffs(4.0, 0.02, 0.35, 0.0, 0.0, tau);
        EXPECT_EQ(c.A, 0.0);
        EXPECT_EQ(c.B, 0.0);
    }
}

TEST(CharFnCoeffs, ZeroTimeToGo)
{
    const auto c = char_fn_coeffs(4.0, 0.02, 0.35, 1.3, 0.4, 0.0);
    EXPECT_EQ(c.A, 0.0);
    EXPECT_EQ(c.B, 1.3);
}

TEST(CharFnCoeffs, MatchesRk4)
{
    const auto c = char_fn_coeffs(4.0, 0.02, 0.35, 0.0, 0.5, 1.0);
    const auto o = oracle::rk4_riccati(4.0, 0.02, 0.35, 0.0, 0.5, 1.0);
    EXPECT_NEAR(c.B, o.B, 1e-8);
    EXPECT_NEAR(c.A, o.A, 1e-8);
}

TEST(CharFnCoeffs, MatchesRk4OnRandomDraws)
{
    std::mt19937_64 rng(3);
    for (int i = 0; i < 40; ++i) {
        const auto d = props::random_draw(rng, i % 2 == 0);
        for (double tau : {0.3, 2.0}) {
            const auto c = char_fn_coeffs(d.kappa, d.theta, d.chi, d.alpha, d.beta, tau);
            const auto o = oracle::rk4_riccati(d.kappa, d.theta, d.chi, d.alpha, d.beta, tau);
            EXPECT_NEAR(c.B, o.B, 1e-8 * std::max(1.0, std::abs(o.B))) << props::describe(d);
            EXPECT_NEAR(c.A, o.A, 1e-8 * std::max(1.0, std::abs(o.A))) << props::describe(d);
        }
    }
}

TEST(CharFnCoeffs, UpperRootIsStationary)
{
    const double kappa = 4.0, theta = 0.02, chi = 0.35, beta = 20.0;
    const double a = std::sqrt(kappa * kappa - 2.0 * beta * chi * chi);
    const double alpha = (kappa + a) / (chi * chi);
    const auto c = char_fn_coeffs(kappa, theta, chi, alpha, beta, 2.5);
    EXPECT_EQ(c.B, alpha);
    EXPECT_NEAR(c.A, kappa * theta * alpha * 2.5, 1e-12);
}

TEST(CharFnCoeffs, DegenerateDoubleRoot)
{
    const double kappa = 2.0, chi = 0.5;
    const double beta = kappa * kappa / (2.0 * chi * chi);  // a = 0
    const double root = kappa / (chi * chi);
    const auto c = char_fn_coeffs(kappa, 0.1, chi, root, beta, 1.0);
    EXPECT_EQ(c.B, root);
    EXPECT_THROW(char_fn_coeffs(kappa, 0.1, chi, 0.0, beta, 1.0), DomainViolation);
}

TEST(CharFnCoeffs, DomainViolations)
{
    EXPECT_THROW(char_fn_coeffs(4.0, 0.02, 0.35, 0.0, 200.0, 1.0), DomainViolation);  // beta too large
    EXPECT_THROW(char_fn_coeffs(4.0, 0.02, 0.35, 100.0, 0.0, 1.0), DomainViolation);  // alpha too large
    EXPECT_THROW(char_fn_coeffs(4.0, 0.02, 0.35, 0.0, 0.0, -1.0), DomainViolation);
    EXPECT_THROW(char_fn_coeffs(0.0, 0.02, 0.35, 0.0, 0.0, 1.0), DomainViolation);
    EXPECT_THROW(char_fn_coeffs(4.0, 0.0, 0.35, 0.0, 0.0, 1.0), DomainViolation);
    EXPECT_THROW(char_fn_coeffs(4.0, 0.02, 0.0, 0.0, 0.0, 1.0), DomainViolation);
}

TEST(CharFnCoeffs, PropertySuite)
{
    std::mt19937_64 rng(2024);
    for (int i = 0; i < 100; ++i) {
        const auto d = props::random_draw(rng, i % 2 == 0);
        for (const auto& msg : props::check_all(d, rng)) ADD_FAILURE() << msg;
    }
}

TEST(RiccatiNumeric, ZeroCoefficients)
{
    const std::vector<RiccatiSegment> segs{{0.0, 1.0, 4.0, 0.02, 0.35, 0.0}, {1.0, 2.5, 3.0, 0.05, 0.4, 0.0}};
    const auto s = riccati_numeric(segs, 0.0, 0.01);
    for (std::size_t k = 0; k < s.t.size(); ++k) {
        EXPECT_EQ(s.A[k], 0.0);
        EXPECT_EQ(s.B[k], 0.0);
    }
    EXPECT_EQ(s.t.front(), 0.0);
    EXPECT_EQ(s.t.back(), 2.5);
    EXPECT_NE(std::find(s.t.begin(), s.t.end(), 1.0), s.t.end());  // boundary on the grid
}

TEST(RiccatiNumeric, MatchesLeverageClosedForm)
{
    const auto p = set1();
    const double q = 0.3 / 0.7;
    const double kt = tilted_kappa(p, 0);
    const double beta = 0.5 / p.vartheta() * q * p.d * p.d;
    const std::vector<RiccatiSegment> seg{{0.0, 5.0, kt, 4.0 * 0.02 / kt, 0.35, beta}};
    const auto s = riccati_numeric(seg, 0.0, 1e-4);
    double sup = 0.0;
    for (std::size_t k = 0; k < s.t.size(); k += 97) {
        sup = std::max(sup, std::abs(s.B[k] - D_leverage(p, s.t[k]) / p.vartheta()));
    }
    EXPECT_LE(sup, 1e-8);
}

TEST(RiccatiNumeric, BlowsUpAboveBound)
{
    const std::vector<RiccatiSegment> seg{{0.0, 50.0, 1.0, 0.1, 1.0, 5.0}};
    EXPECT_THROW(riccati_numeric(seg, 0.0, 1e-3), BlowUp);
}

TEST(RiccatiNumeric, RejectsBadInput)
{
    const std::vector<RiccatiSegment> gap{{0.0, 1.0, 1.0, 0.1, 1.0, 0.0}, {1.5, 2.0, 1.0, 0.1, 1.0, 0.0}};
    EXPECT_THROW(riccati_numeric(gap, 0.0, 0.1), InvalidInput);
    EXPECT_THROW(riccati_numeric({}, 0.0, 0.1), InvalidInput);
    const std::vector<RiccatiSegment> one{{0.0, 1.0, 1.0, 0.1, 1.0, 0.0}};
    EXPECT_THROW(riccati_numeric(one, 0.0, 0.0), InvalidInput);
}

TEST(ComposePiecewise, NoJumpsIsOneCharFnCall)
{
    auto p = mmh_three_state();
    const auto ab = compose_piecewise(RegimePath::constant(1, 0.0, 5.0), p);
    const double kt = tilted_kappa(p, 1);
    for (double t : {0.0, 1.7, 4.9, 5.0}) {
        const auto c = char_fn_coeffs(kt, p.kappa[1] * p.theta[1] / kt, p.chi[1], 0.0, riccati_beta(p, 1), 5.0 - t);
        EXPECT_DOUBLE_EQ(ab.B(t), c.B);
        EXPECT_DOUBLE_EQ(ab.A(t), c.A);
    }
    EXPECT_EQ(ab.A(5.0), 0.0);
    EXPECT_EQ(ab.B(5.0), 0.0);
}

TEST(ComposePiecewise, IdenticalRegimesIgnoreJumps)
{
    auto p = mmh_three_state();
    for (auto* v : {&p.r, &p.nu, &p.kappa, &p.theta, &p.chi, &p.lambda_hat}) {
        std::fill(v->begin(), v->end(), (*v)[0]);
    }
    const auto flat = compose_piecewise(RegimePath::constant(0, 0.0, 5.0), p);
    const auto jumpy = compose_piecewise(two_jump_path(5.0), p);
    for (double t = 0.0; t <= 5.0; t += 0.05) {
        EXPECT_NEAR(jumpy.B(t), flat.B(t), 1e-12);
        EXPECT_NEAR(jumpy.A(t), flat.A(t), 1e-12);
    }
}

TEST(ComposePiecewise, MatchesNumericOnTwoJumpPath)
{
    for (const auto& p : {set1(), mmh_three_state()}) {
        const auto ab = compose_piecewise(two_jump_path(5.0), p);
        const auto segs = ab.riccati_segments();
        const auto s = riccati_numeric(segs, 0.0, 1e-4);
        double sup = 0.0;
        for (std::size_t k = 0; k < s.t.size(); ++k) {
            sup = std::max({sup, std::abs(s.B[k] - ab.B(s.t[k])), std::abs(s.A[k] - ab.A(s.t[k]))});
        }
        EXPECT_LE(sup, 1e-7);
    }
}

TEST(ComposePiecewise, ContinuousAtBoundaries)
{
    const auto p = mmh_three_state();
    RegimePath path;
    path.start = 0.0;
    path.horizon = 5.0;
    path.jump_times = {0.4, 1.1, 2.0, 3.3, 4.6};
    path.states = {0, 2, 1, 0, 1, 2};
    const auto ab = compose_piecewise(path, p);
    for (std::size_t j = 0; j + 1 < ab.segments().size(); ++j) {
        const auto& left = ab.segments()[j];
        const auto& right = ab.segments()[j + 1];
        const auto at_end = char_fn_coeffs(left.kappa, left.theta, left.chi, left.alpha, left.beta, 0.0);
        EXPECT_NEAR(at_end.B, ab.B(right.begin), 1e-12);
        const double eps = 1e-9;
        EXPECT_NEAR(ab.B(right.begin - eps), ab.B(right.begin), 1e-7);
        EXPECT_NEAR(ab.A(right.begin - eps), ab.A(right.begin), 1e-7);
    }
}

TEST(ComposePiecewise, RejectsHorizonMismatch)
{
    EXPECT_THROW(compose_piecewise(RegimePath::constant(0, 0.0, 4.0), set1()), InvalidInput);
}

TEST(BSeparable, TerminalAndNoExcessReturn)
{
    auto p = make_separable(Variant::SMMH, {0.03, 0.01}, {1.0, 1.3}, 4.0, {0.02, 0.04}, 0.35, 1.7, 0.0, 0.3, 5.0);
    EXPECT_EQ(B_separable(p, 5.0), 0.0);
    p.d = 0.0;
    for (double t : {0.0, 2.0, 5.0}) EXPECT_EQ(B_separable(p, t), 0.0);
    EXPECT_THROW(B_separable(set1(), 1.0), DomainViolation);  // rho != 0
    EXPECT_THROW(B_separable(p, 6.0), DomainViolation);
}

TEST(BSeparable, MatchesRk4)
{
    const auto p = make_separable(Variant::SMMH, {0.03, 0.01}, {1.0, 1.3}, 4.0, {0.02, 0.04}, 0.35, 1.7, 0.0, 0.3, 5.0);
    const double q = 0.3 / 0.7;
    // dB/ds = q d^2 / 2 - kappa B + chi^2 B^2 / 2 in time to go s
    const double b0 = oracle::rk4_scalar(
        [&](double, double b) { return 0.5 * q * 1.7 * 1.7 - 4.0 * b + 0.5 * 0.35 * 0.35 * b * b; }, 0.0, 5.0, 1e-4);
    EXPECT_NEAR(B_separable(p, 0.0), b0, 1e-8);
}

TEST(DLeverage, TerminalAndRhoZero)
{
    EXPECT_EQ(D_leverage(set1(), 5.0), 0.0);
    const auto no_lev = set1(0.3, 0.0);
    auto sep = no_lev;
    sep.variant = Variant::SMMH;
    for (double t : {0.0, 1.0, 4.5}) EXPECT_DOUBLE_EQ(D_leverage(no_lev, t), B_separable(sep, t));
    EXPECT_THROW(D_leverage(mmh_three_state(), 0.0), DomainViolation);
}

TEST(DLeverage, Set1ValueAndRk4)
{
    const auto p = set1();
    EXPECT_NEAR(D_leverage(p, 0.0), 0.147714, 1e-6);
    const double q = 0.3 / 0.7;
    const double vt = p.vartheta();
    const double kt = 4.0 - q * (-0.8) * 0.35 * 1.7;
    const double d0 = oracle::rk4_scalar(
        [&](double, double d) { return 0.5 * q * 1.7 * 1.7 - kt * d + 0.5 * 0.35 * 0.35 * d * d / vt; }, 0.0, 5.0,
        1e-4);
    EXPECT_NEAR(D_leverage(p, 0.0), d0, 1e-8);
}

TEST(DLeverage, DerivativeSatisfiesRiccati)
{
    const auto p = set1();
    const SeparableCoefficient d(p);
    const double h = 1e-5;
    for (double t : {0.5, 2.0, 4.0}) {
        const double fd = (d(t + h) - d(t - h)) / (2.0 * h);
        EXPECT_NEAR(d.derivative(t), fd, 1e-8);
    }
}

TEST(DLeverage, SignFollowsDelta)
{
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int checked = 0;
    while (checked < 50) {
        const double delta = u(rng) < 0.5 ? -3.0 * u(rng) - 0.01 : 0.9 * u(rng) + 0.01;
        const double rho = -1.0 + 2.0 * u(rng);
        const double kappa = 0.5 + 4.0 * u(rng);
        const double chi = 0.1 + 0.6 * u(rng);
        const double d = -2.0 + 4.0 * u(rng);
        const auto p = make_separable(Variant::SMMH_RHO, {0.02}, {1.0}, kappa, {chi * chi / kappa}, chi, d, rho,
                                      delta, 3.0);
        if (!validate_solution_assumptions(p).ok() || d == 0.0) continue;
        ++checked;
        for (double t : {0.0, 1.5, 2.99}) {
            const double v = D_leverage(p, t);
            EXPECT_EQ(v > 0.0, delta > 0.0) << "delta " << delta << " D " << v;
            EXPECT_NE(v, 0.0);
        }
    }
}

TEST(DLeverage, DeterministicFactorHasNoClosedForm)
{
    auto p = set1();
    p.chi = {0.0, 0.0};
    EXPECT_NO_THROW(p.validate());
    EXPECT_THROW(D_leverage(p, 0.0), DomainViolation);
}
