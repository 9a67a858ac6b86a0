#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "heliquad/mechanism.hpp"
#include "oracles.hpp"

using namespace heliquad;

namespace {

MechanismParams proto() { return prototype_mechanism(); }

// Servo angle whose pitch equals gamma_deg, found by scanning + bisection on
// the forward map (kept independent of inverse_pitch).
double xi_for_pitch(const MechanismParams& p, double gamma_deg) {
    const double target = deg2rad(gamma_deg);
    double lo = -kPi / 2, hi = kPi / 2;
    double flo = forward_pitch(p, lo) - target;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double fm = forward_pitch(p, mid) - target;
        if ((fm > 0) == (flo > 0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace

TEST(IntermediateTerms, PrototypeClosureConstants) {
    const auto p = proto();
    const auto t = intermediate_terms(p, 0.0);
    // direct evaluation of A = -X0 + l2 cos(pi/2 + eta1)
    EXPECT_NEAR(t.A, -p.X0 + p.l2 * std::cos(kPi / 2 + p.eta1), 1e-15);
    EXPECT_NEAR(t.A, 7.748653822724882, 1e-12);
    // A independent of xi
    EXPECT_DOUBLE_EQ(t.A, intermediate_terms(p, 0.7).A);
    // type invariants
    EXPECT_NEAR(t.P, p.l4 + p.l3 * t.C, 1e-12);
    EXPECT_LE(t.Q, 0.0);
    EXPECT_NEAR(t.Q, -p.l3 * std::sqrt(1 - t.C * t.C), 1e-12);
}

TEST(IntermediateTerms, ZeroCrankFreezesB) {
    auto p = proto();
    p.r0 = 0.0;
    const double b0 = intermediate_terms(p, -1.2).B;
    EXPECT_DOUBLE_EQ(b0, intermediate_terms(p, 0.4).B);
    EXPECT_DOUBLE_EQ(b0, intermediate_terms(p, 1.5).B);
}

TEST(IntermediateTerms, EqualLinksZeroOffsetsGiveCMinusOne) {
    MechanismParams p;
    p.l1 = 1.0;
    p.l2 = 1.0;
    p.l3 = 3.0;
    p.l4 = 3.0;
    p.r0 = 0.0;
    p.eta1 = 0.0;  // cos(pi/2) = 0, sin(pi/2) = 1
    p.X0 = 0.0;    // A = 0
    p.Y0 = 2.0;    // B = -2 + 1 + 1 = 0
    const auto t = intermediate_terms(p, 0.3);
    EXPECT_NEAR(t.A, 0.0, 1e-15);
    EXPECT_NEAR(t.B, 0.0, 1e-15);
    EXPECT_NEAR(t.C, -1.0, 1e-15);
    EXPECT_NEAR(passive_eta3(p, 0.3), kPi, 1e-7);
}

TEST(PassiveEta3, ExtendedCaseGivesZero) {
    MechanismParams p;
    p.l1 = 1.0;
    p.l2 = 1.0;
    p.l3 = 1.0;
    p.l4 = 1.0;
    p.r0 = 1.0;
    p.eta1 = 0.0;
    p.X0 = -2.0;  // A = 2
    p.Y0 = 2.0;   // B = -2 + 0 + 1 + 1 = 0 at xi = 0
    const auto t = intermediate_terms(p, 0.0);
    EXPECT_DOUBLE_EQ(t.C, 1.0);
    EXPECT_DOUBLE_EQ(passive_eta3(p, 0.0), 0.0);
}

TEST(PassiveEta3, MatchesRootFinder) {
    const auto p = proto();
    const auto sol = oracle::branch_pose(p, 0.0);
    ASSERT_TRUE(sol.has_value());
    EXPECT_NEAR(passive_eta3(p, 0.0), sol->eta3, 1e-9);
}

TEST(ForwardPitch, OracleEquivalenceOverOperatingRange) {
    const auto p = proto();
    const double xi_lo = xi_for_pitch(p, -30.0);
    const double xi_hi = xi_for_pitch(p, 30.0);
    double max_err = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const double xi = xi_lo + (xi_hi - xi_lo) * i / 999.0;
        const double g = forward_pitch(p, xi);
        const auto sol = oracle::branch_pose(p, xi);
        ASSERT_TRUE(sol.has_value()) << "oracle lost the branch at xi=" << xi;
        max_err = std::max(max_err, std::fabs(g - sol->gamma));
    }
    EXPECT_LT(max_err, 1e-9);
}

TEST(ForwardPitch, MinusBranchSatisfiesClosure) {
    auto p = proto();
    p.branch = Branch::minus;
    for (double xi : {-1.0, -0.3, 0.0, 0.4, 1.2}) {
        const MechanismPose pose = solve_pose(p, xi);
        EXPECT_LT(pose.eta3, 0.0);
        const auto [rx, ry] = loop_residual(p, pose);
        EXPECT_LT(std::fabs(rx), 1e-9);
        EXPECT_LT(std::fabs(ry), 1e-9);
        const auto sol = oracle::branch_pose(p, xi);
        ASSERT_TRUE(sol.has_value());
        EXPECT_NEAR(pose.gamma, sol->gamma, 1e-9);
    }
}

TEST(ForwardPitch, ZeroCrankMakesPitchConstant) {
    auto p = proto();
    p.r0 = 0.0;
    const double g0 = forward_pitch(p, -1.0);
    EXPECT_DOUBLE_EQ(g0, forward_pitch(p, 0.0));
    EXPECT_DOUBLE_EQ(g0, forward_pitch(p, 1.3));
}

TEST(ForwardPitch, MonotoneOverOperatingWindow) {
    const auto p = proto();
    const double xi_lo = xi_for_pitch(p, -30.0);
    const double xi_hi = xi_for_pitch(p, 30.0);
    double prev = forward_pitch(p, xi_lo);
    for (int i = 1; i < 400; ++i) {
        const double xi = xi_lo + (xi_hi - xi_lo) * i / 399.0;
        const double g = forward_pitch(p, xi);
        EXPECT_GT(g, prev);
        prev = g;
    }
}

TEST(ForwardPitch, UnassemblableReportsOffendingXi) {
    auto p = proto();
    p.r0 = 60.0;  // stroke far beyond what the dyad can absorb
    try {
        forward_pitch(p, kPi / 2);
        FAIL() << "expected Unassemblable";
    } catch (const Unassemblable& e) {
        EXPECT_NEAR(e.xi, kPi / 2, 1e-15);
        EXPECT_GT(std::fabs(e.C), 1.0);
    }
}

TEST(LoopClosure, ResidualBelowNanometer) {
    const auto p = proto();
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-kPi / 2, kPi / 2);
    for (int i = 0; i < 1000; ++i) {
        const MechanismPose pose = solve_pose(p, u(rng));
        const auto [rx, ry] = loop_residual(p, pose);
        EXPECT_LT(std::fabs(rx), 1e-9);
        EXPECT_LT(std::fabs(ry), 1e-9);
    }
}

TEST(Jacobian, DeterminantIdentity) {
    const auto p = proto();
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-kPi / 2, kPi / 2);
    for (int i = 0; i < 200; ++i) {
        const MechanismPose pose = solve_pose(p, u(rng));
        const auto j = mechanism_jacobian(p, pose);
        const double expected = p.l3 * p.l4 * std::sin(pose.eta3);
        EXPECT_NEAR(j.detK, expected, 1e-12 * std::fabs(expected));
    }
}

TEST(PassiveRates, DwellAtXiNinetyDegrees) {
    const auto p = proto();
    const MechanismPose pose = solve_pose(p, kPi / 2);
    const auto r = passive_rates(p, pose, 3.7);
    EXPECT_NEAR(r.gamma_dot, 0.0, 1e-12);
    EXPECT_NEAR(r.eta3_dot, 0.0, 1e-12);
}

TEST(PassiveRates, MatchesCentralFiniteDifference) {
    const auto p = proto();
    const double h = 1e-6;
    for (double xi : {-1.0, -0.5, 0.0, 0.4, 1.0}) {
        const MechanismPose pose = solve_pose(p, xi);
        const auto r = passive_rates(p, pose, 1.0);
        const double fd_g = (forward_pitch(p, xi + h) - forward_pitch(p, xi - h)) / (2 * h);
        const double fd_e = (passive_eta3(p, xi + h) - passive_eta3(p, xi - h)) / (2 * h);
        EXPECT_NEAR(r.gamma_dot, fd_g, 1e-6 * std::max(1.0, std::fabs(fd_g)));
        EXPECT_NEAR(r.eta3_dot, fd_e, 1e-6 * std::max(1.0, std::fabs(fd_e)));
    }
}

TEST(PassiveRates, LinearInXiDot) {
    const auto p = proto();
    const MechanismPose pose = solve_pose(p, 0.3);
    const auto r0 = passive_rates(p, pose, 0.0);
    EXPECT_DOUBLE_EQ(r0.gamma_dot, 0.0);
    EXPECT_DOUBLE_EQ(r0.eta3_dot, 0.0);
    const auto r1 = passive_rates(p, pose, 1.0);
    const auto r2 = passive_rates(p, pose, -2.5);
    EXPECT_NEAR(r2.gamma_dot, -2.5 * r1.gamma_dot, 1e-15);
    EXPECT_NEAR(r2.eta3_dot, -2.5 * r1.eta3_dot, 1e-15);
}

TEST(PassiveRates, SingularConfigurationThrows) {
    const auto p = proto();
    MechanismPose pose;
    pose.xi = 0.0;
    pose.gamma = 0.5;
    pose.eta3 = 1e-12;  // links stretched straight
    EXPECT_THROW(passive_rates(p, pose, 1.0), SingularConfiguration);
}

// det(K)-zero scan along poses parameterized by the transmission input B:
// bisect C(B) = +/-1 and read gamma off atan2(B*, A).
namespace {

double scan_singular_gamma(const MechanismParams& p, double c_target, double b_lo,
                           double b_hi) {
    const double A = intermediate_terms(p, 0.0).A;
    auto C_of_B = [&](double B) {
        return (A * A + B * B - p.l4 * p.l4 - p.l3 * p.l3) / (2 * p.l4 * p.l3);
    };
    double lo = b_lo, hi = b_hi;
    double flo = C_of_B(lo) - c_target;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double fm = C_of_B(mid) - c_target;
        if ((fm > 0) == (flo > 0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return std::atan2(0.5 * (lo + hi), A);
}

}  // namespace

TEST(SingularPitch, ExtendedMatchesDetScan) {
    const auto p = proto();
    const double gs = singular_pitch_extended(p);
    EXPECT_NEAR(gs, deg2rad(59.59445950417491), 1e-9);
    const double scan = scan_singular_gamma(p, 1.0, 0.1, 40.0);
    EXPECT_NEAR(gs, scan, 1e-9);
    // at the singular pose det(K) vanishes
    MechanismPose pose;
    pose.gamma = gs;
    pose.eta3 = 0.0;
    EXPECT_LT(std::fabs(mechanism_jacobian(p, pose).detK), 1e-9);
}

TEST(SingularPitch, FoldedMatchesDetScanOnCustomLinks) {
    MechanismParams p;
    p.l1 = 10.0;
    p.l2 = 1.0;
    p.l3 = 2.0;
    p.l4 = 6.0;
    p.r0 = 1.0;
    p.eta1 = 0.0;
    p.X0 = -1.0;  // A = 1
    p.Y0 = 0.0;
    const double gs = singular_pitch_folded(p);
    EXPECT_NEAR(gs, std::acos(1.0 / 4.0), 1e-12);
    const double scan = scan_singular_gamma(p, -1.0, 0.5, 8.0);
    EXPECT_NEAR(gs, scan, 1e-9);
    MechanismPose pose;
    pose.gamma = gs;
    pose.eta3 = kPi;
    EXPECT_LT(std::fabs(mechanism_jacobian(p, pose).detK), 1e-9);
}

TEST(SingularPitch, FoldedUnreachableOnPrototype) {
    EXPECT_THROW(singular_pitch_folded(proto()), NotReachable);
    const auto s = singular_pitch(proto());
    EXPECT_TRUE(s.gamma_s_ext.has_value());
    EXPECT_FALSE(s.gamma_s_fold.has_value());
}

TEST(SingularPitch, DegenerateAndTrivialCases) {
    auto p = proto();
    p.l3 = p.l4;
    EXPECT_THROW(singular_pitch_folded(p), DegenerateLinks);

    // A = 0 puts both singular pitches at 90 deg
    MechanismParams q;
    q.l1 = 5.0;
    q.l2 = 1.0;
    q.l3 = 2.0;
    q.l4 = 3.0;
    q.r0 = 1.0;
    q.eta1 = 0.0;
    q.X0 = 0.0;  // A = 0
    q.Y0 = 0.0;
    EXPECT_NEAR(singular_pitch_extended(q), kPi / 2, 1e-12);
    EXPECT_NEAR(singular_pitch_folded(q), kPi / 2, 1e-12);

    q.X0 = -(q.l4 + q.l3);  // A = l4 + l3
    EXPECT_NEAR(singular_pitch_extended(q), 0.0, 1e-7);
}

TEST(ServoTorque, PrototypeSizingPoint) {
    const auto p = proto();
    const double xi = xi_for_pitch(p, 19.0);
    const MechanismPose pose = solve_pose(p, xi);
    EXPECT_NEAR(rad2deg(pose.gamma), 19.0, 1e-6);
    const double tau = servo_torque(p, pose, 0.0105);
    const double ref = 0.06 * 0.0980665;  // 0.06 kgf*cm in N*m
    EXPECT_LT(std::fabs(std::fabs(tau) - ref), 0.15 * ref);
}

TEST(ServoTorque, LinearInMomentAndZeroAtDwell) {
    const auto p = proto();
    const MechanismPose pose = solve_pose(p, 0.4);
    EXPECT_DOUBLE_EQ(servo_torque(p, pose, 0.0), 0.0);
    const double t1 = servo_torque(p, pose, 0.01);
    EXPECT_NEAR(servo_torque(p, pose, -0.03), -3.0 * t1, 1e-15);
    const MechanismPose dwell = solve_pose(p, kPi / 2);
    EXPECT_NEAR(servo_torque(p, dwell, 0.01), 0.0, 1e-15);
}

TEST(PwmMaps, AffinePitchMap) {
    EXPECT_DOUBLE_EQ(pwm_to_pitch(1500.0, 1500.0), 0.0);
    EXPECT_DOUBLE_EQ(pwm_to_pitch(1600.0, 1500.0), 9.0);
    EXPECT_DOUBLE_EQ(pwm_to_pitch(1300.0, 1500.0), -18.0);
    EXPECT_THROW(pwm_to_pitch(999.0, 1500.0), OutOfRange);
    EXPECT_THROW(pwm_to_pitch(2000.5, 1500.0), OutOfRange);
}

TEST(PwmMaps, PitchPwmRoundTrip) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(kPwmMin, kPwmMax);
    for (int i = 0; i < 100; ++i) {
        const double z = u(rng);
        EXPECT_NEAR(pitch_to_pwm(pwm_to_pitch(z, 1480.0), 1480.0), z, 1e-12);
    }
    const auto p = proto();
    for (int i = 0; i < 100; ++i) {
        const double z = u(rng);
        EXPECT_NEAR(xi_to_pwm(p, pwm_to_xi(p, z)), z, 1e-9);
    }
}

TEST(FitLinearIo, PrototypeWindowRmse) {
    const auto fit = fit_linear_io(proto(), -30.0, 30.0);
    EXPECT_LE(fit.rmse_deg, 0.5);
    EXPECT_GT(fit.n_samples, 400);
    // calibrated servo range puts the composite slope at the affine map's
    EXPECT_NEAR(fit.slope, kPwmPitchSlope, 0.002);
}

TEST(FitLinearIo, TwoSampleFitIsExact) {
    // window sized to catch exactly two samples -> the line interpolates
    const auto p = proto();
    const double g0 = rad2deg(pitch_from_pwm_exact(p, 1500.0));
    const double g1 = rad2deg(pitch_from_pwm_exact(p, 1501.0));
    const auto fit = fit_linear_io(p, std::min(g0, g1) - 1e-9, std::max(g0, g1) + 1e-9);
    EXPECT_EQ(fit.n_samples, 2);
    EXPECT_NEAR(fit.rmse_deg, 0.0, 1e-9);
}

TEST(FitLinearIo, InverseAgreesWithForward) {
    const auto p = proto();
    for (double gd : {-15.0, -5.0, 0.0, 8.0, 20.0}) {
        const double xi = inverse_pitch(p, deg2rad(gd));
        EXPECT_NEAR(rad2deg(forward_pitch(p, xi)), gd, 1e-9);
    }
}

TEST(ConfigIo, MechanismRoundTrip) {
    const std::string path = std::string(HELIQUAD_CONFIG_DIR) + "/prototype.mech";
    const MechanismParams p = load_mechanism(path);
    const MechanismParams q = prototype_mechanism();
    EXPECT_DOUBLE_EQ(p.l1, q.l1);
    EXPECT_DOUBLE_EQ(p.l3, q.l3);
    EXPECT_DOUBLE_EQ(p.r0, q.r0);
    EXPECT_NEAR(p.eta1, q.eta1, 1e-12);
    EXPECT_NEAR(p.xi_max, q.xi_max, 1e-12);
    EXPECT_EQ(p.branch, Branch::plus);
}
