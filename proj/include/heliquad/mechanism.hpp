#pragma once

// Closed-loop variable-pitch mechanism (RPRR four-bar variant).
//
// The crank (length r0) converts the servo angle xi into vertical travel of
// the push rod; the rod drives the two-link dyad (l3, l4) whose grounded link
// carries the blade at pitch angle gamma. Loop closure, with eta3 the passive
// joint between links 3 and 4:
//
//   l4 cos(g) + l3 cos(g + eta3) = A,   A = -X0 + l2 cos(pi/2 + eta1)
//   l4 sin(g) + l3 sin(g + eta3) = B,   B = -Y0 + r0 sin(xi) + l1 + l2 sin(pi/2 + eta1)
//
// Lengths are kept in millimetres throughout; only ratios of lengths enter
// the torque computation, so no unit conversion is needed there. Angles are
// radians except at I/O boundaries.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "heliquad/config.hpp"
#include "heliquad/errors.hpp"
#include "heliquad/util.hpp"

namespace heliquad {

enum class Branch { plus, minus };

struct MechanismParams {
    double l1 = 0, l2 = 0, l3 = 0, l4 = 0;  // link lengths [mm]
    double r0 = 0;                          // crank length [mm]
    double X0 = 0, Y0 = 0;                  // ground-frame offsets [mm]
    double eta1 = 0;                        // fixed joint angle [rad]
    int n_blades = 2;
    Branch branch = Branch::plus;  // assembled solution branch

    // Servo PWM [1000,2000] us maps linearly onto [xi_min, xi_max].
    double xi_min = deg2rad(-90.0);
    double xi_max = deg2rad(90.0);

    void validate() const {
        if (l1 <= 0 || l2 <= 0 || l3 <= 0 || l4 <= 0 || r0 < 0)
            throw OutOfRange("mechanism link lengths must be positive");
        if (n_blades < 1) throw OutOfRange("n_blades must be >= 1");
        if (!(xi_min < xi_max)) throw OutOfRange("xi_min must be < xi_max");
    }

    double branch_sign() const { return branch == Branch::plus ? 1.0 : -1.0; }
};

struct MechanismPose {
    double xi = 0;     // servo angle [rad]
    double gamma = 0;  // propeller pitch [rad]
    double eta3 = 0;   // passive joint angle [rad]
};

struct IntermediateTerms {
    double A = 0, B = 0;  // closure constants [mm]
    double C = 0;         // dimensionless; assembly feasible iff |C| <= 1
    double P = 0, Q = 0;  // [mm]; Q <= 0 on the plus branch
};

struct MechanismJacobian {
    double K[2][2] = {};  // [mm]
    double k[2] = {};     // [mm]
    double detK = 0;      // [mm^2]; equals l3*l4*sin(eta3)
};

// Tolerance below which sin(eta3) counts as singular, shared by all
// operations that divide by it.
inline constexpr double kSingularSinEta3 = 1e-9;

inline IntermediateTerms intermediate_terms(const MechanismParams& p, double xi) {
    IntermediateTerms t;
    t.A = -p.X0 + p.l2 * std::cos(kPi / 2.0 + p.eta1);
    t.B = -p.Y0 + p.r0 * std::sin(xi) + p.l1 + p.l2 * std::sin(kPi / 2.0 + p.eta1);
    t.C = clamp_unit((t.A * t.A + t.B * t.B - p.l4 * p.l4 - p.l3 * p.l3) /
                     (2.0 * p.l4 * p.l3));
    const double c = std::fabs(t.C) <= 1.0 ? t.C : std::copysign(1.0, t.C);
    t.P = p.l4 + p.l3 * c;
    t.Q = -p.l3 * std::sqrt(std::max(0.0, 1.0 - c * c));
    return t;
}

inline double passive_eta3(const MechanismParams& p, double xi) {
    const IntermediateTerms t = intermediate_terms(p, xi);
    if (std::fabs(t.C) > 1.0) throw Unassemblable(xi, t.C);
    return p.branch_sign() * std::acos(t.C);
}

// Forward pitch map. gamma = atan2(B, A) - atan2(-Q_b, P) with Q_b carrying
// the branch sign; this form satisfies both closure equations directly and
// is equivalent to atan(Q/P) + acos(A/sqrt(P^2+Q^2)) on the plus branch.
inline double forward_pitch(const MechanismParams& p, double xi) {
    const IntermediateTerms t = intermediate_terms(p, xi);
    if (std::fabs(t.C) > 1.0) throw Unassemblable(xi, t.C);
    const double hyp = std::sqrt(t.P * t.P + t.Q * t.Q);
    if (std::fabs(t.A) > hyp * (1.0 + 1e-12) && std::fabs(t.A) > hyp + 1e-12)
        throw NoBranchSolution(xi);
    const double Qb = p.branch_sign() * t.Q;
    return wrap_pi(std::atan2(t.B, t.A) - std::atan2(-Qb, t.P));
}

inline MechanismPose solve_pose(const MechanismParams& p, double xi) {
    MechanismPose pose;
    pose.xi = xi;
    pose.gamma = forward_pitch(p, xi);
    pose.eta3 = passive_eta3(p, xi);
    return pose;
}

// Residuals of the two closure equations [mm]; zero for a consistent pose.
inline std::pair<double, double> loop_residual(const MechanismParams& p,
                                               const MechanismPose& pose) {
    const IntermediateTerms t = intermediate_terms(p, pose.xi);
    const double rx = p.l4 * std::cos(pose.gamma) + p.l3 * std::cos(pose.gamma + pose.eta3) - t.A;
    const double ry = p.l4 * std::sin(pose.gamma) + p.l3 * std::sin(pose.gamma + pose.eta3) - t.B;
    return {rx, ry};
}

inline MechanismJacobian mechanism_jacobian(const MechanismParams& p,
                                            const MechanismPose& pose) {
    MechanismJacobian j;
    const double sg = std::sin(pose.gamma), cg = std::cos(pose.gamma);
    const double sge = std::sin(pose.gamma + pose.eta3), cge = std::cos(pose.gamma + pose.eta3);
    j.K[0][0] = -p.l4 * sg - p.l3 * sge;
    j.K[0][1] = -p.l3 * sge;
    j.K[1][0] = p.l4 * cg + p.l3 * cge;
    j.K[1][1] = p.l3 * cge;
    j.k[0] = 0.0;
    j.k[1] = -p.r0 * std::cos(pose.xi);
    j.detK = j.K[0][0] * j.K[1][1] - j.K[0][1] * j.K[1][0];
    return j;
}

struct PassiveRates {
    double gamma_dot = 0;
    double eta3_dot = 0;
};

// Rates of the passive variables, [gdot; e3dot] = -K^{-1} k xidot, in closed
// form. Matches central finite differences of forward_pitch.
inline PassiveRates passive_rates(const MechanismParams& p, const MechanismPose& pose,
                                  double xi_dot) {
    const double se = std::sin(pose.eta3);
    if (std::fabs(se) <= kSingularSinEta3) throw SingularConfiguration(se);
    const double cxi = std::cos(pose.xi);
    const double sge = std::sin(pose.gamma + pose.eta3);
    PassiveRates r;
    r.gamma_dot = p.r0 * sge * cxi / (p.l4 * se) * xi_dot;
    r.eta3_dot = -p.r0 * cxi *
                 (p.l4 * std::sin(pose.gamma) + p.l3 * sge) / (p.l3 * p.l4 * se) * xi_dot;
    return r;
}

// Pitch angles at which det(K) = 0. Extended: eta3 = 0 (links 3,4 stretched);
// folded: eta3 = pi (links folded back).
inline double singular_pitch_extended(const MechanismParams& p) {
    const double A = intermediate_terms(p, 0.0).A;
    const double arg = A / (p.l4 + p.l3);
    if (std::fabs(arg) > 1.0) throw NotReachable("extended (|A/(l4+l3)| > 1)");
    return std::acos(arg);
}

inline double singular_pitch_folded(const MechanismParams& p) {
    if (p.l3 == p.l4) throw DegenerateLinks("l3 == l4, folded singularity undefined");
    const double A = intermediate_terms(p, 0.0).A;
    const double arg = A / (p.l4 - p.l3);
    if (std::fabs(arg) > 1.0) throw NotReachable("folded (|A/(l4-l3)| > 1)");
    return std::acos(arg);
}

struct SingularPitch {
    std::optional<double> gamma_s_ext;   // [rad], empty if not reachable
    std::optional<double> gamma_s_fold;  // [rad]
};

inline SingularPitch singular_pitch(const MechanismParams& p) {
    SingularPitch s;
    try {
        s.gamma_s_ext = singular_pitch_extended(p);
    } catch (const NotReachable&) {}
    try {
        s.gamma_s_fold = singular_pitch_folded(p);
    } catch (const Error&) {}
    return s;
}

// Servo torque holding static equilibrium against the propeller pitching
// moment M_prop [N*m]: tau_s = J^T M_prop with J = dgamma/dxi. The length
// ratio r0/l4 is dimensionless, so mm cancel.
inline double servo_torque(const MechanismParams& p, const MechanismPose& pose,
                           double M_prop) {
    const double se = std::sin(pose.eta3);
    if (std::fabs(se) <= kSingularSinEta3) throw SingularConfiguration(se);
    return M_prop * p.r0 * std::sin(pose.gamma + pose.eta3) * std::cos(pose.xi) /
           (p.l4 * se);
}

// --- servo PWM maps -------------------------------------------------------

inline constexpr double kPwmMin = 1000.0;  // [us]
inline constexpr double kPwmMax = 2000.0;
inline constexpr double kPwmPitchSlope = 0.09;  // [deg/us], controller-side affine map

// Affine controller-side map, degrees out.
inline double pwm_to_pitch(double zeta_us, double zeta0_us) {
    if (zeta_us < kPwmMin || zeta_us > kPwmMax)
        throw OutOfRange("pwm " + std::to_string(zeta_us) + " us outside [1000,2000]");
    return kPwmPitchSlope * (zeta_us - zeta0_us);
}

inline double pitch_to_pwm(double gamma_deg, double zeta0_us) {
    return zeta0_us + gamma_deg / kPwmPitchSlope;
}

// Plant-side linear servo map.
inline double pwm_to_xi(const MechanismParams& p, double zeta_us) {
    if (zeta_us < kPwmMin || zeta_us > kPwmMax)
        throw OutOfRange("pwm " + std::to_string(zeta_us) + " us outside [1000,2000]");
    const double f = (zeta_us - kPwmMin) / (kPwmMax - kPwmMin);
    return p.xi_min + f * (p.xi_max - p.xi_min);
}

inline double xi_to_pwm(const MechanismParams& p, double xi) {
    const double f = (xi - p.xi_min) / (p.xi_max - p.xi_min);
    return kPwmMin + f * (kPwmMax - kPwmMin);
}

// True pitch reached when the servo is commanded zeta_us.
inline double pitch_from_pwm_exact(const MechanismParams& p, double zeta_us) {
    return forward_pitch(p, pwm_to_xi(p, zeta_us));
}

// Servo angle that realizes a requested pitch (principal solution,
// xi in [-pi/2, pi/2]).
inline double inverse_pitch(const MechanismParams& p, double gamma) {
    const IntermediateTerms t0 = intermediate_terms(p, 0.0);
    const double cge = clamp_unit((t0.A - p.l4 * std::cos(gamma)) / p.l3);
    if (std::fabs(cge) > 1.0)
        throw OutOfRange("pitch " + std::to_string(gamma) + " rad unreachable");
    // gamma + eta3, with the branch picking the elbow side
    const double ge = p.branch_sign() * std::acos(cge);
    const double B = p.l4 * std::sin(gamma) + p.l3 * std::sin(ge);
    const double base = -p.Y0 + p.l1 + p.l2 * std::sin(kPi / 2.0 + p.eta1);
    const double sxi = (B - base) / p.r0;
    if (std::fabs(clamp_unit(sxi)) > 1.0)
        throw OutOfRange("pitch " + std::to_string(gamma) + " rad outside crank stroke");
    return std::asin(clamp_unit(sxi));
}

// --- linear composite fit -------------------------------------------------

struct LinearIoFit {
    double slope = 0;       // [deg/us]
    double intercept = 0;   // [deg], gamma_deg = slope*zeta + intercept
    double rmse_deg = 0;
    int n_samples = 0;
};

// Least-squares line through (zeta, gamma_deg) samples of the composite
// PWM -> xi -> gamma map, restricted to the given pitch window.
inline LinearIoFit fit_linear_io(const MechanismParams& p, double window_lo_deg,
                                 double window_hi_deg, double step_us = 1.0) {
    std::vector<double> zs, gs;
    for (double z = kPwmMin; z <= kPwmMax + 1e-9; z += step_us) {
        const double g = rad2deg(pitch_from_pwm_exact(p, std::min(z, kPwmMax)));
        if (g < window_lo_deg || g > window_hi_deg) continue;
        zs.push_back(z);
        gs.push_back(g);
    }
    if (zs.size() < 2) throw OutOfRange("fit window contains fewer than 2 samples");
    const double n = static_cast<double>(zs.size());
    double sz = 0, sg = 0, szz = 0, szg = 0;
    for (std::size_t i = 0; i < zs.size(); ++i) {
        sz += zs[i];
        sg += gs[i];
        szz += zs[i] * zs[i];
        szg += zs[i] * gs[i];
    }
    LinearIoFit fit;
    fit.slope = (n * szg - sz * sg) / (n * szz - sz * sz);
    fit.intercept = (sg - fit.slope * sz) / n;
    double ss = 0;
    for (std::size_t i = 0; i < zs.size(); ++i) {
        const double r = fit.slope * zs[i] + fit.intercept - gs[i];
        ss += r * r;
    }
    fit.rmse_deg = std::sqrt(ss / n);
    fit.n_samples = static_cast<int>(zs.size());
    return fit;
}

// --- prototype parameters and config I/O ----------------------------------

inline MechanismParams prototype_mechanism() {
    MechanismParams p;
    p.l1 = 55.29;
    p.l2 = 7.98;
    p.l3 = 6.73;
    p.l4 = 8.58;
    p.r0 = 5.6;
    p.X0 = 0.0;
    p.Y0 = 46.35;
    p.eta1 = deg2rad(256.17);
    p.n_blades = 2;
    p.branch = Branch::plus;
    // Calibrated so the composite PWM->pitch slope equals the controller's
    // 0.09 deg/us affine map.
    p.xi_min = deg2rad(-72.665);
    p.xi_max = deg2rad(72.665);
    return p;
}

inline MechanismParams load_mechanism(const std::string& path) {
    const KeyValueFile f = KeyValueFile::load(path);
    MechanismParams p;
    p.l1 = f.get_double("l1");
    p.l2 = f.get_double("l2");
    p.l3 = f.get_double("l3");
    p.l4 = f.get_double("l4");
    p.r0 = f.get_double("r0");
    p.X0 = f.get_double("X0", 0.0);
    p.Y0 = f.get_double("Y0", 0.0);
    p.eta1 = deg2rad(f.get_double("eta1_deg"));
    p.n_blades = static_cast<int>(f.get_double("n_blades", 2));
    const std::string br = f.get_string("branch", "plus");
    if (br == "plus") p.branch = Branch::plus;
    else if (br == "minus") p.branch = Branch::minus;
    else throw ParseError(path, 0, "branch must be 'plus' or 'minus'");
    p.xi_min = deg2rad(f.get_double("xi_min_deg", -90.0));
    p.xi_max = deg2rad(f.get_double("xi_max_deg", 90.0));
    p.validate();
    return p;
}

}  // namespace heliquad
