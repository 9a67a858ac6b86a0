#pragma once

// Rigid-body plant for the '+'-frame vehicle. State is inertial position and
// velocity, body-to-inertial unit quaternion and body rates. Thrust acts
// along body z, gravity along -z inertial:
//
//   m xdd = R(q) [0 0 T_sigma]^T - m g e3
//   I wd + w x I w = m_B
//   qd = 1/2 q * [0, w]
//
// Integration is fixed-step RK4 with quaternion renormalization.

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <array>
#include <cmath>
#include <functional>
#include <string>

#include "heliquad/config.hpp"
#include "heliquad/errors.hpp"
#include "heliquad/util.hpp"

namespace heliquad {

struct VehicleParams {
    double mass = 0.626;                      // [kg]
    Eigen::Matrix3d inertia =
        Eigen::Vector3d(8e-3, 8e-3, 1.4e-2).asDiagonal();  // [kg*m^2]
    double arm = 0.275;                       // rotor arm d [m]
    double gravity = 9.81;                    // [m/s^2]
    double motor_tau = 0.05;                  // BLDC first-order lag [s]; 0 disables
    double rotor_inertia = 5e-5;              // spin axis inertia per rotor [kg*m^2]
    std::array<int, 4> spin_sign = {+1, -1, +1, -1};  // matches mixer yaw-row signs
    std::array<double, 4> zeta0_us = {1473.5, 1473.5, 1473.5, 1473.5};

    void validate() const {
        if (mass <= 0) throw OutOfRange("mass must be > 0");
        if (arm <= 0) throw OutOfRange("arm must be > 0");
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(inertia);
        if (es.eigenvalues().minCoeff() <= 0)
            throw OutOfRange("inertia must be positive definite");
        for (int s : spin_sign)
            if (s != 1 && s != -1) throw OutOfRange("spin signs must be +/-1");
    }
};

struct RigidBodyState {
    Eigen::Vector3d x = Eigen::Vector3d::Zero();  // inertial position [m]
    Eigen::Vector3d v = Eigen::Vector3d::Zero();  // inertial velocity [m/s]
    Eigen::Quaterniond q = Eigen::Quaterniond::Identity();  // body -> inertial
    Eigen::Vector3d w = Eigen::Vector3d::Zero();  // body rates [rad/s]
};

struct BodyWrench {
    Eigen::Vector3d m_B = Eigen::Vector3d::Zero();  // body moments [N*m]
    double T_sigma = 0;                             // collective thrust [N], signed
};

// Control allocation matrix rows applied forward: thrusts+pitches -> wrench.
// k_tau_fn(gamma_i) supplies the torque/thrust ratio per actuator.
inline BodyWrench mixer_forward(const std::array<double, 4>& T,
                                const std::array<double, 4>& gamma,
                                const std::function<double(double)>& k_tau_fn,
                                double d) {
    BodyWrench w;
    w.m_B.x() = d * (T[3] - T[1]);
    w.m_B.y() = d * (T[0] - T[2]);
    w.m_B.z() = -k_tau_fn(gamma[0]) * T[0] + k_tau_fn(gamma[1]) * T[1] -
                k_tau_fn(gamma[2]) * T[2] + k_tau_fn(gamma[3]) * T[3];
    w.T_sigma = T[0] + T[1] + T[2] + T[3];
    return w;
}

struct StateDerivative {
    Eigen::Vector3d xdot, vdot;
    Eigen::Vector4d qdot;  // (w,x,y,z) order
    Eigen::Vector3d wdot;
};

inline StateDerivative state_derivative(const VehicleParams& p, const RigidBodyState& s,
                                        const BodyWrench& u) {
    StateDerivative d;
    d.xdot = s.v;
    d.vdot = s.q * Eigen::Vector3d(0, 0, u.T_sigma / p.mass) -
             Eigen::Vector3d(0, 0, p.gravity);
    const Eigen::Vector3d Iw = p.inertia * s.w;
    d.wdot = p.inertia.ldlt().solve(u.m_B - s.w.cross(Iw));
    const Eigen::Quaterniond om(0.0, 0.5 * s.w.x(), 0.5 * s.w.y(), 0.5 * s.w.z());
    const Eigen::Quaterniond qd = s.q * om;
    d.qdot << qd.w(), qd.x(), qd.y(), qd.z();
    return d;
}

namespace detail {

inline RigidBodyState advance(const RigidBodyState& s, const StateDerivative& d, double h) {
    RigidBodyState o = s;
    o.x += h * d.xdot;
    o.v += h * d.vdot;
    o.q.w() += h * d.qdot(0);
    o.q.x() += h * d.qdot(1);
    o.q.y() += h * d.qdot(2);
    o.q.z() += h * d.qdot(3);
    o.w += h * d.wdot;
    return o;
}

}  // namespace detail

// One RK4 step with the wrench held constant over the interval.
inline RigidBodyState step(const VehicleParams& p, const RigidBodyState& s,
                           const BodyWrench& u, double dt) {
    if (!(dt > 0.0) || dt > 0.01) throw OutOfRange("dt must be in (0, 0.01] s");
    const StateDerivative k1 = state_derivative(p, s, u);
    const StateDerivative k2 = state_derivative(p, detail::advance(s, k1, dt / 2), u);
    const StateDerivative k3 = state_derivative(p, detail::advance(s, k2, dt / 2), u);
    const StateDerivative k4 = state_derivative(p, detail::advance(s, k3, dt), u);
    RigidBodyState o = s;
    o.x += dt / 6.0 * (k1.xdot + 2 * k2.xdot + 2 * k3.xdot + k4.xdot);
    o.v += dt / 6.0 * (k1.vdot + 2 * k2.vdot + 2 * k3.vdot + k4.vdot);
    const Eigen::Vector4d qd =
        dt / 6.0 * (k1.qdot + 2 * k2.qdot + 2 * k3.qdot + k4.qdot);
    o.q.w() += qd(0);
    o.q.x() += qd(1);
    o.q.y() += qd(2);
    o.q.z() += qd(3);
    o.w += dt / 6.0 * (k1.wdot + 2 * k2.wdot + 2 * k3.wdot + k4.wdot);
    o.q.normalize();
    return o;
}

// First-order rotor speed lag; returns the new achieved speed.
inline double motor_lag(double omega_actual, double omega_cmd, double tau, double dt) {
    if (tau <= 0.0) return omega_cmd;
    const double a = std::exp(-dt / tau);
    return omega_cmd + (omega_actual - omega_cmd) * a;
}

inline VehicleParams load_vehicle(const std::string& path) {
    const KeyValueFile f = KeyValueFile::load(path);
    VehicleParams p;
    p.mass = f.get_double("mass_kg");
    if (f.has("inertia_full")) {
        const auto v = f.get_doubles("inertia_full", 9);
        p.inertia << v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8];
    } else {
        const auto v = f.get_doubles("inertia_diag", 3);
        p.inertia = Eigen::Vector3d(v[0], v[1], v[2]).asDiagonal();
    }
    p.arm = f.get_double("arm_m");
    p.gravity = f.get_double("gravity", 9.81);
    p.motor_tau = f.get_double("motor_tau_s", 0.05);
    p.rotor_inertia = f.get_double("rotor_inertia", 5e-5);
    if (f.has("spin_signs")) {
        const auto v = f.get_doubles("spin_signs", 4);
        for (int i = 0; i < 4; ++i) p.spin_sign[i] = v[i] >= 0 ? 1 : -1;
    }
    if (f.has("zeta0_us")) {
        const auto v = f.get_doubles("zeta0_us", 4);
        for (int i = 0; i < 4; ++i) p.zeta0_us[i] = v[i];
    }
    p.validate();
    return p;
}

}  // namespace heliquad
