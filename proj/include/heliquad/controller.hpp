#pragma once

// Unified non-switching attitude stack: flip-aware setpoint shaping, desired
// quaternion construction, quaternion attitude P law and a PID body-rate
// loop. The same gains serve upright and inverted flight; sigma only moves
// the reference.

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <string>

#include "heliquad/config.hpp"
#include "heliquad/errors.hpp"
#include "heliquad/util.hpp"

namespace heliquad {

struct PilotCommand {
    double phi_cmd = 0;       // [rad]
    double theta_cmd = 0;     // [rad]
    double psi_dot_cmd = 0;   // [rad/s]
    double T_sigma_cmd = 0;   // [N]
    int sigma = 0;            // 0 upright, 1 inverted
    int mu = 0;               // failed actuator index, 0 = none
};

struct ControllerGains {
    Eigen::Vector3d Ka{8.0, 8.0, 0.0};
    Eigen::Vector3d Kp{0.25, 0.23, 0.0};
    Eigen::Vector3d Ki{0.35, 0.35, 0.2};
    Eigen::Vector3d Kd{3e-4, 3e-4, 0.0};
    double integral_limit = 0.5;   // anti-windup clamp per axis [N*m]
    double angle_limit = deg2rad(45.0);  // pilot command bound
};

struct RateLoopState {
    Eigen::Vector3d integral = Eigen::Vector3d::Zero();
    Eigen::Vector3d prev_error = Eigen::Vector3d::Zero();
    bool has_prev = false;
};

struct DesiredSetpoints {
    double phi_d = 0;
    double theta_d = 0;
    double psi_dot_d = 0;
    double T_sigma_d = 0;
};

// sigma = 1 adds pi to the roll reference and flips the collective sign:
// T_d = (-1)^(2 - sigma) T_cmd.
inline DesiredSetpoints desired_setpoints(const PilotCommand& cmd) {
    DesiredSetpoints d;
    d.phi_d = cmd.sigma * kPi + cmd.phi_cmd;
    d.theta_d = cmd.theta_cmd;
    d.psi_dot_d = cmd.psi_dot_cmd;
    d.T_sigma_d = std::pow(-1.0, 2.0 - cmd.sigma) * cmd.T_sigma_cmd;
    return d;
}

// ZYX Euler angles to quaternion; yaw is always the current yaw.
inline Eigen::Quaterniond euler_to_quat(double phi, double theta, double psi) {
    const double cf = std::cos(phi / 2), sf = std::sin(phi / 2);
    const double ct = std::cos(theta / 2), st = std::sin(theta / 2);
    const double cp = std::cos(psi / 2), sp = std::sin(psi / 2);
    return Eigen::Quaterniond(cf * ct * cp + sf * st * sp,
                              sf * ct * cp - cf * st * sp,
                              cf * st * cp + sf * ct * sp,
                              cf * ct * sp - sf * st * cp);
}

struct EulerAngles {
    double phi = 0, theta = 0, psi = 0;
};

inline EulerAngles quat_to_euler(const Eigen::Quaterniond& q) {
    EulerAngles e;
    const double w = q.w(), x = q.x(), y = q.y(), z = q.z();
    e.phi = std::atan2(2.0 * (w * x + y * z), 1.0 - 2.0 * (x * x + y * y));
    const double s = std::clamp(2.0 * (w * y - z * x), -1.0, 1.0);
    e.theta = std::asin(s);
    e.psi = std::atan2(2.0 * (w * z + x * y), 1.0 - 2.0 * (y * y + z * z));
    return e;
}

// Attitude P law: w_d' = sgn(q_e0) Ka vec(q_e), q_e = q^-1 q_d. Output is
// invariant under q_e -> -q_e; sgn(0) counts as +1.
inline Eigen::Vector3d attitude_control(const Eigen::Quaterniond& q,
                                        const Eigen::Quaterniond& q_d,
                                        const Eigen::Vector3d& Ka) {
    const Eigen::Quaterniond qe = q.conjugate() * q_d;
    const double sgn = qe.w() < 0.0 ? -1.0 : 1.0;
    return sgn * Ka.cwiseProduct(qe.vec());
}

// Body-rate PID: m_B = Kp we + Ki int(we) + Kd d(we)/dt. Trapezoidal
// integral with clamp, backward-difference derivative on the error.
inline Eigen::Vector3d rate_pid(const Eigen::Vector3d& w_d, const Eigen::Vector3d& w,
                                const ControllerGains& g, double dt,
                                RateLoopState& st) {
    if (!(dt > 0.0)) throw OutOfRange("rate_pid requires dt > 0");
    const Eigen::Vector3d we = w_d - w;
    const Eigen::Vector3d prev = st.has_prev ? st.prev_error : we;
    st.integral += 0.5 * (we + prev) * dt;
    st.integral = st.integral.cwiseMax(-g.integral_limit).cwiseMin(g.integral_limit);
    const Eigen::Vector3d deriv = st.has_prev ? ((we - prev) / dt).eval()
                                              : Eigen::Vector3d::Zero().eval();
    st.prev_error = we;
    st.has_prev = true;
    return g.Kp.cwiseProduct(we) + g.Ki.cwiseProduct(st.integral) +
           g.Kd.cwiseProduct(deriv);
}

inline ControllerGains load_gains(const std::string& path) {
    const KeyValueFile f = KeyValueFile::load(path);
    ControllerGains g;
    auto vec3 = [&](const std::string& key, const Eigen::Vector3d& dflt) {
        if (!f.has(key)) return dflt;
        const auto v = f.get_doubles(key, 3);
        return Eigen::Vector3d(v[0], v[1], v[2]);
    };
    g.Ka = vec3("Ka", g.Ka);
    g.Kp = vec3("Kp", g.Kp);
    g.Ki = vec3("Ki", g.Ki);
    g.Kd = vec3("Kd", g.Kd);
    g.integral_limit = f.get_double("integral_limit", g.integral_limit);
    g.angle_limit = deg2rad(f.get_double("angle_limit_deg", rad2deg(g.angle_limit)));
    if ((g.Ka.array() < 0).any() || (g.Kp.array() < 0).any() ||
        (g.Ki.array() < 0).any() || (g.Kd.array() < 0).any())
        throw OutOfRange("controller gains must be >= 0");
    return g;
}

}  // namespace heliquad
