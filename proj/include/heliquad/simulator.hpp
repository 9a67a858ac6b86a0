#pragma once

// Scripted-mission closed-loop simulator.
//
// Per control step: script -> setpoint shaping -> attitude P law -> rate PID
// -> generalized allocation -> NN inversion -> saturation/rate limiting ->
// motor lag -> per-rotor blade-element solve -> body wrench -> rigid-body
// step -> log.
//
// The plant-side body wrench uses the physical per-rotor shaft torques with
// their spin signs (identical to the k_tau mixer row for positive thrusts,
// but keeps the correct reaction sign when thrust reverses) and includes the
// rotor spin-up reaction and gyroscopic terms from the stored rotor angular
// momentum.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "heliquad/allocation.hpp"
#include "heliquad/controller.hpp"
#include "heliquad/dynamics.hpp"
#include "heliquad/errors.hpp"
#include "heliquad/mechanism.hpp"
#include "heliquad/mission.hpp"
#include "heliquad/propeller.hpp"
#include "heliquad/telemetry.hpp"
#include "heliquad/util.hpp"

namespace heliquad {

struct SimSetup {
    VehicleParams vehicle;
    MechanismParams mechanism = prototype_mechanism();
    BladeGeometry blade = prototype_blade();
    AirfoilModel airfoil = builtin_cambered_polar();
    ControllerGains gains;
    AllocationStrategy strategy;
    MLPModel nn1;
    MLPModel nn2;
    std::uint64_t seed = 0;  // reserved for scripted-command noise; plant is noise-free
};

struct SimResult {
    std::vector<LogRecord> log;
    bool aborted = false;
    std::string abort_reason;
    bool landed = false;
    long clamp_warnings = 0;     // NN inputs outside the training box
    long infeasible_steps = 0;   // fault-mode torque demand outside the model
    TorqueFeasibility last_infeasibility;
};

namespace detail {

struct RotorOutput {
    std::array<double, 4> T = {};
    std::array<double, 4> tau = {};
};

}  // namespace detail

class Simulator {
public:
    Simulator(SimSetup setup, MissionScript mission)
        : s_(std::move(setup)), mission_(std::move(mission)) {
        s_.vehicle.validate();
        s_.mechanism.validate();
        s_.blade.validate();
        s_.strategy.validate();
        mission_.validate();
        k_tau_pos_ = signed_k_tau(s_.strategy.fault_pitch);
        k_tau_neg_ = signed_k_tau(-s_.strategy.fault_pitch);
        gamma_zt_ = zero_thrust_pitch(s_.blade, s_.airfoil, kRefOmega);
        OperatingPoint op;
        op.gamma = gamma_zt_;
        op.omega = s_.strategy.limits.omega_max;
        zero_thrust_ceiling_ = std::fabs(rotor_solve(s_.blade, s_.airfoil, op).tau);
    }

    SimResult run() {
        SimResult result;
        init_state(result);
        const long n_steps = std::lround(mission_.duration / mission_.dt);
        result.log.reserve(n_steps);
        for (long k = 0; k < n_steps; ++k) {
            const double t = k * mission_.dt;
            try {
                step_once(t, result);
            } catch (const Error& e) {
                result.aborted = true;
                result.abort_reason = e.what();
                break;
            }
            if (!state_finite()) {
                result.aborted = true;
                result.abort_reason = "non-finite state at t=" + std::to_string(t);
                break;
            }
        }
        result.landed = landed_;
        return result;
    }

    double zero_thrust_pitch_rad() const { return gamma_zt_; }
    double zero_thrust_torque_ceiling() const { return zero_thrust_ceiling_; }
    double k_tau_nominal() const { return k_tau_pos_; }

private:
    static constexpr double kRefOmega = rpm2rad(8000.0);

    // Signed torque-to-thrust ratio tau/T. The magnitude matches k_tau; the
    // sign keeps the allocation's yaw row physical when thrust reverses
    // (shaft torque keeps resisting rotation), which is what keeps the
    // inverted-flight yaw loop in negative feedback.
    double signed_k_tau(double gamma) const {
        OperatingPoint op;
        op.gamma = gamma;
        op.omega = kRefOmega;
        const RotorSolution sol = rotor_solve(s_.blade, s_.airfoil, op);
        if (std::fabs(sol.T) < kThrustFloorN) throw ThrustNearZero(sol.T);
        return sol.tau / sol.T;
    }

    void apply_events(double t) {
        while (event_idx_ < mission_.events.size() &&
               mission_.events[event_idx_].t <= t + 1e-12) {
            const MissionEvent& e = mission_.events[event_idx_++];
            switch (e.kind) {
                case MissionEvent::Kind::set_sigma:
                    sigma_ = e.ivalue;
                    break;
                case MissionEvent::Kind::set_mu:
                    if (e.ivalue != mu_ && e.ivalue != 0) {
                        // freeze the failed actuator's pitch for F's 1/k_tau
                        const double gf = prev_cmd_.gamma[e.ivalue - 1];
                        gamma_frozen_ = gf;
                        k_tau_frozen_ = signed_k_tau(gf);
                    }
                    mu_ = e.ivalue;
                    break;
                case MissionEvent::Kind::setpoint:
                    phi_cmd_ = e.phi_cmd;
                    theta_cmd_ = e.theta_cmd;
                    psi_dot_cmd_ = e.psi_dot_cmd;
                    T_cmd_ = e.T_sigma_cmd;
                    break;
                case MissionEvent::Kind::zref:
                    zref_ = e.zref;
                    break;
            }
        }
    }

    void init_state(SimResult& result) {
        state_ = RigidBodyState{};
        state_.x.z() = mission_.start_altitude;
        zref_ = mission_.zref0;
        rate_state_ = RateLoopState{};
        event_idx_ = 0;
        sigma_ = 0;
        mu_ = 0;
        phi_cmd_ = theta_cmd_ = psi_dot_cmd_ = 0.0;
        T_cmd_ = s_.vehicle.mass * s_.vehicle.gravity;
        // fixed pitches at t=0; hover-trim speeds through the same
        // allocation path the loop uses
        apply_events(0.0);
        const double sgn = sigma_ ? -1.0 : 1.0;
        for (int i = 0; i < 4; ++i)
            prev_cmd_.gamma[i] = sgn * s_.strategy.nominal_pitch;
        if (mu_ != 0) {
            gamma_frozen_ = prev_cmd_.gamma[mu_ - 1];
            k_tau_frozen_ = signed_k_tau(gamma_frozen_);
        }
        const double Td = (sigma_ ? -1.0 : 1.0) * s_.vehicle.mass * s_.vehicle.gravity;
        try {
            const Eigen::Vector4d y = allocate(Eigen::Vector3d::Zero(), Td,
                                               fault_matrix_now(), s_.vehicle.arm,
                                               k_taus_now());
            compute_raw_commands(y, prev_cmd_, result);
        } catch (const Error&) {
            // untrimmed start; the controller picks it up from rest
            for (int i = 0; i < 4; ++i) prev_cmd_.omega[i] = 0.0;
        }
        if (mu_ != 0) prev_cmd_.omega[mu_ - 1] = 0.0;
        // saturate the trim into the command box so later rate limiting
        // starts from a feasible point
        for (int i = 0; i < 4; ++i) {
            prev_cmd_.omega[i] = std::clamp(prev_cmd_.omega[i], s_.strategy.limits.omega_min,
                                            s_.strategy.limits.omega_max);
            prev_cmd_.gamma[i] = std::clamp(prev_cmd_.gamma[i], s_.strategy.limits.gamma_min,
                                            s_.strategy.limits.gamma_max);
        }
        omega_act_ = prev_cmd_.omega;
        landed_ = false;
    }

    FaultMatrix fault_matrix_now() const {
        return mu_ == 0 ? fault_matrix(0) : fault_matrix(mu_, k_tau_frozen_);
    }

    std::array<double, 4> k_taus_now() const {
        const double kt = sigma_ ? k_tau_neg_ : k_tau_pos_;
        std::array<double, 4> ks = {kt, kt, kt, kt};
        if (mu_ != 0) ks[mu_ - 1] = k_tau_frozen_;
        return ks;
    }

    // Raw (pre-limit) commands from the allocation vector.
    void compute_raw_commands(const Eigen::Vector4d& y, ActuatorCommand& raw,
                              SimResult& result) {
        const double sgn = sigma_ ? -1.0 : 1.0;
        const double dt = mission_.dt;
        const double dg = s_.strategy.limits.gamma_rate * dt;
        bool clamped = false;
        if (mu_ == 0) {
            for (int i = 0; i < 4; ++i) {
                const double g_target = sgn * s_.strategy.nominal_pitch;
                const double g = std::clamp(g_target, prev_cmd_.gamma[i] - dg,
                                            prev_cmd_.gamma[i] + dg);
                raw.gamma[i] = g;
                raw.omega[i] = nn1_infer(s_.nn1, y(i), g, &clamped);
            }
        } else {
            const int f = mu_ - 1;
            const int o = opposite_actuator(mu_) - 1;
            for (int i = 0; i < 4; ++i) {
                if (i == f) {
                    raw.gamma[i] = prev_cmd_.gamma[i];
                    raw.omega[i] = 0.0;
                } else if (i == o) {
                    const double tau_d = y(f);
                    const TorqueFeasibility fz = fault_torque_feasibility(
                        tau_d, zero_thrust_ceiling_, s_.nn2.in_min(1), s_.nn2.in_max(1));
                    if (!fz.feasible) {
                        ++result.infeasible_steps;
                        result.last_infeasibility = fz;
                    }
                    const auto [g2, w2] = nn2_infer(s_.nn2, y(o), tau_d, &clamped);
                    raw.gamma[i] = g2;
                    raw.omega[i] = w2;
                } else {
                    const double g_target = sgn * s_.strategy.fault_pitch;
                    const double g = std::clamp(g_target, prev_cmd_.gamma[i] - dg,
                                                prev_cmd_.gamma[i] + dg);
                    raw.gamma[i] = g;
                    raw.omega[i] = nn1_infer(s_.nn1, y(i), g, &clamped);
                }
            }
        }
        if (clamped) ++result.clamp_warnings;
    }

    void step_once(double t, SimResult& result) {
        apply_events(t);

        // collective: scripted, or altitude-hold PD stand-in
        if (mission_.althold) {
            const double e = zref_ - state_.x.z();
            const double mg = s_.vehicle.mass * s_.vehicle.gravity;
            T_cmd_ = s_.vehicle.mass *
                     (s_.vehicle.gravity + mission_.alt_kp * e - mission_.alt_kd * state_.v.z());
            T_cmd_ = std::clamp(T_cmd_, 0.05 * mg, 2.5 * mg);
        }

        PilotCommand cmd;
        cmd.phi_cmd = std::clamp(phi_cmd_, -s_.gains.angle_limit, s_.gains.angle_limit);
        cmd.theta_cmd = std::clamp(theta_cmd_, -s_.gains.angle_limit, s_.gains.angle_limit);
        cmd.psi_dot_cmd = psi_dot_cmd_;
        cmd.T_sigma_cmd = T_cmd_;
        cmd.sigma = sigma_;
        cmd.mu = mu_;
        const DesiredSetpoints sp = desired_setpoints(cmd);

        const EulerAngles eul = quat_to_euler(state_.q);
        const Eigen::Quaterniond q_d = euler_to_quat(sp.phi_d, sp.theta_d, eul.psi);
        Eigen::Vector3d w_d = attitude_control(state_.q, q_d, s_.gains.Ka);
        w_d.z() += sp.psi_dot_d;
        const Eigen::Vector3d m_B = rate_pid(w_d, state_.w, s_.gains, mission_.dt, rate_state_);

        const Eigen::Vector4d y =
            allocate(m_B, sp.T_sigma_d, fault_matrix_now(), s_.vehicle.arm, k_taus_now());

        ActuatorCommand raw;
        compute_raw_commands(y, raw, result);
        const ActuatorCommand limited = limit(prev_cmd_, raw, s_.strategy.limits, mission_.dt);
        prev_cmd_ = limited;

        // actuator realization
        std::array<double, 4> zeta_servo, zeta_motor, gamma_act;
        detail::RotorOutput rotor;
        std::array<double, 4> omega_dot;
        for (int i = 0; i < 4; ++i) {
            zeta_servo[i] = std::clamp(
                pitch_to_pwm(rad2deg(limited.gamma[i]), s_.vehicle.zeta0_us[i]),
                kPwmMin, kPwmMax);
            zeta_motor[i] = omega_to_pwm(limited.omega[i], s_.strategy.limits.omega_max);
            gamma_act[i] = forward_pitch(s_.mechanism, pwm_to_xi(s_.mechanism, zeta_servo[i]));
            const double w_new =
                motor_lag(omega_act_[i], limited.omega[i], s_.vehicle.motor_tau, mission_.dt);
            omega_dot[i] = (w_new - omega_act_[i]) / mission_.dt;
            omega_act_[i] = w_new;
            OperatingPoint op;
            op.gamma = gamma_act[i];
            op.omega = omega_act_[i];
            const RotorSolution rs = rotor_solve(s_.blade, s_.airfoil, op);
            rotor.T[i] = rs.T;
            rotor.tau[i] = rs.tau;
        }

        // plant wrench: thrust moments, physical reaction torques, rotor
        // momentum terms
        BodyWrench u;
        const double d = s_.vehicle.arm;
        double hz = 0.0, hz_dot = 0.0;
        for (int i = 0; i < 4; ++i) {
            hz += s_.vehicle.spin_sign[i] * s_.vehicle.rotor_inertia * omega_act_[i];
            hz_dot += s_.vehicle.spin_sign[i] * s_.vehicle.rotor_inertia * omega_dot[i];
        }
        u.m_B.x() = d * (rotor.T[3] - rotor.T[1]) - state_.w.y() * hz;
        u.m_B.y() = d * (rotor.T[0] - rotor.T[2]) + state_.w.x() * hz;
        u.m_B.z() = -hz_dot;
        for (int i = 0; i < 4; ++i) u.m_B.z() -= s_.vehicle.spin_sign[i] * rotor.tau[i];
        u.T_sigma = rotor.T[0] + rotor.T[1] + rotor.T[2] + rotor.T[3];

        state_ = step(s_.vehicle, state_, u, mission_.dt);

        // landed altitude clamp
        if (state_.x.z() <= 0.0 && state_.v.z() <= 0.0) {
            state_.x.z() = 0.0;
            state_.v.setZero();
            state_.w.setZero();
            landed_ = true;
        } else if (state_.x.z() > 0.0) {
            landed_ = false;
        }

        LogRecord rec;
        rec.t = t;
        rec.x = state_.x.x();
        rec.y = state_.x.y();
        rec.z = state_.x.z();
        rec.vx = state_.v.x();
        rec.vy = state_.v.y();
        rec.vz = state_.v.z();
        const EulerAngles e2 = quat_to_euler(state_.q);
        rec.roll_deg = rad2deg(e2.phi);
        rec.pitch_deg = rad2deg(e2.theta);
        rec.yaw_deg = rad2deg(e2.psi);
        rec.p_dps = rad2deg(state_.w.x());
        rec.q_dps = rad2deg(state_.w.y());
        rec.r_dps = rad2deg(state_.w.z());
        rec.phi_d_deg = rad2deg(sp.phi_d);
        rec.theta_d_deg = rad2deg(sp.theta_d);
        rec.psi_dot_d_dps = rad2deg(sp.psi_dot_d);
        rec.mBx = m_B.x();
        rec.mBy = m_B.y();
        rec.mBz = m_B.z();
        rec.T_sigma = sp.T_sigma_d;
        for (int i = 0; i < 4; ++i) {
            rec.omega_cmd_rpm[i] = rad2rpm(limited.omega[i]);
            rec.omega_act_rpm[i] = rad2rpm(omega_act_[i]);
            rec.gamma_cmd_deg[i] = rad2deg(limited.gamma[i]);
            rec.zeta_servo_us[i] = zeta_servo[i];
            rec.zeta_motor_us[i] = zeta_motor[i];
        }
        rec.sigma = sigma_;
        rec.mu = mu_;
        result.log.push_back(rec);
    }

    bool state_finite() const {
        return state_.x.allFinite() && state_.v.allFinite() && state_.w.allFinite() &&
               std::isfinite(state_.q.w()) && std::isfinite(state_.q.x()) &&
               std::isfinite(state_.q.y()) && std::isfinite(state_.q.z());
    }

    SimSetup s_;
    MissionScript mission_;

    double k_tau_pos_ = 0, k_tau_neg_ = 0;
    double gamma_zt_ = 0;
    double zero_thrust_ceiling_ = 0;

    RigidBodyState state_;
    RateLoopState rate_state_;
    ActuatorCommand prev_cmd_;
    std::array<double, 4> omega_act_ = {};
    std::size_t event_idx_ = 0;
    int sigma_ = 0, mu_ = 0;
    double phi_cmd_ = 0, theta_cmd_ = 0, psi_dot_cmd_ = 0, T_cmd_ = 0;
    double zref_ = 0;
    double gamma_frozen_ = 0, k_tau_frozen_ = 0;
    bool landed_ = false;
};

inline SimResult run_mission(const SimSetup& setup, const MissionScript& mission) {
    Simulator sim(setup, mission);
    return sim.run();
}

}  // namespace heliquad
