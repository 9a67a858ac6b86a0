#pragma once

// Reconfigurable control allocation.
//
// The wrench demand [m_B; T_sigma] is inverted through (C_a o F(mu)) where
// C_a is the '+'-frame allocation matrix and F encodes the failed actuator.
// With no fault, y holds four thrust demands. With actuator mu failed, the
// slot y_mu instead carries the shaft-torque demand of the opposite
// actuator, which then runs on the thrust/torque network (NN2) while the
// remaining pair keeps a fixed pitch.

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "heliquad/errors.hpp"
#include "heliquad/mlp.hpp"
#include "heliquad/propeller.hpp"
#include "heliquad/util.hpp"

namespace heliquad {

struct FaultMatrix {
    Eigen::Matrix4d F = Eigen::Matrix4d::Ones();
    int mu = 0;  // 0 = no fault, 1..4 failed actuator
};

// Opposite actuator on the '+' frame (1<->3, 2<->4).
inline int opposite_actuator(int mu) { return ((mu - 1 + 2) % 4) + 1; }

// k_tau_mu is the torque-to-thrust ratio at the failed actuator's frozen
// pitch (signed consistently with the allocation matrix entry for that
// column); unused for mu=0.
inline FaultMatrix fault_matrix(int mu, double k_tau_mu = 0.0) {
    if (mu < 0 || mu > 4) throw OutOfRange("mu must be in {0..4}");
    FaultMatrix fm;
    fm.mu = mu;
    if (mu == 0) return fm;
    if (std::fabs(k_tau_mu) < 1e-12)
        throw OutOfRange("k_tau(gamma_mu) must be nonzero for mu != 0");
    const int c = mu - 1;             // failed column
    const int o = opposite_actuator(mu) - 1;  // opposite column
    fm.F(0, c) = 0.0;
    fm.F(1, c) = 0.0;
    fm.F(3, c) = 0.0;
    fm.F(2, c) = 1.0 / k_tau_mu;
    fm.F(2, o) = 0.0;
    fm.F(3, o) = 0.0;
    return fm;
}

inline Eigen::Matrix4d allocation_matrix(double d, const std::array<double, 4>& k_taus) {
    Eigen::Matrix4d C;
    C << 0, -d, 0, d,
         d, 0, -d, 0,
         -k_taus[0], k_taus[1], -k_taus[2], k_taus[3],
         1, 1, 1, 1;
    return C;
}

// y = (C_a o F)^{-1} [m_B; T_sigma].
inline Eigen::Vector4d allocate(const Eigen::Vector3d& m_B, double T_sigma_d,
                                const FaultMatrix& fault, double d,
                                const std::array<double, 4>& k_taus) {
    const Eigen::Matrix4d M = allocation_matrix(d, k_taus).cwiseProduct(fault.F);
    Eigen::FullPivLU<Eigen::Matrix4d> lu(M);
    if (!lu.isInvertible())
        throw SingularAllocation(fault.mu, "det=" + std::to_string(M.determinant()));
    Eigen::Vector4d w;
    w << m_B.x(), m_B.y(), m_B.z(), T_sigma_d;
    return lu.solve(w);
}

struct ChannelLimits {
    double omega_min = 0.0;                      // [rad/s]
    double omega_max = rpm2rad(15000.0);
    double gamma_min = deg2rad(-25.0);           // [rad]
    double gamma_max = deg2rad(25.0);
    double omega_rate = rpm2rad(2000.0) / 0.010;  // [rad/s per s]
    // swashplate-servo-class slew; the thrust reversal during a flip has to
    // finish well inside the roll transient
    double gamma_rate = deg2rad(240.0);  // [rad/s]
};

struct AllocationStrategy {
    double nominal_pitch = deg2rad(12.0);  // fault-free fixed pitch
    double fault_pitch = deg2rad(12.0);    // fixed pitch of the working opposite pair
    ChannelLimits limits;

    void validate() const {
        if (!(limits.omega_min < limits.omega_max) || !(limits.gamma_min < limits.gamma_max))
            throw OutOfRange("allocation limits must be ordered");
        if (fault_pitch < limits.gamma_min || fault_pitch > limits.gamma_max)
            throw OutOfRange("fault pitch outside pitch limits");
    }
};

struct ActuatorCommand {
    std::array<double, 4> omega = {};  // [rad/s]
    std::array<double, 4> gamma = {};  // [rad]
};

// Saturation plus rate limiting against the previous command.
inline ActuatorCommand limit(const ActuatorCommand& prev, const ActuatorCommand& raw,
                             const ChannelLimits& lim, double dt) {
    if (!(dt > 0.0)) throw OutOfRange("limit requires dt > 0");
    ActuatorCommand out;
    for (int i = 0; i < 4; ++i) {
        double w = std::clamp(raw.omega[i], lim.omega_min, lim.omega_max);
        const double dw = lim.omega_rate * dt;
        w = std::clamp(w, prev.omega[i] - dw, prev.omega[i] + dw);
        out.omega[i] = w;
        double g = std::clamp(raw.gamma[i], lim.gamma_min, lim.gamma_max);
        const double dg = lim.gamma_rate * dt;
        g = std::clamp(g, prev.gamma[i] - dg, prev.gamma[i] + dg);
        out.gamma[i] = g;
    }
    return out;
}

// NN1: (T_d, gamma) -> omega_d.
inline double nn1_infer(const MLPModel& model, double T_d, double gamma,
                        bool* clamped = nullptr) {
    Eigen::Vector2d x(T_d, gamma);
    return model.infer(x, clamped)(0);
}

// NN2: (T_d, tau_d) -> (gamma_d, omega_d).
inline std::pair<double, double> nn2_infer(const MLPModel& model, double T_d, double tau_d,
                                           bool* clamped = nullptr) {
    Eigen::Vector2d x(T_d, tau_d);
    const Eigen::VectorXd y = model.infer(x, clamped);
    return {y(0), y(1)};
}

// Linear speed command to motor PWM, [0, omega_max] onto [1000, 2000] us.
inline double omega_to_pwm(double omega, double omega_max) {
    const double f = std::clamp(omega / omega_max, 0.0, 1.0);
    return 1000.0 + 1000.0 * f;
}

// --- training matrices from the synthetic bench sweep -----------------------

// NN1 regresses omega on (T, gamma) over all usable rows.
inline void dataset_to_nn1(const std::vector<DatasetRow>& rows, Eigen::MatrixXd& X,
                           Eigen::MatrixXd& Y) {
    std::vector<const DatasetRow*> ok;
    for (const auto& r : rows)
        if (r.ok) ok.push_back(&r);
    X.resize(2, ok.size());
    Y.resize(1, ok.size());
    for (std::size_t i = 0; i < ok.size(); ++i) {
        X(0, i) = ok[i]->T;
        X(1, i) = ok[i]->gamma;
        Y(0, i) = ok[i]->omega;
    }
}

// NN2 regresses (gamma, omega) on (T, tau).
inline void dataset_to_nn2(const std::vector<DatasetRow>& rows, Eigen::MatrixXd& X,
                           Eigen::MatrixXd& Y) {
    std::vector<const DatasetRow*> ok;
    for (const auto& r : rows)
        if (r.ok) ok.push_back(&r);
    X.resize(2, ok.size());
    Y.resize(2, ok.size());
    for (std::size_t i = 0; i < ok.size(); ++i) {
        X(0, i) = ok[i]->T;
        X(1, i) = ok[i]->tau;
        Y(0, i) = ok[i]->gamma;
        Y(1, i) = ok[i]->omega;
    }
}

// Feasibility screen for the fault-mode torque demand: the opposite actuator
// can only realize shaft torques the bench data contains near zero thrust,
// and only with the modelled sign. zero-thrust ceiling = tau at the
// zero-thrust pitch and omega_max.
struct TorqueFeasibility {
    bool feasible = true;
    double demand = 0;        // [N*m]
    double ceiling = 0;       // max zero-thrust torque [N*m]
    double tau_data_min = 0;  // torque range seen in the dataset
    double tau_data_max = 0;
};

inline TorqueFeasibility fault_torque_feasibility(double tau_demand,
                                                  double zero_thrust_ceiling,
                                                  double tau_data_min,
                                                  double tau_data_max) {
    TorqueFeasibility r;
    r.demand = tau_demand;
    r.ceiling = zero_thrust_ceiling;
    r.tau_data_min = tau_data_min;
    r.tau_data_max = tau_data_max;
    if (tau_demand < tau_data_min || tau_demand > tau_data_max) r.feasible = false;
    if (std::fabs(tau_demand) > zero_thrust_ceiling) r.feasible = false;
    return r;
}

}  // namespace heliquad
