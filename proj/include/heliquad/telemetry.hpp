#pragma once

// Per-step telemetry records, lossless CSV round trip, and tracking metrics.
// Record fields carry the CSV units directly (degrees, RPM, microseconds) so
// an export/import cycle reproduces the log bit-exactly.

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "heliquad/csv.hpp"
#include "heliquad/errors.hpp"
#include "heliquad/util.hpp"

namespace heliquad {

struct LogRecord {
    double t = 0;
    double x = 0, y = 0, z = 0;     // [m]
    double vx = 0, vy = 0, vz = 0;  // [m/s]
    double roll_deg = 0, pitch_deg = 0, yaw_deg = 0;
    double p_dps = 0, q_dps = 0, r_dps = 0;  // body rates
    double phi_d_deg = 0, theta_d_deg = 0, psi_dot_d_dps = 0;
    double mBx = 0, mBy = 0, mBz = 0;  // demanded wrench [N*m]
    double T_sigma = 0;                // demanded collective [N]
    std::array<double, 4> omega_cmd_rpm = {};
    std::array<double, 4> omega_act_rpm = {};
    std::array<double, 4> gamma_cmd_deg = {};
    std::array<double, 4> zeta_servo_us = {};
    std::array<double, 4> zeta_motor_us = {};
    int sigma = 0;
    int mu = 0;

    bool operator==(const LogRecord&) const = default;
};

inline const std::vector<std::string>& log_columns() {
    static const std::vector<std::string> cols = [] {
        std::vector<std::string> c = {
            "t_s", "x_m", "y_m", "z_m", "vx_mps", "vy_mps", "vz_mps",
            "roll_deg", "pitch_deg", "yaw_deg", "p_dps", "q_dps", "r_dps",
            "phi_d_deg", "theta_d_deg", "psi_dot_d_dps",
            "mBx_Nm", "mBy_Nm", "mBz_Nm", "Tsigma_N"};
        for (const char* base : {"omega_cmd_rpm_", "omega_act_rpm_", "gamma_cmd_deg_",
                                 "zeta_servo_us_", "zeta_motor_us_"})
            for (int i = 1; i <= 4; ++i) c.push_back(base + std::to_string(i));
        c.push_back("sigma");
        c.push_back("mu");
        return c;
    }();
    return cols;
}

inline void export_csv(const std::vector<LogRecord>& log, const std::string& path) {
    CsvWriter w(path);
    w.header(log_columns());
    std::vector<double> v;
    for (const auto& r : log) {
        v = {r.t, r.x, r.y, r.z, r.vx, r.vy, r.vz,
             r.roll_deg, r.pitch_deg, r.yaw_deg, r.p_dps, r.q_dps, r.r_dps,
             r.phi_d_deg, r.theta_d_deg, r.psi_dot_d_dps,
             r.mBx, r.mBy, r.mBz, r.T_sigma};
        for (double x : r.omega_cmd_rpm) v.push_back(x);
        for (double x : r.omega_act_rpm) v.push_back(x);
        for (double x : r.gamma_cmd_deg) v.push_back(x);
        for (double x : r.zeta_servo_us) v.push_back(x);
        for (double x : r.zeta_motor_us) v.push_back(x);
        v.push_back(r.sigma);
        v.push_back(r.mu);
        w.row(v);
    }
}

inline std::vector<LogRecord> import_csv(const std::string& path) {
    const CsvTable t = read_csv(path);
    if (t.columns != log_columns())
        throw ParseError(path, 1, "log column set does not match the expected layout");
    std::vector<LogRecord> log;
    log.reserve(t.rows.size());
    for (const auto& row : t.rows) {
        LogRecord r;
        std::size_t i = 0;
        r.t = row[i++];
        r.x = row[i++]; r.y = row[i++]; r.z = row[i++];
        r.vx = row[i++]; r.vy = row[i++]; r.vz = row[i++];
        r.roll_deg = row[i++]; r.pitch_deg = row[i++]; r.yaw_deg = row[i++];
        r.p_dps = row[i++]; r.q_dps = row[i++]; r.r_dps = row[i++];
        r.phi_d_deg = row[i++]; r.theta_d_deg = row[i++]; r.psi_dot_d_dps = row[i++];
        r.mBx = row[i++]; r.mBy = row[i++]; r.mBz = row[i++];
        r.T_sigma = row[i++];
        for (auto& x : r.omega_cmd_rpm) x = row[i++];
        for (auto& x : r.omega_act_rpm) x = row[i++];
        for (auto& x : r.gamma_cmd_deg) x = row[i++];
        for (auto& x : r.zeta_servo_us) x = row[i++];
        for (auto& x : r.zeta_motor_us) x = row[i++];
        r.sigma = static_cast<int>(row[i++]);
        r.mu = static_cast<int>(row[i++]);
        log.push_back(r);
    }
    return log;
}

// --- metrics ----------------------------------------------------------------

struct TimeWindow {
    double t0 = 0, t1 = 0;
};

struct TrackingMetrics {
    double rmse_roll_deg = 0;
    double rmse_pitch_deg = 0;
    double yaw_rate_rmse_dps = 0;
    double max_roll_err_deg = 0;
    double max_pitch_err_deg = 0;
    double max_yaw_rate_err_dps = 0;
    bool omega_cmd_bounded = true;  // within [0, omega_max]
    bool gamma_cmd_bounded = true;  // within [gamma_min, gamma_max]
    int n_samples = 0;
};

inline double wrap_deg(double d) {
    d = std::fmod(d + 180.0, 360.0);
    if (d <= 0.0) d += 360.0;
    return d - 180.0;
}

// Roll shown on [0, 360) deg during inverted flight.
inline double display_roll_deg(double roll_deg, int sigma) {
    return (sigma == 1 && roll_deg < 0.0) ? roll_deg + 360.0 : roll_deg;
}

inline TrackingMetrics compute_metrics(const std::vector<LogRecord>& log,
                                       const std::vector<TimeWindow>& windows,
                                       double omega_max_rpm = 15000.0,
                                       double gamma_min_deg = -25.0,
                                       double gamma_max_deg = 25.0) {
    if (log.empty()) throw EmptyWindow("log is empty");
    TrackingMetrics m;
    double ss_roll = 0, ss_pitch = 0, ss_yaw = 0;
    for (const auto& r : log) {
        bool inside = windows.empty();
        for (const auto& w : windows)
            if (r.t >= w.t0 && r.t <= w.t1) { inside = true; break; }
        if (!inside) continue;
        ++m.n_samples;
        const double er = wrap_deg(r.roll_deg - r.phi_d_deg);
        const double ep = wrap_deg(r.pitch_deg - r.theta_d_deg);
        const double ey = r.r_dps - r.psi_dot_d_dps;
        ss_roll += er * er;
        ss_pitch += ep * ep;
        ss_yaw += ey * ey;
        m.max_roll_err_deg = std::max(m.max_roll_err_deg, std::fabs(er));
        m.max_pitch_err_deg = std::max(m.max_pitch_err_deg, std::fabs(ep));
        m.max_yaw_rate_err_dps = std::max(m.max_yaw_rate_err_dps, std::fabs(ey));
        for (int i = 0; i < 4; ++i) {
            if (r.omega_cmd_rpm[i] < -1e-9 || r.omega_cmd_rpm[i] > omega_max_rpm + 1e-9)
                m.omega_cmd_bounded = false;
            if (r.gamma_cmd_deg[i] < gamma_min_deg - 1e-9 ||
                r.gamma_cmd_deg[i] > gamma_max_deg + 1e-9)
                m.gamma_cmd_bounded = false;
        }
    }
    if (m.n_samples == 0) throw EmptyWindow("no samples inside the given windows");
    m.rmse_roll_deg = std::sqrt(ss_roll / m.n_samples);
    m.rmse_pitch_deg = std::sqrt(ss_pitch / m.n_samples);
    m.yaw_rate_rmse_dps = std::sqrt(ss_yaw / m.n_samples);
    return m;
}

// Windows covering the whole log minus a transient after each sigma/mu event.
inline std::vector<TimeWindow> steady_windows(const std::vector<LogRecord>& log,
                                              double transient_s = 3.0) {
    if (log.empty()) return {};
    std::vector<double> cuts;
    for (std::size_t i = 1; i < log.size(); ++i)
        if (log[i].sigma != log[i - 1].sigma || log[i].mu != log[i - 1].mu)
            cuts.push_back(log[i].t);
    std::vector<TimeWindow> w;
    double t0 = log.front().t + transient_s;
    const double t_end = log.back().t;
    for (double c : cuts) {
        if (c > t0) w.push_back({t0, c});
        t0 = c + transient_s;
    }
    if (t_end > t0) w.push_back({t0, t_end});
    return w;
}

// First time after t_event at which |err| enters the band and stays inside
// until t_event + hold (or the log end). Negative when it never settles.
template <typename ErrFn>
inline double settling_time(const std::vector<LogRecord>& log, double t_event,
                            double band, ErrFn err, double hold_s = 1e9) {
    double entered = -1.0;
    for (const auto& r : log) {
        if (r.t < t_event) continue;
        if (std::fabs(err(r)) <= band) {
            if (entered < 0.0) entered = r.t;
            if (r.t - entered >= hold_s) return entered - t_event;
        } else {
            entered = -1.0;
        }
    }
    return entered < 0.0 ? -1.0 : entered - t_event;
}

}  // namespace heliquad
