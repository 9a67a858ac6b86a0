#pragma once

// Line-oriented mission scripts.
//
//   duration 30.0
//   dt 0.001
//   start_altitude_m 1.5
//   althold 1                 # collective from an altitude PD instead of
//   alt_kp 4.0                # the scripted T_sigma (bench stand-in, the
//   alt_kd 3.0                # recorded pilot stick profile is unknown)
//   at 0.0  mu 4
//   at 5.0  sigma 1
//   at 4.0  setpoint 0 0 20 6.14   # phi_deg theta_deg psi_rate_dps Tsigma_N
//   at 32.0 zref 0.0               # new altitude-hold target
//
// Events are applied at the first control step with t >= event time.

#include <algorithm>
#include <fstream>
#include <string>
#include <vector>

#include "heliquad/config.hpp"
#include "heliquad/errors.hpp"
#include "heliquad/util.hpp"

namespace heliquad {

struct MissionEvent {
    enum class Kind { set_sigma, set_mu, setpoint, zref };
    double t = 0;
    Kind kind = Kind::setpoint;
    int ivalue = 0;                      // sigma or mu
    double phi_cmd = 0, theta_cmd = 0;   // [rad]
    double psi_dot_cmd = 0;              // [rad/s]
    double T_sigma_cmd = 0;              // [N]
    double zref = 0;                     // [m]
};

struct MissionScript {
    double duration = 10.0;
    double dt = 1e-3;
    double start_altitude = 1.5;
    bool althold = true;
    double alt_kp = 4.0;
    double alt_kd = 3.0;
    double zref0 = 1.5;
    std::vector<MissionEvent> events;  // sorted by time

    void validate() const {
        if (!(dt > 0.0) || dt > 0.01) throw OutOfRange("mission dt must be in (0, 0.01]");
        if (!(duration > 0.0)) throw OutOfRange("mission duration must be > 0");
        double prev = 0.0;
        for (const auto& e : events) {
            if (e.t < 0.0 || e.t > duration)
                throw OutOfRange("event time outside mission duration");
            if (e.t < prev) throw OutOfRange("events must be time-ordered");
            prev = e.t;
        }
    }
};

inline MissionScript load_mission(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open mission file: " + path);
    MissionScript m;
    bool zref_set = false;
    std::string line;
    int ln = 0;
    while (std::getline(in, line)) {
        ++ln;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto tok = split_ws(line);
        auto num = [&](std::size_t i) { return parse_double(tok.at(i), path + ":" + std::to_string(ln)); };
        try {
            if (tok[0] == "duration") m.duration = num(1);
            else if (tok[0] == "dt") m.dt = num(1);
            else if (tok[0] == "start_altitude_m") m.start_altitude = num(1);
            else if (tok[0] == "althold") m.althold = num(1) != 0.0;
            else if (tok[0] == "alt_kp") m.alt_kp = num(1);
            else if (tok[0] == "alt_kd") m.alt_kd = num(1);
            else if (tok[0] == "zref") { m.zref0 = num(1); zref_set = true; }
            else if (tok[0] == "at") {
                MissionEvent e;
                e.t = num(1);
                const std::string& kind = tok.at(2);
                if (kind == "sigma") {
                    e.kind = MissionEvent::Kind::set_sigma;
                    e.ivalue = static_cast<int>(num(3));
                    if (e.ivalue != 0 && e.ivalue != 1)
                        throw ParseError(path, ln, "sigma must be 0 or 1");
                } else if (kind == "mu") {
                    e.kind = MissionEvent::Kind::set_mu;
                    e.ivalue = static_cast<int>(num(3));
                    if (e.ivalue < 0 || e.ivalue > 4)
                        throw ParseError(path, ln, "mu must be in 0..4");
                } else if (kind == "setpoint") {
                    e.kind = MissionEvent::Kind::setpoint;
                    e.phi_cmd = deg2rad(num(3));
                    e.theta_cmd = deg2rad(num(4));
                    e.psi_dot_cmd = deg2rad(num(5));
                    e.T_sigma_cmd = tok.size() > 6 ? num(6) : 0.0;
                } else if (kind == "zref") {
                    e.kind = MissionEvent::Kind::zref;
                    e.zref = num(3);
                } else {
                    throw ParseError(path, ln, "unknown event kind '" + kind + "'");
                }
                m.events.push_back(e);
            } else {
                throw ParseError(path, ln, "unknown directive '" + tok[0] + "'");
            }
        } catch (const std::out_of_range&) {
            throw ParseError(path, ln, "missing fields");
        }
    }
    if (!zref_set) m.zref0 = m.start_altitude;
    std::stable_sort(m.events.begin(), m.events.end(),
                     [](const MissionEvent& a, const MissionEvent& b) { return a.t < b.t; });
    m.validate();
    return m;
}

}  // namespace heliquad
