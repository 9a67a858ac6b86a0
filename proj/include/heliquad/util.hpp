#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

namespace heliquad {

inline constexpr double kPi = std::numbers::pi;

constexpr double deg2rad(double d) { return d * kPi / 180.0; }
constexpr double rad2deg(double r) { return r * 180.0 / kPi; }

constexpr double rpm2rad(double rpm) { return rpm * 2.0 * kPi / 60.0; }
constexpr double rad2rpm(double w) { return w * 60.0 / (2.0 * kPi); }

// Wrap angle to (-pi, pi].
inline double wrap_pi(double a) {
    a = std::fmod(a + kPi, 2.0 * kPi);
    if (a <= 0.0) a += 2.0 * kPi;
    return a - kPi;
}

// Clamp x into [-1, 1] if it lies within tol outside; otherwise return x unchanged.
inline double clamp_unit(double x, double tol = 1e-12) {
    if (x > 1.0 && x <= 1.0 + tol) return 1.0;
    if (x < -1.0 && x >= -1.0 - tol) return -1.0;
    return x;
}

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ' ' || c == '\t' || c == ',') {
            if (!cur.empty()) out.push_back(cur), cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

}  // namespace heliquad
