#pragma once

// Airfoil polars Cl/Cd/Cm as functions of angle of attack. Two forms:
//  - parametric: linear lift clamped at stall, parabolic drag bucket
//    centred on the design angle cl0/cl_alpha, constant moment;
//  - tabulated: piecewise-linear rows (alpha, Cl, Cd, Cm), clamped at the
//    table ends.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "heliquad/config.hpp"
#include "heliquad/errors.hpp"
#include "heliquad/util.hpp"

namespace heliquad {

struct PolarPoint {
    double cl = 0, cd = 0, cm = 0;
};

struct ParametricPolar {
    double cl0 = 0.2;
    double cl_alpha = 0.9 * 2.0 * kPi;  // [1/rad]
    double alpha_stall = deg2rad(14.0);
    double cd0 = 0.02;
    double k_cd = 1.0;  // [1/rad^2]
    double cm0 = -0.08;

    PolarPoint eval(double alpha) const {
        PolarPoint p;
        const double a = std::clamp(alpha, -alpha_stall, alpha_stall);
        p.cl = cl0 + cl_alpha * a;  // clamped beyond +/- alpha_stall
        const double a_bucket = cl0 / cl_alpha;
        p.cd = cd0 + k_cd * (alpha - a_bucket) * (alpha - a_bucket);
        p.cm = cm0;
        return p;
    }
};

struct TabulatedPolar {
    // strictly increasing alpha [rad]
    std::vector<double> alpha;
    std::vector<PolarPoint> point;

    PolarPoint eval(double a) const {
        if (a <= alpha.front()) return point.front();
        if (a >= alpha.back()) return point.back();
        const auto it = std::upper_bound(alpha.begin(), alpha.end(), a);
        const std::size_t i = static_cast<std::size_t>(it - alpha.begin());
        const double f = (a - alpha[i - 1]) / (alpha[i] - alpha[i - 1]);
        PolarPoint p;
        p.cl = point[i - 1].cl + f * (point[i].cl - point[i - 1].cl);
        p.cd = point[i - 1].cd + f * (point[i].cd - point[i - 1].cd);
        p.cm = point[i - 1].cm + f * (point[i].cm - point[i - 1].cm);
        return p;
    }
};

class AirfoilModel {
public:
    AirfoilModel() : parametric_(ParametricPolar{}), tabulated_(false) {}
    explicit AirfoilModel(const ParametricPolar& p) : parametric_(p), tabulated_(false) {
        if (p.cd0 <= 0) throw OutOfRange("cd0 must be > 0");
    }
    explicit AirfoilModel(TabulatedPolar t) : table_(std::move(t)), tabulated_(true) {
        if (table_.alpha.size() < 2 || table_.alpha.size() != table_.point.size())
            throw OutOfRange("tabulated polar needs >= 2 consistent rows");
        for (std::size_t i = 1; i < table_.alpha.size(); ++i)
            if (table_.alpha[i] <= table_.alpha[i - 1])
                throw OutOfRange("tabulated polar alpha must be strictly increasing");
        for (const auto& p : table_.point)
            if (p.cd <= 0) throw OutOfRange("tabulated polar requires Cd > 0");
    }

    PolarPoint eval(double alpha) const {
        return tabulated_ ? table_.eval(alpha) : parametric_.eval(alpha);
    }

    bool is_tabulated() const { return tabulated_; }

private:
    ParametricPolar parametric_;
    TabulatedPolar table_;
    bool tabulated_ = false;
};

// Effective low-Reynolds polar for the prototype's cambered blade section.
// Zero lift at -2 deg, sharp negative stall with a steep drag rise (the
// blade is poor at producing negative lift), drag bucket near +6 deg.
inline AirfoilModel builtin_cambered_polar() {
    static const double rows[][4] = {
        // alpha_deg   Cl      Cd      Cm
        {-90.0, -0.30, 1.600, -0.350},
        {-30.0, -0.48, 0.520, -0.280},
        {-20.0, -0.50, 0.330, -0.220},
        {-14.0, -0.48, 0.210, -0.160},
        {-10.0, -0.46, 0.140, -0.120},
        {-8.0, -0.44, 0.105, -0.100},
        {-6.0, -0.35, 0.074, -0.090},
        {-4.5, -0.22, 0.052, -0.080},
        {-3.0, -0.10, 0.040, -0.075},
        {-2.0, 0.00, 0.034, -0.072},
        {0.0, 0.20, 0.026, -0.068},
        {2.0, 0.40, 0.021, -0.062},
        {4.0, 0.59, 0.019, -0.056},
        {6.0, 0.79, 0.018, -0.050},
        {8.0, 0.99, 0.019, -0.047},
        {10.0, 1.18, 0.022, -0.045},
        {12.0, 1.33, 0.028, -0.045},
        {13.0, 1.38, 0.033, -0.046},
        {14.0, 1.39, 0.040, -0.048},
        {16.0, 1.40, 0.062, -0.053},
        {18.0, 1.41, 0.092, -0.060},
        {20.0, 1.41, 0.130, -0.068},
        {25.0, 1.38, 0.260, -0.090},
        {30.0, 1.30, 0.400, -0.110},
        {90.0, 0.30, 1.800, -0.450},
    };
    TabulatedPolar t;
    for (const auto& r : rows) {
        t.alpha.push_back(deg2rad(r[0]));
        t.point.push_back({r[1], r[2], r[3]});
    }
    return AirfoilModel(std::move(t));
}

inline AirfoilModel builtin_symmetric_polar() {
    ParametricPolar p;
    p.cl0 = 0.0;
    p.cm0 = 0.0;
    p.alpha_stall = deg2rad(20.0);
    return AirfoilModel(p);
}

// Polar file: either
//   type parametric
//   cl0 .. cl_alpha .. alpha_stall_deg .. cd0 .. k_cd .. cm0 ..
// or
//   type tabulated
//   row <alpha_deg> <cl> <cd> <cm>    (repeated)
inline AirfoilModel load_polar(const std::string& path) {
    const KeyValueFile f = KeyValueFile::load(path);
    const std::string type = f.get_string("type");
    if (type == "parametric") {
        ParametricPolar p;
        p.cl0 = f.get_double("cl0", p.cl0);
        p.cl_alpha = f.get_double("cl_alpha", p.cl_alpha);
        p.alpha_stall = deg2rad(f.get_double("alpha_stall_deg", rad2deg(p.alpha_stall)));
        p.cd0 = f.get_double("cd0", p.cd0);
        p.k_cd = f.get_double("k_cd", p.k_cd);
        p.cm0 = f.get_double("cm0", p.cm0);
        return AirfoilModel(p);
    }
    if (type == "tabulated") {
        TabulatedPolar t;
        for (const auto& r : f.get_rows("row")) {
            if (r.size() != 4) throw ParseError(path, 0, "row expects: alpha_deg cl cd cm");
            t.alpha.push_back(deg2rad(r[0]));
            t.point.push_back({r[1], r[2], r[3]});
        }
        return AirfoilModel(std::move(t));
    }
    throw ParseError(path, 0, "polar type must be 'parametric' or 'tabulated'");
}

// name is either "builtin:cambered", "builtin:symmetric", "builtin:parametric"
// or a file path.
inline AirfoilModel resolve_polar(const std::string& name) {
    if (name == "builtin:cambered" || name == "builtin" || name.empty())
        return builtin_cambered_polar();
    if (name == "builtin:symmetric") return builtin_symmetric_polar();
    if (name == "builtin:parametric") return AirfoilModel(ParametricPolar{});
    return load_polar(name);
}

}  // namespace heliquad
