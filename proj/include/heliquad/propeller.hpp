#pragma once

// Blade-element/momentum model of the variable-pitch rotor.
//
// Per annulus, the blade-element thrust
//   dT_bet = (n_B/2) rho V^2 (Cl(a) cos b - Cd(a) sin b) c(r) dr,
//   V^2 = v_i^2 + (Omega r)^2,  b = atan(v_i / (Omega r)),  a = gamma - b
// is balanced against the momentum-theory thrust dT_mom = 4 pi rho v_i^2 r dr
// to find the induced velocity v_i. Elements whose blade-element thrust at
// v_i = 0 is non-positive are solved on the mirrored branch (upward induced
// flow, dT = -4 pi rho v_i^2 r dr with v_i <= 0), keeping the model
// antisymmetric for symmetric sections. No edgewise or windmill states
// beyond that.
//
// Shaft torque uses the standard blade-element extension
//   dQ = (n_B/2) rho V^2 (Cl sin b + Cd cos b) c(r) r dr
// and the blade pitching moment
//   dM = (n_B/2) rho V^2 Cm(a) c(r)^2 dr.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "heliquad/airfoil.hpp"
#include "heliquad/config.hpp"
#include "heliquad/errors.hpp"
#include "heliquad/util.hpp"

namespace heliquad {

struct BladeGeometry {
    double r_min = 0;  // [m]
    double r_max = 0;  // [m]
    std::vector<double> chord_r;  // sample stations [m], monotone increasing
    std::vector<double> chord_c;  // chord at each station [m]
    int n_blades = 2;
    int n_elements = 40;

    void validate() const {
        if (!(r_min < r_max)) throw OutOfRange("blade geometry requires r_min < r_max");
        if (n_elements < 10) throw OutOfRange("n_elements must be >= 10");
        if (n_blades < 1) throw OutOfRange("n_blades must be >= 1");
        if (chord_r.size() < 2 || chord_r.size() != chord_c.size())
            throw OutOfRange("chord table needs >= 2 consistent points");
        for (std::size_t i = 0; i < chord_c.size(); ++i) {
            if (chord_c[i] <= 0) throw OutOfRange("chord values must be > 0");
            if (i && chord_r[i] <= chord_r[i - 1])
                throw OutOfRange("chord stations must be strictly increasing");
        }
    }

    double chord(double r) const {
        if (r <= chord_r.front()) return chord_c.front();
        if (r >= chord_r.back()) return chord_c.back();
        std::size_t i = 1;
        while (chord_r[i] < r) ++i;
        const double f = (r - chord_r[i - 1]) / (chord_r[i] - chord_r[i - 1]);
        return chord_c[i - 1] + f * (chord_c[i] - chord_c[i - 1]);
    }
};

struct OperatingPoint {
    double gamma = 0;   // blade pitch [rad]
    double omega = 0;   // [rad/s]
    double rho = 1.22;  // [kg/m^3]
};

struct ElementSolution {
    double r = 0;       // [m]
    double v_i = 0;     // induced velocity [m/s]
    double alpha = 0;   // [rad]
    double beta = 0;    // inflow angle [rad]
    double dT = 0;      // [N]
    double dQ = 0;      // [N*m]
    double dM = 0;      // [N*m]
    double residual = 0;  // |dT_bet - dT_mom| [N]
    bool converged = true;
};

struct RotorSolution {
    std::vector<ElementSolution> elements;
    double T = 0;       // [N]
    double tau = 0;     // shaft torque [N*m]
    double M_prop = 0;  // pitching moment [N*m]
    bool converged = true;
};

namespace detail {

struct BetOut {
    double dT, dQ, dM, beta, alpha;
};

inline BetOut bet_eval(const BladeGeometry& g, const AirfoilModel& foil,
                       const OperatingPoint& op, double r, double dr, double v) {
    BetOut o;
    o.beta = std::atan2(v, op.omega * r);
    o.alpha = op.gamma - o.beta;
    const double V2 = v * v + op.omega * r * op.omega * r;
    const PolarPoint pp = foil.eval(o.alpha);
    const double c = g.chord(r);
    const double common = 0.5 * g.n_blades * op.rho * V2 * c * dr;
    o.dT = common * (pp.cl * std::cos(o.beta) - pp.cd * std::sin(o.beta));
    o.dQ = common * (pp.cl * std::sin(o.beta) + pp.cd * std::cos(o.beta)) * r;
    o.dM = common * pp.cm * c;
    return o;
}

}  // namespace detail

// Tight balance tolerance: the zero-thrust crossing is locally flat, so the
// per-element noise floor must sit well below it for root finding on T.
inline constexpr double kInflowTolN = 1e-12;
inline constexpr int kInflowMaxIter = 200;
inline constexpr double kThrustFloorN = 1e-3;

// Induced-velocity balance for one annulus. Damped fixed point first,
// bisection on the residual if it stalls.
inline ElementSolution solve_element(const BladeGeometry& g, const AirfoilModel& foil,
                                     const OperatingPoint& op, double r, double dr,
                                     int element_index = -1) {
    ElementSolution e;
    e.r = r;
    const double mom_coeff = 4.0 * kPi * op.rho * r * dr;
    auto bet = [&](double v) { return detail::bet_eval(g, foil, op, r, dr, v); };

    // side = +1 solves the usual downward-inflow balance; side = -1 solves
    // the mirrored one for thrust-reversed elements. In terms of w = side*v,
    // both read f(w) = side*dT_bet(side*w) - mom_coeff*w^2 = 0 with f(0) > 0
    // and f decreasing.
    const double side = bet(0.0).dT > 0.0 ? 1.0 : -1.0;
    auto f = [&](double w) { return side * bet(side * w).dT - mom_coeff * w * w; };

    double w = std::sqrt(std::max(0.0, side * bet(0.0).dT) / mom_coeff);
    if (f(0.0) <= 0.0) {
        w = 0.0;  // exactly at the zero-thrust crossing
    } else {
        bool ok = false;
        for (int it = 0; it < kInflowMaxIter; ++it) {
            const double resid = f(w);
            if (std::fabs(resid) < kInflowTolN) {
                ok = true;
                break;
            }
            const double bt = side * bet(side * w).dT;
            const double target = bt > 0.0 ? std::sqrt(bt / mom_coeff) : 0.0;
            w += 0.5 * (target - w);
        }
        if (!ok) {
            double lo = 0.0, hi = std::max(w, 1e-3);
            while (f(hi) > 0.0) {
                hi *= 2.0;
                if (hi > 1e4) throw NoConvergence(element_index, f(hi));
            }
            for (int it = 0; it < 200 && (hi - lo) > 1e-15 * std::max(1.0, hi); ++it) {
                const double mid = 0.5 * (lo + hi);
                if (f(mid) > 0.0) lo = mid;
                else hi = mid;
            }
            w = 0.5 * (lo + hi);
            if (std::fabs(f(w)) > kInflowTolN) throw NoConvergence(element_index, f(w));
        }
    }

    const double v = side * w;
    const detail::BetOut b = bet(v);
    e.v_i = v;
    e.dT = b.dT;
    e.dQ = b.dQ;
    e.dM = b.dM;
    e.alpha = b.alpha;
    e.beta = b.beta;
    e.residual = std::fabs(side * b.dT - mom_coeff * w * w);
    return e;
}

// Midpoint-rule integration over uniform elements.
inline RotorSolution rotor_solve(const BladeGeometry& g, const AirfoilModel& foil,
                                 const OperatingPoint& op) {
    g.validate();
    RotorSolution sol;
    if (op.omega <= 0.0) {
        sol.converged = true;  // everything zero at rest by convention
        return sol;
    }
    const double dr = (g.r_max - g.r_min) / g.n_elements;
    sol.elements.reserve(g.n_elements);
    for (int i = 0; i < g.n_elements; ++i) {
        const double r = g.r_min + (i + 0.5) * dr;
        ElementSolution e = solve_element(g, foil, op, r, dr, i);
        sol.T += e.dT;
        sol.tau += e.dQ;
        sol.M_prop += e.dM;
        sol.elements.push_back(std::move(e));
    }
    return sol;
}

// Torque-to-thrust ratio |tau/T| at the given pitch. The balance is scale
// similar in omega, so the ratio depends on pitch only.
inline double k_tau(const BladeGeometry& g, const AirfoilModel& foil, double gamma,
                    double omega) {
    OperatingPoint op;
    op.gamma = gamma;
    op.omega = omega;
    const RotorSolution s = rotor_solve(g, foil, op);
    if (std::fabs(s.T) < kThrustFloorN) throw ThrustNearZero(s.T);
    return std::fabs(s.tau / s.T);
}

// Pitch at which thrust crosses zero, bisected on [-15, +15] deg.
inline double zero_thrust_pitch(const BladeGeometry& g, const AirfoilModel& foil,
                                double omega,
                                double lo = deg2rad(-15.0), double hi = deg2rad(15.0)) {
    auto thrust = [&](double gam) {
        OperatingPoint op;
        op.gamma = gam;
        op.omega = omega;
        return rotor_solve(g, foil, op).T;
    };
    double flo = thrust(lo), fhi = thrust(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0.0) == (fhi > 0.0))
        throw NoSignChange("thrust does not change sign on the pitch bracket");
    // the crossing is locally flat (inflow goes as sqrt(T)), so bisect the
    // sign change all the way down rather than exiting on small |T|
    for (int it = 0; it < 200 && (hi - lo) > 1e-12; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = thrust(mid);
        if (fm == 0.0) return mid;
        if ((fm > 0.0) == (fhi > 0.0)) {
            hi = mid;
            fhi = fm;
        } else {
            lo = mid;
            flo = fm;
        }
    }
    return 0.5 * (lo + hi);
}

// --- synthetic actuator dataset --------------------------------------------

struct DatasetRow {
    double gamma = 0;   // [rad]
    double omega = 0;   // [rad/s]
    double T = 0;       // [N]
    double tau = 0;     // [N*m]
    double M_prop = 0;  // [N*m]
    bool ok = true;
};

struct SweepSpec {
    double gamma_min = deg2rad(-25.0);
    double gamma_max = deg2rad(25.0);
    int n_gamma = 16;
    // explicit pitch schedule [rad]; when empty a uniform grid over
    // [gamma_min, gamma_max] with n_gamma points is used
    std::vector<double> gamma_values = default_pitch_schedule();
    double rpm_min = 1500.0;
    double rpm_max = 15000.0;
    int n_rpm = 20;  // random increasing steps per pitch
    double rho = 1.22;
    double power_max_W = 250.0;  // bench powertrain limit; caps top speed per pitch
    std::uint64_t seed = 1;

    // Bench schedule concentrated around the zero-thrust pitch, where the
    // thrust/torque inverse changes fastest; endpoints still span +/-25 deg.
    static std::vector<double> default_pitch_schedule() {
        std::vector<double> g;
        for (double d : {-25.0, -18.0, -12.0, -8.0, -5.5, -4.0, -2.8, -1.8, -0.8,
                         0.5, 2.5, 5.0, 9.0, 12.0, 17.0, 25.0})
            g.push_back(deg2rad(d));
        return g;
    }

    std::vector<double> pitches() const {
        if (!gamma_values.empty()) return gamma_values;
        std::vector<double> g;
        for (int i = 0; i < n_gamma; ++i)
            g.push_back(n_gamma == 1 ? gamma_min
                                     : gamma_min + i * (gamma_max - gamma_min) / (n_gamma - 1));
        return g;
    }
};

namespace detail {

// Highest speed the bench reaches at this pitch: rpm_max, or where shaft
// power hits the cap, whichever is lower.
inline double reachable_rpm(const BladeGeometry& g, const AirfoilModel& foil,
                            double gamma, const SweepSpec& sweep) {
    auto power = [&](double rpm) {
        OperatingPoint op;
        op.gamma = gamma;
        op.omega = rpm2rad(rpm);
        op.rho = sweep.rho;
        return rotor_solve(g, foil, op).tau * op.omega;
    };
    if (sweep.power_max_W <= 0.0 || power(sweep.rpm_max) <= sweep.power_max_W)
        return sweep.rpm_max;
    double lo = sweep.rpm_min, hi = sweep.rpm_max;
    for (int i = 0; i < 60; ++i) {
        const double mid = 0.5 * (lo + hi);
        (power(mid) < sweep.power_max_W ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace detail

// Bench-style sweep: for each pitch the speed is stepped from the minimum to
// the reachable maximum in seeded random increments. 16 x 20 gives the
// default 320 rows.
inline std::vector<DatasetRow> generate_actuator_dataset(const BladeGeometry& g,
                                                         const AirfoilModel& foil,
                                                         const SweepSpec& sweep) {
    const std::vector<double> pitches = sweep.pitches();
    if (pitches.empty() || sweep.n_rpm < 1) throw OutOfRange("empty sweep grid");
    std::mt19937_64 rng(sweep.seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<DatasetRow> rows;
    rows.reserve(pitches.size() * sweep.n_rpm);
    for (const double gamma : pitches) {
        const double rpm_top = detail::reachable_rpm(g, foil, gamma, sweep);
        // random partition of [rpm_min, rpm_top] into increasing steps
        std::vector<double> fracs(sweep.n_rpm);
        double acc = 0.0;
        for (auto& f : fracs) {
            f = 0.2 + unif(rng);  // keep steps away from zero width
            acc += f;
        }
        double rpm = sweep.rpm_min;
        double run = 0.0;
        for (int k = 0; k < sweep.n_rpm; ++k) {
            run += fracs[k];
            rpm = sweep.rpm_min + (rpm_top - sweep.rpm_min) * run / acc;
            DatasetRow row;
            row.gamma = gamma;
            row.omega = rpm2rad(rpm);
            OperatingPoint op;
            op.gamma = gamma;
            op.omega = row.omega;
            op.rho = sweep.rho;
            try {
                const RotorSolution s = rotor_solve(g, foil, op);
                row.T = s.T;
                row.tau = s.tau;
                row.M_prop = s.M_prop;
                row.ok = s.converged;
            } catch (const NoConvergence&) {
                row.ok = false;  // row kept, flagged
            }
            rows.push_back(row);
        }
    }
    return rows;
}

// --- geometry config I/O ----------------------------------------------------

inline BladeGeometry prototype_blade() {
    BladeGeometry g;
    g.r_min = 0.018;
    g.r_max = 0.127;
    g.chord_r = {0.018, 0.040, 0.070, 0.100, 0.127};
    g.chord_c = {0.016, 0.020, 0.019, 0.016, 0.011};
    g.n_blades = 2;
    g.n_elements = 40;
    return g;
}

inline BladeGeometry load_blade_geometry(const std::string& path) {
    const KeyValueFile f = KeyValueFile::load(path);
    BladeGeometry g;
    g.r_min = f.get_double("r_min_m");
    g.r_max = f.get_double("r_max_m");
    g.n_blades = static_cast<int>(f.get_double("n_blades", 2));
    g.n_elements = static_cast<int>(f.get_double("n_elements", 40));
    for (const auto& row : f.get_rows("chord")) {
        if (row.size() != 2) throw ParseError(path, 0, "chord expects: r_m c_m");
        g.chord_r.push_back(row[0]);
        g.chord_c.push_back(row[1]);
    }
    g.validate();
    return g;
}

}  // namespace heliquad
