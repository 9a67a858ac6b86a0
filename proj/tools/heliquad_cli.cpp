// Command-line front end: mechanism analysis, rotor sweeps, network
// training, scripted missions and log metrics.

#include <CLI11.hpp>
#include <cstdio>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include "heliquad/airfoil.hpp"
#include "heliquad/csv.hpp"
#include "heliquad/mechanism.hpp"
#include "heliquad/mission.hpp"
#include "heliquad/mlp.hpp"
#include "heliquad/propeller.hpp"
#include "heliquad/simulator.hpp"
#include "heliquad/telemetry.hpp"

namespace {

using namespace heliquad;

std::unique_ptr<CsvWriter> open_csv(const std::string& out,
                                    const std::vector<std::string>& cols) {
    auto w = std::make_unique<CsvWriter>(out);
    w->header(cols);
    return w;
}

int cmd_mech_io_curve(const MechanismParams& p, const std::string& out, double step) {
    auto w = open_csv(out, {"zeta_us", "xi_deg", "gamma_deg"});
    for (double z = kPwmMin; z <= kPwmMax + 1e-9; z += step) {
        const double zeta = std::min(z, kPwmMax);
        const double xi = pwm_to_xi(p, zeta);
        w->row({zeta, rad2deg(xi), rad2deg(forward_pitch(p, xi))});
    }
    return 0;
}

int cmd_mech_singularities(const MechanismParams& p) {
    const SingularPitch s = singular_pitch(p);
    if (s.gamma_s_ext)
        std::printf("gamma_s extended (links stretched): %.6f deg\n",
                    rad2deg(*s.gamma_s_ext));
    else
        std::printf("gamma_s extended: not reachable\n");
    if (s.gamma_s_fold)
        std::printf("gamma_s folded (links folded back): %.6f deg\n",
                    rad2deg(*s.gamma_s_fold));
    else
        std::printf("gamma_s folded: not reachable%s\n",
                    p.l3 == p.l4 ? " (l3 == l4)" : "");
    std::printf("dwell: xi = +90 deg and xi = -90 deg (zero pitch rate)\n");
    const auto fit = fit_linear_io(p, -30.0, 30.0);
    std::printf("composite pwm->pitch fit over +/-30 deg: slope %.5f deg/us, "
                "intercept %.3f deg, rmse %.4f deg (%d samples)\n",
                fit.slope, fit.intercept, fit.rmse_deg, fit.n_samples);
    return 0;
}

int cmd_mech_servo_torque(const MechanismParams& p, double moment, const std::string& out) {
    auto w = open_csv(out, {"xi_deg", "gamma_deg", "tau_s_Nm"});
    const double step = deg2rad(1.0);
    for (double xi = p.xi_min; xi <= p.xi_max + 1e-12; xi += step) {
        const MechanismPose pose = solve_pose(p, xi);
        w->row({rad2deg(xi), rad2deg(pose.gamma), servo_torque(p, pose, moment)});
    }
    return 0;
}

int cmd_prop_sweep(const BladeGeometry& g, const AirfoilModel& foil, double rpm,
                   double gmin, double gmax, double gstep, const std::string& out) {
    auto w = open_csv(out, {"gamma_deg", "rpm", "thrust_N", "torque_Nm", "moment_Nm"});
    for (double gd = gmin; gd <= gmax + 1e-9; gd += gstep) {
        OperatingPoint op;
        op.gamma = deg2rad(gd);
        op.omega = rpm2rad(rpm);
        const RotorSolution s = rotor_solve(g, foil, op);
        w->row({gd, rpm, s.T, s.tau, s.M_prop});
    }
    return 0;
}

int cmd_prop_dataset(const BladeGeometry& g, const AirfoilModel& foil, int rows,
                     std::uint64_t seed, const std::string& out) {
    SweepSpec sweep;
    sweep.seed = seed;
    const int n_pitch = static_cast<int>(sweep.pitches().size());
    sweep.n_rpm = std::max(1, rows / n_pitch);
    const auto data = generate_actuator_dataset(g, foil, sweep);
    auto w = open_csv(out, {"gamma_deg", "rpm", "thrust_N", "torque_Nm", "moment_Nm", "ok"});
    for (const auto& r : data)
        w->row({rad2deg(r.gamma), rad2rpm(r.omega), r.T, r.tau, r.M_prop,
                r.ok ? 1.0 : 0.0});
    std::fprintf(stderr, "wrote %zu rows\n", data.size());
    return 0;
}

int cmd_train(const std::string& dataset_path, const std::string& net, TrainHyper hyper,
              const std::string& out) {
    const CsvTable t = read_csv(dataset_path);
    const int ig = t.column_index("gamma_deg"), irpm = t.column_index("rpm");
    const int iT = t.column_index("thrust_N"), iq = t.column_index("torque_Nm");
    const int iok = t.column_index("ok");
    if (ig < 0 || irpm < 0 || iT < 0 || iq < 0)
        throw ParseError(dataset_path, 1, "missing dataset columns");
    std::vector<DatasetRow> rows;
    for (const auto& r : t.rows) {
        DatasetRow d;
        d.gamma = deg2rad(r[ig]);
        d.omega = rpm2rad(r[irpm]);
        d.T = r[iT];
        d.tau = r[iq];
        d.ok = iok < 0 || r[iok] != 0.0;
        rows.push_back(d);
    }
    Eigen::MatrixXd X, Y;
    if (net == "nn1") dataset_to_nn1(rows, X, Y);
    else if (net == "nn2") dataset_to_nn2(rows, X, Y);
    else throw OutOfRange("--net must be nn1 or nn2");
    TrainReport rep;
    const MLPModel m = train_mlp(X, Y, hyper, &rep);
    save_mlp(m, out);
    std::printf("%s: train mse %.5f, test mse %.5f (normalized), %d/%d split\n",
                net.c_str(), rep.train_mse, rep.test_mse, rep.n_train, rep.n_test);
    return 0;
}

std::vector<TimeWindow> parse_windows(const std::string& spec,
                                      const std::vector<LogRecord>& log) {
    if (spec.rfind("auto", 0) == 0) {
        double transient = 3.0;
        if (const auto colon = spec.find(':'); colon != std::string::npos)
            transient = parse_double(spec.substr(colon + 1), "windows");
        return steady_windows(log, transient);
    }
    std::vector<TimeWindow> w;
    std::size_t start = 0;
    while (start < spec.size()) {
        auto comma = spec.find(',', start);
        const std::string tok = spec.substr(start, comma == std::string::npos
                                                       ? std::string::npos
                                                       : comma - start);
        const auto colon = tok.find(':');
        if (colon == std::string::npos) throw OutOfRange("window must be t0:t1");
        w.push_back({parse_double(tok.substr(0, colon), "windows"),
                     parse_double(tok.substr(colon + 1), "windows")});
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return w;
}

void print_metrics(const TrackingMetrics& m) {
    std::printf("samples            %d\n", m.n_samples);
    std::printf("rmse_roll_deg      %.4f\n", m.rmse_roll_deg);
    std::printf("rmse_pitch_deg     %.4f\n", m.rmse_pitch_deg);
    std::printf("yaw_rate_rmse_dps  %.4f\n", m.yaw_rate_rmse_dps);
    std::printf("max_roll_err_deg   %.4f\n", m.max_roll_err_deg);
    std::printf("max_pitch_err_deg  %.4f\n", m.max_pitch_err_deg);
    std::printf("max_yaw_rate_err   %.4f dps\n", m.max_yaw_rate_err_dps);
    std::printf("omega_cmd_bounded  %s\n", m.omega_cmd_bounded ? "yes" : "no");
    std::printf("gamma_cmd_bounded  %s\n", m.gamma_cmd_bounded ? "yes" : "no");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"variable-pitch quadrotor toolkit"};
    app.require_subcommand(1);

    // ---- mech ----
    auto* mech = app.add_subcommand("mech", "pitch mechanism analysis");
    std::string mech_params;
    mech->add_option("--params", mech_params, "mechanism config file");
    mech->require_subcommand(1);
    auto* io_curve = mech->add_subcommand("io-curve", "PWM -> servo -> pitch table");
    std::string out_csv = "/dev/stdout";
    double io_step = 1.0;
    io_curve->add_option("--out", out_csv, "output csv");
    io_curve->add_option("--step", io_step, "pwm step [us]");
    auto* sing = mech->add_subcommand("singularities", "singular pitch report");
    auto* storque = mech->add_subcommand("servo-torque", "holding torque over servo range");
    double moment = 0.0105;
    std::string storque_out = "/dev/stdout";
    storque->add_option("--moment", moment, "propeller pitching moment [N*m]")->required();
    storque->add_option("--out", storque_out, "output csv");

    // ---- prop ----
    auto* prop = app.add_subcommand("prop", "rotor aerodynamic model");
    std::string geom_file, polar_name = "builtin:cambered";
    prop->add_option("--geom", geom_file, "blade geometry config");
    prop->add_option("--polar", polar_name,
                     "polar file or builtin:{cambered,symmetric,parametric}");
    prop->require_subcommand(1);
    auto* sweep_cmd = prop->add_subcommand("sweep", "pitch sweep at fixed speed");
    double sweep_rpm = 8000.0, sweep_gmin = -25.0, sweep_gmax = 25.0, sweep_gstep = 1.0;
    std::string sweep_out = "/dev/stdout";
    sweep_cmd->add_option("--rpm", sweep_rpm, "rotor speed [rpm]")->required();
    sweep_cmd->add_option("--gamma-min", sweep_gmin, "start pitch [deg]");
    sweep_cmd->add_option("--gamma-max", sweep_gmax, "end pitch [deg]");
    sweep_cmd->add_option("--gamma-step", sweep_gstep, "pitch step [deg]");
    sweep_cmd->add_option("--out", sweep_out, "output csv");
    auto* zt = prop->add_subcommand("zero-thrust", "zero-thrust pitch angle");
    double zt_rpm = 8000.0;
    zt->add_option("--rpm", zt_rpm, "rotor speed [rpm]")->required();
    auto* dataset_cmd = prop->add_subcommand("dataset", "synthetic bench dataset");
    int ds_rows = 320;
    std::uint64_t ds_seed = 1;
    std::string ds_out = "/dev/stdout";
    dataset_cmd->add_option("--rows", ds_rows, "approximate row count");
    dataset_cmd->add_option("--seed", ds_seed, "rpm schedule seed");
    dataset_cmd->add_option("--out", ds_out, "output csv");

    // ---- train ----
    auto* train = app.add_subcommand("train", "fit an allocation network");
    std::string tr_dataset, tr_net = "nn1", tr_out = "model.mlp";
    TrainHyper hyper;
    train->add_option("--dataset", tr_dataset, "dataset csv")->required();
    train->add_option("--net", tr_net, "nn1 (T,gamma->omega) or nn2 (T,tau->gamma,omega)")
        ->required();
    train->add_option("--seed", hyper.seed, "init/split seed");
    train->add_option("--epochs", hyper.epochs, "training epochs");
    train->add_option("--lr", hyper.lr, "initial learning rate");
    train->add_option("--out", tr_out, "model output file")->required();

    // ---- sim ----
    auto* sim = app.add_subcommand("sim", "closed-loop scripted mission");
    std::string sim_vehicle, sim_mech, sim_geom, sim_gains, sim_nn1, sim_nn2, sim_mission;
    std::string sim_polar = "builtin:cambered", sim_out = "mission_log.csv";
    std::uint64_t sim_seed = 0;
    sim->add_option("--vehicle", sim_vehicle, "vehicle config")->required();
    sim->add_option("--mech", sim_mech, "mechanism config")->required();
    sim->add_option("--geom", sim_geom, "blade geometry config")->required();
    sim->add_option("--gains", sim_gains, "controller gains config")->required();
    sim->add_option("--nn1", sim_nn1, "trained thrust network")->required();
    sim->add_option("--nn2", sim_nn2, "trained thrust/torque network")->required();
    sim->add_option("--mission", sim_mission, "mission script")->required();
    sim->add_option("--polar", sim_polar, "airfoil polar");
    sim->add_option("--out", sim_out, "log csv");
    sim->add_option("--seed", sim_seed, "reserved for scripted noise");

    // ---- metrics ----
    auto* metrics_cmd = app.add_subcommand("metrics", "tracking metrics from a log");
    std::string m_log, m_windows = "auto";
    metrics_cmd->add_option("--log", m_log, "mission log csv")->required();
    metrics_cmd->add_option("--windows", m_windows,
                            "t0:t1[,t0:t1...] or auto[:transient_s]");

    CLI11_PARSE(app, argc, argv);

    try {
        if (mech->parsed()) {
            const MechanismParams p =
                mech_params.empty() ? prototype_mechanism() : load_mechanism(mech_params);
            if (io_curve->parsed()) return cmd_mech_io_curve(p, out_csv, io_step);
            if (sing->parsed()) return cmd_mech_singularities(p);
            if (storque->parsed()) return cmd_mech_servo_torque(p, moment, storque_out);
        }
        if (prop->parsed()) {
            const BladeGeometry g =
                geom_file.empty() ? prototype_blade() : load_blade_geometry(geom_file);
            const AirfoilModel foil = resolve_polar(polar_name);
            if (sweep_cmd->parsed())
                return cmd_prop_sweep(g, foil, sweep_rpm, sweep_gmin, sweep_gmax,
                                      sweep_gstep, sweep_out);
            if (zt->parsed()) {
                std::printf("zero-thrust pitch at %.0f rpm: %.4f deg\n", zt_rpm,
                            rad2deg(zero_thrust_pitch(g, foil, rpm2rad(zt_rpm))));
                return 0;
            }
            if (dataset_cmd->parsed())
                return cmd_prop_dataset(g, foil, ds_rows, ds_seed, ds_out);
        }
        if (train->parsed()) return cmd_train(tr_dataset, tr_net, hyper, tr_out);
        if (sim->parsed()) {
            SimSetup setup;
            setup.vehicle = load_vehicle(sim_vehicle);
            setup.mechanism = load_mechanism(sim_mech);
            setup.blade = load_blade_geometry(sim_geom);
            setup.airfoil = resolve_polar(sim_polar);
            setup.gains = load_gains(sim_gains);
            setup.nn1 = load_mlp(sim_nn1);
            setup.nn2 = load_mlp(sim_nn2);
            setup.seed = sim_seed;
            const MissionScript mission = load_mission(sim_mission);
            const SimResult res = run_mission(setup, mission);
            export_csv(res.log, sim_out);
            std::printf("%zu records -> %s\n", res.log.size(), sim_out.c_str());
            std::printf("landed=%s clamp_warnings=%ld infeasible_steps=%ld\n",
                        res.landed ? "yes" : "no", res.clamp_warnings, res.infeasible_steps);
            if (res.infeasible_steps > 0)
                std::printf("fault torque demand %.4f N*m vs zero-thrust ceiling %.4f N*m\n",
                            res.last_infeasibility.demand, res.last_infeasibility.ceiling);
            if (res.aborted) {
                std::fprintf(stderr, "mission aborted: %s\n", res.abort_reason.c_str());
                return 2;
            }
            if (!res.log.empty())
                print_metrics(compute_metrics(res.log, steady_windows(res.log)));
            return 0;
        }
        if (metrics_cmd->parsed()) {
            const auto log = import_csv(m_log);
            print_metrics(compute_metrics(log, parse_windows(m_windows, log)));
            return 0;
        }
    } catch (const heliquad::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
