// levicool: cavity sideband-cooling budgets, parameter sweeps and stochastic
// trajectory simulation for a levitated nanoparticle.
//
// Subcommands: budget, sweep, simulate, fit, calibrate.
// Exit codes: 0 ok, 1 runtime failure, 2 invalid configuration,
//             3 no optical cooling at the requested operating point,
//             4 simulation did not reach / cannot reach steady state.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "levicool/config.hpp"
#include "levicool/dynamics.hpp"
#include "levicool/io.hpp"
#include "levicool/physics.hpp"
#include "levicool/spectral.hpp"
#include "levicool/sweeps.hpp"

namespace lc = levicool;
using nlohmann::json;

namespace {

struct CommonOpts {
    std::string config_path;
    std::string preset = "paper-defaults";
    std::string emit_config;
    std::string output_dir = ".";
    std::string output;  // -o
    std::string format = "csv";

    std::optional<double> pressure_mbar, s_phi, detuning_khz, position_nm;
    std::optional<double> p_intra_mw, p_in_mw, duration_s, dt_us;
    std::optional<std::string> ncav;
    std::optional<std::uint64_t> seed;
    bool no_trap = false;

    // sweep-only
    std::optional<std::string> figure, variable, scale, mode;
    std::optional<int> points;
    std::optional<double> min, max, step;
};

void add_common_options(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--config", o.config_path, "config file (sectioned key = value)");
    cmd->add_option("--preset", o.preset, "base preset (paper-defaults)");
    cmd->add_option("--emit-config", o.emit_config, "write the resolved config to FILE");
    cmd->add_option("--output-dir", o.output_dir, "directory for output files");
    cmd->add_option("-o,--output", o.output, "output file");
    cmd->add_option("--format", o.format, "csv | json | both");
    cmd->add_option("--pressure-mbar", o.pressure_mbar, "gas pressure [mbar]");
    cmd->add_option("--s-phi", o.s_phi, "phase noise PSD at Omega_m [Hz^2/Hz]");
    cmd->add_option("--detuning-khz", o.detuning_khz, "drive detuning [kHz]");
    cmd->add_option("--position-nm", o.position_nm, "particle position on the cavity axis [nm]");
    cmd->add_option("--ncav", o.ncav, "intracavity photon number, or 'opt'");
    cmd->add_option("--p-intra-mw", o.p_intra_mw, "intracavity power [mW]");
    cmd->add_option("--p-in-mw", o.p_in_mw, "cavity input power [mW]");
    cmd->add_flag("--no-trap", o.no_trap, "disable the trap recoil channel");
    cmd->add_option("--seed", o.seed, "master random seed");
    cmd->add_option("--duration-s", o.duration_s, "simulation duration [s]");
    cmd->add_option("--dt-us", o.dt_us, "integrator step [us]");
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw lc::ConfigError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

lc::ExperimentConfig build_config(const CommonOpts& o) {
    if (o.preset != "paper-defaults")
        throw lc::ConfigError("unknown preset '" + o.preset + "'");
    lc::ExperimentConfig c = lc::ExperimentConfig::paper_defaults();
    if (!o.config_path.empty()) c = lc::parse_config_text(read_file(o.config_path), c);

    if (o.pressure_mbar) c.pressure_mbar = *o.pressure_mbar;
    if (o.s_phi) c.s_phi_hz2_per_hz = *o.s_phi;
    if (o.detuning_khz) c.detuning_khz = *o.detuning_khz;
    if (o.position_nm) c.position_nm = *o.position_nm;
    if (o.p_intra_mw) { c.drive_mode = "intracavity_power"; c.drive_value = *o.p_intra_mw; }
    if (o.p_in_mw) { c.drive_mode = "input_power"; c.drive_value = *o.p_in_mw; }
    if (o.ncav && *o.ncav != "opt") {
        c.drive_mode = "photons";
        c.drive_value = lc::detail::parse_double("--ncav", *o.ncav);
    }
    if (o.no_trap) c.trap_power_mw = 0.0;
    if (o.seed) c.seed = *o.seed;
    if (o.duration_s) c.duration_s = *o.duration_s;
    if (o.dt_us) c.dt_us = *o.dt_us;

    if (o.figure) { /* handled by the sweep command */ }
    if (o.variable) c.sweep_variable = *o.variable;
    if (o.scale) c.sweep_scale = *o.scale;
    if (o.mode) c.sweep_mode = *o.mode;
    if (o.points) c.sweep_points = *o.points;
    if (o.min) c.sweep_min = *o.min;
    if (o.max) c.sweep_max = *o.max;
    if (o.step) c.sweep_step = *o.step;
    return c;
}

struct Session {
    lc::ExperimentConfig config;
    lc::Resolved resolved;
    lc::FileMeta meta;
};

Session open_session(const CommonOpts& o) {
    lc::ExperimentConfig c = build_config(o);
    lc::Resolved r = lc::resolve(c);

    if (o.ncav && *o.ncav == "opt") {
        const double omega_m = r.setup.trap.omega_y;
        const double g0 = lc::single_photon_coupling_g0(
            r.setup.particle, r.setup.cavity, omega_m, r.setup.drive.position_y);
        const double n_opt = lc::optimal_photon_number(
            r.setup.particle, r.setup.cavity, r.setup.trap, r.setup.environment,
            r.setup.noise, omega_m, g0);
        c.drive_mode = "photons";
        c.drive_value = n_opt;
        r = lc::resolve(c);
    }

    Session s{std::move(c), std::move(r), {}};
    s.meta.config_text = lc::emit_config_text(s.config);
    s.meta.config_hash = lc::config_hash(s.config);
    if (!o.emit_config.empty()) lc::write_text_file(o.emit_config, s.meta.config_text);
    return s;
}

std::string out_path(const CommonOpts& o, const std::string& fallback) {
    if (!o.output.empty()) return o.output;
    return (std::filesystem::path(o.output_dir) / fallback).string();
}

// ---------------------------------------------------------------------------
// budget
// ---------------------------------------------------------------------------

int cmd_budget(const CommonOpts& o) {
    const Session s = open_session(o);
    const lc::Setup& setup = s.resolved.setup;
    const lc::BudgetResult r = lc::evaluate_setup(setup);

    if (r.status == lc::CoolingStatus::no_cooling) {
        json err{{"error", "NoCooling"},
                 {"message", "Gamma_opt <= 0 at this operating point"},
                 {"config_hash", s.meta.config_hash}};
        std::cerr << err.dump() << "\n";
        return 3;
    }

    json j;
    j["tool_version"] = lc::version;
    j["config_hash"] = s.meta.config_hash;
    j["resolved_config"] = s.meta.config_text;
    j["status"] = lc::to_string(r.status);
    j["n_cav"] = setup.drive_state().n_cav;
    j["budget"] = {{"n_min", r.budget.n_min},         {"n_m", r.budget.n_m},
                   {"n_rad_cav", r.budget.n_rad_cav}, {"n_phase", r.budget.n_phase},
                   {"n_rad_t", r.budget.n_rad_t},     {"n_f", r.budget.n_f},
                   {"t_com_k", r.budget.t_com}};
    j["n_f_exact"] = r.n_f_exact;
    j["t_com_exact_k"] = r.t_com_exact;
    j["rates"] = {{"g0", r.rates.g0},
                  {"gamma_opt", r.rates.gamma_opt},
                  {"gamma_m", r.rates.gamma_m},
                  {"gamma_cav", r.rates.gamma_cav},
                  {"gamma_phase", r.rates.gamma_phase},
                  {"gamma_trap_n_t", r.rates.gamma_trap_n_t},
                  {"n_th", r.rates.n_th}};

    const double omega_m = setup.trap.omega_y;
    try {
        const double g0 = lc::single_photon_coupling_g0(setup.particle, setup.cavity,
                                                        omega_m, setup.drive.position_y);
        const double n_opt = lc::optimal_photon_number(
            setup.particle, setup.cavity, setup.trap, setup.environment, setup.noise,
            omega_m, g0);
        const double n_f_min = lc::min_phonon_occupation(
            setup.particle, setup.cavity, setup.trap, setup.environment, setup.noise,
            omega_m, g0);
        j["n_cav_opt"] = n_opt;
        j["p_intra_opt_w"] = lc::intracavity_power(setup.cavity, n_opt);
        j["n_f_min"] = n_f_min;
        j["t_f_min_k"] = lc::temperature_from_phonons(n_f_min, omega_m);
    } catch (const lc::DivergentOptimum&) {
        j["n_cav_opt"] = nullptr;
        j["n_f_min"] = nullptr;
        j["note"] = "no finite optimum: s_phi = 0";
    }

    std::ostringstream table;
    table << "phonon budget (n_cav = " << j["n_cav"].get<double>() << ")\n";
    auto line = [&](const char* k, double v) {
        table << "  " << k << std::string(12 - std::min<std::size_t>(11, std::string(k).size()), ' ')
              << v << "\n";
    };
    line("n_min", r.budget.n_min);
    line("n_m", r.budget.n_m);
    line("n_rad_cav", r.budget.n_rad_cav);
    line("n_phase", r.budget.n_phase);
    line("n_rad_t", r.budget.n_rad_t);
    line("n_f", r.budget.n_f);
    table << "  T_com      " << r.budget.t_com << " K\n";
    table << "  n_f_exact  " << r.n_f_exact << "\n";
    table << "  T_exact    " << r.t_com_exact << " K\n";
    if (j.contains("n_cav_opt") && !j["n_cav_opt"].is_null()) {
        table << "  n_cav_opt  " << j["n_cav_opt"].get<double>() << "\n";
        table << "  n_f_min    " << j["n_f_min"].get<double>() << "\n";
        table << "  T_f_min    " << j["t_f_min_k"].get<double>() << " K\n";
    }
    if (r.status == lc::CoolingStatus::weak_coupling)
        table << "  [weak coupling: channel split approximate, use exact values]\n";
    std::cout << table.str();

    if (!o.output.empty()) lc::write_text_file(o.output, j.dump(2) + "\n");
    return 0;
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

int cmd_sweep(const CommonOpts& o) {
    const Session s = open_session(o);

    lc::SweepSpec spec = o.figure ? lc::figure_preset(*o.figure, s.resolved.setup)
                                  : lc::sweep_spec_from(s.resolved);
    if (o.figure) {
        spec.mode = s.resolved.sweep_mode;
        spec.sim = s.resolved.sim;
    }
    const lc::SweepResult result = lc::sweep(spec);

    const std::string base = o.figure ? ("fig" + *o.figure) : "sweep";
    bool wrote_csv = false, wrote_json = false;
    if (!o.output.empty()) {
        if (o.output.size() > 5 && o.output.substr(o.output.size() - 5) == ".json") {
            lc::write_text_file(o.output, lc::sweep_to_json(result, s.meta).dump(2) + "\n");
            wrote_json = true;
        } else {
            lc::write_sweep_csv(o.output, result, s.meta);
            wrote_csv = true;
        }
    } else {
        if (o.format == "csv" || o.format == "both") {
            lc::write_sweep_csv(out_path(o, base + ".csv"), result, s.meta);
            wrote_csv = true;
        }
        if (o.format == "json" || o.format == "both") {
            lc::write_text_file(out_path(o, base + ".json"),
                                lc::sweep_to_json(result, s.meta).dump(2) + "\n");
            wrote_json = true;
        }
    }

    double tmin = std::numeric_limits<double>::infinity(), tmax = 0.0;
    for (const auto& row : result.rows) {
        tmin = std::min(tmin, row.t_com);
        tmax = std::max(tmax, row.t_com);
    }
    std::cout << "sweep " << lc::to_string(result.variable) << ": "
              << result.rows.size() << " points, T in [" << tmin << ", " << tmax
              << "] K" << (wrote_csv ? ", csv written" : "")
              << (wrote_json ? ", json written" : "") << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

int cmd_simulate(const CommonOpts& o) {
    const Session s = open_session(o);
    const lc::Setup& setup = s.resolved.setup;
    const double omega_m = setup.trap.omega_y;

    const lc::Trajectory traj =
        lc::simulate(setup.particle, setup.cavity, setup.trap, setup.environment,
                     setup.drive_state(), setup.noise, s.resolved.sim);

    const std::filesystem::path dir(o.output_dir);
    std::filesystem::create_directories(dir);
    lc::write_trajectory_binary((dir / "trajectory.bin").string(), traj, s.meta);
    if (o.format == "csv" || o.format == "both")
        lc::write_trajectory_csv((dir / "trajectory.csv").string(), traj, s.meta);

    const int max_segments = static_cast<int>(
        traj.positions.size() / static_cast<std::size_t>(std::llround(2e-3 / traj.sample_dt())));
    const lc::Spectrum spec =
        lc::averaged_psd(traj, 2e-3, std::min(std::max(max_segments, 1), 100));
    lc::write_spectrum_csv((dir / "spectrum.csv").string(), spec, s.meta);

    const lc::RoiResult meas = lc::measure_temperature(traj, setup.particle, omega_m);
    const lc::SteadyState energy = lc::steady_state_energy(traj, omega_m);
    const lc::BudgetResult budget = lc::evaluate_setup(setup);

    json j;
    j["tool_version"] = lc::version;
    j["config_hash"] = s.meta.config_hash;
    j["resolved_config"] = s.meta.config_text;
    j["t_roi_k"] = meas.t_com;
    j["t_roi_stderr_k"] = meas.stderr_k;
    j["roi_hz"] = {meas.f_lo, meas.f_hi};
    j["mean_square_m2"] = meas.mean_square;
    j["phonons_energy_route"] = energy.phonons;
    j["t_energy_route_k"] = lc::temperature_from_phonons(energy.phonons, omega_m);
    j["analytic"] = {{"status", lc::to_string(budget.status)},
                     {"n_f", budget.budget.n_f},
                     {"t_com_k", budget.budget.t_com},
                     {"n_f_exact", budget.n_f_exact},
                     {"t_com_exact_k", budget.t_com_exact}};
    if (budget.status != lc::CoolingStatus::no_cooling && budget.t_com_exact > 0.0)
        j["sim_over_analytic"] = meas.t_com / budget.t_com_exact;
    lc::write_text_file((dir / "summary.json").string(), j.dump(2) + "\n");

    std::cout << "T_roi = " << meas.t_com << " +- " << meas.stderr_k << " K, analytic "
              << budget.t_com_exact << " K; artifacts in " << dir.string() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------------

int cmd_fit(const CommonOpts& o, const std::string& data_path) {
    const Session s = open_session(o);

    std::ifstream in(data_path);
    if (!in) throw lc::ConfigError("cannot open " + data_path);
    std::vector<lc::FitPoint> data;
    std::string line;
    while (std::getline(in, line)) {
        const std::string t = lc::detail::trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (t.find("n_cav") == 0) continue;  // header
        std::stringstream ss(t);
        std::string a, b, c;
        if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',') ||
            !std::getline(ss, c, ','))
            throw lc::ConfigError("fit data: expected n_cav,t_com_k,stderr_k");
        data.push_back({lc::detail::parse_double("n_cav", lc::detail::trim(a)),
                        lc::detail::parse_double("t_com_k", lc::detail::trim(b)),
                        lc::detail::parse_double("stderr_k", lc::detail::trim(c))});
    }

    const lc::FitResult fit = lc::fit_phase_noise(data, s.resolved.setup);
    json j;
    j["tool_version"] = lc::version;
    j["config_hash"] = s.meta.config_hash;
    j["s_phi_hz2_per_hz"] = fit.s_phi / lc::constants::two_pi;
    j["stderr_hz2_per_hz"] = fit.stderr / lc::constants::two_pi;
    j["ci68_hz2_per_hz"] = {fit.ci68_low / lc::constants::two_pi,
                            fit.ci68_high / lc::constants::two_pi};
    j["chi2"] = fit.chi2;
    j["dof"] = fit.dof;
    j["n_points"] = data.size();

    std::cout << "s_phi = " << j["s_phi_hz2_per_hz"].get<double>() << " +- "
              << j["stderr_hz2_per_hz"].get<double>() << " Hz^2/Hz (68%)\n";
    if (!o.output.empty()) lc::write_text_file(o.output, j.dump(2) + "\n");
    return 0;
}

// ---------------------------------------------------------------------------
// calibrate
// ---------------------------------------------------------------------------

int cmd_calibrate(const CommonOpts& o, const std::string& traj_path,
                  double roi_half_width_khz) {
    const Session s = open_session(o);
    const lc::Setup& setup = s.resolved.setup;
    const lc::Trajectory raw = lc::read_trajectory_binary(traj_path);

    const lc::CalibrationResult cal =
        lc::calibrate(raw, setup.particle, setup.trap.omega_y, setup.environment,
                      roi_half_width_khz * 1e3);
    if (cal.low_pressure_warning)
        std::cerr << "warning: reference pressure below 1 mbar; gas thermalization "
                     "may be too slow for a reliable reference\n";

    json j;
    j["tool_version"] = lc::version;
    j["config_hash"] = s.meta.config_hash;
    j["scale_m_per_unit"] = cal.scale;
    j["snr"] = cal.snr;
    j["low_pressure_warning"] = cal.low_pressure_warning;
    std::cout << "scale = " << cal.scale << " m/unit (SNR " << cal.snr << ")\n";
    if (!o.output.empty()) lc::write_text_file(o.output, j.dump(2) + "\n");
    return 0;
}

int fail(const std::string& type, const std::string& msg, int code) {
    json e{{"error", type}, {"message", msg}};
    std::cerr << e.dump() << "\n";
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"levitated-nanoparticle cavity sideband cooling toolkit"};
    app.require_subcommand(1);

    CommonOpts budget_opts, sweep_opts, sim_opts, fit_opts, cal_opts;
    std::string fit_data, cal_traj;
    double cal_roi_khz = 40.0;

    CLI::App* budget = app.add_subcommand("budget", "analytic phonon budget");
    add_common_options(budget, budget_opts);

    CLI::App* sweepc = app.add_subcommand("sweep", "parameter sweep");
    add_common_options(sweepc, sweep_opts);
    sweepc->add_option("--figure", sweep_opts.figure,
                       "preset: 2b, 3a..3h, 4a..4d");
    sweepc->add_option("--variable", sweep_opts.variable,
                       "pressure | detuning | input_power | position | n_cav");
    sweepc->add_option("--points", sweep_opts.points, "grid size");
    sweepc->add_option("--min", sweep_opts.min, "grid start (lab units)");
    sweepc->add_option("--max", sweep_opts.max, "grid end (lab units)");
    sweepc->add_option("--step", sweep_opts.step, "grid step for scale=step");
    sweepc->add_option("--scale", sweep_opts.scale, "log | linear | step");
    sweepc->add_option("--mode", sweep_opts.mode, "analytic | stochastic");

    CLI::App* sim = app.add_subcommand("simulate", "stochastic trajectory + spectrum");
    add_common_options(sim, sim_opts);

    CLI::App* fitc = app.add_subcommand("fit", "fit the phase-noise level");
    add_common_options(fitc, fit_opts);
    fitc->add_option("data", fit_data, "CSV of n_cav,t_com_k,stderr_k")->required();

    CLI::App* cal = app.add_subcommand("calibrate", "detector scale from a reference trace");
    add_common_options(cal, cal_opts);
    cal->add_option("trajectory", cal_traj, "trajectory file (binary)")->required();
    cal->add_option("--roi-khz", cal_roi_khz, "ROI half width [kHz]");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (budget->parsed()) return cmd_budget(budget_opts);
        if (sweepc->parsed()) return cmd_sweep(sweep_opts);
        if (sim->parsed()) return cmd_simulate(sim_opts);
        if (fitc->parsed()) return cmd_fit(fit_opts, fit_data);
        if (cal->parsed()) return cmd_calibrate(cal_opts, cal_traj, cal_roi_khz);
    } catch (const lc::ConfigError& e) {
        return fail("ConfigError", e.what(), 2);
    } catch (const lc::DivergentOptimum& e) {
        return fail("DivergentOptimum", e.what(), 2);
    } catch (const lc::NoCooling& e) {
        return fail("NoCooling", e.what(), 3);
    } catch (const lc::Unstable& e) {
        return fail("Unstable", e.what(), 4);
    } catch (const lc::NotThermalized& e) {
        return fail("NotThermalized", e.what(), 4);
    } catch (const lc::TooShort& e) {
        return fail("TooShort", e.what(), 4);
    } catch (const lc::BadReference& e) {
        return fail("BadReference", e.what(), 1);
    } catch (const lc::Unidentifiable& e) {
        return fail("Unidentifiable", e.what(), 1);
    } catch (const lc::NoMinimum& e) {
        return fail("NoMinimum", e.what(), 1);
    } catch (const std::exception& e) {
        return fail("Error", e.what(), 1);
    }
    return 0;
}
