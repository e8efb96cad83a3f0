#pragma once

// File formats.
//
// Trajectory (binary): a text header of key = value lines terminated by a
// line reading "end_header", followed by little-endian float64 column blocks
// (all times, then all positions, then all velocities). A CSV fallback with
// the same metadata as comment lines is provided for interoperability.
//
// Spectrum and sweep results are CSV with '#'-prefixed metadata lines; sweep
// results can also be written as JSON. Every file embeds the tool version and
// the hash of the fully resolved configuration.

#include <bit>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "levicool/config.hpp"
#include "levicool/constants.hpp"
#include "levicool/dynamics.hpp"
#include "levicool/errors.hpp"
#include "levicool/spectral.hpp"
#include "levicool/sweeps.hpp"

static_assert(std::endian::native == std::endian::little,
              "trajectory files are written little-endian");

namespace levicool {

struct FileMeta {
    std::string config_hash;
    std::string config_text;
};

namespace detail {

inline void write_commented_block(std::ostream& out, const FileMeta& meta,
                                  const std::string& kind) {
    out << "# levicool " << kind << "\n";
    out << "# tool_version = " << version << "\n";
    out << "# config_hash = " << meta.config_hash << "\n";
    std::istringstream cfg(meta.config_text);
    std::string line;
    while (std::getline(cfg, line)) out << "# config: " << line << "\n";
}

inline const char* sweep_value_unit(SweepVariable v) {
    switch (v) {
        case SweepVariable::pressure: return "mbar";
        case SweepVariable::detuning: return "khz";
        case SweepVariable::input_power: return "mw";
        case SweepVariable::position: return "nm";
        case SweepVariable::n_cav: return "count";
    }
    return "si";
}

inline double sweep_value_to_lab(SweepVariable v, double si) {
    switch (v) {
        case SweepVariable::pressure: return si / constants::mbar_to_pa;
        case SweepVariable::detuning: return si / (constants::two_pi * 1e3);
        case SweepVariable::input_power: return si * 1e3;
        case SweepVariable::position: return si * 1e9;
        case SweepVariable::n_cav: return si;
    }
    return si;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Trajectory
// ---------------------------------------------------------------------------

inline void write_trajectory_binary(const std::string& path, const Trajectory& traj,
                                    const FileMeta& meta) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open " + path + " for writing");
    out << "levicool-trajectory-v1\n";
    out << "tool_version = " << version << "\n";
    out << "config_hash = " << meta.config_hash << "\n";
    out << "n_samples = " << traj.times.size() << "\n";
    out << "sample_dt_s = " << detail::fmt_g17(traj.sample_dt()) << "\n";
    out << "omega_m_rad_s = " << detail::fmt_g17(traj.meta.omega_m) << "\n";
    out << "mass_kg = " << detail::fmt_g17(traj.meta.mass) << "\n";
    out << "gamma_m_s = " << detail::fmt_g17(traj.meta.gamma_m) << "\n";
    out << "gamma_opt_s = " << detail::fmt_g17(traj.meta.gamma_opt) << "\n";
    out << "columns = time,position,velocity\n";
    out << "end_header\n";
    auto dump = [&](const std::vector<double>& col) {
        out.write(reinterpret_cast<const char*>(col.data()),
                  static_cast<std::streamsize>(col.size() * sizeof(double)));
    };
    dump(traj.times);
    dump(traj.positions);
    dump(traj.velocities);
    if (!out) throw ConfigError("failed writing " + path);
}

inline Trajectory read_trajectory_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line != "levicool-trajectory-v1")
        throw ConfigError(path + ": not a levicool trajectory file");
    std::size_t n_samples = 0;
    Trajectory traj;
    while (std::getline(in, line)) {
        if (line == "end_header") break;
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (key == "n_samples") n_samples = std::stoull(value);
        else if (key == "omega_m_rad_s") traj.meta.omega_m = std::stod(value);
        else if (key == "mass_kg") traj.meta.mass = std::stod(value);
        else if (key == "gamma_m_s") traj.meta.gamma_m = std::stod(value);
        else if (key == "gamma_opt_s") traj.meta.gamma_opt = std::stod(value);
    }
    auto load = [&](std::vector<double>& col) {
        col.resize(n_samples);
        in.read(reinterpret_cast<char*>(col.data()),
                static_cast<std::streamsize>(n_samples * sizeof(double)));
        if (static_cast<std::size_t>(in.gcount()) != n_samples * sizeof(double))
            throw ConfigError(path + ": truncated trajectory data");
    };
    load(traj.times);
    load(traj.positions);
    load(traj.velocities);
    return traj;
}

inline void write_trajectory_csv(const std::string& path, const Trajectory& traj,
                                 const FileMeta& meta) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open " + path + " for writing");
    detail::write_commented_block(out, meta, "trajectory");
    out << "time_s,position_m,velocity_m_s\n";
    for (std::size_t i = 0; i < traj.times.size(); ++i)
        out << detail::fmt_g17(traj.times[i]) << ','
            << detail::fmt_g17(traj.positions[i]) << ','
            << detail::fmt_g17(traj.velocities[i]) << '\n';
    if (!out) throw ConfigError("failed writing " + path);
}

// ---------------------------------------------------------------------------
// Spectrum
// ---------------------------------------------------------------------------

inline void write_spectrum_csv(const std::string& path, const Spectrum& spec,
                               const FileMeta& meta) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open " + path + " for writing");
    detail::write_commented_block(out, meta, "spectrum");
    out << "# n_segments_averaged = " << spec.n_segments_averaged << "\n";
    out << "# segment_duration_s = " << detail::fmt_g17(spec.segment_duration) << "\n";
    out << "frequency_hz,psd_m2_per_hz\n";
    for (std::size_t k = 0; k < spec.frequencies.size(); ++k)
        out << detail::fmt_g17(spec.frequencies[k]) << ','
            << detail::fmt_g17(spec.psd[k]) << '\n';
    if (!out) throw ConfigError("failed writing " + path);
}

// ---------------------------------------------------------------------------
// Sweep results
// ---------------------------------------------------------------------------

inline void write_sweep_csv(const std::string& path, const SweepResult& result,
                            const FileMeta& meta) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open " + path + " for writing");
    detail::write_commented_block(out, meta, "sweep");
    const std::string unit = detail::sweep_value_unit(result.variable);
    out << "# variable = " << to_string(result.variable) << "\n";
    out << "# mode = " << (result.mode == SweepMode::analytic ? "analytic" : "stochastic")
        << "\n";
    out << "value_" << unit
        << ",n_cav,t_com_k,t_band_low_k,t_band_high_k,n_min,n_m,n_rad_cav,n_phase,"
           "n_rad_t,n_f,n_f_exact,status,t_sim_k,t_sim_stderr_k,note\n";
    for (const auto& r : result.rows) {
        out << detail::fmt_g17(detail::sweep_value_to_lab(result.variable, r.value))
            << ',' << detail::fmt_g17(r.n_cav) << ',' << detail::fmt_g17(r.t_com)
            << ',' << detail::fmt_g17(r.t_low) << ',' << detail::fmt_g17(r.t_high)
            << ',' << detail::fmt_g17(r.budget.n_min) << ','
            << detail::fmt_g17(r.budget.n_m) << ','
            << detail::fmt_g17(r.budget.n_rad_cav) << ','
            << detail::fmt_g17(r.budget.n_phase) << ','
            << detail::fmt_g17(r.budget.n_rad_t) << ',' << detail::fmt_g17(r.budget.n_f)
            << ',' << detail::fmt_g17(r.n_f_exact) << ',' << to_string(r.status) << ','
            << detail::fmt_g17(r.t_sim) << ',' << detail::fmt_g17(r.t_sim_stderr)
            << ',' << r.note << '\n';
    }
    if (!out) throw ConfigError("failed writing " + path);
}

inline nlohmann::json sweep_to_json(const SweepResult& result, const FileMeta& meta) {
    nlohmann::json j;
    j["tool_version"] = version;
    j["config_hash"] = meta.config_hash;
    j["resolved_config"] = meta.config_text;
    j["variable"] = to_string(result.variable);
    j["mode"] = result.mode == SweepMode::analytic ? "analytic" : "stochastic";
    j["value_unit"] = detail::sweep_value_unit(result.variable);
    auto rows = nlohmann::json::array();
    for (const auto& r : result.rows) {
        nlohmann::json row;
        row["value"] = detail::sweep_value_to_lab(result.variable, r.value);
        row["value_si"] = r.value;
        row["n_cav"] = r.n_cav;
        row["t_com_k"] = r.t_com;
        row["t_band_low_k"] = r.t_low;
        row["t_band_high_k"] = r.t_high;
        row["budget"] = {{"n_min", r.budget.n_min},       {"n_m", r.budget.n_m},
                         {"n_rad_cav", r.budget.n_rad_cav}, {"n_phase", r.budget.n_phase},
                         {"n_rad_t", r.budget.n_rad_t},   {"n_f", r.budget.n_f},
                         {"t_com_k", r.budget.t_com}};
        row["n_f_exact"] = r.n_f_exact;
        row["status"] = to_string(r.status);
        if (!r.note.empty()) row["note"] = r.note;
        if (result.mode == SweepMode::stochastic) {
            row["t_sim_k"] = r.t_sim;
            row["t_sim_stderr_k"] = r.t_sim_stderr;
        }
        rows.push_back(std::move(row));
    }
    j["rows"] = std::move(rows);
    return j;
}

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open " + path + " for writing");
    out << text;
    if (!out) throw ConfigError("failed writing " + path);
}

}  // namespace levicool
