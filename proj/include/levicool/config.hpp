#pragma once

// Experiment configuration: a small sectioned key=value text format with
// laboratory units at the boundary (mbar, nm, mW, kHz, Hz^2/Hz) and SI plus
// angular frequencies everywhere inside. Unknown sections or keys are
// rejected; all module invariants are re-validated when the config is
// resolved into domain types. The built-in paper-defaults preset carries the
// reference operating point of the instrument this models.

#include <cstdint>
#include <cstdio>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "levicool/constants.hpp"
#include "levicool/dynamics.hpp"
#include "levicool/errors.hpp"
#include "levicool/physics.hpp"
#include "levicool/sweeps.hpp"

namespace levicool {

struct ExperimentConfig {
    // [particle]
    double radius_nm = 118.0;
    double density_kg_m3 = 2200.0;
    double refractive_index = 1.45;
    // [cavity]
    double length_cm = 2.43;
    double waist_um = 64.0;
    double wavelength_nm = 1064.0;
    double finesse = 1.55e5;
    double kappa_fwhm_khz = 40.0;
    double fsr_ghz = 6.2;  // consistency check only; 0 disables
    // [trap]
    double trap_wavelength_nm = 1550.0;
    double trap_power_mw = 185.0;
    double numerical_aperture = 0.8;
    // Calibrated so the trap recoil product is 2.0e4 1/s at the reference
    // point; the plain Gaussian-focus estimate lambda/(pi NA) = 617 nm is a
    // sensible override when modelling a different objective.
    double trap_waist_nm = 860.0;
    double freq_x_khz = 90.0;
    double freq_y_khz = 100.0;
    double freq_z_khz = 25.0;
    // [environment]
    double pressure_mbar = 3e-7;
    double temperature_k = 295.0;
    double gas_molar_mass_u = 28.97;
    // [noise]
    double s_phi_hz2_per_hz = 4.0;
    double band_low_mult = 0.5;
    double band_high_mult = 2.0;
    // [drive]
    double detuning_khz = -100.0;
    double position_nm = 133.0;  // lambda/8: maximum coupling
    std::string drive_mode = "intracavity_power";  // photons | intracavity_power | input_power
    double drive_value = 75.0;                     // count | mW | mW
    double coupling_efficiency = 0.0226627;
    bool position_averaging = false;
    // [sim]
    double dt_us = 0.5;
    double duration_s = 1.0;
    std::uint64_t seed = 1;
    double sample_rate_hz = 1e6;
    std::string baths = "thermal,phase,recoil_cavity,recoil_trap";
    // [sweep]
    std::string sweep_variable = "pressure";
    std::string sweep_scale = "log";  // log | linear | step
    double sweep_min = 3e-7;          // lab units of the swept variable
    double sweep_max = 10.0;
    int sweep_points = 25;
    double sweep_step = 41.0;  // used by scale = step
    std::string sweep_mode = "analytic";

    static ExperimentConfig paper_defaults() { return ExperimentConfig{}; }
};

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

namespace detail {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

inline double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size()) throw ConfigError("");
        return x;
    } catch (...) {
        throw ConfigError("config: bad numeric value for " + key + ": '" + v + "'");
    }
}

inline std::uint64_t parse_u64(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const unsigned long long x = std::stoull(v, &pos);
        if (pos != v.size()) throw ConfigError("");
        return static_cast<std::uint64_t>(x);
    } catch (...) {
        throw ConfigError("config: bad integer value for " + key + ": '" + v + "'");
    }
}

inline bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "on") return true;
    if (v == "false" || v == "0" || v == "off") return false;
    throw ConfigError("config: bad boolean value for " + key + ": '" + v + "'");
}

}  // namespace detail

inline void apply_config_key(ExperimentConfig& c, const std::string& section,
                             const std::string& key, const std::string& value) {
    using detail::parse_bool;
    using detail::parse_double;
    using detail::parse_u64;
    const std::string where = section + "." + key;

    if (section == "particle") {
        if (key == "radius_nm") c.radius_nm = parse_double(where, value);
        else if (key == "density_kg_m3") c.density_kg_m3 = parse_double(where, value);
        else if (key == "refractive_index") c.refractive_index = parse_double(where, value);
        else throw ConfigError("config: unknown key " + where);
    } else if (section == "cavity") {
        if (key == "length_cm") c.length_cm = parse_double(where, value);
        else if (key == "waist_um") c.waist_um = parse_double(where, value);
        else if (key == "wavelength_nm") c.wavelength_nm = parse_double(where, value);
        else if (key == "finesse") c.finesse = parse_double(where, value);
        else if (key == "kappa_fwhm_khz") c.kappa_fwhm_khz = parse_double(where, value);
        else if (key == "fsr_ghz") c.fsr_ghz = parse_double(where, value);
        else throw ConfigError("config: unknown key " + where);
    } else if (section == "trap") {
        if (key == "wavelength_nm") c.trap_wavelength_nm = parse_double(where, value);
        else if (key == "power_mw") c.trap_power_mw = parse_double(where, value);
        else if (key == "numerical_aperture") c.numerical_aperture = parse_double(where, value);
        else if (key == "waist_nm") c.trap_waist_nm = parse_double(where, value);
        else if (key == "freq_x_khz") c.freq_x_khz = parse_double(where, value);
        else if (key == "freq_y_khz") c.freq_y_khz = parse_double(where, value);
        else if (key == "freq_z_khz") c.freq_z_khz = parse_double(where, value);
        else throw ConfigError("config: unknown key " + where);
    } else if (section == "environment") {
        if (key == "pressure_mbar") c.pressure_mbar = parse_double(where, value);
        else if (key == "temperature_k") c.temperature_k = parse_double(where, value);
        else if (key == "gas_molar_mass_u") c.gas_molar_mass_u = parse_double(where, value);
        else throw ConfigError("config: unknown key " + where);
    } else if (section == "noise") {
        if (key == "s_phi_hz2_per_hz") c.s_phi_hz2_per_hz = parse_double(where, value);
        else if (key == "band_low_mult") c.band_low_mult = parse_double(where, value);
        else if (key == "band_high_mult") c.band_high_mult = parse_double(where, value);
        else throw ConfigError("config: unknown key " + where);
    } else if (section == "drive") {
        if (key == "detuning_khz") c.detuning_khz = parse_double(where, value);
        else if (key == "position_nm") c.position_nm = parse_double(where, value);
        else if (key == "photons") { c.drive_mode = "photons"; c.drive_value = parse_double(where, value); }
        else if (key == "p_intra_mw") { c.drive_mode = "intracavity_power"; c.drive_value = parse_double(where, value); }
        else if (key == "p_in_mw") { c.drive_mode = "input_power"; c.drive_value = parse_double(where, value); }
        else if (key == "coupling_efficiency") c.coupling_efficiency = parse_double(where, value);
        else if (key == "position_averaging") c.position_averaging = parse_bool(where, value);
        else throw ConfigError("config: unknown key " + where);
    } else if (section == "sim") {
        if (key == "dt_us") c.dt_us = parse_double(where, value);
        else if (key == "duration_s") c.duration_s = parse_double(where, value);
        else if (key == "seed") c.seed = parse_u64(where, value);
        else if (key == "sample_rate_hz") c.sample_rate_hz = parse_double(where, value);
        else if (key == "baths") c.baths = value;
        else throw ConfigError("config: unknown key " + where);
    } else if (section == "sweep") {
        if (key == "variable") c.sweep_variable = value;
        else if (key == "scale") c.sweep_scale = value;
        else if (key == "min") c.sweep_min = parse_double(where, value);
        else if (key == "max") c.sweep_max = parse_double(where, value);
        else if (key == "points") c.sweep_points = static_cast<int>(parse_u64(where, value));
        else if (key == "step") c.sweep_step = parse_double(where, value);
        else if (key == "mode") c.sweep_mode = value;
        else throw ConfigError("config: unknown key " + where);
    } else {
        throw ConfigError("config: unknown section [" + section + "]");
    }
}

// Applies key=value lines onto an existing config (defaults or a preset).
inline ExperimentConfig parse_config_text(const std::string& text,
                                          ExperimentConfig base = ExperimentConfig::paper_defaults()) {
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = detail::trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                throw ConfigError("config: malformed section header at line " +
                                  std::to_string(lineno));
            section = detail::trim(t.substr(1, t.size() - 2));
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: expected key = value at line " +
                              std::to_string(lineno));
        if (section.empty())
            throw ConfigError("config: key outside any section at line " +
                              std::to_string(lineno));
        apply_config_key(base, section, detail::trim(t.substr(0, eq)),
                         detail::trim(t.substr(eq + 1)));
    }
    return base;
}

// ---------------------------------------------------------------------------
// Emission and hashing
// ---------------------------------------------------------------------------

namespace detail {

inline std::string fmt_g17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

}  // namespace detail

inline std::string emit_config_text(const ExperimentConfig& c) {
    using detail::fmt_g17;
    std::ostringstream out;
    out << "[particle]\n"
        << "radius_nm = " << fmt_g17(c.radius_nm) << "\n"
        << "density_kg_m3 = " << fmt_g17(c.density_kg_m3) << "\n"
        << "refractive_index = " << fmt_g17(c.refractive_index) << "\n"
        << "[cavity]\n"
        << "length_cm = " << fmt_g17(c.length_cm) << "\n"
        << "waist_um = " << fmt_g17(c.waist_um) << "\n"
        << "wavelength_nm = " << fmt_g17(c.wavelength_nm) << "\n"
        << "finesse = " << fmt_g17(c.finesse) << "\n"
        << "kappa_fwhm_khz = " << fmt_g17(c.kappa_fwhm_khz) << "\n"
        << "fsr_ghz = " << fmt_g17(c.fsr_ghz) << "\n"
        << "[trap]\n"
        << "wavelength_nm = " << fmt_g17(c.trap_wavelength_nm) << "\n"
        << "power_mw = " << fmt_g17(c.trap_power_mw) << "\n"
        << "numerical_aperture = " << fmt_g17(c.numerical_aperture) << "\n"
        << "waist_nm = " << fmt_g17(c.trap_waist_nm) << "\n"
        << "freq_x_khz = " << fmt_g17(c.freq_x_khz) << "\n"
        << "freq_y_khz = " << fmt_g17(c.freq_y_khz) << "\n"
        << "freq_z_khz = " << fmt_g17(c.freq_z_khz) << "\n"
        << "[environment]\n"
        << "pressure_mbar = " << fmt_g17(c.pressure_mbar) << "\n"
        << "temperature_k = " << fmt_g17(c.temperature_k) << "\n"
        << "gas_molar_mass_u = " << fmt_g17(c.gas_molar_mass_u) << "\n"
        << "[noise]\n"
        << "s_phi_hz2_per_hz = " << fmt_g17(c.s_phi_hz2_per_hz) << "\n"
        << "band_low_mult = " << fmt_g17(c.band_low_mult) << "\n"
        << "band_high_mult = " << fmt_g17(c.band_high_mult) << "\n"
        << "[drive]\n"
        << "detuning_khz = " << fmt_g17(c.detuning_khz) << "\n"
        << "position_nm = " << fmt_g17(c.position_nm) << "\n";
    if (c.drive_mode == "photons")
        out << "photons = " << fmt_g17(c.drive_value) << "\n";
    else if (c.drive_mode == "intracavity_power")
        out << "p_intra_mw = " << fmt_g17(c.drive_value) << "\n";
    else
        out << "p_in_mw = " << fmt_g17(c.drive_value) << "\n";
    out << "coupling_efficiency = " << fmt_g17(c.coupling_efficiency) << "\n"
        << "position_averaging = " << (c.position_averaging ? "true" : "false") << "\n"
        << "[sim]\n"
        << "dt_us = " << fmt_g17(c.dt_us) << "\n"
        << "duration_s = " << fmt_g17(c.duration_s) << "\n"
        << "seed = " << c.seed << "\n"
        << "sample_rate_hz = " << fmt_g17(c.sample_rate_hz) << "\n"
        << "baths = " << c.baths << "\n"
        << "[sweep]\n"
        << "variable = " << c.sweep_variable << "\n"
        << "scale = " << c.sweep_scale << "\n"
        << "min = " << fmt_g17(c.sweep_min) << "\n"
        << "max = " << fmt_g17(c.sweep_max) << "\n"
        << "points = " << c.sweep_points << "\n"
        << "step = " << fmt_g17(c.sweep_step) << "\n"
        << "mode = " << c.sweep_mode << "\n";
    return out.str();
}

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (const unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::string config_hash(const ExperimentConfig& c) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(emit_config_text(c))));
    return buf;
}

// ---------------------------------------------------------------------------
// Resolution into domain types
// ---------------------------------------------------------------------------

struct Resolved {
    Setup setup;
    SimConfig sim;
    SweepVariable sweep_variable;
    SweepMode sweep_mode;
    std::vector<double> sweep_grid;  // SI
};

namespace detail {

inline SweepVariable parse_sweep_variable(const std::string& v) {
    if (v == "pressure") return SweepVariable::pressure;
    if (v == "detuning") return SweepVariable::detuning;
    if (v == "input_power") return SweepVariable::input_power;
    if (v == "position") return SweepVariable::position;
    if (v == "n_cav") return SweepVariable::n_cav;
    throw ConfigError("config: unknown sweep variable '" + v + "'");
}

inline double sweep_unit_to_si(SweepVariable v) {
    switch (v) {
        case SweepVariable::pressure: return constants::mbar_to_pa;   // mbar
        case SweepVariable::detuning: return constants::two_pi * 1e3; // kHz
        case SweepVariable::input_power: return 1e-3;                 // mW
        case SweepVariable::position: return 1e-9;                    // nm
        case SweepVariable::n_cav: return 1.0;
    }
    return 1.0;
}

inline BathSet parse_baths(const std::string& spec) {
    BathSet b{false, false, false, false};
    if (spec == "none") return b;
    if (spec == "all") return BathSet{};
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const std::string t = trim(item);
        if (t == "thermal") b.thermal = true;
        else if (t == "phase") b.phase = true;
        else if (t == "recoil_cavity") b.recoil_cavity = true;
        else if (t == "recoil_trap") b.recoil_trap = true;
        else if (!t.empty()) throw ConfigError("config: unknown bath '" + t + "'");
    }
    return b;
}

}  // namespace detail

inline Resolved resolve(const ExperimentConfig& c) {
    const double kappa = constants::two_pi * c.kappa_fwhm_khz * 1e3;
    Setup setup{
        Particle(c.radius_nm * 1e-9, c.density_kg_m3, c.refractive_index),
        Cavity(c.length_cm * 1e-2, c.waist_um * 1e-6, c.wavelength_nm * 1e-9,
               c.finesse, kappa),
        Trap(c.trap_wavelength_nm * 1e-9, c.trap_power_mw * 1e-3,
             c.numerical_aperture, c.trap_waist_nm * 1e-9,
             constants::two_pi * c.freq_x_khz * 1e3,
             constants::two_pi * c.freq_y_khz * 1e3,
             constants::two_pi * c.freq_z_khz * 1e3),
        Environment(c.pressure_mbar * constants::mbar_to_pa, c.temperature_k,
                    c.gas_molar_mass_u * constants::atomic_mass_unit),
        NoiseModel(constants::two_pi * c.s_phi_hz2_per_hz, c.band_low_mult,
                   c.band_high_mult),
        DriveSpec{},
        c.coupling_efficiency,
        c.position_averaging,
    };

    if (c.fsr_ghz > 0.0) {
        const double fsr = setup.cavity.free_spectral_range();
        const double stated = constants::two_pi * c.fsr_ghz * 1e9;
        if (std::abs(fsr - stated) > 0.01 * stated)
            throw ConfigError("config: cavity length and fsr_ghz disagree by more than 1%");
    }
    if (!(setup.coupling_efficiency > 0.0 && setup.coupling_efficiency <= 1.0))
        throw ConfigError("config: coupling_efficiency must be in (0, 1]");

    setup.drive.detuning = constants::two_pi * c.detuning_khz * 1e3;
    setup.drive.position_y = c.position_nm * 1e-9;
    if (c.drive_mode == "photons") {
        setup.drive.mode = DriveMode::photon_number;
        setup.drive.value = c.drive_value;
    } else if (c.drive_mode == "intracavity_power") {
        setup.drive.mode = DriveMode::intracavity_power;
        setup.drive.value = c.drive_value * 1e-3;
    } else if (c.drive_mode == "input_power") {
        setup.drive.mode = DriveMode::input_power;
        setup.drive.value = c.drive_value * 1e-3;
    } else {
        throw ConfigError("config: unknown drive mode '" + c.drive_mode + "'");
    }
    if (!(setup.drive.value >= 0.0))
        throw ConfigError("config: drive value must be >= 0");
    validate_drive(setup.drive_state(), setup.cavity);

    Resolved r{setup, SimConfig{}, SweepVariable::pressure, SweepMode::analytic, {}};
    r.sim.dt = c.dt_us * 1e-6;
    r.sim.duration = c.duration_s;
    r.sim.seed = c.seed;
    r.sim.sample_rate = c.sample_rate_hz;
    r.sim.baths = detail::parse_baths(c.baths);
    r.sim.validate(setup.trap.omega_y);

    r.sweep_variable = detail::parse_sweep_variable(c.sweep_variable);
    if (c.sweep_mode == "analytic") r.sweep_mode = SweepMode::analytic;
    else if (c.sweep_mode == "stochastic") r.sweep_mode = SweepMode::stochastic;
    else throw ConfigError("config: unknown sweep mode '" + c.sweep_mode + "'");

    const double to_si = detail::sweep_unit_to_si(r.sweep_variable);
    if (c.sweep_scale == "log")
        r.sweep_grid = log_grid(c.sweep_min * to_si, c.sweep_max * to_si, c.sweep_points);
    else if (c.sweep_scale == "linear")
        r.sweep_grid = linear_grid(c.sweep_min * to_si, c.sweep_max * to_si, c.sweep_points);
    else if (c.sweep_scale == "step")
        r.sweep_grid = step_grid(c.sweep_min * to_si, c.sweep_step * to_si,
                                 c.sweep_max * to_si);
    else
        throw ConfigError("config: unknown sweep scale '" + c.sweep_scale + "'");

    return r;
}

inline SweepSpec sweep_spec_from(const Resolved& r) {
    SweepSpec spec(r.setup);
    spec.variable = r.sweep_variable;
    spec.grid = r.sweep_grid;
    spec.mode = r.sweep_mode;
    spec.sim = r.sim;
    return spec;
}

}  // namespace levicool
