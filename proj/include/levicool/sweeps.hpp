#pragma once

// Parameter-scan engine: theory curves over pressure, detuning, power and
// position, with phase-noise uncertainty bands, plus the inverse problem of
// fitting the phase-noise level from temperature-vs-photon-number data.
//
// Reported temperatures come from the exact-ratio budget; grid points where
// the optical damping vanishes are rendered at the uncooled bath temperature
// and flagged. Stochastic mode runs the full simulate -> averaged PSD -> ROI
// pipeline per point with seeds derived from the master seed.

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "levicool/constants.hpp"
#include "levicool/dynamics.hpp"
#include "levicool/errors.hpp"
#include "levicool/physics.hpp"
#include "levicool/spectral.hpp"

namespace levicool {

// ---------------------------------------------------------------------------
// Drive specification
// ---------------------------------------------------------------------------

enum class DriveMode {
    photon_number,      // n_cav given directly
    intracavity_power,  // circulating power in W
    input_power,        // power at the cavity input in W; resonant buildup
                        // eta * F/pi, reduced by the cavity Lorentzian at
                        // the drive detuning
};

struct DriveSpec {
    DriveMode mode = DriveMode::intracavity_power;
    double value = 0.0;       // photons or W depending on mode
    double detuning = 0.0;    // rad/s
    double position_y = 0.0;  // m
};

inline double cavity_buildup(const Cavity& c, double detuning) {
    const double q = c.linewidth_fwhm * c.linewidth_fwhm / 4.0;
    return q / (q + detuning * detuning);
}

inline double resolve_photon_number(const Cavity& c, const DriveSpec& d,
                                    double coupling_efficiency) {
    switch (d.mode) {
        case DriveMode::photon_number:
            return d.value;
        case DriveMode::intracavity_power:
            return intracavity_photons(c, d.value);
        case DriveMode::input_power: {
            const double resonant =
                coupling_efficiency * d.value * c.finesse / constants::pi;
            return intracavity_photons(c, resonant * cavity_buildup(c, d.detuning));
        }
    }
    return 0.0;
}

// Complete operating point of the experiment.
struct Setup {
    Particle particle;
    Cavity cavity;
    Trap trap;
    Environment environment;
    NoiseModel noise;
    DriveSpec drive;
    double coupling_efficiency = 0.0226627;  // input -> intracavity, see README
    bool position_averaging = false;

    DriveState drive_state() const {
        return DriveState{drive.detuning,
                          resolve_photon_number(cavity, drive, coupling_efficiency),
                          drive.position_y};
    }
};

// Budget at a setup. With position averaging enabled the coupling is the RMS
// of sin(2ky) over the thermal position spread, solved self-consistently.
inline BudgetResult evaluate_setup(const Setup& s) {
    const DriveState drive = s.drive_state();
    if (!s.position_averaging)
        return evaluate_budget(s.particle, s.cavity, s.trap, s.environment, drive,
                               s.noise);

    const double omega_m = s.trap.omega_y;
    const double k = s.cavity.wavenumber();
    const double g0_max = frequency_shift_u0(s.particle, s.cavity) * k *
                          zero_point_fluctuation(s.particle, omega_m);
    const double m_omega2 = s.particle.mass() * omega_m * omega_m;

    double t = s.environment.temperature;
    BudgetResult r{};
    for (int it = 0; it < 200; ++it) {
        const double sigma = std::sqrt(constants::k_boltzmann * t / m_omega2);
        const double sin2 = position_averaged_sin2(k, drive.position_y, sigma);
        const double g0 = g0_max * std::sqrt(sin2);
        r = evaluate_budget_at_coupling(s.particle, s.cavity, s.trap, s.environment,
                                        drive, s.noise, g0);
        const double t_new = (r.status == CoolingStatus::no_cooling)
                                 ? s.environment.temperature
                                 : r.t_com_exact;
        if (std::abs(t_new - t) <= 1e-10 * t) return r;
        t = 0.5 * (t + t_new);
    }
    return r;
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

enum class SweepVariable { pressure, detuning, input_power, position, n_cav };
enum class SweepMode { analytic, stochastic };

inline const char* to_string(SweepVariable v) {
    switch (v) {
        case SweepVariable::pressure: return "pressure";
        case SweepVariable::detuning: return "detuning";
        case SweepVariable::input_power: return "input_power";
        case SweepVariable::position: return "position";
        case SweepVariable::n_cav: return "n_cav";
    }
    return "?";
}

inline const char* to_string(CoolingStatus s) {
    switch (s) {
        case CoolingStatus::ok: return "ok";
        case CoolingStatus::weak_coupling: return "weak_coupling";
        case CoolingStatus::no_cooling: return "no_cooling";
    }
    return "?";
}

struct SweepSpec {
    SweepVariable variable = SweepVariable::pressure;
    std::vector<double> grid;  // SI units of the swept variable
    Setup fixed;
    SweepMode mode = SweepMode::analytic;
    SimConfig sim{};  // used in stochastic mode; sim.seed is the master seed

    explicit SweepSpec(Setup fixed_) : fixed(std::move(fixed_)) {}

    void validate() const {
        if (grid.empty()) throw ConfigError("sweep: grid must be non-empty");
        for (std::size_t i = 1; i < grid.size(); ++i)
            if (!(grid[i] > grid[i - 1]))
                throw ConfigError("sweep: grid must be strictly increasing");
    }
};

struct SweepRow {
    double value = 0.0;   // swept variable, SI
    double n_cav = 0.0;   // resolved photon number
    double t_com = 0.0;   // K, nominal
    double t_low = 0.0;   // K, phase-noise band
    double t_high = 0.0;  // K
    PhononBudget budget{};
    double n_f_exact = 0.0;
    CoolingStatus status = CoolingStatus::ok;
    std::string note;     // per-point error, if any
    double t_sim = std::numeric_limits<double>::quiet_NaN();     // K, stochastic
    double t_sim_stderr = std::numeric_limits<double>::quiet_NaN();
};

struct SweepResult {
    SweepVariable variable;
    SweepMode mode;
    std::vector<SweepRow> rows;
};

namespace detail {

inline Setup apply_variable(Setup s, SweepVariable variable, double value) {
    switch (variable) {
        case SweepVariable::pressure:
            s.environment = Environment(value, s.environment.temperature,
                                        s.environment.gas_molecular_mass);
            break;
        case SweepVariable::detuning:
            s.drive.detuning = value;
            break;
        case SweepVariable::input_power:
            s.drive.mode = DriveMode::input_power;
            s.drive.value = value;
            break;
        case SweepVariable::position:
            s.drive.position_y = value;
            break;
        case SweepVariable::n_cav:
            s.drive.mode = DriveMode::photon_number;
            s.drive.value = value;
            break;
    }
    return s;
}

inline Setup with_noise_scale(Setup s, double mult) {
    s.noise = NoiseModel(s.noise.s_phi * mult, s.noise.band_low_mult,
                         s.noise.band_high_mult);
    return s;
}

inline double reported_temperature(const BudgetResult& r, const Setup& s) {
    return r.status == CoolingStatus::no_cooling ? s.environment.temperature
                                                 : r.t_com_exact;
}

inline int max_threads_from_env() {
    if (const char* v = std::getenv("LEVICOOL_THREADS")) {
        const int n = std::atoi(v);
        if (n > 0) return n;
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc > 0 ? static_cast<int>(hc) : 1;
}

template <typename Fn>
void parallel_indexed(std::size_t count, int threads, Fn fn) {
    if (threads <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    const std::size_t workers =
        std::min<std::size_t>(static_cast<std::size_t>(threads), count);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1))
                fn(i);
        });
    for (auto& th : pool) th.join();
}

}  // namespace detail

inline SweepResult sweep(const SweepSpec& spec) {
    spec.validate();
    SweepResult result;
    result.variable = spec.variable;
    result.mode = spec.mode;
    result.rows.resize(spec.grid.size());

    auto eval_point = [&](std::size_t i) {
        SweepRow& row = result.rows[i];
        row.value = spec.grid[i];
        try {
            const Setup pt = detail::apply_variable(spec.fixed, spec.variable, row.value);
            const BudgetResult nominal = evaluate_setup(pt);
            row.n_cav = pt.drive_state().n_cav;
            row.budget = nominal.budget;
            row.n_f_exact = nominal.n_f_exact;
            row.status = nominal.status;
            row.t_com = detail::reported_temperature(nominal, pt);

            const Setup lo = detail::with_noise_scale(pt, pt.noise.band_low_mult);
            const Setup hi = detail::with_noise_scale(pt, pt.noise.band_high_mult);
            row.t_low = detail::reported_temperature(evaluate_setup(lo), lo);
            row.t_high = detail::reported_temperature(evaluate_setup(hi), hi);

            if (spec.mode == SweepMode::stochastic &&
                row.status != CoolingStatus::no_cooling) {
                const DriveState drive = pt.drive_state();
                SimConfig sc = spec.sim;
                sc.seed = derive_seed(spec.sim.seed, i);
                // extend the run until batch statistics are meaningful
                const double gamma_tot =
                    nominal.rates.gamma_opt + nominal.rates.gamma_m;
                const double needed = 50.0 / gamma_tot;
                sc.duration = std::min(std::max(sc.duration, needed),
                                       100.0 * spec.sim.duration);
                const Trajectory traj =
                    simulate(pt.particle, pt.cavity, pt.trap, pt.environment, drive,
                             pt.noise, sc);
                const RoiResult meas =
                    measure_temperature(traj, pt.particle, pt.trap.omega_y);
                row.t_sim = meas.t_com;
                row.t_sim_stderr = meas.stderr_k;
            }
        } catch (const std::exception& e) {
            row.note = e.what();
            row.status = CoolingStatus::no_cooling;
            row.t_com = row.t_low = row.t_high = spec.fixed.environment.temperature;
        }
    };

    const int threads =
        spec.mode == SweepMode::stochastic ? detail::max_threads_from_env() : 1;
    detail::parallel_indexed(spec.grid.size(), threads, eval_point);
    return result;
}

// ---------------------------------------------------------------------------
// Grid helpers and figure presets
// ---------------------------------------------------------------------------

inline std::vector<double> linear_grid(double lo, double hi, int n) {
    if (n < 1) throw ConfigError("bad grid size");
    if (n == 1) return {lo};
    if (!(hi > lo)) throw ConfigError("bad grid bounds");
    std::vector<double> g(n);
    for (int i = 0; i < n; ++i) g[i] = lo + (hi - lo) * i / (n - 1);
    return g;
}

inline std::vector<double> log_grid(double lo, double hi, int n) {
    if (n < 1) throw ConfigError("bad grid size");
    if (n == 1) return {lo};
    if (!(lo > 0.0 && hi > lo)) throw ConfigError("bad log grid bounds");
    std::vector<double> g(n);
    const double l0 = std::log(lo), l1 = std::log(hi);
    for (int i = 0; i < n; ++i) g[i] = std::exp(l0 + (l1 - l0) * i / (n - 1));
    return g;
}

inline std::vector<double> step_grid(double lo, double step, double hi) {
    std::vector<double> g;
    for (double v = lo; v <= hi + 1e-12 * step; v += step) g.push_back(v);
    return g;
}

// Named sweep presets matching the published operating points: pressure scan
// (2b), temperature vs detuning / input power at high and low pressure
// (3a-3h), temperature vs position at fixed intracavity power (4a-4d).
inline SweepSpec figure_preset(const std::string& id, Setup base) {
    const double omega_y = base.trap.omega_y;
    const double mbar = constants::mbar_to_pa;
    base.drive.detuning = -omega_y;
    SweepVariable variable = SweepVariable::pressure;
    std::vector<double> grid;

    auto env_at = [&](double pressure_pa) {
        return Environment(pressure_pa, base.environment.temperature,
                           base.environment.gas_molecular_mass);
    };
    auto detuning_sweep = [&](double pressure_pa, double p_in) {
        base.environment = env_at(pressure_pa);
        base.drive.mode = DriveMode::input_power;
        base.drive.value = p_in;
        variable = SweepVariable::detuning;
        grid = linear_grid(-3.0 * omega_y, -0.2 * omega_y, 50);
    };
    auto power_sweep = [&](double pressure_pa, double p_lo, double p_hi) {
        base.environment = env_at(pressure_pa);
        variable = SweepVariable::input_power;
        grid = log_grid(p_lo, p_hi, 20);
    };
    auto position_sweep = [&](double pressure_pa, double p_intra) {
        base.environment = env_at(pressure_pa);
        base.drive.mode = DriveMode::intracavity_power;
        base.drive.value = p_intra;
        variable = SweepVariable::position;
        grid = step_grid(0.0, 41e-9, 600e-9);
    };

    if (id == "2b") {
        base.drive.mode = DriveMode::intracavity_power;
        base.drive.value = 75e-3;
        variable = SweepVariable::pressure;
        grid = log_grid(3e-7 * mbar, 10.0 * mbar, 25);
    } else if (id == "3a") {
        detuning_sweep(0.6 * mbar, 4e-3);
    } else if (id == "3b") {
        detuning_sweep(0.6 * mbar, 15e-3);
    } else if (id == "3c") {
        detuning_sweep(0.6 * mbar, 45e-3);
    } else if (id == "3d") {
        power_sweep(0.6 * mbar, 4e-3, 45e-3);
    } else if (id == "3e") {
        detuning_sweep(3e-7 * mbar, 70e-6);
    } else if (id == "3f") {
        detuning_sweep(3e-7 * mbar, 0.5e-3);
    } else if (id == "3g") {
        detuning_sweep(3e-7 * mbar, 4e-3);
    } else if (id == "3h") {
        power_sweep(3e-7 * mbar, 70e-6, 4e-3);
    } else if (id == "4a") {
        position_sweep(0.6 * mbar, 1.0);
    } else if (id == "4b") {
        position_sweep(3e-7 * mbar, 5e-3);
    } else if (id == "4c") {
        position_sweep(3e-7 * mbar, 20e-3);
    } else if (id == "4d") {
        position_sweep(3e-7 * mbar, 172e-3);
    } else {
        throw ConfigError("unknown figure preset: " + id);
    }
    SweepSpec spec(std::move(base));
    spec.variable = variable;
    spec.grid = std::move(grid);
    return spec;
}

// ---------------------------------------------------------------------------
// Optimal detuning
// ---------------------------------------------------------------------------

// Golden-section argmin of the analytic temperature over the detuning window.
inline double optimal_detuning(const Setup& fixed, double window_lo, double window_hi,
                               double tolerance = constants::two_pi * 10.0) {
    if (!(window_hi > window_lo)) throw ConfigError("empty detuning window");
    auto f = [&](double delta) {
        Setup s = fixed;
        s.drive.detuning = delta;
        const BudgetResult r = evaluate_setup(s);
        return detail::reported_temperature(r, s);
    };
    const double inv_phi = 0.6180339887498949;
    double a = window_lo, b = window_hi;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > tolerance) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    const double xmin = 0.5 * (a + b);
    if (xmin - window_lo <= 2.0 * tolerance || window_hi - xmin <= 2.0 * tolerance)
        throw NoMinimum("temperature is monotone over the detuning window");
    return xmin;
}

// ---------------------------------------------------------------------------
// Phase-noise fit
// ---------------------------------------------------------------------------

struct FitPoint {
    double n_cav;
    double t_com;    // K
    double stderr_k; // K
};

struct FitResult {
    double s_phi = 0.0;     // rad/s scalar, as stored in NoiseModel
    double stderr = 0.0;
    double ci68_low = 0.0;
    double ci68_high = 0.0;
    double chi2 = 0.0;
    int dof = 0;
};

// Weighted least squares of the budget over the one free parameter s_phi.
// The model is linear in s_phi: after subtracting the known channels the
// residual is s_phi * a(n_cav) with a = (Gamma_opt/kappa) n_cav /
// (Gamma_opt + Gamma_m) * hbar Omega / kB, so the normal equation is closed
// form and the 68% interval follows from the chi-square curvature.
inline FitResult fit_phase_noise(const std::vector<FitPoint>& data, const Setup& fixed) {
    if (data.size() < 3) throw ConfigError("fit: need at least 3 points");
    double n_min_grid = std::numeric_limits<double>::infinity(), n_max_grid = 0.0;
    for (const auto& d : data) {
        if (!(d.n_cav > 0.0) || !(d.stderr_k > 0.0))
            throw ConfigError("fit: points need n_cav > 0 and stderr > 0");
        n_min_grid = std::min(n_min_grid, d.n_cav);
        n_max_grid = std::max(n_max_grid, d.n_cav);
    }
    if (!(n_max_grid >= 10.0 * n_min_grid))
        throw ConfigError("fit: points must span at least a decade of n_cav");

    const double omega_m = fixed.trap.omega_y;
    const double kappa = fixed.cavity.linewidth_fwhm;
    const double kelvin_per_phonon =
        constants::hbar * omega_m / constants::k_boltzmann;

    Setup zero = fixed;
    zero.noise = NoiseModel(0.0, fixed.noise.band_low_mult, fixed.noise.band_high_mult);

    std::vector<double> t_known(data.size()), slope(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        Setup s = detail::apply_variable(zero, SweepVariable::n_cav, data[i].n_cav);
        const BudgetResult r = evaluate_setup(s);
        if (r.status == CoolingStatus::no_cooling)
            throw ConfigError("fit: point without optical cooling");
        t_known[i] = r.t_com_exact;
        const double gamma_tot = r.rates.gamma_opt + r.rates.gamma_m;
        slope[i] = (r.rates.gamma_opt / kappa) * data[i].n_cav / gamma_tot *
                   kelvin_per_phonon;
    }

    double swa2 = 0.0, swra = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const double w = 1.0 / (data[i].stderr_k * data[i].stderr_k);
        swa2 += w * slope[i] * slope[i];
        swra += w * slope[i] * (data[i].t_com - t_known[i]);
    }
    if (!(swa2 > 0.0)) throw Unidentifiable("fit: zero sensitivity to s_phi");

    FitResult fit;
    fit.s_phi = swra / swa2;
    fit.stderr = std::sqrt(1.0 / swa2);
    fit.ci68_low = fit.s_phi - fit.stderr;
    fit.ci68_high = fit.s_phi + fit.stderr;
    fit.dof = static_cast<int>(data.size()) - 1;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const double r = (data[i].t_com - t_known[i] - fit.s_phi * slope[i]) /
                         data[i].stderr_k;
        fit.chi2 += r * r;
    }

    // Identifiability: probe with the larger of the configured level and the
    // fitted upper bound; if even that would leave the phase channel below
    // 10% of the budget at every point, the data cannot constrain it.
    const double probe = std::max(fixed.noise.s_phi, fit.s_phi + fit.stderr);
    if (!(probe > 0.0))
        throw Unidentifiable("fit: no usable probe level for identifiability");
    bool identifiable = false;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const double phase_k = probe * slope[i];
        if (phase_k / (t_known[i] + phase_k) >= 0.10) identifiable = true;
    }
    if (!identifiable)
        throw Unidentifiable("fit: all points lie in the thermally dominated regime");
    return fit;
}

}  // namespace levicool
