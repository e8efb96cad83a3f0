#pragma once

// Closed-form model of a levitated dielectric nanosphere coupled to a driven
// high-finesse cavity mode: coupling rates, decoherence rates, the per-channel
// phonon budget and the optimum-drive formulas.
//
// Conventions used throughout the library:
//   - SI units; every frequency, linewidth and rate is angular (rad/s).
//     kappa is the FWHM cavity linewidth expressed in angular units.
//   - detuning Delta = omega_laser - omega_cavity (negative = red detuned).
//   - the particle position y is measured along the cavity axis such that
//     the coupling modulation is sin(2 k y); maximum coupling at y = lambda/8.
//
// All functions here are pure; the structs are immutable value types checked
// at construction. Safe to call concurrently.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <utility>

#include "levicool/constants.hpp"
#include "levicool/errors.hpp"

namespace levicool {

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

struct Particle {
    double radius;            // m
    double density;           // kg/m^3
    double refractive_index;  // dimensionless, > 1

    Particle(double radius_m, double density_kg_m3, double refr_index)
        : radius(radius_m), density(density_kg_m3), refractive_index(refr_index) {
        if (!(radius > 0.0)) throw ConfigError("particle: radius must be > 0");
        if (!(density > 0.0)) throw ConfigError("particle: density must be > 0");
        if (!(refractive_index > 1.0))
            throw ConfigError("particle: refractive index must be > 1");
    }

    double mass() const {
        return (4.0 / 3.0) * constants::pi * radius * radius * radius * density;
    }
};

struct Cavity {
    double length;          // m
    double waist;           // m
    double wavelength;      // m
    double finesse;         // dimensionless
    double linewidth_fwhm;  // rad/s (angular FWHM)

    Cavity(double length_m, double waist_m, double wavelength_m,
           double finesse_, double linewidth_fwhm_rad_s)
        : length(length_m), waist(waist_m), wavelength(wavelength_m),
          finesse(finesse_), linewidth_fwhm(linewidth_fwhm_rad_s) {
        if (!(length > 0.0)) throw ConfigError("cavity: length must be > 0");
        if (!(waist > 0.0)) throw ConfigError("cavity: waist must be > 0");
        if (!(wavelength > 0.0)) throw ConfigError("cavity: wavelength must be > 0");
        if (!(finesse > 0.0)) throw ConfigError("cavity: finesse must be > 0");
        if (!(linewidth_fwhm > 0.0)) throw ConfigError("cavity: linewidth must be > 0");
        // linewidth, finesse and length are redundant; reject inconsistent sets
        const double kappa_from_finesse = free_spectral_range() / finesse;
        if (std::abs(linewidth_fwhm - kappa_from_finesse) > 0.05 * kappa_from_finesse)
            throw ConfigError("cavity: linewidth deviates more than 5% from FSR/finesse");
    }

    double mode_volume() const {           // pi L w^2 / 4
        return constants::pi * length * waist * waist / 4.0;
    }
    double wavenumber() const { return constants::two_pi / wavelength; }
    double angular_frequency() const {
        return constants::two_pi * constants::speed_of_light / wavelength;
    }
    double free_spectral_range() const {   // rad/s
        return constants::two_pi * constants::speed_of_light / (2.0 * length);
    }
};

struct Trap {
    double wavelength;          // m
    double power;               // W (>= 0; zero disables the trap recoil channel)
    double numerical_aperture;  // (0, 1]
    double waist;               // m
    double omega_x, omega_y, omega_z;  // rad/s

    Trap(double wavelength_m, double power_w, double na, double waist_m,
         double omega_x_rad_s, double omega_y_rad_s, double omega_z_rad_s)
        : wavelength(wavelength_m), power(power_w), numerical_aperture(na),
          waist(waist_m), omega_x(omega_x_rad_s), omega_y(omega_y_rad_s),
          omega_z(omega_z_rad_s) {
        if (!(wavelength > 0.0)) throw ConfigError("trap: wavelength must be > 0");
        if (!(power >= 0.0)) throw ConfigError("trap: power must be >= 0");
        if (!(numerical_aperture > 0.0 && numerical_aperture <= 1.0))
            throw ConfigError("trap: NA must be in (0, 1]");
        if (!(waist > wavelength / 10.0))
            throw ConfigError("trap: waist must exceed wavelength/10");
        if (!(omega_x > 0.0 && omega_y > 0.0 && omega_z > 0.0))
            throw ConfigError("trap: mechanical frequencies must be > 0");
    }

    double wavenumber() const { return constants::two_pi / wavelength; }
};

struct Environment {
    double pressure;            // Pa
    double temperature;         // K
    double gas_molecular_mass;  // kg

    Environment(double pressure_pa, double temperature_k, double gas_mass_kg)
        : pressure(pressure_pa), temperature(temperature_k),
          gas_molecular_mass(gas_mass_kg) {
        if (!(pressure >= 0.0)) throw ConfigError("environment: pressure must be >= 0");
        if (!(temperature > 0.0)) throw ConfigError("environment: temperature must be > 0");
        if (!(gas_molecular_mass > 0.0))
            throw ConfigError("environment: gas molecular mass must be > 0");
    }

    double gas_velocity() const {  // sqrt(3 kB T / m_gas)
        return std::sqrt(3.0 * constants::k_boltzmann * temperature / gas_molecular_mass);
    }
};

struct DriveState {
    double detuning;    // rad/s, omega_laser - omega_cavity
    double n_cav;       // intracavity photon number, >= 0
    double position_y;  // m, along the cavity axis from the field node at y=0
};

inline void validate_drive(const DriveState& d, const Cavity& c) {
    if (!(d.n_cav >= 0.0)) throw ConfigError("drive: photon number must be >= 0");
    if (!(std::abs(d.detuning) < c.free_spectral_range() / 2.0))
        throw ConfigError("drive: |detuning| must be below FSR/2");
}

struct NoiseModel {
    // One-sided frequency-noise PSD of the drive at the mechanical frequency,
    // stored as the angular scalar entering Gamma_phase = s_phi/kappa * Gamma_opt.
    // A spec sheet value of X Hz^2/Hz corresponds to s_phi = 2*pi*X.
    double s_phi;           // 1/s
    double band_low_mult;   // uncertainty band multipliers on s_phi
    double band_high_mult;

    explicit NoiseModel(double s_phi_rad_s, double low_mult = 0.5, double high_mult = 2.0)
        : s_phi(s_phi_rad_s), band_low_mult(low_mult), band_high_mult(high_mult) {
        if (!(s_phi >= 0.0)) throw ConfigError("noise: s_phi must be >= 0");
        if (!(band_low_mult > 0.0 && band_low_mult <= 1.0 && band_high_mult >= 1.0))
            throw ConfigError("noise: band multipliers must satisfy 0 < low <= 1 <= high");
    }
};

// Per-channel phonon contributions in the Gamma_opt-dominant approximation.
struct PhononBudget {
    double n_min;      // quantum backaction floor kappa^2/(16 Omega^2)
    double n_m;        // thermal bath
    double n_rad_cav;  // cavity-field photon recoil
    double n_phase;    // drive phase noise
    double n_rad_t;    // trap-field photon recoil
    double n_f;        // sum of the five channels
    double t_com;      // K
};

// ---------------------------------------------------------------------------
// Elementary relations
// ---------------------------------------------------------------------------

inline double polarizability(const Particle& p) {
    const double n2 = p.refractive_index * p.refractive_index;
    const double r3 = p.radius * p.radius * p.radius;
    return 4.0 * constants::pi * constants::epsilon0 * r3 * (n2 - 1.0) / (n2 + 2.0);
}

// Cavity resonance shift induced by the particle at an antinode.
inline double frequency_shift_u0(const Particle& p, const Cavity& c) {
    return c.angular_frequency() * polarizability(p) /
           (2.0 * constants::epsilon0 * c.mode_volume());
}

inline double zero_point_fluctuation(const Particle& p, double omega_m) {
    if (!(omega_m > 0.0)) throw ConfigError("omega_m must be > 0");
    return std::sqrt(constants::hbar / (2.0 * p.mass() * omega_m));
}

// Signed single-photon coupling; sinusoidal in position with period lambda/2.
inline double single_photon_coupling_g0(const Particle& p, const Cavity& c,
                                        double omega_m, double position_y) {
    const double k = c.wavenumber();
    return frequency_shift_u0(p, c) * std::sin(2.0 * k * position_y) * k *
           zero_point_fluctuation(p, omega_m);
}

// Circulating power carried by n_cav photons: P = n hbar omega c / (2 L).
inline double intracavity_power(const Cavity& c, double n_cav) {
    return n_cav * constants::hbar * c.angular_frequency() *
           constants::speed_of_light / (2.0 * c.length);
}

inline double intracavity_photons(const Cavity& c, double p_intra) {
    if (!(p_intra >= 0.0)) throw ConfigError("intracavity power must be >= 0");
    return p_intra /
           (constants::hbar * c.angular_frequency() * constants::speed_of_light /
            (2.0 * c.length));
}

// Anti-Stokes minus Stokes Lorentzian weight; > 0 for red detuning.
inline double sideband_asymmetry(double kappa, double detuning, double omega_m) {
    const double q = kappa * kappa / 4.0;
    const double up = detuning + omega_m;
    const double dn = detuning - omega_m;
    return kappa / (q + up * up) - kappa / (q + dn * dn);
}

inline double optomechanical_damping(double g0, double n_cav, double kappa,
                                     double detuning, double omega_m) {
    if (!(kappa > 0.0)) throw ConfigError("kappa must be > 0");
    if (!(omega_m > 0.0)) throw ConfigError("omega_m must be > 0");
    return g0 * g0 * n_cav * sideband_asymmetry(kappa, detuning, omega_m);
}

// Gas damping, linear in pressure.
inline double thermal_decoherence_rate(const Particle& p, const Environment& e) {
    return 15.8 * p.radius * p.radius * e.pressure / (p.mass() * e.gas_velocity());
}

inline double thermal_occupation(double omega_m, double temperature) {
    if (!(omega_m > 0.0)) throw ConfigError("omega_m must be > 0");
    if (!(temperature > 0.0)) throw ConfigError("temperature must be > 0");
    return constants::k_boltzmann * temperature / (constants::hbar * omega_m);
}

// Photon recoil rate of the cavity field. Written so that the budget channel
// n_rad_cav = Gamma_cav n_cav / Gamma_opt is independent of n_cav; equals
// alpha^2 k^5 I_cav / (30 pi eps0^2 c m Omega n_cav) with the intracavity
// intensity I_cav = n_cav hbar omega c / (4 V_cav).
inline double recoil_rate_cavity(const Particle& p, const Cavity& c, double omega_m) {
    const double a = polarizability(p);
    const double k = c.wavenumber();
    const double k6 = k * k * k * k * k * k;
    return a * a * k6 * constants::hbar * constants::speed_of_light /
           (120.0 * constants::pi * constants::epsilon0 * constants::epsilon0 *
            p.mass() * omega_m * c.mode_volume());
}

// Photon recoil of the tweezers field, returned as the product Gamma_t * n_t
// (the trap photon occupation n_t cancels everywhere it is used).
inline double trap_recoil_product(const Particle& p, const Trap& t, double omega_m) {
    const double a = polarizability(p);
    const double k = t.wavenumber();
    const double k5 = k * k * k * k * k;
    return a * a * k5 * t.power /
           (15.0 * constants::pi * constants::pi * constants::epsilon0 *
            constants::epsilon0 * constants::speed_of_light * p.mass() * omega_m *
            t.waist * t.waist);
}

// Phase-noise decoherence rate at the red-sideband operating point,
// Gamma_phase = s_phi/kappa^2 * 4 g0^2 n_cav.
inline double phase_noise_rate(const NoiseModel& n, double g0, double n_cav,
                               double kappa) {
    return n.s_phi / (kappa * kappa) * 4.0 * g0 * g0 * n_cav;
}

inline double temperature_from_phonons(double n, double omega_m) {
    if (!(n >= 0.0)) throw ConfigError("phonon number must be >= 0");
    return n * constants::hbar * omega_m / constants::k_boltzmann;
}

inline double phonons_from_temperature(double t, double omega_m) {
    if (!(t >= 0.0)) throw ConfigError("temperature must be >= 0");
    return t * constants::k_boltzmann / (constants::hbar * omega_m);
}

// ---------------------------------------------------------------------------
// Phonon budget
// ---------------------------------------------------------------------------

enum class CoolingStatus {
    ok,             // Gamma_opt dominates; channel split is valid
    weak_coupling,  // Gamma_opt > 0 but comparable to the decoherence rates;
                    // use the exact ratio form
    no_cooling,     // Gamma_opt <= 0 (node, blue detuning, or no drive)
};

struct SystemRates {
    double g0;         // signed coupling at the drive position, rad/s
    double gamma_opt;  // optical damping at the drive detuning, rad/s
    double gamma_m;    // gas damping, 1/s
    double gamma_cav;  // cavity recoil rate, 1/s
    double gamma_phase;      // phase-noise rate (s_phi/kappa * gamma_opt), 1/s
    double gamma_trap_n_t;   // trap recoil product Gamma_t * n_t, 1/s
    double n_th;       // ambient thermal occupation
    double n_min;      // backaction floor
    double omega_m;    // rad/s
};

inline SystemRates system_rates_at_coupling(const Particle& particle,
                                            const Cavity& cavity, const Trap& trap,
                                            const Environment& env,
                                            const DriveState& drive,
                                            const NoiseModel& noise, double g0) {
    validate_drive(drive, cavity);
    const double omega_m = trap.omega_y;
    const double kappa = cavity.linewidth_fwhm;
    SystemRates r{};
    r.omega_m = omega_m;
    r.g0 = g0;
    r.gamma_opt = optomechanical_damping(r.g0, drive.n_cav, kappa, drive.detuning, omega_m);
    r.gamma_m = thermal_decoherence_rate(particle, env);
    r.gamma_cav = recoil_rate_cavity(particle, cavity, omega_m);
    r.gamma_phase = noise.s_phi / kappa * r.gamma_opt;
    r.gamma_trap_n_t = trap_recoil_product(particle, trap, omega_m);
    r.n_th = thermal_occupation(omega_m, env.temperature);
    r.n_min = kappa * kappa / (16.0 * omega_m * omega_m);
    return r;
}

inline SystemRates system_rates(const Particle& particle, const Cavity& cavity,
                                const Trap& trap, const Environment& env,
                                const DriveState& drive, const NoiseModel& noise) {
    const double g0 =
        single_photon_coupling_g0(particle, cavity, trap.omega_y, drive.position_y);
    return system_rates_at_coupling(particle, cavity, trap, env, drive, noise, g0);
}

struct BudgetResult {
    CoolingStatus status;
    PhononBudget budget;  // channel split; meaningful only when gamma_opt > 0
    // Exact ratio form sum(Gamma_i n_i) / (gamma_opt + gamma_m). Only the
    // dissipative rates damp the oscillator; phase noise and photon recoil
    // enter as driving forces, i.e. numerator-only terms. This matches the
    // steady state of the Langevin simulator.
    double n_f_exact;
    double t_com_exact;
    SystemRates rates;
};

inline BudgetResult evaluate_budget_at_coupling(const Particle& particle,
                                                const Cavity& cavity, const Trap& trap,
                                                const Environment& env,
                                                const DriveState& drive,
                                                const NoiseModel& noise, double g0) {
    const SystemRates r =
        system_rates_at_coupling(particle, cavity, trap, env, drive, noise, g0);
    const double kappa = cavity.linewidth_fwhm;

    BudgetResult out{};
    out.rates = r;

    const double noise_power = r.gamma_m * r.n_th + r.gamma_cav * drive.n_cav +
                               r.gamma_phase * drive.n_cav + r.gamma_trap_n_t;
    const double gamma_total = r.gamma_opt + r.gamma_m;
    if (gamma_total > 0.0) {
        out.n_f_exact = (r.gamma_opt * r.n_min + noise_power) / gamma_total;
        out.t_com_exact = temperature_from_phonons(out.n_f_exact, r.omega_m);
    } else {
        out.n_f_exact = std::numeric_limits<double>::quiet_NaN();
        out.t_com_exact = std::numeric_limits<double>::quiet_NaN();
    }

    if (!(r.gamma_opt > 0.0)) {
        out.status = CoolingStatus::no_cooling;
        out.budget = PhononBudget{r.n_min, 0, 0, 0, 0, 0, 0};
        return out;
    }

    PhononBudget b{};
    b.n_min = r.n_min;
    b.n_m = r.gamma_m * r.n_th / r.gamma_opt;
    b.n_rad_cav = r.gamma_cav * drive.n_cav / r.gamma_opt;
    b.n_phase = noise.s_phi * drive.n_cav / kappa;
    b.n_rad_t = r.gamma_trap_n_t / r.gamma_opt;
    b.n_f = b.n_min + b.n_m + b.n_rad_cav + b.n_phase + b.n_rad_t;
    b.t_com = temperature_from_phonons(b.n_f, r.omega_m);
    out.budget = b;

    out.status = (r.gamma_opt < 10.0 * std::max(r.gamma_m, r.gamma_phase))
                     ? CoolingStatus::weak_coupling
                     : CoolingStatus::ok;
    return out;
}

inline BudgetResult evaluate_budget(const Particle& particle, const Cavity& cavity,
                                    const Trap& trap, const Environment& env,
                                    const DriveState& drive, const NoiseModel& noise) {
    const double g0 =
        single_photon_coupling_g0(particle, cavity, trap.omega_y, drive.position_y);
    return evaluate_budget_at_coupling(particle, cavity, trap, env, drive, noise, g0);
}

// Throwing variant: valid only while the optical damping dominates.
inline PhononBudget phonon_budget(const Particle& particle, const Cavity& cavity,
                                  const Trap& trap, const Environment& env,
                                  const DriveState& drive, const NoiseModel& noise) {
    const BudgetResult r = evaluate_budget(particle, cavity, trap, env, drive, noise);
    if (r.status == CoolingStatus::no_cooling)
        throw NoCooling("no optical cooling: Gamma_opt <= 0 at this drive");
    if (r.status == CoolingStatus::weak_coupling)
        throw NoCooling("weak coupling: Gamma_opt < 10 max(Gamma_m, Gamma_phase); "
                        "use the exact ratio form");
    return r.budget;
}

// ---------------------------------------------------------------------------
// Optimum operating point
// ---------------------------------------------------------------------------
// Thermal/trap channels fall as 1/n_cav while phase noise grows as n_cav, so
// the budget is convex in n_cav with a unique interior minimum. Evaluated at
// the red-sideband point Delta = -Omega_m with the same Lorentzian damping the
// budget uses, so the stationarity and equipartition identities hold exactly.

namespace detail {
inline double damping_per_photon_at_sideband(double g0, double kappa, double omega_m) {
    return g0 * g0 * sideband_asymmetry(kappa, -omega_m, omega_m);
}
}  // namespace detail

inline double optimal_photon_number(const Particle& particle, const Cavity& cavity,
                                    const Trap& trap, const Environment& env,
                                    const NoiseModel& noise, double omega_m, double g0) {
    if (!(noise.s_phi > 0.0))
        throw DivergentOptimum("s_phi = 0: the budget decreases monotonically in n_cav");
    if (g0 == 0.0) throw ConfigError("g0 = 0: particle sits at a node");
    const double kappa = cavity.linewidth_fwhm;
    const double c = detail::damping_per_photon_at_sideband(g0, kappa, omega_m);
    const double x = thermal_decoherence_rate(particle, env) *
                         thermal_occupation(omega_m, env.temperature) +
                     trap_recoil_product(particle, trap, omega_m);
    if (x == 0.0) return 0.0;
    return std::sqrt(x * kappa / (noise.s_phi * c));
}

// Budget evaluated at the optimal photon number; includes the n_min and
// n_rad_cav offsets. At the optimum the phase channel equals the sum of the
// thermal and trap channels.
inline double min_phonon_occupation(const Particle& particle, const Cavity& cavity,
                                    const Trap& trap, const Environment& env,
                                    const NoiseModel& noise, double omega_m, double g0) {
    const double n_opt =
        optimal_photon_number(particle, cavity, trap, env, noise, omega_m, g0);
    const double kappa = cavity.linewidth_fwhm;
    const double c = detail::damping_per_photon_at_sideband(g0, kappa, omega_m);
    const double n_min = kappa * kappa / (16.0 * omega_m * omega_m);
    const double n_rad_cav = recoil_rate_cavity(particle, cavity, omega_m) / c;
    const double x = thermal_decoherence_rate(particle, env) *
                         thermal_occupation(omega_m, env.temperature) +
                     trap_recoil_product(particle, trap, omega_m);
    if (n_opt == 0.0) return n_min + n_rad_cav;
    return n_min + n_rad_cav + x / (c * n_opt) + noise.s_phi * n_opt / kappa;
}

// ---------------------------------------------------------------------------
// Position-averaged coupling
// ---------------------------------------------------------------------------
// When the residual motion is a sizeable fraction of the intracavity standing
// wave, the effective coupling is the RMS of sin(2ky) over the thermal
// position spread. Evaluated by 64-point Gauss-Hermite quadrature.

namespace detail {

inline const std::pair<std::array<double, 64>, std::array<double, 64>>&
gauss_hermite_64() {
    static const auto table = [] {
        constexpr int n = 64;
        std::array<double, n> x{}, w{};
        const double pim4 = 0.7511255444649425;  // pi^(-1/4)
        double z = 0.0;
        for (int i = 0; i < (n + 1) / 2; ++i) {
            if (i == 0)
                z = std::sqrt(2.0 * n + 1.0) -
                    1.85575 * std::pow(2.0 * n + 1.0, -1.0 / 6.0);
            else if (i == 1)
                z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
            else if (i == 2)
                z = 1.86 * z - 0.86 * x[0];
            else if (i == 3)
                z = 1.91 * z - 0.91 * x[1];
            else
                z = 2.0 * z - x[i - 2];
            double pp = 0.0;
            for (int it = 0; it < 100; ++it) {
                double p1 = pim4, p2 = 0.0;
                for (int j = 0; j < n; ++j) {
                    const double p3 = p2;
                    p2 = p1;
                    p1 = z * std::sqrt(2.0 / (j + 1)) * p2 -
                         std::sqrt(static_cast<double>(j) / (j + 1)) * p3;
                }
                pp = std::sqrt(2.0 * n) * p2;
                const double z1 = z;
                z = z1 - p1 / pp;
                if (std::abs(z - z1) < 1e-14) break;
            }
            x[i] = z;
            x[n - 1 - i] = -z;
            w[i] = 2.0 / (pp * pp);
            w[n - 1 - i] = w[i];
        }
        return std::make_pair(x, w);
    }();
    return table;
}

}  // namespace detail

// <sin^2(2k(y + d))> with d ~ N(0, sigma^2).
inline double position_averaged_sin2(double k, double y, double sigma) {
    if (sigma <= 0.0) {
        const double s = std::sin(2.0 * k * y);
        return s * s;
    }
    const auto& [nodes, weights] = detail::gauss_hermite_64();
    const double inv_sqrt_pi = 0.5641895835477563;
    double acc = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const double d = std::sqrt(2.0) * sigma * nodes[i];
        const double s = std::sin(2.0 * k * (y + d));
        acc += weights[i] * s * s;
    }
    return inv_sqrt_pi * acc;
}

}  // namespace levicool
