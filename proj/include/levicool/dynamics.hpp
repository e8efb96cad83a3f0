#pragma once

// Time-domain stochastic simulation of the 1D motion along the cavity axis.
// The oscillator obeys
//
//     m y'' = -m Omega^2 y - m (Gamma_m + Gamma_opt) y' + F(t)
//
// where F is white Gaussian force noise whose one-sided PSD is chosen so that
// each bath i injects phonons at rate Gamma_i n_i:
//
//     S_F,i = 4 m hbar Omega Gamma_i n_i        [N^2/Hz]
//
// With that choice the steady-state energy reproduces the analytic budget
// sum(Gamma_i n_i) / (Gamma_m + Gamma_opt). Trajectories are classical: the
// half-phonon zero-point term is dropped (every regime of interest sits at
// n_f >= 1e3, where it is below 0.05%).
//
// Integrator: per step, an exact Ornstein-Uhlenbeck substep applies damping
// and noise to the velocity, followed by a symplectic Euler rotation. The
// deterministic part of that map has eigenvalues of modulus exp(-Gamma dt/2)
// exactly, so there is no energy drift at any quality factor, and the
// discrete stationary state matches the target variances up to O(Gamma dt).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "levicool/constants.hpp"
#include "levicool/errors.hpp"
#include "levicool/physics.hpp"

namespace levicool {

struct BathSet {
    bool thermal = true;
    bool phase = true;
    bool recoil_cavity = true;
    bool recoil_trap = true;
};

struct SimConfig {
    double dt = 5e-7;          // s
    double duration = 1.0;     // s
    std::uint64_t seed = 1;
    double sample_rate = 1e6;  // Hz, <= 1/dt
    BathSet baths{};
    bool linearize = true;     // only the linearized dynamics exist in v1
    double initial_position = 0.0;  // m
    double initial_velocity = 0.0;  // m/s

    void validate(double omega_m) const {
        if (!(dt > 0.0)) throw ConfigError("sim: dt must be > 0");
        const double period = constants::two_pi / omega_m;
        if (!(dt <= period / 20.0))
            throw ConfigError("sim: dt must resolve the oscillation (dt <= T/20)");
        if (!(duration >= 100.0 * period))
            throw ConfigError("sim: duration must cover at least 100 periods");
        if (!(sample_rate > 0.0 && sample_rate <= 1.0 / dt))
            throw ConfigError("sim: sample_rate must be in (0, 1/dt]");
        if (!linearize)
            throw ConfigError("sim: nonlinear trap dynamics are not implemented");
    }
};

struct TrajectoryMeta {
    SimConfig sim{};
    double omega_m = 0.0;
    double mass = 0.0;
    double gamma_m = 0.0;
    double gamma_opt = 0.0;
    double force_psd_total = 0.0;  // one-sided, N^2/Hz
    double x_zpf = 0.0;

    double gamma_total() const { return gamma_m + gamma_opt; }
};

struct Trajectory {
    std::vector<double> times;       // s, uniform spacing
    std::vector<double> positions;   // m
    std::vector<double> velocities;  // m/s
    TrajectoryMeta meta{};

    double sample_dt() const {
        return times.size() > 1 ? times[1] - times[0] : 0.0;
    }
};

// One-sided force PSD injecting phonons at rate gamma_i * n_i. In the
// classical limit the thermal channel reduces to 4 m Gamma_m kB T.
inline double bath_force_psd(double gamma_i, double n_i, const Particle& p,
                             double omega_m) {
    if (!(gamma_i * n_i >= 0.0))
        throw ConfigError("bath: gamma_i * n_i must be >= 0");
    return 4.0 * p.mass() * constants::hbar * omega_m * gamma_i * n_i;
}

inline double total_force_psd(const SystemRates& r, double n_cav,
                              const BathSet& baths, const Particle& p) {
    double s = 0.0;
    if (baths.thermal) s += bath_force_psd(r.gamma_m, r.n_th, p, r.omega_m);
    // Phase noise drives the oscillator regardless of the cooling sign.
    if (baths.phase)
        s += bath_force_psd(std::abs(r.gamma_phase), n_cav, p, r.omega_m);
    if (baths.recoil_cavity) s += bath_force_psd(r.gamma_cav, n_cav, p, r.omega_m);
    if (baths.recoil_trap) s += bath_force_psd(r.gamma_trap_n_t, 1.0, p, r.omega_m);
    return s;
}

inline Trajectory simulate(const Particle& particle, const Cavity& cavity,
                           const Trap& trap, const Environment& env,
                           const DriveState& drive, const NoiseModel& noise,
                           const SimConfig& sim) {
    const double omega_m = trap.omega_y;
    sim.validate(omega_m);

    const SystemRates rates = system_rates(particle, cavity, trap, env, drive, noise);
    const double m = particle.mass();
    const double gamma = rates.gamma_m + rates.gamma_opt;
    const double s_force = total_force_psd(rates, drive.n_cav, sim.baths, particle);

    const double dt = sim.dt;
    // Exact OU velocity substep over dt: v -> c v + N(0, kick_var).
    const double c = std::exp(-gamma * dt);
    double kick_var = 0.0;
    if (s_force > 0.0) {
        // (S_F / 4 m^2 gamma) (1 - e^{-2 gamma dt}), stable through gamma -> 0
        const double tau = (std::abs(gamma * dt) > 1e-12)
                               ? -std::expm1(-2.0 * gamma * dt) / gamma
                               : 2.0 * dt;
        kick_var = s_force / (4.0 * m * m) * tau;
    }
    const double kick_sigma = std::sqrt(kick_var);
    const double omega2dt = omega_m * omega_m * dt;

    const std::size_t n_steps = static_cast<std::size_t>(std::llround(sim.duration / dt));
    const std::size_t stride = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(1.0 / (sim.sample_rate * dt))));
    const std::size_t n_samples = n_steps / stride + 1;

    Trajectory traj;
    traj.times.reserve(n_samples);
    traj.positions.reserve(n_samples);
    traj.velocities.reserve(n_samples);
    traj.meta.sim = sim;
    traj.meta.omega_m = omega_m;
    traj.meta.mass = m;
    traj.meta.gamma_m = rates.gamma_m;
    traj.meta.gamma_opt = rates.gamma_opt;
    traj.meta.force_psd_total = s_force;
    traj.meta.x_zpf = zero_point_fluctuation(particle, omega_m);

    const double amplitude_limit = 1e6 * traj.meta.x_zpf;

    std::mt19937_64 rng(sim.seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    double y = sim.initial_position;
    double v = sim.initial_velocity;
    traj.times.push_back(0.0);
    traj.positions.push_back(y);
    traj.velocities.push_back(v);

    for (std::size_t n = 1; n <= n_steps; ++n) {
        v = c * v;
        if (kick_sigma > 0.0) v += kick_sigma * normal(rng);
        v -= omega2dt * y;
        y += v * dt;

        if (!(std::abs(y) < amplitude_limit) || !std::isfinite(v)) {
            const double t = static_cast<double>(n) * dt;
            throw Unstable(t, "trajectory diverged at t = " + std::to_string(t) +
                                  " s (amplitude beyond 1e6 x_zpf)");
        }
        if (n % stride == 0) {
            traj.times.push_back(static_cast<double>(n) * dt);
            traj.positions.push_back(y);
            traj.velocities.push_back(v);
        }
    }
    return traj;
}

// ---------------------------------------------------------------------------
// Steady-state estimators
// ---------------------------------------------------------------------------

namespace detail {

inline double kahan_mean_sq(const std::vector<double>& xs, std::size_t first) {
    double sum = 0.0, comp = 0.0;
    for (std::size_t i = first; i < xs.size(); ++i) {
        const double term = xs[i] * xs[i] - comp;
        const double next = sum + term;
        comp = (next - sum) - term;
        sum = next;
    }
    const std::size_t n = xs.size() - first;
    return n > 0 ? sum / static_cast<double>(n) : 0.0;
}

}  // namespace detail

struct SteadyState {
    double energy;   // J
    double phonons;  // energy / (hbar Omega)
};

inline SteadyState steady_state_energy(const Trajectory& traj, double omega_m,
                                       double discard_fraction = 0.2) {
    if (traj.positions.size() < 2 || traj.velocities.size() != traj.positions.size())
        throw NotThermalized("trajectory is empty or malformed");
    if (!(discard_fraction >= 0.0 && discard_fraction < 1.0))
        throw ConfigError("discard fraction must be in [0, 1)");
    const double span = traj.times.back() - traj.times.front();
    const double retained = span * (1.0 - discard_fraction);
    if (!(retained * traj.meta.gamma_total() >= 5.0))
        throw NotThermalized("retained span shorter than 5 damping times");

    const std::size_t first =
        static_cast<std::size_t>(discard_fraction * static_cast<double>(traj.positions.size()));
    const double ms_y = detail::kahan_mean_sq(traj.positions, first);
    const double ms_v = detail::kahan_mean_sq(traj.velocities, first);
    SteadyState s{};
    s.energy = traj.meta.mass * (omega_m * omega_m * ms_y + ms_v) / 2.0;
    s.phonons = s.energy / (constants::hbar * omega_m);
    return s;
}

struct SteadyStateStats {
    double phonons_mean = 0.0;
    double phonons_std = 0.0;     // std across batches
    double phonons_stderr = 0.0;  // std / sqrt(n_batches)
    int n_batches = 0;
};

// Batch-means estimate over the retained part of the trajectory.
inline SteadyStateStats steady_state_stats(const Trajectory& traj, double omega_m,
                                           double discard_fraction = 0.2,
                                           int n_batches = 20) {
    if (n_batches < 2) throw ConfigError("need at least 2 batches");
    // the whole-span check also guards thermalization
    (void)steady_state_energy(traj, omega_m, discard_fraction);

    const std::size_t first =
        static_cast<std::size_t>(discard_fraction * static_cast<double>(traj.positions.size()));
    const std::size_t len = (traj.positions.size() - first) / n_batches;
    if (len < 2) throw NotThermalized("too few samples per batch");

    std::vector<double> batch(n_batches);
    const double m = traj.meta.mass;
    for (int b = 0; b < n_batches; ++b) {
        double sy = 0.0, sv = 0.0;
        const std::size_t lo = first + static_cast<std::size_t>(b) * len;
        for (std::size_t i = lo; i < lo + len; ++i) {
            sy += traj.positions[i] * traj.positions[i];
            sv += traj.velocities[i] * traj.velocities[i];
        }
        const double e = m * (omega_m * omega_m * sy / len + sv / len) / 2.0;
        batch[b] = e / (constants::hbar * omega_m);
    }
    SteadyStateStats st{};
    st.n_batches = n_batches;
    double mean = 0.0;
    for (double x : batch) mean += x;
    mean /= n_batches;
    double var = 0.0;
    for (double x : batch) var += (x - mean) * (x - mean);
    var /= (n_batches - 1);
    st.phonons_mean = mean;
    st.phonons_std = std::sqrt(var);
    st.phonons_stderr = st.phonons_std / std::sqrt(static_cast<double>(n_batches));
    return st;
}

// ---------------------------------------------------------------------------
// Seed expansion
// ---------------------------------------------------------------------------
// Independent streams are derived from one master seed by the splitmix64
// output function: seed_i = mix(master + (i + 1) * golden_gamma), the i-th
// output of a splitmix64 generator seeded with the master seed.

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    std::uint64_t z = master + (index + 1) * 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace levicool
