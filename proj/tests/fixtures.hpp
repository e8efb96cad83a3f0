#pragma once

// Reference operating point shared by the test suites: 118 nm silica sphere
// in a 1064 nm cavity (F = 1.55e5, kappa = 2pi x 40 kHz), 1550 nm tweezers
// trap, room-temperature air, drive phase noise 2pi x 4 Hz^2/Hz at Omega_y.

#include "levicool/dynamics.hpp"
#include "levicool/physics.hpp"
#include "levicool/sweeps.hpp"

namespace fixtures {

namespace lc = levicool;
inline constexpr double kTwoPi = lc::constants::two_pi;
inline constexpr double kMbar = lc::constants::mbar_to_pa;

inline lc::Particle particle() { return lc::Particle(118e-9, 2200.0, 1.45); }

inline lc::Cavity cavity() {
    return lc::Cavity(2.43e-2, 64e-6, 1064e-9, 1.55e5, kTwoPi * 40e3);
}

inline lc::Trap trap(double power_w = 0.185) {
    return lc::Trap(1550e-9, power_w, 0.8, 860e-9, kTwoPi * 90e3, kTwoPi * 100e3,
                    kTwoPi * 25e3);
}

inline lc::Environment environment(double pressure_mbar = 3e-7) {
    return lc::Environment(pressure_mbar * kMbar, 295.0,
                           28.97 * lc::constants::atomic_mass_unit);
}

inline lc::NoiseModel noise(double s_phi_hz2_per_hz = 4.0) {
    return lc::NoiseModel(kTwoPi * s_phi_hz2_per_hz);
}

inline double omega_y() { return kTwoPi * 100e3; }

// position of maximum coupling, sin(2ky) = 1
inline double antinode_y() { return 1064e-9 / 8.0; }

inline lc::DriveState drive(double n_cav, double detuning = -kTwoPi * 100e3,
                            double position = 1064e-9 / 8.0) {
    return lc::DriveState{detuning, n_cav, position};
}

inline lc::Setup setup(double pressure_mbar = 3e-7, double s_phi_hz2 = 4.0,
                       double trap_power_w = 0.185) {
    lc::Setup s{particle(), cavity(),      trap(trap_power_w), environment(pressure_mbar),
                noise(s_phi_hz2), lc::DriveSpec{}, 0.0226627,   false};
    s.drive.mode = lc::DriveMode::intracavity_power;
    s.drive.value = 75e-3;
    s.drive.detuning = -omega_y();
    s.drive.position_y = antinode_y();
    return s;
}

}  // namespace fixtures
