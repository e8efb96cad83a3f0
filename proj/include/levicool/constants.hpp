#pragma once

namespace levicool {

inline constexpr const char* version = "0.1.0";

namespace constants {

inline constexpr double pi = 3.14159265358979323846;
inline constexpr double two_pi = 2.0 * pi;

// CODATA 2018
inline constexpr double hbar = 1.054571817e-34;              // J s
inline constexpr double k_boltzmann = 1.380649e-23;          // J/K
inline constexpr double speed_of_light = 299792458.0;        // m/s
inline constexpr double epsilon0 = 8.8541878128e-12;         // F/m
inline constexpr double atomic_mass_unit = 1.66053906660e-27; // kg

inline constexpr double mbar_to_pa = 100.0;

} // namespace constants
} // namespace levicool
