#pragma once

#include <stdexcept>
#include <string>

namespace levicool {

// Invalid or inconsistent user-supplied parameters.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// The weak-coupling phonon budget is not valid: Gamma_opt <= 0 or the
// optical damping does not dominate the decoherence rates.
struct NoCooling : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// No finite optimum photon number exists (zero phase noise).
struct DivergentOptimum : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Runaway heating: the simulated amplitude crossed the divergence guard.
struct Unstable : std::runtime_error {
    double time_s;
    explicit Unstable(double t, const std::string& what)
        : std::runtime_error(what), time_s(t) {}
};

// Trajectory too short to have reached steady state.
struct NotThermalized : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Trajectory too short for the requested segmentation.
struct TooShort : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RoiOutOfBand : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Calibration reference trace does not show a usable mechanical peak.
struct BadReference : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Data cannot constrain the phase-noise level.
struct Unidentifiable : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Objective is monotone over the search window.
struct NoMinimum : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace levicool
