#pragma once

// Measurement pipeline: segmented averaged displacement PSDs, region-of-
// interest integration to <y^2>, temperature conversion and reference-pressure
// calibration.
//
// PSD convention: one-sided, units m^2/Hz, rectangular window, non-overlapping
// (Bartlett) segment averaging. With this normalization
//
//     sum_k psd[k] * df  ==  mean(y^2)   over the samples used,
//
// exactly (Parseval), which is what the ROI sum relies on. Per-bin sums across
// segments use compensated accumulation so the identity holds to <= 1e-9
// relative regardless of segment count.
//
// The DFT itself is delegated to FFTW (r2c, double precision).

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <vector>

#include "levicool/constants.hpp"
#include "levicool/dynamics.hpp"
#include "levicool/errors.hpp"
#include "levicool/physics.hpp"

namespace levicool {

struct Spectrum {
    std::vector<double> frequencies;  // Hz, 0 .. sample_rate/2
    std::vector<double> psd;          // m^2/Hz, one-sided
    int n_segments_averaged = 0;
    double segment_duration = 0.0;    // s (effective: n_samples * dt)

    double bin_width() const {
        return frequencies.size() > 1 ? frequencies[1] - frequencies[0] : 0.0;
    }
};

struct RoiResult {
    double mean_square = 0.0;  // m^2
    double t_com = 0.0;        // K
    double f_lo = 0.0;         // Hz
    double f_hi = 0.0;         // Hz
    double stderr_k = 0.0;     // K, std of the repeat temperatures
};

namespace detail {

struct KahanAcc {
    double sum = 0.0, comp = 0.0;
    void add(double x) {
        const double t = x - comp;
        const double next = sum + t;
        comp = (next - sum) - t;
        sum = next;
    }
};

// Averaged one-sided periodogram over [first, first + n_segments*n_per_seg).
inline Spectrum averaged_psd_range(const std::vector<double>& samples,
                                   std::size_t first, double dt,
                                   std::size_t n_per_seg, int n_segments) {
    const std::size_t n_bins = n_per_seg / 2 + 1;
    std::vector<KahanAcc> acc(n_bins);

    std::vector<double> in(n_per_seg);
    std::vector<std::complex<double>> out(n_bins);
    fftw_plan plan = fftw_plan_dft_r2c_1d(
        static_cast<int>(n_per_seg), in.data(),
        reinterpret_cast<fftw_complex*>(out.data()), FFTW_ESTIMATE);

    for (int s = 0; s < n_segments; ++s) {
        const double* seg = samples.data() + first + static_cast<std::size_t>(s) * n_per_seg;
        std::copy(seg, seg + n_per_seg, in.begin());
        fftw_execute(plan);
        for (std::size_t k = 0; k < n_bins; ++k) acc[k].add(std::norm(out[k]));
    }
    fftw_destroy_plan(plan);

    Spectrum spec;
    spec.n_segments_averaged = n_segments;
    spec.segment_duration = static_cast<double>(n_per_seg) * dt;
    spec.frequencies.resize(n_bins);
    spec.psd.resize(n_bins);
    const double df = 1.0 / spec.segment_duration;
    const bool even = (n_per_seg % 2 == 0);
    for (std::size_t k = 0; k < n_bins; ++k) {
        spec.frequencies[k] = static_cast<double>(k) * df;
        const bool edge = (k == 0) || (even && k == n_bins - 1);
        const double fold = edge ? 1.0 : 2.0;
        spec.psd[k] = fold * (dt / static_cast<double>(n_per_seg)) * acc[k].sum /
                      static_cast<double>(n_segments);
    }
    return spec;
}

}  // namespace detail

inline Spectrum averaged_psd(const Trajectory& traj,
                             double segment_duration = 2e-3,
                             int n_segments = 100) {
    if (n_segments < 1) throw ConfigError("n_segments must be >= 1");
    const double dt = traj.sample_dt();
    if (!(dt > 0.0)) throw TooShort("trajectory has fewer than two samples");
    const std::size_t n_per_seg =
        static_cast<std::size_t>(std::llround(segment_duration / dt));
    if (n_per_seg < 2) throw ConfigError("segment shorter than two samples");
    if (traj.positions.size() < static_cast<std::size_t>(n_segments) * n_per_seg)
        throw TooShort("trajectory too short for the requested segments");
    return detail::averaged_psd_range(traj.positions, 0, dt, n_per_seg, n_segments);
}

inline double integrate_roi(const Spectrum& spec, double center, double half_width) {
    if (spec.frequencies.empty()) throw RoiOutOfBand("empty spectrum");
    const double f_lo = center - half_width;
    const double f_hi = center + half_width;
    if (f_hi < spec.frequencies.front() || f_lo > spec.frequencies.back())
        throw RoiOutOfBand("ROI does not overlap the spectrum band");
    const double df = spec.bin_width();
    detail::KahanAcc acc;
    for (std::size_t k = 0; k < spec.frequencies.size(); ++k) {
        const double f = spec.frequencies[k];
        if (f >= f_lo && f <= f_hi) acc.add(spec.psd[k] * df);
    }
    return acc.sum;
}

inline double temperature_from_variance(double mean_square, const Particle& p,
                                        double omega_m) {
    if (!(mean_square >= 0.0)) throw ConfigError("mean square must be >= 0");
    return p.mass() * omega_m * omega_m * mean_square / constants::k_boltzmann;
}

inline double estimate_uncertainty(const std::vector<RoiResult>& repeats) {
    if (repeats.size() < 2) throw ConfigError("need at least 2 repeats");
    double mean = 0.0;
    for (const auto& r : repeats) mean += r.t_com;
    mean /= static_cast<double>(repeats.size());
    double var = 0.0;
    for (const auto& r : repeats) var += (r.t_com - mean) * (r.t_com - mean);
    var /= static_cast<double>(repeats.size() - 1);
    return std::sqrt(var);
}

// Full measurement: split the (post-discard) trace into n_repeats chunks, each
// averaged over segments_per_repeat periodograms, integrate the ROI of each
// and convert to temperature. stderr_k is the standard deviation of the
// repeat temperatures.
inline RoiResult measure_temperature(const Trajectory& traj, const Particle& p,
                                     double omega_m, double roi_half_width = 15e3,
                                     int n_repeats = 10, int segments_per_repeat = 100,
                                     double segment_duration = 2e-3,
                                     double discard_fraction = 0.2) {
    const double dt = traj.sample_dt();
    if (!(dt > 0.0)) throw TooShort("trajectory has fewer than two samples");
    const std::size_t n_per_seg =
        static_cast<std::size_t>(std::llround(segment_duration / dt));
    if (n_per_seg < 2) throw ConfigError("segment shorter than two samples");

    if (n_repeats < 2) throw ConfigError("need at least 2 measurement repeats");
    std::size_t first = static_cast<std::size_t>(
        discard_fraction * static_cast<double>(traj.positions.size()));
    const std::size_t avail = traj.positions.size() - first;
    const std::size_t per_repeat = static_cast<std::size_t>(segments_per_repeat) * n_per_seg;
    const int repeats = static_cast<int>(
        std::min<std::size_t>(static_cast<std::size_t>(n_repeats), avail / per_repeat));
    if (repeats < 2) throw TooShort("trajectory too short for two measurement repeats");

    const double center = omega_m / constants::two_pi;
    std::vector<RoiResult> parts;
    parts.reserve(repeats);
    for (int rep = 0; rep < repeats; ++rep) {
        const Spectrum spec = detail::averaged_psd_range(
            traj.positions, first + static_cast<std::size_t>(rep) * per_repeat, dt,
            n_per_seg, segments_per_repeat);
        RoiResult r;
        r.f_lo = center - roi_half_width;
        r.f_hi = center + roi_half_width;
        r.mean_square = integrate_roi(spec, center, roi_half_width);
        r.t_com = temperature_from_variance(r.mean_square, p, omega_m);
        parts.push_back(r);
    }

    RoiResult out;
    out.f_lo = center - roi_half_width;
    out.f_hi = center + roi_half_width;
    for (const auto& r : parts) {
        out.mean_square += r.mean_square;
        out.t_com += r.t_com;
    }
    out.mean_square /= parts.size();
    out.t_com /= parts.size();
    out.stderr_k = estimate_uncertainty(parts);
    return out;
}

// ---------------------------------------------------------------------------
// Calibration
// ---------------------------------------------------------------------------

struct CalibrationResult {
    double scale = 0.0;  // meters per detector unit
    double snr = 0.0;    // ROI peak over out-of-band median floor
    bool low_pressure_warning = false;
};

// Reference-pressure calibration: the particle is assumed thermalized at the
// environment temperature, so <y^2> = kB T / (m Omega^2) and the detector
// scale follows from the measured ROI power. The default ROI half-width is
// wider than the measurement default because the mechanical line at a
// 10 mbar reference is several kHz wide; +-40 kHz keeps the missed-tail bias
// under 2%.
inline CalibrationResult calibrate(const Trajectory& raw, const Particle& p,
                                   double omega_m, const Environment& reference,
                                   double roi_half_width = 40e3,
                                   double segment_duration = 2e-3,
                                   int n_segments = 100) {
    CalibrationResult result;
    result.low_pressure_warning = reference.pressure < 1.0 * constants::mbar_to_pa;

    const Spectrum spec = averaged_psd(raw, segment_duration, n_segments);
    const double center = omega_m / constants::two_pi;
    const double f_lo = center - roi_half_width;
    const double f_hi = center + roi_half_width;

    // peak inside the ROI vs the median floor outside it (DC excluded)
    double peak = 0.0;
    std::vector<double> floor_bins;
    floor_bins.reserve(spec.psd.size());
    for (std::size_t k = 1; k < spec.frequencies.size(); ++k) {
        const double f = spec.frequencies[k];
        if (f >= f_lo && f <= f_hi)
            peak = std::max(peak, spec.psd[k]);
        else
            floor_bins.push_back(spec.psd[k]);
    }
    if (floor_bins.empty()) throw RoiOutOfBand("ROI covers the whole band");
    std::nth_element(floor_bins.begin(), floor_bins.begin() + floor_bins.size() / 2,
                     floor_bins.end());
    const double floor = floor_bins[floor_bins.size() / 2];
    result.snr = floor > 0.0 ? peak / floor : std::numeric_limits<double>::infinity();
    if (!(result.snr >= 10.0))
        throw BadReference("reference trace peak SNR below 10");

    const double ms_roi = integrate_roi(spec, center, roi_half_width);
    if (!(ms_roi > 0.0)) throw BadReference("reference trace has no ROI power");
    result.scale = std::sqrt(constants::k_boltzmann * reference.temperature /
                             (p.mass() * omega_m * omega_m * ms_roi));
    return result;
}

}  // namespace levicool
