#pragma once

#include "memscan/device_model.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace memscan {

/// Measured or synthetic amplitude-vs-frequency data for one resonance.
struct SweepDataset {
    std::string label;
    std::vector<std::pair<double, double>> rows;  // (frequency_hz, amplitude), f increasing
};

void validate(const SweepDataset& d);

struct LorentzianParams {
    double f0_hz = 0.0;
    double q_factor = 0.0;
    double peak_amplitude = 0.0;  // model amplitude at f0
};

struct FitResult {
    LorentzianParams params;
    double residual_rms = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<double> accepted_residuals;  // rms after each accepted step
};

class DegenerateDataError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Damped least squares on the second-order magnitude model
///   m(f) = peak * Q^-1 / sqrt((1 - r^2)^2 + (r/Q)^2),  r = f/f0.
/// Damping factor moves by 10x down on accepted and up on rejected steps
/// (initial 1e-3); converges when the relative step drops below 1e-10 or the
/// relative residual change below 1e-12; at most 200 iterations, after which
/// the best parameters so far are returned with converged = false.
/// The default initial guess comes from the grid peak and half-power width.
FitResult fit_lorentzian(const SweepDataset& data,
                         std::optional<LorentzianParams> initial_guess = std::nullopt);

struct SaturationFit {
    double small_signal_gain = 0.0;  // optical deg per volt
    double sat_angle_deg = 0.0;
    double residual_rms = 0.0;
    int iterations = 0;
    bool converged = false;
    bool sat_unbounded = false;  // sat_angle exceeded 100x the largest observed angle
};

/// Least squares on theta = sat_angle * tanh(gain * V / sat_angle) over
/// (volts, optical deg) rows; same damping schedule as fit_lorentzian.
SaturationFit fit_saturation(const std::vector<std::pair<double, double>>& volt_angle_rows);

struct AxisDatasets {
    std::optional<SweepDataset> sweep;
    std::optional<std::vector<std::pair<double, double>>> voltage;  // (vpp, optical deg)
};

struct CalibrationChange {
    std::string axis;
    std::string field;
    double old_value;
    double new_value;
};

struct CalibrationOutcome {
    DeviceSpec spec;
    std::vector<CalibrationChange> changes;
};

/// Applies the sweep fit (f0, Q) and the voltage fit (gain, sat_angle) per
/// axis and returns an updated copy of the spec; axes without datasets are
/// preserved bit-identically. Voltage rows arrive as peak-to-peak volts of
/// the square drive and are converted to fundamental volts before fitting.
/// Fit failures propagate with the axis name prefixed.
CalibrationOutcome calibrate_device(const DeviceSpec& spec, const AxisDatasets& vertical,
                                    const AxisDatasets& horizontal);

/// Plain-text calibration report with fixed field order.
std::string calibration_report(const std::vector<CalibrationChange>& changes);

SweepDataset sweep_dataset_from_csv(const std::string& text, const std::string& origin);

}  // namespace memscan
