#pragma once

#include "memscan/device_model.hpp"
#include "memscan/resonator.hpp"

#include <utility>
#include <vector>

namespace memscan {

enum class WaveShape { Square, Sine };

/// Periodic electrical drive waveform. `duty` applies to square shapes only.
struct DriveSignal {
    WaveShape shape = WaveShape::Square;
    double vpp = 0.0;
    double frequency_hz = 0.0;
    double duty = 0.5;
    double phase_deg = 0.0;
    bool differential = false;
};

/// Phenomenological drive saturation in the optical-angle domain:
///   theta = sat_angle * tanh(gain * V_fund * |H_n(f)| / sat_angle)
struct SaturationModel {
    double sat_angle_deg = 0.0;
    double small_signal_gain_deg_per_v = 0.0;
};

void validate(const DriveSignal& s);
void validate(const SaturationModel& m);

/// Amplitude of the Fourier fundamental of the zero-mean waveform.
/// Square of duty d and peak-to-peak V: (2V/pi) sin(pi d); sine: vpp/2.
double fundamental_amplitude(const DriveSignal& s);

/// Splits a differential drive into its two outputs; the second is the same
/// signal with phase shifted by 180 deg (normalized into (-180, 180]).
/// Throws std::runtime_error when the differential flag is not set.
std::pair<DriveSignal, DriveSignal> differential_pair(const DriveSignal& s);

/// Steady-state full optical scan angle for a drive through the resonance
/// chain. |H_n| is the resonator magnitude normalized to 1 at its peak; only
/// the drive fundamental couples (the high Q filters harmonics). The drive
/// frequency must lie in (0, 3 f0].
double steady_state_optical_angle(const ResonatorParams& resonator, const DriveSignal& signal,
                                  const SaturationModel& sat);

/// Convenience chain for one spec axis: resonator (f0, Q) and saturation
/// (gain, sat_angle) both come from the mode.
double steady_state_optical_angle(const AxisMode& mode, const DriveSignal& signal);

struct VoltagePoint {
    double vpp;
    double optical_angle_deg;
};

/// Voltage response at resonance: steady_state_optical_angle for each listed
/// peak-to-peak voltage with a 50% duty square drive at f0. Voltages must be
/// non-negative and ascending.
std::vector<VoltagePoint> voltage_response_curve(const AxisMode& mode,
                                                 const std::vector<double>& vpp_list);

std::string to_csv(const std::vector<VoltagePoint>& curve);
std::vector<VoltagePoint> voltage_curve_from_csv(const std::string& text,
                                                 const std::string& origin);

}  // namespace memscan
