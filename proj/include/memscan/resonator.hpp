#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace memscan {

/// Damped driven torsional resonator in normalized-torque form:
///   theta'' + (w0/Q) theta' + w0^2 theta = w0^2 * static_gain * tau(t)
/// Static gain is radians per unit of normalized torque; physical coupling
/// (volts to torque) lives in the actuation module.
struct ResonatorParams {
    double f0_hz = 0.0;
    double q_factor = 0.0;
    double static_gain = 1.0;
};

struct AmplitudePhase {
    double amplitude_rad = 0.0;
    double phase_deg = 0.0;  // in [-180, 0]
};

struct ResponseSample {
    double frequency_hz;
    double amplitude_rad;
    double phase_deg;
};

struct FrequencyResponse {
    std::vector<ResponseSample> samples;  // frequencies strictly increasing
};

struct TimeSample {
    double angle_rad;
    double omega_rad_s;
};

struct TimeTrace {
    double dt_s = 0.0;
    std::vector<TimeSample> samples;
};

enum class SweepSpacing { Linear, Log };

struct PeakExtraction {
    double f0_hz;
    double q_factor;
};

/// Raised by q_from_bandwidth when a half-power crossing lies outside the
/// sampled span; the harness treats this as a warning, not a failure.
class CrossingNotBracketedError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Raised when more than one local maximum exceeds 1/sqrt(2) of the global peak.
class MultiPeakError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class InsufficientPeaksError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class NonDecayingError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

void validate(const ResonatorParams& p);

/// Steady-state magnitude and phase at drive frequency f:
///   |H| = g / sqrt((1 - r^2)^2 + (r/Q)^2),  phase = -atan2(r/Q, 1 - r^2),
/// with r = f/f0. phase(0) = 0, phase(f0) = -90 deg, phase(inf) -> -180 deg.
AmplitudePhase amplitude_response(const ResonatorParams& p, double frequency_hz);

/// Frequency of the magnitude maximum, f0 sqrt(1 - 1/(2 Q^2)); requires
/// Q > 1/sqrt(2) (below that the response has no interior peak).
double peak_response_frequency(const ResonatorParams& p);

/// Samples amplitude_response on a linear or logarithmic grid including both
/// endpoints.
FrequencyResponse sweep(const ResonatorParams& p, double f_start_hz, double f_end_hz,
                        int n_points, SweepSpacing spacing = SweepSpacing::Linear);

/// Half-power bandwidth extraction: interpolated peak frequency divided by the
/// width between the -3 dB (peak/sqrt(2)) crossings, each located by linear
/// interpolation between samples.
PeakExtraction q_from_bandwidth(const FrequencyResponse& response);

struct SimOptions {
    double initial_angle_rad = 0.0;
    double initial_velocity_rad_s = 0.0;
    bool undamped = false;  // drops the (w0/Q) theta' term entirely
};

/// Classical fixed-step RK4 integration of the resonator ODE under the
/// normalized torque function tau(t). Enforces dt <= 1/(50 f0) (throws
/// std::invalid_argument beyond it); 1/(200 f0) is the recommended step.
/// The trace has floor(duration/dt)+1 samples and is bit-deterministic.
TimeTrace simulate_time_domain(const ResonatorParams& p,
                               const std::function<double(double)>& torque, double duration_s,
                               double dt_s, const SimOptions& options = {});

/// Log-decrement estimate over successive positive peaks of a free decay:
/// Q_k = pi / ln(theta_k / theta_k+1), averaged. Needs at least 10 decaying
/// positive peaks; throws NonDecayingError when the envelope does not decay.
double ringdown_q(const TimeTrace& trace, double f0_hint_hz);

// CSV encodings (headers fixed by the external interface).
std::string to_csv(const FrequencyResponse& response);
FrequencyResponse frequency_response_from_csv(const std::string& text, const std::string& origin);
std::string to_csv(const TimeTrace& trace);

}  // namespace memscan
