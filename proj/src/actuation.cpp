#include "memscan/actuation.hpp"

#include "memscan/io.hpp"

#include <cmath>
#include <stdexcept>

namespace memscan {

namespace {

constexpr double kPi = 3.14159265358979323846;

double wrap_phase_deg(double phase) {
    double p = std::fmod(phase, 360.0);
    if (p > 180.0) p -= 360.0;
    if (p <= -180.0) p += 360.0;
    return p;
}

}  // namespace

void validate(const DriveSignal& s) {
    if (s.vpp < 0.0) throw std::runtime_error("drive vpp must be non-negative");
    if (!(s.frequency_hz > 0.0)) throw std::runtime_error("drive frequency must be positive");
    if (!(s.duty > 0.0 && s.duty < 1.0)) throw std::runtime_error("drive duty must lie in (0, 1)");
}

void validate(const SaturationModel& m) {
    if (!(m.sat_angle_deg > 0.0)) throw std::runtime_error("sat_angle must be positive");
    if (!(m.small_signal_gain_deg_per_v > 0.0)) {
        throw std::runtime_error("small_signal_gain must be positive");
    }
}

double fundamental_amplitude(const DriveSignal& s) {
    validate(s);
    if (s.shape == WaveShape::Sine) {
        return s.vpp / 2.0;
    }
    return (2.0 * s.vpp / kPi) * std::sin(kPi * s.duty);
}

std::pair<DriveSignal, DriveSignal> differential_pair(const DriveSignal& s) {
    validate(s);
    if (!s.differential) {
        throw std::runtime_error("differential flag not set on drive signal");
    }
    DriveSignal inverted = s;
    inverted.phase_deg = wrap_phase_deg(s.phase_deg + 180.0);
    return {s, inverted};
}

double steady_state_optical_angle(const ResonatorParams& resonator, const DriveSignal& signal,
                                  const SaturationModel& sat) {
    validate(resonator);
    validate(signal);
    validate(sat);
    if (!(signal.frequency_hz <= 3.0 * resonator.f0_hz)) {
        throw std::invalid_argument("drive frequency outside the sweep-valid range (0, 3 f0]");
    }
    const double v_fund = fundamental_amplitude(signal);
    if (v_fund == 0.0) return 0.0;
    const double peak_f = peak_response_frequency(resonator);
    const double h_norm = amplitude_response(resonator, signal.frequency_hz).amplitude_rad /
                          amplitude_response(resonator, peak_f).amplitude_rad;
    const double linear_deg = sat.small_signal_gain_deg_per_v * v_fund * h_norm;
    return sat.sat_angle_deg * std::tanh(linear_deg / sat.sat_angle_deg);
}

double steady_state_optical_angle(const AxisMode& mode, const DriveSignal& signal) {
    const ResonatorParams resonator{mode.f0_hz, mode.q_factor, 1.0};
    if (mode.resonant_gain_deg_per_v == 0.0) {
        validate(resonator);
        validate(signal);
        return 0.0;
    }
    const SaturationModel sat{mode.sat_angle_deg, mode.resonant_gain_deg_per_v};
    return steady_state_optical_angle(resonator, signal, sat);
}

std::vector<VoltagePoint> voltage_response_curve(const AxisMode& mode,
                                                 const std::vector<double>& vpp_list) {
    double prev = -1.0;
    for (double v : vpp_list) {
        if (v < 0.0) throw std::invalid_argument("vpp values must be non-negative");
        if (v <= prev) throw std::invalid_argument("vpp values must be ascending");
        prev = v;
    }
    std::vector<VoltagePoint> curve;
    curve.reserve(vpp_list.size());
    for (double v : vpp_list) {
        DriveSignal drive{WaveShape::Square, v, mode.f0_hz, 0.5, 0.0, false};
        curve.push_back({v, steady_state_optical_angle(mode, drive)});
    }
    return curve;
}

std::string to_csv(const std::vector<VoltagePoint>& curve) {
    std::string out = "vpp_v,optical_angle_deg\n";
    for (const VoltagePoint& p : curve) {
        out += csv_line({p.vpp, p.optical_angle_deg}, 9);
    }
    return out;
}

std::vector<VoltagePoint> voltage_curve_from_csv(const std::string& text,
                                                 const std::string& origin) {
    const CsvTable table = parse_csv(text, origin);
    if (table.header != std::vector<std::string>{"vpp_v", "optical_angle_deg"}) {
        throw std::runtime_error(origin + ": unexpected voltage-response CSV header");
    }
    std::vector<VoltagePoint> out;
    out.reserve(table.rows.size());
    for (const auto& row : table.rows) {
        out.push_back({row[0], row[1]});
    }
    return out;
}

}  // namespace memscan
