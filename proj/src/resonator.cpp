#include "memscan/resonator.hpp"

#include "memscan/io.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace memscan {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kRad2Deg = 180.0 / kPi;

/// Quadratic (three-point) refinement of a sampled extremum. Returns the
/// vertex abscissa offset in grid units, clamped to [-0.5, 0.5], and the
/// vertex value. Falls back to the center sample when the parabola degenerates.
struct ParabolicVertex {
    double offset;
    double value;
};
ParabolicVertex refine_parabolic(double y_prev, double y0, double y_next) {
    const double denom = 2.0 * (2.0 * y0 - y_prev - y_next);
    if (denom == 0.0) {
        return {0.0, y0};
    }
    double offset = (y_next - y_prev) / denom;
    offset = std::clamp(offset, -0.5, 0.5);
    const double value = y0 + 0.25 * (y_next - y_prev) * offset;
    return {offset, value};
}

}  // namespace

void validate(const ResonatorParams& p) {
    if (!(p.f0_hz > 0.0)) throw std::runtime_error("resonator f0 must be positive");
    if (!(p.q_factor > 0.5)) throw std::runtime_error("resonator q_factor must exceed 0.5");
    if (!(p.static_gain > 0.0)) throw std::runtime_error("resonator static_gain must be positive");
}

AmplitudePhase amplitude_response(const ResonatorParams& p, double frequency_hz) {
    validate(p);
    if (frequency_hz < 0.0) {
        throw std::invalid_argument("frequency must be non-negative");
    }
    const double r = frequency_hz / p.f0_hz;
    const double real = 1.0 - r * r;
    const double imag = r / p.q_factor;
    const double amplitude = p.static_gain / std::sqrt(real * real + imag * imag);
    const double phase_deg = -std::atan2(imag, real) * kRad2Deg;
    return {amplitude, phase_deg};
}

double peak_response_frequency(const ResonatorParams& p) {
    validate(p);
    const double q2 = p.q_factor * p.q_factor;
    const double arg = 1.0 - 1.0 / (2.0 * q2);
    if (arg <= 0.0) {
        throw std::runtime_error("no interior response peak for Q <= 1/sqrt(2)");
    }
    return p.f0_hz * std::sqrt(arg);
}

FrequencyResponse sweep(const ResonatorParams& p, double f_start_hz, double f_end_hz,
                        int n_points, SweepSpacing spacing) {
    validate(p);
    if (!(f_start_hz > 0.0) || !(f_start_hz < f_end_hz)) {
        throw std::invalid_argument("sweep requires 0 < f_start < f_end");
    }
    if (n_points < 2) {
        throw std::invalid_argument("sweep requires at least 2 points");
    }
    FrequencyResponse out;
    out.samples.reserve(static_cast<std::size_t>(n_points));
    const double log_start = std::log(f_start_hz);
    const double log_end = std::log(f_end_hz);
    for (int i = 0; i < n_points; ++i) {
        const double u = static_cast<double>(i) / static_cast<double>(n_points - 1);
        double f;
        if (i == 0) {
            f = f_start_hz;
        } else if (i == n_points - 1) {
            f = f_end_hz;
        } else if (spacing == SweepSpacing::Linear) {
            f = f_start_hz + (f_end_hz - f_start_hz) * u;
        } else {
            f = std::exp(log_start + (log_end - log_start) * u);
        }
        const AmplitudePhase ap = amplitude_response(p, f);
        out.samples.push_back({f, ap.amplitude_rad, ap.phase_deg});
    }
    return out;
}

PeakExtraction q_from_bandwidth(const FrequencyResponse& response) {
    const auto& s = response.samples;
    const std::size_t n = s.size();
    if (n < 3) {
        throw CrossingNotBracketedError("too few samples to bracket the half-power points");
    }
    std::size_t peak = 0;
    for (std::size_t i = 1; i < n; ++i) {
        if (s[i].amplitude_rad > s[peak].amplitude_rad) peak = i;
    }
    if (peak == 0 || peak == n - 1) {
        throw CrossingNotBracketedError("response maximum lies on the sweep boundary");
    }

    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    // A second local maximum above the half-power level means the sweep spans
    // more than one resonance.
    std::size_t maxima_above_level = 0;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const bool local_max =
            s[i].amplitude_rad > s[i - 1].amplitude_rad && s[i].amplitude_rad >= s[i + 1].amplitude_rad;
        if (local_max && s[i].amplitude_rad > inv_sqrt2 * s[peak].amplitude_rad) {
            ++maxima_above_level;
        }
    }
    if (maxima_above_level > 1) {
        throw MultiPeakError("multiple resonance peaks above the half-power level");
    }

    const ParabolicVertex vertex = refine_parabolic(
        s[peak - 1].amplitude_rad, s[peak].amplitude_rad, s[peak + 1].amplitude_rad);
    const double grid_step_left = s[peak].frequency_hz - s[peak - 1].frequency_hz;
    const double grid_step_right = s[peak + 1].frequency_hz - s[peak].frequency_hz;
    const double f_peak = s[peak].frequency_hz +
                          vertex.offset * (vertex.offset >= 0.0 ? grid_step_right : grid_step_left);
    const double level = vertex.value * inv_sqrt2;

    auto interpolate = [&](std::size_t lo, std::size_t hi) {
        const double a0 = s[lo].amplitude_rad;
        const double a1 = s[hi].amplitude_rad;
        const double f0 = s[lo].frequency_hz;
        const double f1 = s[hi].frequency_hz;
        if (a1 == a0) return 0.5 * (f0 + f1);
        return f0 + (level - a0) / (a1 - a0) * (f1 - f0);
    };

    double f_lo = 0.0;
    bool found = false;
    for (std::size_t i = peak; i-- > 0;) {
        if (s[i].amplitude_rad <= level) {
            f_lo = interpolate(i, i + 1);
            found = true;
            break;
        }
    }
    if (!found) {
        throw CrossingNotBracketedError("lower half-power crossing lies outside the sweep");
    }
    double f_hi = 0.0;
    found = false;
    for (std::size_t i = peak + 1; i < n; ++i) {
        if (s[i].amplitude_rad <= level) {
            f_hi = interpolate(i - 1, i);
            found = true;
            break;
        }
    }
    if (!found) {
        throw CrossingNotBracketedError("upper half-power crossing lies outside the sweep");
    }
    return {f_peak, f_peak / (f_hi - f_lo)};
}

TimeTrace simulate_time_domain(const ResonatorParams& p,
                               const std::function<double(double)>& torque, double duration_s,
                               double dt_s, const SimOptions& options) {
    validate(p);
    if (!(duration_s > 0.0)) {
        throw std::invalid_argument("duration must be positive");
    }
    const double dt_bound = 1.0 / (50.0 * p.f0_hz);
    if (!(dt_s > 0.0) || dt_s > dt_bound) {
        throw std::invalid_argument("dt exceeds the accuracy bound 1/(50 f0) = " +
                                    format_sig(dt_bound, 6) + " s");
    }
    const double w0 = 2.0 * kPi * p.f0_hz;
    const double w0_sq = w0 * w0;
    const double damping = options.undamped ? 0.0 : w0 / p.q_factor;

    const auto n_steps = static_cast<std::size_t>(std::floor(duration_s / dt_s + 1e-9));
    TimeTrace trace;
    trace.dt_s = dt_s;
    trace.samples.reserve(n_steps + 1);

    double theta = options.initial_angle_rad;
    double omega = options.initial_velocity_rad_s;
    trace.samples.push_back({theta, omega});

    auto accel = [&](double th, double om, double drive) {
        return w0_sq * (p.static_gain * drive - th) - damping * om;
    };

    for (std::size_t i = 0; i < n_steps; ++i) {
        const double t = static_cast<double>(i) * dt_s;
        const double tau0 = torque(t);
        const double tau_half = torque(t + 0.5 * dt_s);
        const double tau1 = torque(t + dt_s);

        const double k1_th = omega;
        const double k1_om = accel(theta, omega, tau0);
        const double k2_th = omega + 0.5 * dt_s * k1_om;
        const double k2_om = accel(theta + 0.5 * dt_s * k1_th, omega + 0.5 * dt_s * k1_om, tau_half);
        const double k3_th = omega + 0.5 * dt_s * k2_om;
        const double k3_om = accel(theta + 0.5 * dt_s * k2_th, omega + 0.5 * dt_s * k2_om, tau_half);
        const double k4_th = omega + dt_s * k3_om;
        const double k4_om = accel(theta + dt_s * k3_th, omega + dt_s * k3_om, tau1);

        theta += dt_s / 6.0 * (k1_th + 2.0 * k2_th + 2.0 * k3_th + k4_th);
        omega += dt_s / 6.0 * (k1_om + 2.0 * k2_om + 2.0 * k3_om + k4_om);
        trace.samples.push_back({theta, omega});
    }
    return trace;
}

double ringdown_q(const TimeTrace& trace, double f0_hint_hz) {
    if (!(f0_hint_hz > 0.0)) {
        throw std::invalid_argument("f0 hint must be positive");
    }
    if (trace.samples.size() < 3) {
        throw InsufficientPeaksError("trace too short for peak extraction");
    }
    // Positive local maxima, refined parabolically; the hint sets a minimum
    // separation so grid-level ripple is not counted as peaks.
    const double min_separation_s = 0.5 / f0_hint_hz;
    std::vector<std::pair<double, double>> peaks;  // (time, amplitude)
    const auto& s = trace.samples;
    for (std::size_t i = 1; i + 1 < s.size(); ++i) {
        if (s[i].angle_rad <= 0.0) continue;
        if (!(s[i].angle_rad >= s[i - 1].angle_rad && s[i].angle_rad > s[i + 1].angle_rad)) continue;
        const ParabolicVertex v =
            refine_parabolic(s[i - 1].angle_rad, s[i].angle_rad, s[i + 1].angle_rad);
        const double t = (static_cast<double>(i) + v.offset) * trace.dt_s;
        if (!peaks.empty() && t - peaks.back().first < min_separation_s) continue;
        peaks.emplace_back(t, v.value);
    }
    if (peaks.size() < 10) {
        throw InsufficientPeaksError("need at least 10 positive peaks, found " +
                                     std::to_string(peaks.size()));
    }
    if (peaks.back().second >= peaks.front().second * (1.0 - 1e-6)) {
        throw NonDecayingError("peak amplitudes do not decay");
    }
    double q_sum = 0.0;
    std::size_t count = 0;
    for (std::size_t k = 0; k + 1 < peaks.size(); ++k) {
        const double ratio = peaks[k].second / peaks[k + 1].second;
        if (!(ratio > 1.0)) continue;  // skip locally flat pairs
        q_sum += kPi / std::log(ratio);
        ++count;
    }
    if (count == 0) {
        throw NonDecayingError("no decaying peak pairs");
    }
    return q_sum / static_cast<double>(count);
}

std::string to_csv(const FrequencyResponse& response) {
    std::string out = "frequency_hz,amplitude,phase_deg\n";
    for (const ResponseSample& s : response.samples) {
        out += csv_line({s.frequency_hz, s.amplitude_rad, s.phase_deg}, 9);
    }
    return out;
}

FrequencyResponse frequency_response_from_csv(const std::string& text,
                                              const std::string& origin) {
    const CsvTable table = parse_csv(text, origin);
    if (table.header != std::vector<std::string>{"frequency_hz", "amplitude", "phase_deg"}) {
        throw std::runtime_error(origin + ": unexpected frequency-response CSV header");
    }
    FrequencyResponse out;
    out.samples.reserve(table.rows.size());
    double prev = 0.0;
    for (const auto& row : table.rows) {
        if (!out.samples.empty() && row[0] <= prev) {
            throw std::runtime_error(origin + ": frequencies must be strictly increasing");
        }
        if (row[1] < 0.0) {
            throw std::runtime_error(origin + ": amplitudes must be non-negative");
        }
        out.samples.push_back({row[0], row[1], row[2]});
        prev = row[0];
    }
    return out;
}

std::string to_csv(const TimeTrace& trace) {
    std::string out = "t_s,angle_rad,omega_rad_s\n";
    for (std::size_t i = 0; i < trace.samples.size(); ++i) {
        out += csv_line({static_cast<double>(i) * trace.dt_s, trace.samples[i].angle_rad,
                         trace.samples[i].omega_rad_s},
                        9);
    }
    return out;
}

}  // namespace memscan
