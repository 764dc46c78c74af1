#include "memscan/calibrate.hpp"

#include "memscan/actuation.hpp"
#include "memscan/io.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace memscan {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr int kMaxIterations = 200;
constexpr double kInitialDamping = 1e-3;
constexpr double kDampingFactor = 10.0;
constexpr double kStepTolerance = 1e-10;
constexpr double kResidualTolerance = 1e-12;

/// Residuals (model - data) and Jacobian rows for up to 3 parameters.
struct LmProblem {
    int n_params;
    std::function<bool(const double*)> params_valid;
    std::function<void(const double*, std::vector<double>&, std::vector<double>&)> evaluate;
    // evaluate fills residuals (size n_data) and jacobian (row-major n_data x n_params)
};

struct LmOutcome {
    std::vector<double> params;
    double sse = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<double> accepted_sse;
};

bool solve_dense(std::vector<double>& a, std::vector<double>& b, int n) {
    // Gaussian elimination with partial pivoting on the n x n system a x = b.
    for (int col = 0; col < n; ++col) {
        int pivot = col;
        for (int row = col + 1; row < n; ++row) {
            if (std::fabs(a[row * n + col]) > std::fabs(a[pivot * n + col])) pivot = row;
        }
        if (a[pivot * n + col] == 0.0) return false;
        if (pivot != col) {
            for (int k = 0; k < n; ++k) std::swap(a[col * n + k], a[pivot * n + k]);
            std::swap(b[col], b[pivot]);
        }
        for (int row = col + 1; row < n; ++row) {
            const double factor = a[row * n + col] / a[col * n + col];
            for (int k = col; k < n; ++k) a[row * n + k] -= factor * a[col * n + k];
            b[row] -= factor * b[col];
        }
    }
    for (int row = n; row-- > 0;) {
        double sum = b[row];
        for (int k = row + 1; k < n; ++k) sum -= a[row * n + k] * b[k];
        b[row] = sum / a[row * n + row];
    }
    return true;
}

double sum_squares(const std::vector<double>& r) {
    double s = 0.0;
    for (double v : r) s += v * v;
    return s;
}

LmOutcome levenberg_marquardt(const LmProblem& problem, std::vector<double> params) {
    const int n = problem.n_params;
    std::vector<double> residuals, jacobian;
    problem.evaluate(params.data(), residuals, jacobian);
    const std::size_t n_data = residuals.size();

    LmOutcome out;
    out.params = params;
    out.sse = sum_squares(residuals);
    out.accepted_sse.push_back(out.sse);

    double damping = kInitialDamping;
    for (int iter = 1; iter <= kMaxIterations; ++iter) {
        out.iterations = iter;

        // Normal equations with Marquardt scaling: (JtJ + damping diag(JtJ)) d = -Jt r
        std::vector<double> jtj(static_cast<std::size_t>(n) * n, 0.0);
        std::vector<double> jtr(n, 0.0);
        for (std::size_t i = 0; i < n_data; ++i) {
            for (int a = 0; a < n; ++a) {
                const double ja = jacobian[i * n + a];
                jtr[a] += ja * residuals[i];
                for (int b = a; b < n; ++b) {
                    jtj[a * n + b] += ja * jacobian[i * n + b];
                }
            }
        }
        for (int a = 0; a < n; ++a) {
            for (int b = 0; b < a; ++b) jtj[a * n + b] = jtj[b * n + a];
        }

        std::vector<double> lhs = jtj;
        for (int a = 0; a < n; ++a) {
            const double diag = jtj[a * n + a];
            lhs[a * n + a] += damping * (diag > 0.0 ? diag : 1.0);
        }
        std::vector<double> step(jtr);
        for (double& v : step) v = -v;
        if (!solve_dense(lhs, step, n)) {
            damping *= kDampingFactor;
            continue;
        }

        std::vector<double> trial(out.params);
        for (int a = 0; a < n; ++a) trial[a] += step[a];
        if (!problem.params_valid(trial.data())) {
            damping *= kDampingFactor;
            continue;
        }

        std::vector<double> trial_residuals, trial_jacobian;
        problem.evaluate(trial.data(), trial_residuals, trial_jacobian);
        const double trial_sse = sum_squares(trial_residuals);
        if (trial_sse < out.sse) {
            const double sse_drop = (out.sse - trial_sse) / std::max(out.sse, 1e-300);
            double rel_step = 0.0;
            for (int a = 0; a < n; ++a) {
                rel_step = std::max(rel_step,
                                    std::fabs(step[a]) / std::max(std::fabs(out.params[a]), 1e-300));
            }
            out.params = trial;
            out.sse = trial_sse;
            out.accepted_sse.push_back(trial_sse);
            residuals = std::move(trial_residuals);
            jacobian = std::move(trial_jacobian);
            damping = std::max(damping / kDampingFactor, 1e-15);
            if (trial_sse == 0.0 || rel_step < kStepTolerance || sse_drop < kResidualTolerance) {
                out.converged = true;
                return out;
            }
        } else {
            damping *= kDampingFactor;
            if (damping > 1e15) {
                // The quadratic model cannot improve the fit any further at
                // this floating-point resolution.
                out.converged = true;
                return out;
            }
        }
    }
    return out;
}

}  // namespace

void validate(const SweepDataset& d) {
    if (d.rows.size() < 8) {
        throw std::runtime_error("sweep dataset needs at least 8 rows");
    }
    for (std::size_t i = 0; i < d.rows.size(); ++i) {
        if (d.rows[i].second < 0.0) {
            throw std::runtime_error("sweep dataset amplitudes must be non-negative");
        }
        if (i > 0 && !(d.rows[i].first > d.rows[i - 1].first)) {
            throw std::runtime_error("sweep dataset frequencies must be strictly increasing");
        }
    }
}

FitResult fit_lorentzian(const SweepDataset& data, std::optional<LorentzianParams> initial_guess) {
    validate(data);
    const auto& rows = data.rows;

    std::size_t peak_idx = 0;
    double amp_min = rows[0].second, amp_max = rows[0].second;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        amp_min = std::min(amp_min, rows[i].second);
        amp_max = std::max(amp_max, rows[i].second);
        if (rows[i].second > rows[peak_idx].second) peak_idx = i;
    }
    if (amp_max == amp_min) {
        throw DegenerateDataError("sweep dataset has constant amplitude");
    }
    if (peak_idx == 0 || peak_idx == rows.size() - 1) {
        throw std::runtime_error("sweep peak must be interior to the frequency span");
    }

    LorentzianParams guess;
    if (initial_guess) {
        guess = *initial_guess;
    } else {
        guess.f0_hz = rows[peak_idx].first;
        guess.peak_amplitude = rows[peak_idx].second;
        // Half-power width on the grid; falls back to a quarter of the span
        // when a crossing is not bracketed.
        const double level = rows[peak_idx].second / std::sqrt(2.0);
        double f_lo = rows.front().first, f_hi = rows.back().first;
        bool lo_found = false, hi_found = false;
        for (std::size_t i = peak_idx; i-- > 0;) {
            if (rows[i].second <= level) {
                const double t = (level - rows[i].second) / (rows[i + 1].second - rows[i].second);
                f_lo = rows[i].first + t * (rows[i + 1].first - rows[i].first);
                lo_found = true;
                break;
            }
        }
        for (std::size_t i = peak_idx + 1; i < rows.size(); ++i) {
            if (rows[i].second <= level) {
                const double t =
                    (level - rows[i - 1].second) / (rows[i].second - rows[i - 1].second);
                f_hi = rows[i - 1].first + t * (rows[i].first - rows[i - 1].first);
                hi_found = true;
                break;
            }
        }
        const double width = (lo_found && hi_found && f_hi > f_lo)
                                 ? f_hi - f_lo
                                 : (rows.back().first - rows.front().first) / 4.0;
        guess.q_factor = std::max(guess.f0_hz / width, 0.6);
    }

    LmProblem problem;
    problem.n_params = 3;
    problem.params_valid = [](const double* p) {
        return p[0] > 0.0 && p[1] > 0.5 && p[2] > 0.0;
    };
    problem.evaluate = [&rows](const double* p, std::vector<double>& res,
                               std::vector<double>& jac) {
        const double f0 = p[0], q = p[1], peak = p[2];
        res.resize(rows.size());
        jac.resize(rows.size() * 3);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const double r = rows[i].first / f0;
            const double one_m_r2 = 1.0 - r * r;
            const double u = one_m_r2 * one_m_r2 + (r / q) * (r / q);
            const double inv_sqrt_u = 1.0 / std::sqrt(u);
            const double model = peak / q * inv_sqrt_u;
            res[i] = model - rows[i].second;
            const double du_dr = -4.0 * r * one_m_r2 + 2.0 * r / (q * q);
            jac[i * 3 + 0] = model * (r / (2.0 * u * f0)) * du_dr;          // d/df0
            jac[i * 3 + 1] = model * (-1.0 / q + (r * r) / (q * q * q) / u);  // d/dQ
            jac[i * 3 + 2] = model / peak;                                   // d/dpeak
        }
    };

    const LmOutcome lm =
        levenberg_marquardt(problem, {guess.f0_hz, guess.q_factor, guess.peak_amplitude});

    FitResult result;
    result.params = {lm.params[0], lm.params[1], lm.params[2]};
    result.residual_rms = std::sqrt(lm.sse / static_cast<double>(rows.size()));
    result.iterations = lm.iterations;
    result.converged = lm.converged;
    result.accepted_residuals.reserve(lm.accepted_sse.size());
    for (double sse : lm.accepted_sse) {
        result.accepted_residuals.push_back(std::sqrt(sse / static_cast<double>(rows.size())));
    }
    return result;
}

SaturationFit fit_saturation(const std::vector<std::pair<double, double>>& volt_angle_rows) {
    if (volt_angle_rows.size() < 4) {
        throw std::runtime_error("saturation fit needs at least 4 points");
    }
    double max_angle = 0.0;
    double max_volt = 0.0;
    for (const auto& [v, theta] : volt_angle_rows) {
        if (v < 0.0) throw std::runtime_error("saturation fit voltages must be non-negative");
        max_angle = std::max(max_angle, theta);
        max_volt = std::max(max_volt, v);
    }
    if (!(max_volt > 0.0)) {
        throw std::runtime_error("saturation fit needs at least one point with V > 0");
    }
    if (max_angle == 0.0) {
        throw DegenerateDataError("all observed angles are zero");
    }

    // Initial slope from the steepest secant through the origin.
    double gain0 = 0.0;
    for (const auto& [v, theta] : volt_angle_rows) {
        if (v > 0.0) gain0 = std::max(gain0, theta / v);
    }
    if (gain0 == 0.0) gain0 = max_angle / max_volt;

    LmProblem problem;
    problem.n_params = 2;
    problem.params_valid = [](const double* p) { return p[0] > 0.0 && p[1] > 0.0; };
    problem.evaluate = [&volt_angle_rows](const double* p, std::vector<double>& res,
                                          std::vector<double>& jac) {
        const double gain = p[0], sat = p[1];
        res.resize(volt_angle_rows.size());
        jac.resize(volt_angle_rows.size() * 2);
        for (std::size_t i = 0; i < volt_angle_rows.size(); ++i) {
            const double v = volt_angle_rows[i].first;
            const double x = gain * v / sat;
            const double tanh_x = std::tanh(x);
            const double sech2 = 1.0 - tanh_x * tanh_x;
            res[i] = sat * tanh_x - volt_angle_rows[i].second;
            jac[i * 2 + 0] = v * sech2;               // d/dgain
            jac[i * 2 + 1] = tanh_x - x * sech2;      // d/dsat
        }
    };

    const LmOutcome lm = levenberg_marquardt(problem, {gain0, 1.5 * max_angle});

    SaturationFit fit;
    fit.small_signal_gain = lm.params[0];
    fit.sat_angle_deg = lm.params[1];
    fit.residual_rms = std::sqrt(lm.sse / static_cast<double>(volt_angle_rows.size()));
    fit.iterations = lm.iterations;
    fit.converged = lm.converged;
    fit.sat_unbounded = lm.params[1] > 100.0 * max_angle;
    return fit;
}

namespace {

void apply_axis(AxisMode& mode, const AxisDatasets& datasets,
                std::vector<CalibrationChange>& changes) {
    const std::string axis{axis_name(mode.axis)};
    try {
        if (datasets.sweep) {
            const FitResult fit = fit_lorentzian(*datasets.sweep);
            if (!fit.converged) {
                throw std::runtime_error("resonance fit did not converge after " +
                                         std::to_string(fit.iterations) + " iterations");
            }
            changes.push_back({axis, "f0_hz", mode.f0_hz, fit.params.f0_hz});
            changes.push_back({axis, "q", mode.q_factor, fit.params.q_factor});
            mode.f0_hz = fit.params.f0_hz;
            mode.q_factor = fit.params.q_factor;
        }
        if (datasets.voltage) {
            // CSV voltages are peak-to-peak; the gain is per fundamental volt.
            std::vector<std::pair<double, double>> rows;
            rows.reserve(datasets.voltage->size());
            for (const auto& [vpp, theta] : *datasets.voltage) {
                DriveSignal drive{WaveShape::Square, vpp, mode.f0_hz, 0.5, 0.0, false};
                rows.emplace_back(vpp > 0.0 ? fundamental_amplitude(drive) : 0.0, theta);
            }
            const SaturationFit fit = fit_saturation(rows);
            if (fit.sat_unbounded) {
                throw std::runtime_error(
                    "saturation fit unbounded (no saturation visible in the data)");
            }
            if (!fit.converged) {
                throw std::runtime_error("saturation fit did not converge after " +
                                         std::to_string(fit.iterations) + " iterations");
            }
            changes.push_back(
                {axis, "gain_deg_per_v", mode.resonant_gain_deg_per_v, fit.small_signal_gain});
            changes.push_back({axis, "sat_angle_deg", mode.sat_angle_deg, fit.sat_angle_deg});
            mode.resonant_gain_deg_per_v = fit.small_signal_gain;
            mode.sat_angle_deg = fit.sat_angle_deg;
        }
    } catch (const DegenerateDataError& e) {
        throw DegenerateDataError(axis + ": " + e.what());
    } catch (const std::exception& e) {
        throw std::runtime_error(axis + ": " + e.what());
    }
}

}  // namespace

CalibrationOutcome calibrate_device(const DeviceSpec& spec, const AxisDatasets& vertical,
                                    const AxisDatasets& horizontal) {
    CalibrationOutcome outcome;
    outcome.spec = spec;
    apply_axis(outcome.spec.vertical, vertical, outcome.changes);
    apply_axis(outcome.spec.horizontal, horizontal, outcome.changes);
    validate(outcome.spec);
    return outcome;
}

std::string calibration_report(const std::vector<CalibrationChange>& changes) {
    std::string out = "calibration report\n";
    if (changes.empty()) {
        out += "no fields updated\n";
        return out;
    }
    for (const CalibrationChange& c : changes) {
        out += c.axis + "." + c.field + ": " + format_sig(c.old_value, 6) + " -> " +
               format_sig(c.new_value, 6) + "\n";
    }
    return out;
}

SweepDataset sweep_dataset_from_csv(const std::string& text, const std::string& origin) {
    const CsvTable table = parse_csv(text, origin);
    const bool two_col = table.header == std::vector<std::string>{"frequency_hz", "amplitude"};
    const bool three_col =
        table.header == std::vector<std::string>{"frequency_hz", "amplitude", "phase_deg"};
    if (!two_col && !three_col) {
        throw std::runtime_error(origin + ": unexpected sweep CSV header");
    }
    SweepDataset out;
    out.label = origin;
    out.rows.reserve(table.rows.size());
    for (const auto& row : table.rows) {
        out.rows.emplace_back(row[0], row[1]);
    }
    validate(out);
    return out;
}

}  // namespace memscan
