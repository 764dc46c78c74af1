#include "memscan/trajectory.hpp"

#include "memscan/io.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace memscan {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kDeg2Rad = kPi / 180.0;
constexpr double kMaxRepeatPeriodS = 10.0;

int clamp_cell(double u, int n) {
    const int i = static_cast<int>(std::floor(u));
    return std::clamp(i, 0, n - 1);
}

/// Maps a coordinate in [-extent, extent] to grid units [0, n]; a zero extent
/// collapses onto the center.
double to_grid(double x, double extent, int n) {
    if (extent == 0.0) return 0.5 * n;
    return (x + extent) / (2.0 * extent) * n;
}

}  // namespace

void validate(const TrajectoryConfig& c) {
    if (!(c.f_h_hz > 0.0) || !(c.f_v_hz > 0.0)) {
        throw std::runtime_error("trajectory frequencies must be positive");
    }
    if (c.theta_h_deg < 0.0 || c.theta_v_deg < 0.0) {
        throw std::runtime_error("trajectory scan angles must be non-negative");
    }
    if (!(c.sample_rate_hz >= 10.0 * std::max(c.f_h_hz, c.f_v_hz))) {
        throw std::runtime_error("sample_rate must be at least 10x the faster axis frequency");
    }
    if (!(c.duration_s > 0.0)) {
        throw std::runtime_error("trajectory duration must be positive");
    }
}

std::optional<double> repeat_period(double f_h_hz, double f_v_hz, double rel_tolerance) {
    if (!(f_h_hz > 0.0) || !(f_v_hz > 0.0)) {
        throw std::invalid_argument("frequencies must be positive");
    }
    // Continued-fraction convergents p/q of the frequency ratio; candidate
    // periods are T = q / f_v, at which f_v T is integral by construction and
    // f_h T differs from p by the approximation error.
    const double ratio = f_h_hz / f_v_hz;
    double x = ratio;
    double p1 = 1.0, p2 = 0.0;  // numerator at steps n-1, n-2
    double q1 = 0.0, q2 = 1.0;  // denominator at steps n-1, n-2
    for (int iter = 0; iter < 64; ++iter) {
        const double a = std::floor(x);
        const double p = a * p1 + p2;
        const double q = a * q1 + q2;
        p2 = p1;
        q2 = q1;
        p1 = p;
        q1 = q;

        const double period = q / f_v_hz;
        if (period > kMaxRepeatPeriodS) return std::nullopt;
        if (q >= 1.0 && p >= 1.0) {
            const double cycles_h = f_h_hz * period;
            const double cycles_v = f_v_hz * period;
            const double err_h = std::fabs(cycles_h - std::round(cycles_h)) / cycles_h;
            const double err_v = std::fabs(cycles_v - std::round(cycles_v)) / cycles_v;
            if (err_h <= rel_tolerance && err_v <= rel_tolerance) {
                return period;
            }
        }
        const double frac = x - a;
        if (frac <= 0.0 || !std::isfinite(frac)) break;
        x = 1.0 / frac;
        if (!std::isfinite(x)) break;
    }
    return std::nullopt;
}

Trajectory generate(const TrajectoryConfig& config) {
    validate(config);
    const auto n_steps =
        static_cast<std::size_t>(std::floor(config.duration_s * config.sample_rate_hz + 1e-9));
    Trajectory out;
    out.dt_s = 1.0 / config.sample_rate_hz;
    out.extent_x_deg = config.theta_h_deg / 2.0;
    out.extent_y_deg = config.theta_v_deg / 2.0;
    out.points.reserve(n_steps + 1);
    const double wh = 2.0 * kPi * config.f_h_hz;
    const double wv = 2.0 * kPi * config.f_v_hz;
    const double ph = config.phase_h_deg * kDeg2Rad;
    const double pv = config.phase_v_deg * kDeg2Rad;
    for (std::size_t i = 0; i <= n_steps; ++i) {
        const double t = static_cast<double>(i) / config.sample_rate_hz;
        out.points.push_back({out.extent_x_deg * std::sin(wh * t + ph),
                              out.extent_y_deg * std::sin(wv * t + pv)});
    }
    return out;
}

CoverageReport coverage(const Trajectory& trajectory, int grid_cols, int grid_rows) {
    if (grid_cols < 1 || grid_rows < 1) {
        throw std::invalid_argument("grid dimensions must be at least 1x1");
    }
    if (trajectory.points.empty()) {
        throw std::invalid_argument("trajectory is empty");
    }
    const double ex = trajectory.extent_x_deg;
    const double ey = trajectory.extent_y_deg;
    if (ex == 0.0 && ey == 0.0 && grid_cols * grid_rows > 1) {
        throw DegenerateExtentError("both angle extents are zero; coverage grid is undefined");
    }

    std::vector<char> marked(static_cast<std::size_t>(grid_cols) * grid_rows, 0);
    auto mark = [&](int cx, int cy) {
        marked[static_cast<std::size_t>(cy) * grid_cols + cx] = 1;
    };

    // Grid traversal of each segment in normalized cell coordinates,
    // stepping across whichever cell boundary comes first.
    const auto& pts = trajectory.points;
    int cx = clamp_cell(to_grid(pts[0].x_deg, ex, grid_cols), grid_cols);
    int cy = clamp_cell(to_grid(pts[0].y_deg, ey, grid_rows), grid_rows);
    mark(cx, cy);
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const double x0 = to_grid(pts[i].x_deg, ex, grid_cols);
        const double y0 = to_grid(pts[i].y_deg, ey, grid_rows);
        const double x1 = to_grid(pts[i + 1].x_deg, ex, grid_cols);
        const double y1 = to_grid(pts[i + 1].y_deg, ey, grid_rows);
        cx = clamp_cell(x0, grid_cols);
        cy = clamp_cell(y0, grid_rows);
        const int tx = clamp_cell(x1, grid_cols);
        const int ty = clamp_cell(y1, grid_rows);
        mark(cx, cy);
        const double dx = x1 - x0;
        const double dy = y1 - y0;
        const int step_x = dx > 0.0 ? 1 : -1;
        const int step_y = dy > 0.0 ? 1 : -1;
        const double inf = std::numeric_limits<double>::infinity();
        double t_max_x = inf, t_delta_x = inf;
        if (dx != 0.0) {
            const double boundary = static_cast<double>(cx + (step_x > 0 ? 1 : 0));
            t_max_x = (boundary - x0) / dx;
            t_delta_x = std::fabs(1.0 / dx);
        }
        double t_max_y = inf, t_delta_y = inf;
        if (dy != 0.0) {
            const double boundary = static_cast<double>(cy + (step_y > 0 ? 1 : 0));
            t_max_y = (boundary - y0) / dy;
            t_delta_y = std::fabs(1.0 / dy);
        }
        while (cx != tx || cy != ty) {
            if (t_max_x < t_max_y) {
                if (t_max_x > 1.0) break;
                cx = std::clamp(cx + step_x, 0, grid_cols - 1);
                t_max_x += t_delta_x;
            } else {
                if (t_max_y > 1.0) break;
                cy = std::clamp(cy + step_y, 0, grid_rows - 1);
                t_max_y += t_delta_y;
            }
            mark(cx, cy);
        }
        mark(tx, ty);
    }

    const auto total = static_cast<double>(grid_cols) * grid_rows;
    const double filled = static_cast<double>(std::count(marked.begin(), marked.end(), char(1)));
    CoverageReport report;
    report.grid_cols = grid_cols;
    report.grid_rows = grid_rows;
    report.fill_fraction = filled / total;
    return report;
}

std::vector<std::uint8_t> render_pattern(const Trajectory& trajectory, int width_px,
                                         int height_px) {
    if (width_px < 8 || height_px < 8) {
        throw std::invalid_argument("raster must be at least 8x8");
    }
    if (trajectory.points.empty()) {
        throw std::invalid_argument("trajectory is empty");
    }
    const double ex = trajectory.extent_x_deg;
    const double ey = trajectory.extent_y_deg;
    std::vector<double> dwell(static_cast<std::size_t>(width_px) * height_px, 0.0);

    auto deposit = [&](double x, double y, double weight) {
        const int px = clamp_cell(to_grid(x, ex, width_px), width_px);
        const int py = clamp_cell(to_grid(y, ey, height_px), height_px);
        // Row 0 is the +y edge.
        dwell[static_cast<std::size_t>(height_px - 1 - py) * width_px + px] += weight;
    };

    const auto& pts = trajectory.points;
    if (pts.size() == 1) {
        deposit(pts[0].x_deg, pts[0].y_deg, 1.0);
    }
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const double px0 = to_grid(pts[i].x_deg, ex, width_px);
        const double py0 = to_grid(pts[i].y_deg, ey, height_px);
        const double px1 = to_grid(pts[i + 1].x_deg, ex, width_px);
        const double py1 = to_grid(pts[i + 1].y_deg, ey, height_px);
        const double len = std::hypot(px1 - px0, py1 - py0);
        // Substeps at most half a pixel apart keep traced lines unbroken.
        const int substeps = std::max(1, static_cast<int>(std::ceil(len / 0.5)));
        const double w = trajectory.dt_s / substeps;
        for (int j = 0; j < substeps; ++j) {
            const double u = (static_cast<double>(j) + 0.5) / substeps;
            deposit(pts[i].x_deg + u * (pts[i + 1].x_deg - pts[i].x_deg),
                    pts[i].y_deg + u * (pts[i + 1].y_deg - pts[i].y_deg), w);
        }
    }

    const double peak = *std::max_element(dwell.begin(), dwell.end());
    std::vector<std::uint8_t> pixels(dwell.size(), 0);
    if (peak > 0.0) {
        for (std::size_t i = 0; i < dwell.size(); ++i) {
            pixels[i] = static_cast<std::uint8_t>(std::lround(255.0 * dwell[i] / peak));
        }
    }
    return pixels;
}

std::string to_pgm(const std::vector<std::uint8_t>& pixels, int width_px, int height_px) {
    if (pixels.size() != static_cast<std::size_t>(width_px) * height_px) {
        throw std::invalid_argument("pixel buffer does not match raster dimensions");
    }
    std::string out = "P5\n" + std::to_string(width_px) + " " + std::to_string(height_px) + "\n255\n";
    out.append(reinterpret_cast<const char*>(pixels.data()), pixels.size());
    return out;
}

std::string to_csv(const Trajectory& trajectory) {
    std::string out = "t_s,x_deg,y_deg\n";
    for (std::size_t i = 0; i < trajectory.points.size(); ++i) {
        out += csv_line({static_cast<double>(i) * trajectory.dt_s, trajectory.points[i].x_deg,
                         trajectory.points[i].y_deg},
                        9);
    }
    return out;
}

}  // namespace memscan
