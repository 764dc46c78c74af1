#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace memscan {

/// Two-sinusoid scan configuration. Angles are full optical scan spans; the
/// generated path has half-span amplitude on each axis. Default phases
/// (90, 0) give a fixed, reproducible pattern orientation.
struct TrajectoryConfig {
    double f_h_hz = 0.0;
    double f_v_hz = 0.0;
    double theta_h_deg = 0.0;
    double theta_v_deg = 0.0;
    double phase_h_deg = 90.0;
    double phase_v_deg = 0.0;
    double sample_rate_hz = 0.0;  // must be >= 10 max(f_h, f_v)
    double duration_s = 0.0;
};

struct TrajectoryPoint {
    double x_deg;
    double y_deg;
};

/// Time-sampled 2D angular path. Extents are the half-spans the generating
/// config promised; every point satisfies |x| <= extent_x, |y| <= extent_y.
struct Trajectory {
    double dt_s = 0.0;
    double extent_x_deg = 0.0;
    double extent_y_deg = 0.0;
    std::vector<TrajectoryPoint> points;
};

struct CoverageReport {
    int grid_cols = 0;
    int grid_rows = 0;
    double fill_fraction = 0.0;
    std::optional<double> repeat_period_s;
    std::optional<double> repetition_rate_hz;
};

class DegenerateExtentError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

void validate(const TrajectoryConfig& c);

/// Smallest T <= 10 s with f_h T and f_v T both integral within the relative
/// tolerance, found by scanning continued-fraction convergents of f_h/f_v;
/// nullopt when no such period exists within the cap.
std::optional<double> repeat_period(double f_h_hz, double f_v_hz, double rel_tolerance);

/// x(t) = (theta_h/2) sin(2 pi f_h t + phi_h), y likewise;
/// floor(duration * sample_rate) + 1 points.
Trajectory generate(const TrajectoryConfig& config);

/// Marks every grid cell entered by the polyline connecting consecutive
/// samples over the rectangle [-extent_x, extent_x] x [-extent_y, extent_y];
/// fill_fraction = marked / (cols * rows). A zero extent collapses that axis
/// onto the center cell; throws DegenerateExtentError when both extents are
/// zero and the grid is larger than 1x1.
CoverageReport coverage(const Trajectory& trajectory, int grid_cols, int grid_rows);

/// Dwell-weighted accumulation raster normalized to 0-255, row-major with
/// row 0 at +y. Deterministic for identical inputs.
std::vector<std::uint8_t> render_pattern(const Trajectory& trajectory, int width_px,
                                         int height_px);

/// Binary PGM (P5) encoding of a raster.
std::string to_pgm(const std::vector<std::uint8_t>& pixels, int width_px, int height_px);

std::string to_csv(const Trajectory& trajectory);

}  // namespace memscan
