#pragma once

#include "memscan/device_model.hpp"

namespace memscan {

/// Projection geometry of the optical bench. Per-axis apertures are the
/// mirror dimensions effective along each scan direction.
struct ProjectionSetup {
    double screen_distance_m = 0.60;
    double aperture_horizontal_m = 1.0e-3;
    double aperture_vertical_m = 1.4e-3;
    double wavelength_m = 635e-9;
    double aperture_shape_factor = 1.0;
};

void validate(const ProjectionSetup& s);

/// Convention: the optical scan angle is the FULL (peak-to-peak) angle of the
/// reflected beam. Reflection doubles the mechanical tilt and the full span
/// covers both extremes, so theta_opt = 4 * mechanical half-amplitude.
double optical_from_mechanical(double theta_mech_half_amp_deg);
double mechanical_from_optical(double theta_opt_full_deg);

/// Projected line width on a screen: W = 2 L tan(theta_opt / 2).
/// Valid for 0 <= theta_opt < 180 deg.
double screen_width(double theta_opt_full_deg, double distance_m);

/// Exact inverse of screen_width.
double angle_from_width(double width_m, double distance_m);

/// theta_opt [deg] * aperture [mm] * frequency [kHz]; the scanner figure of
/// merit combining angle, aperture and speed.
double bandwidth_efficiency_product(double theta_opt_deg, double aperture_mm, double f_khz);

/// Diffraction-limited count of resolvable beam positions per line:
/// floor(theta_opt [rad] * D / (a * lambda)) with the per-axis aperture D.
long resolvable_spots(double theta_opt_deg, const ProjectionSetup& setup, Axis axis);

}  // namespace memscan
