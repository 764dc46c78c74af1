#include "memscan/optics.hpp"

#include <cmath>
#include <stdexcept>

namespace memscan {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kDeg2Rad = kPi / 180.0;
}  // namespace

void validate(const ProjectionSetup& s) {
    if (!(s.screen_distance_m > 0.0) || !(s.aperture_horizontal_m > 0.0) ||
        !(s.aperture_vertical_m > 0.0) || !(s.wavelength_m > 0.0) ||
        !(s.aperture_shape_factor > 0.0)) {
        throw std::runtime_error("projection setup fields must all be positive");
    }
}

double optical_from_mechanical(double theta_mech_half_amp_deg) {
    if (theta_mech_half_amp_deg < 0.0) {
        throw std::invalid_argument("mechanical angle must be non-negative");
    }
    return 4.0 * theta_mech_half_amp_deg;
}

double mechanical_from_optical(double theta_opt_full_deg) {
    if (theta_opt_full_deg < 0.0) {
        throw std::invalid_argument("optical angle must be non-negative");
    }
    return theta_opt_full_deg / 4.0;
}

double screen_width(double theta_opt_full_deg, double distance_m) {
    if (!(theta_opt_full_deg >= 0.0 && theta_opt_full_deg < 180.0)) {
        throw std::invalid_argument("optical angle out of range [0, 180) deg");
    }
    if (!(distance_m > 0.0)) {
        throw std::invalid_argument("distance must be positive");
    }
    return 2.0 * distance_m * std::tan(0.5 * theta_opt_full_deg * kDeg2Rad);
}

double angle_from_width(double width_m, double distance_m) {
    if (width_m < 0.0) {
        throw std::invalid_argument("width must be non-negative");
    }
    if (!(distance_m > 0.0)) {
        throw std::invalid_argument("distance must be positive");
    }
    return 2.0 * std::atan(width_m / (2.0 * distance_m)) / kDeg2Rad;
}

double bandwidth_efficiency_product(double theta_opt_deg, double aperture_mm, double f_khz) {
    if (theta_opt_deg < 0.0 || aperture_mm < 0.0 || f_khz < 0.0) {
        throw std::invalid_argument("product factors must be non-negative");
    }
    return theta_opt_deg * aperture_mm * f_khz;
}

long resolvable_spots(double theta_opt_deg, const ProjectionSetup& setup, Axis axis) {
    validate(setup);
    if (theta_opt_deg < 0.0) {
        throw std::invalid_argument("optical angle must be non-negative");
    }
    const double aperture =
        axis == Axis::Horizontal ? setup.aperture_horizontal_m : setup.aperture_vertical_m;
    const double spots = theta_opt_deg * kDeg2Rad * aperture /
                         (setup.aperture_shape_factor * setup.wavelength_m);
    return static_cast<long>(std::floor(spots));
}

}  // namespace memscan
