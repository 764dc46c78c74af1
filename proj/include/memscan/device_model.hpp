#pragma once

#include <optional>
#include <string>
#include <utility>

namespace memscan {

enum class Axis { Vertical, Horizontal };

const char* axis_name(Axis axis);

/// Planform and flexure dimensions of the scanner, all in meters.
/// Defaults describe the reference device this toolkit ships with.
struct DeviceGeometry {
    double mirror_semi_axis_a_m = 0.7e-3;  // along the rotation axis of the fast mode
    double mirror_semi_axis_b_m = 0.5e-3;
    double device_thickness_m = 130e-6;
    double rim_thickness_m = 175e-6;
    double over_etch_m = 14e-6;
    double outer_frame_w_m = 4e-3;
    double outer_frame_h_m = 7.5e-3;
    double outer_torsion_beam_width_m = 130e-6;
    double mid_flexure_len_m = 220e-6;
    double mid_flexure_width_m = 520e-6;
    double inner_flexure_len_m = 480e-6;
    double inner_flexure_width_m = 270e-6;
    double die_w_m = 10e-3;
    double die_h_m = 10e-3;
};

struct MaterialProps {
    double density_kg_m3 = 2329.0;       // single-crystal silicon
    double shear_modulus_pa = 5.0e10;    // configurable; orientation dependent
    double fracture_strength_low_pa = 1e9;
    double fracture_strength_high_pa = 2e9;
};

/// One scan axis as a lumped torsional resonator. Inertia and stiffness are
/// optional; when both are present they must be consistent with f0.
struct AxisMode {
    Axis axis = Axis::Vertical;
    double f0_hz = 0.0;
    double q_factor = 0.0;          // operating (optical-setup) quality factor
    double q_mounted = 0.0;         // quality factor measured on the mounted fixture
    double fea_target_hz = 0.0;     // modal-analysis frequency this axis is compared against
    double resonant_gain_deg_per_v = 0.0;  // optical deg per volt of drive fundamental, at resonance
    double sat_angle_deg = 0.0;            // saturation asymptote, optical deg (full scan)
    std::optional<double> inertia_kg_m2;
    std::optional<double> stiffness_nm_per_rad;
};

struct DeviceSpec {
    DeviceGeometry geometry;
    MaterialProps material;
    AxisMode vertical;
    AxisMode horizontal;

    std::pair<double, double> fea_targets_hz() const {
        return {vertical.fea_target_hz, horizontal.fea_target_hz};
    }
    std::pair<double, double> mounted_qs() const {
        return {vertical.q_mounted, horizontal.q_mounted};
    }
    const AxisMode& mode(Axis axis) const {
        return axis == Axis::Vertical ? vertical : horizontal;
    }
    AxisMode& mode(Axis axis) { return axis == Axis::Vertical ? vertical : horizontal; }
};

/// Peak-to-peak drive voltage at which the reference device's scan angle is
/// considered stabilized; anchors the default saturation calibration.
inline constexpr double kStabilizationVpp = 12.0;

/// tanh argument reached at the stabilization drive. With the anchor angle
/// theta(12 Vpp) = theta_target this fixes (gain, sat_angle):
///   sat_angle = theta_target / tanh(2), gain = 2 * sat_angle / V_fund(12 Vpp),
/// and puts the marginal gain at 12 Vpp at sech^2(2) ~ 7% of the initial slope.
inline constexpr double kSatArgAtStabilization = 2.0;

/// Solves the default saturation calibration for an axis whose full optical
/// scan angle equals `theta_at_stabilization_deg` at the 12 Vpp square drive.
/// Returns (resonant_gain_deg_per_v, sat_angle_deg).
std::pair<double, double> default_saturation_calibration(double theta_at_stabilization_deg);

/// The built-in reference device: every field populated with the toolkit's
/// default parameter set.
DeviceSpec default_device_spec();

/// Validates every invariant; throws std::runtime_error naming the offending
/// field on the first violation.
void validate(const DeviceGeometry& g);
void validate(const MaterialProps& m);
void validate(const AxisMode& a);
void validate(const DeviceSpec& s);

// --- Spec files --------------------------------------------------------------
// Plain-text, line-oriented `key = value` grouped under [geometry], [material],
// [vertical] and [horizontal] section headers. '#' starts a comment. Keys carry
// explicit unit suffixes (_um, _mm, _hz, _pa, _deg, ...); unknown keys are
// rejected. The canonical emitter writes sections and keys in a fixed order
// with 9 significant digits; a canonically emitted file reloads bit-exactly.

/// Loads and validates a device spec file; unset keys take defaults.
DeviceSpec load_device_spec(const std::string& path);

/// Parses spec-file text (same grammar as load_device_spec). `origin` labels
/// error messages.
DeviceSpec parse_device_spec(const std::string& text, const std::string& origin);

/// Canonical text encoding of a spec.
std::string emit_device_spec(const DeviceSpec& spec);

void save_device_spec(const DeviceSpec& spec, const std::string& path);

// --- Lumped-parameter mechanics ----------------------------------------------

enum class PlateAxis {
    Major,  // rotation about the mirror's a semi-axis; transverse semi-axis is b
    Minor,  // rotation about the b semi-axis; transverse semi-axis is a
};

/// Moment of inertia of the elliptical mirror plate about an in-plane axis
/// through its center: J = m (c^2/4 + t^2/12) with m = rho pi a b t and c the
/// semi-axis transverse to the rotation axis. The backside reinforcement rim
/// is not included (its footprint is not a modeled dimension), so this
/// underestimates the true inertia.
double elliptical_plate_inertia(const DeviceGeometry& g, PlateAxis about, double density_kg_m3);

/// Torsional stiffness of n_parallel identical rectangular-section beams:
/// k = n G K / L with the closed-form torsion constant
/// K = a b^3 (16/3 - 3.36 (b/a)(1 - b^4/(12 a^4))), a >= b the half-lengths
/// of the cross-section sides. Approaches the wide-strip limit G w t^3 / (3L)
/// as width/thickness grows.
double torsion_beam_stiffness(double beam_width_m, double beam_thickness_m,
                              double beam_length_m, double shear_modulus_pa,
                              int n_parallel);

/// f = (1/2pi) sqrt(k/J)
double natural_frequency(double stiffness_nm_per_rad, double inertia_kg_m2);

/// k = J (2 pi f0)^2; exact inverse of natural_frequency.
double required_stiffness(double inertia_kg_m2, double f0_hz);

/// Geometry-derived lumped estimate for the fast axis: mirror inertia about
/// its a semi-axis on the two inner flexures in parallel. `reduce_over_etch`
/// subtracts the observed over-etch from the flexure thickness (off by
/// default; the nominal thickness matches what the modal analysis assumed).
struct FastAxisEstimate {
    double inertia_kg_m2;
    double stiffness_nm_per_rad;
    double natural_frequency_hz;
};
FastAxisEstimate fast_axis_lumped_estimate(const DeviceSpec& spec, bool reduce_over_etch = false);

}  // namespace memscan
