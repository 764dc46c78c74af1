#include "memscan/device_model.hpp"

#include "memscan/io.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <set>
#include <stdexcept>
#include <vector>

namespace memscan {

namespace {

constexpr double kPi = 3.14159265358979323846;

[[noreturn]] void invariant_error(const std::string& field, const std::string& what) {
    throw std::runtime_error("invariant violation: " + field + " " + what);
}

void require_positive(double v, const std::string& field) {
    if (!(v > 0.0)) {
        invariant_error(field, "must be positive (got " + format_sig(v, 9) + ")");
    }
}

}  // namespace

const char* axis_name(Axis axis) {
    return axis == Axis::Vertical ? "vertical" : "horizontal";
}

std::pair<double, double> default_saturation_calibration(double theta_at_stabilization_deg) {
    // Fundamental of the 50% duty square drive at the stabilization voltage.
    const double v_fund = 2.0 * kStabilizationVpp / kPi;
    const double sat_angle = theta_at_stabilization_deg / std::tanh(kSatArgAtStabilization);
    const double gain = kSatArgAtStabilization * sat_angle / v_fund;
    return {gain, sat_angle};
}

DeviceSpec default_device_spec() {
    DeviceSpec spec;
    spec.vertical.axis = Axis::Vertical;
    spec.vertical.f0_hz = 3600.0;
    spec.vertical.q_factor = 750.0;
    spec.vertical.q_mounted = 300.56;
    spec.vertical.fea_target_hz = 3718.0;
    std::tie(spec.vertical.resonant_gain_deg_per_v, spec.vertical.sat_angle_deg) =
        default_saturation_calibration(4.8);

    spec.horizontal.axis = Axis::Horizontal;
    spec.horizontal.f0_hz = 54175.0;
    spec.horizontal.q_factor = 1050.0;
    spec.horizontal.q_mounted = 642.76;
    spec.horizontal.fea_target_hz = 54504.0;
    std::tie(spec.horizontal.resonant_gain_deg_per_v, spec.horizontal.sat_angle_deg) =
        default_saturation_calibration(11.5);
    return spec;
}

void validate(const DeviceGeometry& g) {
    require_positive(g.mirror_semi_axis_a_m, "mirror_semi_axis_a");
    require_positive(g.mirror_semi_axis_b_m, "mirror_semi_axis_b");
    require_positive(g.device_thickness_m, "device_thickness");
    require_positive(g.rim_thickness_m, "rim_thickness");
    require_positive(g.over_etch_m, "over_etch");
    require_positive(g.outer_frame_w_m, "outer_frame_w");
    require_positive(g.outer_frame_h_m, "outer_frame_h");
    require_positive(g.outer_torsion_beam_width_m, "outer_torsion_beam_width");
    require_positive(g.mid_flexure_len_m, "mid_flexure_len");
    require_positive(g.mid_flexure_width_m, "mid_flexure_width");
    require_positive(g.inner_flexure_len_m, "inner_flexure_len");
    require_positive(g.inner_flexure_width_m, "inner_flexure_width");
    require_positive(g.die_w_m, "die_w");
    require_positive(g.die_h_m, "die_h");
    if (!(g.device_thickness_m < g.rim_thickness_m)) {
        invariant_error("device_thickness", "must be less than rim_thickness");
    }
    const double mirror_long = 2.0 * std::max(g.mirror_semi_axis_a_m, g.mirror_semi_axis_b_m);
    const double mirror_short = 2.0 * std::min(g.mirror_semi_axis_a_m, g.mirror_semi_axis_b_m);
    const double frame_long = std::max(g.outer_frame_w_m, g.outer_frame_h_m);
    const double frame_short = std::min(g.outer_frame_w_m, g.outer_frame_h_m);
    const double die_long = std::max(g.die_w_m, g.die_h_m);
    const double die_short = std::min(g.die_w_m, g.die_h_m);
    if (mirror_long > frame_long || mirror_short > frame_short) {
        invariant_error("mirror_semi_axis_a", "mirror must fit inside the outer frame");
    }
    if (frame_long > die_long || frame_short > die_short) {
        invariant_error("outer_frame_w", "outer frame must fit inside the die");
    }
}

void validate(const MaterialProps& m) {
    require_positive(m.density_kg_m3, "density");
    require_positive(m.shear_modulus_pa, "shear_modulus");
    require_positive(m.fracture_strength_low_pa, "fracture_strength_low");
    if (!(m.fracture_strength_low_pa < m.fracture_strength_high_pa)) {
        invariant_error("fracture_strength_low", "must be less than fracture_strength_high");
    }
}

void validate(const AxisMode& a) {
    const std::string prefix = std::string(axis_name(a.axis)) + ".";
    require_positive(a.f0_hz, prefix + "f0");
    if (!(a.q_factor > 0.5)) {
        invariant_error(prefix + "q", "must exceed 0.5");
    }
    if (!(a.q_mounted > 0.5)) {
        invariant_error(prefix + "q_mounted", "must exceed 0.5");
    }
    require_positive(a.fea_target_hz, prefix + "fea_target");
    if (a.resonant_gain_deg_per_v < 0.0) {
        invariant_error(prefix + "gain", "must be non-negative");
    }
    require_positive(a.sat_angle_deg, prefix + "sat_angle");
    if (a.inertia_kg_m2) require_positive(*a.inertia_kg_m2, prefix + "inertia");
    if (a.stiffness_nm_per_rad) require_positive(*a.stiffness_nm_per_rad, prefix + "stiffness");
    if (a.inertia_kg_m2 && a.stiffness_nm_per_rad) {
        const double k_required = required_stiffness(*a.inertia_kg_m2, a.f0_hz);
        const double rel = std::fabs(*a.stiffness_nm_per_rad - k_required) / k_required;
        if (rel > 1e-9) {
            invariant_error(prefix + "stiffness",
                            "inconsistent with inertia and f0 (relative error " +
                                format_sig(rel, 3) + ")");
        }
    }
}

void validate(const DeviceSpec& s) {
    validate(s.geometry);
    validate(s.material);
    validate(s.vertical);
    validate(s.horizontal);
    if (!(s.vertical.f0_hz < s.horizontal.f0_hz)) {
        invariant_error("vertical.f0", "must be below horizontal.f0");
    }
}

// --- Spec file grammar --------------------------------------------------------

namespace {

struct KeyEntry {
    const char* section;
    const char* key;
    double scale;  // SI value = parsed value * scale
    std::function<void(DeviceSpec&, double)> set;
    std::function<std::optional<double>(const DeviceSpec&)> get;  // SI units
};

std::function<void(DeviceSpec&, double)> set_geom(double DeviceGeometry::* member) {
    return [member](DeviceSpec& s, double v) { s.geometry.*member = v; };
}
std::function<std::optional<double>(const DeviceSpec&)> get_geom(double DeviceGeometry::* member) {
    return [member](const DeviceSpec& s) { return s.geometry.*member; };
}
std::function<void(DeviceSpec&, double)> set_mat(double MaterialProps::* member) {
    return [member](DeviceSpec& s, double v) { s.material.*member = v; };
}
std::function<std::optional<double>(const DeviceSpec&)> get_mat(double MaterialProps::* member) {
    return [member](const DeviceSpec& s) { return s.material.*member; };
}
std::function<void(DeviceSpec&, double)> set_axis(Axis axis, double AxisMode::* member) {
    return [axis, member](DeviceSpec& s, double v) { s.mode(axis).*member = v; };
}
std::function<std::optional<double>(const DeviceSpec&)> get_axis(Axis axis,
                                                                 double AxisMode::* member) {
    return [axis, member](const DeviceSpec& s) { return s.mode(axis).*member; };
}
std::function<void(DeviceSpec&, double)> set_axis_opt(Axis axis,
                                                      std::optional<double> AxisMode::* member) {
    return [axis, member](DeviceSpec& s, double v) { s.mode(axis).*member = v; };
}
std::function<std::optional<double>(const DeviceSpec&)> get_axis_opt(
    Axis axis, std::optional<double> AxisMode::* member) {
    return [axis, member](const DeviceSpec& s) { return s.mode(axis).*member; };
}

/// Key table in canonical emission order.
const std::vector<KeyEntry>& key_table() {
    static const std::vector<KeyEntry> table = [] {
        std::vector<KeyEntry> t;
        auto geom = [&t](const char* key, double scale, double DeviceGeometry::* m) {
            t.push_back({"geometry", key, scale, set_geom(m), get_geom(m)});
        };
        geom("mirror_semi_axis_a_um", 1e-6, &DeviceGeometry::mirror_semi_axis_a_m);
        geom("mirror_semi_axis_b_um", 1e-6, &DeviceGeometry::mirror_semi_axis_b_m);
        geom("device_thickness_um", 1e-6, &DeviceGeometry::device_thickness_m);
        geom("rim_thickness_um", 1e-6, &DeviceGeometry::rim_thickness_m);
        geom("over_etch_um", 1e-6, &DeviceGeometry::over_etch_m);
        geom("outer_frame_w_mm", 1e-3, &DeviceGeometry::outer_frame_w_m);
        geom("outer_frame_h_mm", 1e-3, &DeviceGeometry::outer_frame_h_m);
        geom("outer_torsion_beam_width_um", 1e-6, &DeviceGeometry::outer_torsion_beam_width_m);
        geom("mid_flexure_len_um", 1e-6, &DeviceGeometry::mid_flexure_len_m);
        geom("mid_flexure_width_um", 1e-6, &DeviceGeometry::mid_flexure_width_m);
        geom("inner_flexure_len_um", 1e-6, &DeviceGeometry::inner_flexure_len_m);
        geom("inner_flexure_width_um", 1e-6, &DeviceGeometry::inner_flexure_width_m);
        geom("die_w_mm", 1e-3, &DeviceGeometry::die_w_m);
        geom("die_h_mm", 1e-3, &DeviceGeometry::die_h_m);

        auto mat = [&t](const char* key, double MaterialProps::* m) {
            t.push_back({"material", key, 1.0, set_mat(m), get_mat(m)});
        };
        mat("density_kg_m3", &MaterialProps::density_kg_m3);
        mat("shear_modulus_pa", &MaterialProps::shear_modulus_pa);
        mat("fracture_strength_low_pa", &MaterialProps::fracture_strength_low_pa);
        mat("fracture_strength_high_pa", &MaterialProps::fracture_strength_high_pa);

        for (Axis axis : {Axis::Vertical, Axis::Horizontal}) {
            const char* sec = axis_name(axis);
            auto ax = [&t, axis, sec](const char* key, double AxisMode::* m) {
                t.push_back({sec, key, 1.0, set_axis(axis, m), get_axis(axis, m)});
            };
            ax("f0_hz", &AxisMode::f0_hz);
            ax("q", &AxisMode::q_factor);
            ax("q_mounted", &AxisMode::q_mounted);
            ax("fea_target_hz", &AxisMode::fea_target_hz);
            ax("gain_deg_per_v", &AxisMode::resonant_gain_deg_per_v);
            ax("sat_angle_deg", &AxisMode::sat_angle_deg);
            t.push_back({sec, "inertia_kg_m2", 1.0,
                         set_axis_opt(axis, &AxisMode::inertia_kg_m2),
                         get_axis_opt(axis, &AxisMode::inertia_kg_m2)});
            t.push_back({sec, "stiffness_nm_per_rad", 1.0,
                         set_axis_opt(axis, &AxisMode::stiffness_nm_per_rad),
                         get_axis_opt(axis, &AxisMode::stiffness_nm_per_rad)});
        }
        return t;
    }();
    return table;
}

bool ends_with(std::string_view s, std::string_view suffix) {
    return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

std::string trim_copy(std::string_view s) {
    std::size_t a = 0;
    while (a < s.size() && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    std::size_t b = s.size();
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return std::string(s.substr(a, b - a));
}

}  // namespace

DeviceSpec parse_device_spec(const std::string& text, const std::string& origin) {
    DeviceSpec spec = default_device_spec();
    std::string section;
    std::set<std::pair<std::string, std::string>> seen;
    std::size_t line_no = 0;
    std::size_t pos = 0;

    auto fail = [&](const std::string& msg) -> void {
        throw std::runtime_error(origin + ": line " + std::to_string(line_no) + ": " + msg);
    };

    while (pos <= text.size()) {
        std::size_t eol = text.find('\n', pos);
        std::string raw = text.substr(pos, eol == std::string::npos ? std::string::npos : eol - pos);
        pos = eol == std::string::npos ? text.size() + 1 : eol + 1;
        ++line_no;
        if (std::size_t hash = raw.find('#'); hash != std::string::npos) {
            raw.resize(hash);
        }
        const std::string line = trim_copy(raw);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']') fail("malformed section header: " + line);
            section = trim_copy(std::string_view(line).substr(1, line.size() - 2));
            if (section != "geometry" && section != "material" && section != "vertical" &&
                section != "horizontal") {
                fail("unknown section [" + section + "]");
            }
            continue;
        }

        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) fail("expected 'key = value': " + line);
        const std::string key = trim_copy(std::string_view(line).substr(0, eq));
        const std::string value = trim_copy(std::string_view(line).substr(eq + 1));
        if (section.empty()) fail("key '" + key + "' appears before any [section] header");
        if (key.empty()) fail("empty key");
        if (value.empty()) fail("empty value for key '" + key + "'");

        errno = 0;
        char* end = nullptr;
        const double parsed = std::strtod(value.c_str(), &end);
        if (end != value.c_str() + value.size() || errno == ERANGE || !std::isfinite(parsed)) {
            fail("not a finite number: '" + value + "'");
        }

        const KeyEntry* entry = nullptr;
        for (const KeyEntry& e : key_table()) {
            if (section == e.section && key == e.key) {
                entry = &e;
                break;
            }
        }
        if (entry == nullptr) {
            if (ends_with(key, "_ghz")) {
                fail("unit suffix _ghz is not accepted; express frequencies in _hz");
            }
            fail("unknown key '" + key + "' in [" + section + "]");
        }
        if (!seen.insert({section, key}).second) {
            fail("duplicate key '" + key + "' in [" + section + "]");
        }
        entry->set(spec, parsed * entry->scale);
    }

    spec.vertical.axis = Axis::Vertical;
    spec.horizontal.axis = Axis::Horizontal;
    validate(spec);
    return spec;
}

DeviceSpec load_device_spec(const std::string& path) {
    return parse_device_spec(read_file(path), path);
}

std::string emit_device_spec(const DeviceSpec& spec) {
    std::string out;
    const char* current_section = "";
    for (const KeyEntry& e : key_table()) {
        const std::optional<double> v = e.get(spec);
        if (!v) continue;
        if (std::string_view(current_section) != e.section) {
            if (!out.empty()) out += '\n';
            out += '[';
            out += e.section;
            out += "]\n";
            current_section = e.section;
        }
        out += e.key;
        out += " = ";
        out += format_sig(*v / e.scale, 9);
        out += '\n';
    }
    return out;
}

void save_device_spec(const DeviceSpec& spec, const std::string& path) {
    atomic_write_file(path, emit_device_spec(spec));
}

// --- Lumped-parameter mechanics ----------------------------------------------

double elliptical_plate_inertia(const DeviceGeometry& g, PlateAxis about, double density_kg_m3) {
    validate(g);
    require_positive(density_kg_m3, "density");
    const double a = g.mirror_semi_axis_a_m;
    const double b = g.mirror_semi_axis_b_m;
    const double t = g.device_thickness_m;
    const double mass = density_kg_m3 * kPi * a * b * t;
    const double c = about == PlateAxis::Major ? b : a;
    return mass * (c * c / 4.0 + t * t / 12.0);
}

double torsion_beam_stiffness(double beam_width_m, double beam_thickness_m, double beam_length_m,
                              double shear_modulus_pa, int n_parallel) {
    require_positive(beam_width_m, "beam_width");
    require_positive(beam_thickness_m, "beam_thickness");
    require_positive(beam_length_m, "beam_length");
    require_positive(shear_modulus_pa, "shear_modulus");
    if (n_parallel < 1) {
        invariant_error("n_parallel", "must be at least 1");
    }
    const double a = std::max(beam_width_m, beam_thickness_m) / 2.0;
    const double b = std::min(beam_width_m, beam_thickness_m) / 2.0;
    const double ratio = b / a;
    const double torsion_constant =
        a * b * b * b *
        (16.0 / 3.0 - 3.36 * ratio * (1.0 - ratio * ratio * ratio * ratio / 12.0));
    return n_parallel * shear_modulus_pa * torsion_constant / beam_length_m;
}

double natural_frequency(double stiffness_nm_per_rad, double inertia_kg_m2) {
    require_positive(stiffness_nm_per_rad, "stiffness");
    require_positive(inertia_kg_m2, "inertia");
    return std::sqrt(stiffness_nm_per_rad / inertia_kg_m2) / (2.0 * kPi);
}

double required_stiffness(double inertia_kg_m2, double f0_hz) {
    require_positive(inertia_kg_m2, "inertia");
    require_positive(f0_hz, "f0");
    const double omega = 2.0 * kPi * f0_hz;
    return inertia_kg_m2 * omega * omega;
}

FastAxisEstimate fast_axis_lumped_estimate(const DeviceSpec& spec, bool reduce_over_etch) {
    const DeviceGeometry& g = spec.geometry;
    const double inertia =
        elliptical_plate_inertia(g, PlateAxis::Major, spec.material.density_kg_m3);
    double thickness = g.device_thickness_m;
    if (reduce_over_etch) {
        thickness -= g.over_etch_m;
        require_positive(thickness, "device_thickness minus over_etch");
    }
    const double stiffness = torsion_beam_stiffness(g.inner_flexure_width_m, thickness,
                                                    g.inner_flexure_len_m,
                                                    spec.material.shear_modulus_pa, 2);
    return {inertia, stiffness, natural_frequency(stiffness, inertia)};
}

}  // namespace memscan
