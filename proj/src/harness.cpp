#include "memscan/harness.hpp"

#include "memscan/actuation.hpp"
#include "memscan/calibrate.hpp"
#include "memscan/device_model.hpp"
#include "memscan/io.hpp"
#include "memscan/optics.hpp"
#include "memscan/resonator.hpp"
#include "memscan/trajectory.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <optional>
#include <sstream>

namespace memscan {

namespace {

namespace fs = std::filesystem;

struct Context {
    DeviceSpec spec;
    std::string spec_label;
    std::uint64_t seed = 0;
    std::string command_line;
    std::vector<std::pair<std::string, std::string>> outputs;

    void write_output(const std::string& path, std::string_view content) {
        atomic_write_file(path, content);
        outputs.emplace_back(path, digest_hex(content));
    }

    void write_manifest() {
        if (outputs.empty()) return;
        RunManifest manifest{command_line, spec_label, seed, outputs};
        atomic_write_file(outputs.front().first + ".manifest", manifest_text(manifest));
    }
};

std::string report_line(const std::string& key, const std::string& value) {
    return key + ": " + value + "\n";
}
std::string report_line(const std::string& key, double value) {
    return report_line(key, format_sig(value, 6));
}

DriveSignal default_drive(double f0_hz, double vpp = kStabilizationVpp) {
    return DriveSignal{WaveShape::Square, vpp, f0_hz, 0.5, 0.0, false};
}

double operating_angle(const AxisMode& mode) {
    return steady_state_optical_angle(mode, default_drive(mode.f0_hz));
}

bool parse_dims(const std::string& text, int& a, int& b) {
    const std::size_t x = text.find_first_of("xX");
    if (x == std::string::npos) return false;
    try {
        a = std::stoi(text.substr(0, x));
        b = std::stoi(text.substr(x + 1));
    } catch (...) {
        return false;
    }
    return a > 0 && b > 0;
}

Axis parse_axis(const std::string& name) {
    if (name == "vertical") return Axis::Vertical;
    if (name == "horizontal") return Axis::Horizontal;
    throw std::runtime_error("unknown axis '" + name + "' (expected vertical|horizontal)");
}

// --- commands -----------------------------------------------------------------

void cmd_device_info(Context& ctx, std::ostream& out) {
    const DeviceSpec& s = ctx.spec;
    const DeviceGeometry& g = s.geometry;
    std::string r;
    r += report_line("device", ctx.spec_label);
    r += "[geometry]\n";
    r += report_line("mirror_semi_axis_a_um", g.mirror_semi_axis_a_m / 1e-6);
    r += report_line("mirror_semi_axis_b_um", g.mirror_semi_axis_b_m / 1e-6);
    r += report_line("device_thickness_um", g.device_thickness_m / 1e-6);
    r += report_line("rim_thickness_um", g.rim_thickness_m / 1e-6);
    r += report_line("over_etch_um", g.over_etch_m / 1e-6);
    r += report_line("outer_frame_w_mm", g.outer_frame_w_m / 1e-3);
    r += report_line("outer_frame_h_mm", g.outer_frame_h_m / 1e-3);
    r += report_line("outer_torsion_beam_width_um", g.outer_torsion_beam_width_m / 1e-6);
    r += report_line("mid_flexure_len_um", g.mid_flexure_len_m / 1e-6);
    r += report_line("mid_flexure_width_um", g.mid_flexure_width_m / 1e-6);
    r += report_line("inner_flexure_len_um", g.inner_flexure_len_m / 1e-6);
    r += report_line("inner_flexure_width_um", g.inner_flexure_width_m / 1e-6);
    r += report_line("die_w_mm", g.die_w_m / 1e-3);
    r += report_line("die_h_mm", g.die_h_m / 1e-3);
    r += "[material]\n";
    r += report_line("density_kg_m3", s.material.density_kg_m3);
    r += report_line("shear_modulus_pa", s.material.shear_modulus_pa);
    r += report_line("fracture_strength_low_pa", s.material.fracture_strength_low_pa);
    r += report_line("fracture_strength_high_pa", s.material.fracture_strength_high_pa);
    for (Axis axis : {Axis::Vertical, Axis::Horizontal}) {
        const AxisMode& m = s.mode(axis);
        r += std::string("[") + axis_name(axis) + "]\n";
        r += report_line("f0_hz", m.f0_hz);
        r += report_line("q", m.q_factor);
        r += report_line("q_mounted", m.q_mounted);
        r += report_line("fea_target_hz", m.fea_target_hz);
        r += report_line("gain_deg_per_v", m.resonant_gain_deg_per_v);
        r += report_line("sat_angle_deg", m.sat_angle_deg);
        r += report_line("measured_over_fea_ratio", m.f0_hz / m.fea_target_hz);
    }
    const FastAxisEstimate est = fast_axis_lumped_estimate(s);
    r += "[lumped.fast_axis]\n";
    r += report_line("mirror_inertia_kg_m2", est.inertia_kg_m2);
    r += report_line("flexure_stiffness_nm_per_rad", est.stiffness_nm_per_rad);
    r += report_line("natural_frequency_hz", est.natural_frequency_hz);
    r += report_line("required_stiffness_at_f0_nm_per_rad",
                     required_stiffness(est.inertia_kg_m2, s.horizontal.f0_hz));
    r += report_line("lumped_over_fea_ratio", est.natural_frequency_hz / s.horizontal.fea_target_hz);
    out << r;
}

struct SweepOptions {
    std::string axis = "horizontal";
    double from_hz = 0.0;
    double to_hz = 0.0;
    int points = 0;
    std::string spacing = "linear";
    std::string out_path;
};

void cmd_sweep(Context& ctx, const SweepOptions& opt, std::ostream& out, std::ostream& err) {
    const Axis axis = parse_axis(opt.axis);
    const AxisMode& mode = ctx.spec.mode(axis);
    if (!(opt.from_hz < mode.f0_hz && mode.f0_hz < opt.to_hz)) {
        throw std::runtime_error("sweep range must contain the " + opt.axis + " resonance at " +
                                 format_sig(mode.f0_hz, 6) + " Hz");
    }
    const ResonatorParams params{mode.f0_hz, mode.q_factor, 1.0};
    const SweepSpacing spacing =
        opt.spacing == "log" ? SweepSpacing::Log : SweepSpacing::Linear;
    const FrequencyResponse response = sweep(params, opt.from_hz, opt.to_hz, opt.points, spacing);

    std::string csv = to_csv(response);
    std::string r;
    r += report_line("sweep_axis", opt.axis);
    r += report_line("from_hz", opt.from_hz);
    r += report_line("to_hz", opt.to_hz);
    r += report_line("points", static_cast<double>(opt.points));
    try {
        const PeakExtraction extraction = q_from_bandwidth(response);
        csv += "# extracted_f0_hz = " + format_sig(extraction.f0_hz, 9) + "\n";
        csv += "# extracted_q = " + format_sig(extraction.q_factor, 9) + "\n";
        r += report_line("extracted_f0_hz", extraction.f0_hz);
        r += report_line("extracted_q", extraction.q_factor);
    } catch (const CrossingNotBracketedError& e) {
        err << "warning: " << e.what() << "; summary omitted\n";
    }
    ctx.write_output(opt.out_path, csv);
    r += report_line("csv", opt.out_path);
    out << r;
}

struct LissajousOptions {
    double duration_ms = 40.0;
    double sample_rate_hz = 2e6;
    std::string grid = "64x64";
    std::string raster = "512x512";
    std::string out_pgm;
    std::string out_csv;
};

void cmd_lissajous(Context& ctx, const LissajousOptions& opt, std::ostream& out) {
    int cols = 0, rows = 0, width = 0, height = 0;
    if (!parse_dims(opt.grid, cols, rows)) {
        throw std::runtime_error("bad --grid (expected COLSxROWS): " + opt.grid);
    }
    if (!parse_dims(opt.raster, width, height)) {
        throw std::runtime_error("bad --raster (expected WxH): " + opt.raster);
    }
    TrajectoryConfig config;
    config.f_h_hz = ctx.spec.horizontal.f0_hz;
    config.f_v_hz = ctx.spec.vertical.f0_hz;
    config.theta_h_deg = operating_angle(ctx.spec.horizontal);
    config.theta_v_deg = operating_angle(ctx.spec.vertical);
    config.sample_rate_hz = opt.sample_rate_hz;
    config.duration_s = opt.duration_ms / 1e3;
    const Trajectory traj = generate(config);

    std::string r;
    r += report_line("f_h_hz", config.f_h_hz);
    r += report_line("f_v_hz", config.f_v_hz);
    r += report_line("theta_h_deg", config.theta_h_deg);
    r += report_line("theta_v_deg", config.theta_v_deg);
    const std::optional<double> period = repeat_period(config.f_h_hz, config.f_v_hz, 1e-9);
    r += report_line("repeat_period_s", period ? format_sig(*period, 6) : "none");
    r += report_line("repetition_rate_hz", period ? format_sig(1.0 / *period, 6) : "none");

    double fill;
    if (config.theta_h_deg == 0.0 && config.theta_v_deg == 0.0) {
        // Stationary beam: a single lit cell by convention.
        fill = 1.0 / (static_cast<double>(cols) * rows);
    } else {
        fill = coverage(traj, cols, rows).fill_fraction;
    }
    r += report_line("coverage_grid", opt.grid);
    r += report_line("fill_fraction", fill);

    ctx.write_output(opt.out_csv, to_csv(traj));
    ctx.write_output(opt.out_pgm, to_pgm(render_pattern(traj, width, height), width, height));
    r += report_line("csv", opt.out_csv);
    r += report_line("pgm", opt.out_pgm);
    out << r;
}

struct VoltageOptions {
    std::string axis = "horizontal";
    std::vector<double> vpp;
    std::string out_path;
};

void cmd_voltage_response(Context& ctx, const VoltageOptions& opt, std::ostream& out) {
    const Axis axis = parse_axis(opt.axis);
    const AxisMode& mode = ctx.spec.mode(axis);
    std::vector<double> vpp = opt.vpp;
    if (vpp.empty()) {
        for (int v = 0; v <= 18; ++v) vpp.push_back(v);
    }
    const std::vector<VoltagePoint> curve = voltage_response_curve(mode, vpp);
    ctx.write_output(opt.out_path, to_csv(curve));

    std::string r;
    r += report_line("voltage_response_axis", opt.axis);
    r += report_line("points", static_cast<double>(curve.size()));

    // First voltage whose marginal gain falls below 15% of the initial slope.
    std::string flagged = "none";
    double initial_slope = 0.0;
    for (std::size_t i = 1; i < curve.size(); ++i) {
        const double dv = curve[i].vpp - curve[i - 1].vpp;
        if (dv <= 0.0) continue;
        const double slope = (curve[i].optical_angle_deg - curve[i - 1].optical_angle_deg) / dv;
        if (initial_slope == 0.0) {
            initial_slope = slope;
            continue;
        }
        if (slope < 0.15 * initial_slope) {
            flagged = format_sig(curve[i].vpp, 6);
            break;
        }
    }
    r += report_line("stabilization_vpp", flagged);
    r += report_line("csv", opt.out_path);
    out << r;
}

void cmd_metrics(Context& ctx, std::ostream& out) {
    const ProjectionSetup setup;
    std::string r;
    for (Axis axis : {Axis::Vertical, Axis::Horizontal}) {
        const AxisMode& mode = ctx.spec.mode(axis);
        const double theta = operating_angle(mode);
        const double aperture_m =
            axis == Axis::Horizontal ? setup.aperture_horizontal_m : setup.aperture_vertical_m;
        const std::string p = axis_name(axis);
        r += report_line(p + ".optical_angle_deg", theta);
        r += report_line(p + ".aperture_mm", aperture_m / 1e-3);
        r += report_line(p + ".f0_khz", mode.f0_hz / 1e3);
        r += report_line(p + ".bandwidth_efficiency_deg_mm_khz",
                         bandwidth_efficiency_product(theta, aperture_m / 1e-3, mode.f0_hz / 1e3));
        r += report_line(p + ".screen_width_mm",
                         screen_width(theta, setup.screen_distance_m) / 1e-3);
        r += report_line(p + ".resolvable_spots",
                         static_cast<double>(resolvable_spots(theta, setup, axis)));
    }
    r += report_line("screen_distance_m", setup.screen_distance_m);
    out << r;
}

struct CalibrateOptions {
    std::string sweep_vertical, sweep_horizontal;
    std::string voltage_vertical, voltage_horizontal;
    std::string out_spec;
};

void cmd_calibrate(Context& ctx, const CalibrateOptions& opt, std::ostream& out) {
    AxisDatasets vertical, horizontal;
    if (!opt.sweep_vertical.empty()) {
        vertical.sweep = sweep_dataset_from_csv(read_file(opt.sweep_vertical), opt.sweep_vertical);
    }
    if (!opt.sweep_horizontal.empty()) {
        horizontal.sweep =
            sweep_dataset_from_csv(read_file(opt.sweep_horizontal), opt.sweep_horizontal);
    }
    auto voltage_rows = [](const std::string& path) {
        std::vector<std::pair<double, double>> rows;
        for (const VoltagePoint& p : voltage_curve_from_csv(read_file(path), path)) {
            rows.emplace_back(p.vpp, p.optical_angle_deg);
        }
        return rows;
    };
    if (!opt.voltage_vertical.empty()) vertical.voltage = voltage_rows(opt.voltage_vertical);
    if (!opt.voltage_horizontal.empty()) horizontal.voltage = voltage_rows(opt.voltage_horizontal);

    const CalibrationOutcome outcome = calibrate_device(ctx.spec, vertical, horizontal);
    ctx.write_output(opt.out_spec, emit_device_spec(outcome.spec));
    out << calibration_report(outcome.changes);
    out << report_line("spec_written", opt.out_spec);
}

void cmd_reproduce(Context& ctx, const std::string& preset, const std::string& out_dir,
                   std::ostream& out, std::ostream& err) {
    fs::create_directories(out_dir);
    const fs::path dir(out_dir);
    if (preset == "fig6e") {
        LissajousOptions opt;
        opt.out_pgm = (dir / "fig6e_pattern.pgm").string();
        opt.out_csv = (dir / "fig6e_trajectory.csv").string();
        cmd_lissajous(ctx, opt, out);
    } else if (preset == "fig7") {
        // Mounted-fixture sweeps: the lower-Q regime.
        for (Axis axis : {Axis::Vertical, Axis::Horizontal}) {
            const AxisMode& mode = ctx.spec.mode(axis);
            SweepOptions opt;
            opt.axis = axis_name(axis);
            opt.from_hz = axis == Axis::Vertical ? 3540.0 / 3600.0 * mode.f0_hz
                                                 : 53900.0 / 54175.0 * mode.f0_hz;
            opt.to_hz = axis == Axis::Vertical ? 3660.0 / 3600.0 * mode.f0_hz
                                               : 54450.0 / 54175.0 * mode.f0_hz;
            opt.points = axis == Axis::Vertical ? 8001 : 5501;
            opt.out_path = (dir / (std::string("fig7_") + axis_name(axis) + "_sweep.csv")).string();
            Context mounted_ctx = ctx;
            mounted_ctx.outputs.clear();
            mounted_ctx.spec.mode(axis).q_factor = mode.q_mounted;
            cmd_sweep(mounted_ctx, opt, out, err);
            ctx.outputs.insert(ctx.outputs.end(), mounted_ctx.outputs.begin(),
                               mounted_ctx.outputs.end());
        }
    } else if (preset == "fig8") {
        for (Axis axis : {Axis::Vertical, Axis::Horizontal}) {
            VoltageOptions vopt;
            vopt.axis = axis_name(axis);
            vopt.out_path =
                (dir / (std::string("fig8_") + axis_name(axis) + "_voltage.csv")).string();
            cmd_voltage_response(ctx, vopt, out);
            SweepOptions sopt;
            sopt.axis = axis_name(axis);
            const AxisMode& mode = ctx.spec.mode(axis);
            sopt.from_hz = axis == Axis::Vertical ? 3560.0 / 3600.0 * mode.f0_hz
                                                  : 53900.0 / 54175.0 * mode.f0_hz;
            sopt.to_hz = axis == Axis::Vertical ? 3640.0 / 3600.0 * mode.f0_hz
                                                : 54450.0 / 54175.0 * mode.f0_hz;
            sopt.points = axis == Axis::Vertical ? 8001 : 5501;
            sopt.out_path = (dir / (std::string("fig8_") + axis_name(axis) + "_sweep.csv")).string();
            cmd_sweep(ctx, sopt, out, err);
        }
    } else {
        throw std::runtime_error("unknown preset '" + preset + "' (expected fig6e|fig7|fig8)");
    }
}

std::string join_args(int argc, const char* const* argv) {
    std::string joined;
    for (int i = 0; i < argc; ++i) {
        if (i) joined += ' ';
        joined += argv[i];
    }
    return joined;
}

}  // namespace

std::string manifest_text(const RunManifest& manifest) {
    std::string out;
    out += "command: " + manifest.command_line + "\n";
    out += "spec: " + manifest.spec_path + "\n";
    out += "seed: " + std::to_string(manifest.seed) + "\n";
    for (const auto& [path, digest] : manifest.outputs) {
        out += "output: " + path + " fnv1a64:" + digest + "\n";
    }
    return out;
}

bool verify_manifest(const std::filesystem::path& manifest_path) {
    std::istringstream in(read_file(manifest_path));
    std::string line;
    bool any_output = false;
    while (std::getline(in, line)) {
        if (line.rfind("output: ", 0) != 0) continue;
        const std::string rest = line.substr(8);
        const std::size_t sep = rest.rfind(" fnv1a64:");
        if (sep == std::string::npos) return false;
        const std::string path = rest.substr(0, sep);
        const std::string digest = rest.substr(sep + 9);
        std::string content;
        try {
            content = read_file(path);
        } catch (const std::exception&) {
            return false;
        }
        if (digest_hex(content) != digest) return false;
        any_output = true;
    }
    return any_output;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Dual-axis resonant scanning-mirror simulation and characterization toolkit"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string device_path;
    std::uint64_t seed = 0;
    app.add_option("--device", device_path, "device spec file (defaults to the builtin device)");
    app.add_option("--seed", seed, "seed recorded in run manifests");

    CLI::App* info = app.add_subcommand("device-info", "print device parameters and lumped estimates");

    SweepOptions sweep_opt;
    CLI::App* sw = app.add_subcommand("sweep", "frequency sweep with Q extraction");
    sw->add_option("--axis", sweep_opt.axis, "vertical|horizontal")->required();
    sw->add_option("--from-hz", sweep_opt.from_hz)->required();
    sw->add_option("--to-hz", sweep_opt.to_hz)->required();
    sw->add_option("--points", sweep_opt.points)->required();
    sw->add_option("--spacing", sweep_opt.spacing, "linear|log");
    sw->add_option("--out", sweep_opt.out_path)->required();

    LissajousOptions liss_opt;
    CLI::App* liss = app.add_subcommand("lissajous", "2D scan trajectory, raster and coverage");
    liss->add_option("--duration-ms", liss_opt.duration_ms);
    liss->add_option("--sample-rate-hz", liss_opt.sample_rate_hz);
    liss->add_option("--grid", liss_opt.grid, "coverage grid COLSxROWS");
    liss->add_option("--raster", liss_opt.raster, "pattern raster WxH");
    liss->add_option("--out-pgm", liss_opt.out_pgm)->required();
    liss->add_option("--out-csv", liss_opt.out_csv)->required();

    VoltageOptions volt_opt;
    CLI::App* volt = app.add_subcommand("voltage-response", "scan angle vs drive voltage");
    volt->add_option("--axis", volt_opt.axis)->required();
    volt->add_option("--vpp", volt_opt.vpp, "peak-to-peak voltages (repeatable; default 0..18)");
    volt->add_option("--out", volt_opt.out_path)->required();

    CLI::App* metrics = app.add_subcommand("metrics", "figure-of-merit and projection report");

    CalibrateOptions cal_opt;
    CLI::App* cal = app.add_subcommand("calibrate", "fit axis parameters from datasets");
    cal->add_option("--sweep-vertical", cal_opt.sweep_vertical);
    cal->add_option("--sweep-horizontal", cal_opt.sweep_horizontal);
    cal->add_option("--voltage-vertical", cal_opt.voltage_vertical);
    cal->add_option("--voltage-horizontal", cal_opt.voltage_horizontal);
    cal->add_option("--out", cal_opt.out_spec)->required();

    std::string preset;
    std::string out_dir = ".";
    CLI::App* rep = app.add_subcommand("reproduce", "bundled experiment presets");
    rep->add_option("preset", preset, "fig6e|fig7|fig8")->required();
    rep->add_option("--out-dir", out_dir);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << app.help();
            return 0;
        }
        err << "error: " << e.what() << "\n";
        return 1;
    }

    try {
        Context ctx;
        ctx.command_line = join_args(argc, argv);
        ctx.seed = seed;
        if (device_path.empty()) {
            ctx.spec = default_device_spec();
            ctx.spec_label = "builtin-default";
        } else {
            ctx.spec = load_device_spec(device_path);
            ctx.spec_label = device_path;
        }

        if (info->parsed()) cmd_device_info(ctx, out);
        if (sw->parsed()) cmd_sweep(ctx, sweep_opt, out, err);
        if (liss->parsed()) cmd_lissajous(ctx, liss_opt, out);
        if (volt->parsed()) cmd_voltage_response(ctx, volt_opt, out);
        if (metrics->parsed()) cmd_metrics(ctx, out);
        if (cal->parsed()) cmd_calibrate(ctx, cal_opt, out);
        if (rep->parsed()) cmd_reproduce(ctx, preset, out_dir, out, err);

        ctx.write_manifest();
        return 0;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    std::vector<const char*> argv;
    argv.reserve(args.size());
    for (const std::string& a : args) argv.push_back(a.c_str());
    return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace memscan
