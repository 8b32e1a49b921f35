#include "flexpos/outputs.hpp"

#include <cstdio>
#include <fstream>
#include <json.hpp>

#include "flexpos/csv.hpp"
#include "flexpos/metrics.hpp"
#include "flexpos/svg_plot.hpp"

namespace flexpos {

namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e"};
constexpr const char* kFields[] = {"desired", "measured", "true", "u", "d", "d_hat", "s"};

std::string unit(Axis a) { return a == Axis::Z ? "um" : "urad"; }

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path.string() + " for writing");
    f << text;
    f.close();
    if (!f) throw IoError("failed writing " + path.string());
}

json nullable(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json metrics_object(const ExperimentRecord& record) {
    json j;
    j["controller"] = controller_name(record.controller);
    j["trajectory"] = trajectory_name(record.trajectory);
    j["samples"] = record.samples();
    j["sample_rate"] = record.sample_rate;
    json axes = json::object();
    for (const auto& m : record.metrics.axes) {
        json a;
        a["unit"] = unit(m.axis);
        a["rmse"] = m.rmse;
        a["rmse_measured"] = m.rmse_measured;
        a["max_abs_error"] = m.max_abs_error;
        a["hysteresis_width_percent"] = nullable(m.hysteresis_width_percent);
        axes[std::string(axis_name(m.axis))] = a;
    }
    j["axes"] = axes;
    json imp = json::object();
    for (const auto& [key, v] : record.metrics.improvement) {
        json per = json::object();
        for (std::size_t k = 0; k < v.size() && k < record.axes.size(); ++k) {
            per[std::string(axis_name(record.axes[k].axis))] = v[k];
        }
        imp[key] = per;
    }
    j["improvement_percent"] = imp;
    return j;
}

std::vector<double> difference(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
    return out;
}

}  // namespace

void ensure_directory(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
}

std::vector<std::string> timeseries_header(const ExperimentRecord& record) {
    std::vector<std::string> h{"t"};
    for (const auto& a : record.axes) {
        for (const char* f : kFields) h.push_back(std::string(axis_name(a.axis)) + "_" + f);
    }
    return h;
}

void write_timeseries_csv(const ExperimentRecord& record, const fs::path& path) {
    csv::Writer w(path);
    w.header(timeseries_header(record));
    std::vector<double> row(1 + 7 * record.axes.size());
    for (std::size_t j = 0; j < record.samples(); ++j) {
        row[0] = record.t[j];
        std::size_t c = 1;
        for (const auto& a : record.axes) {
            for (const auto* v : {&a.desired, &a.measured, &a.true_pos, &a.u, &a.d, &a.d_hat, &a.s}) {
                row[c++] = (*v)[j];
            }
        }
        w.row(row);
    }
    w.close();
}

ExperimentRecord read_timeseries_csv(const fs::path& path) {
    const auto table = csv::read_numeric(path);
    if (table.header.empty() || table.header[0] != "t" || (table.header.size() - 1) % 7 != 0) {
        throw ParseError(path.string(), 1, "not a timeseries header");
    }
    ExperimentRecord rec;
    rec.t = table.columns[0];
    if (rec.t.size() >= 2) rec.sample_rate = 1.0 / (rec.t[1] - rec.t[0]);
    for (std::size_t c = 1; c < table.header.size(); c += 7) {
        const auto& name = table.header[c];
        const auto cut = name.rfind("_desired");
        if (cut == std::string::npos) throw ParseError(path.string(), 1, "unexpected column '" + name + "'");
        AxisRecord a;
        a.axis = axis_from_name(name.substr(0, cut));
        for (std::size_t f = 0; f < 7; ++f) {
            if (table.header[c + f] != name.substr(0, cut) + "_" + kFields[f]) {
                throw ParseError(path.string(), 1, "unexpected column '" + table.header[c + f] + "'");
            }
        }
        a.desired = table.columns[c];
        a.measured = table.columns[c + 1];
        a.true_pos = table.columns[c + 2];
        a.u = table.columns[c + 3];
        a.d = table.columns[c + 4];
        a.d_hat = table.columns[c + 5];
        a.s = table.columns[c + 6];
        rec.axes.push_back(std::move(a));
    }
    rec.metrics = compute_metrics(rec);
    return rec;
}

std::string metrics_json(const ExperimentRecord& record) { return metrics_object(record).dump(2) + "\n"; }

std::vector<fs::path> emit_outputs(const ExperimentRecord& record, const fs::path& dir) {
    ensure_directory(dir);
    std::vector<fs::path> written;
    written.push_back(dir / "timeseries.csv");
    write_timeseries_csv(record, written.back());
    written.push_back(dir / "metrics.json");
    write_text(written.back(), metrics_json(record));

    const std::string ctl(controller_name(record.controller));
    std::vector<svg::Panel> tracking, error, loops;
    for (const auto& a : record.axes) {
        const std::string name(axis_name(a.axis));
        tracking.push_back({name + " tracking (" + ctl + ")", "time [s]", name + " [" + unit(a.axis) + "]",
                            {{"desired", record.t, a.desired, kColors[0]},
                             {"measured", record.t, a.measured, kColors[1], 0.8}}});
        error.push_back({name + " error (" + ctl + ")", "time [s]", "error [" + unit(a.axis) + "]",
                         {{"true - desired", record.t, difference(a.true_pos, a.desired), kColors[1]}}});
        loops.push_back({name + " output vs reference (" + ctl + ")", "desired [" + unit(a.axis) + "]",
                         "position [" + unit(a.axis) + "]",
                         {{"output", a.desired, a.true_pos, kColors[2]}}});
    }
    written.push_back(dir / "tracking.svg");
    svg::write(tracking, written.back());
    written.push_back(dir / "error.svg");
    svg::write(error, written.back());
    written.push_back(dir / "hysteresis.svg");
    svg::write(loops, written.back());
    return written;
}

std::vector<fs::path> emit_comparison(const Comparison& cmp, const fs::path& dir) {
    ensure_directory(dir);
    std::vector<fs::path> written;
    json summary;
    json runs = json::array();
    for (const auto& run : cmp.runs) {
        auto files = emit_outputs(run, dir / std::string(controller_name(run.controller)));
        written.insert(written.end(), files.begin(), files.end());
        runs.push_back(metrics_object(run));
    }
    summary["runs"] = runs;
    json imp = json::object();
    for (const auto& [key, v] : cmp.improvement) {
        json per = json::object();
        if (!cmp.runs.empty()) {
            for (std::size_t k = 0; k < v.size(); ++k) per[std::string(axis_name(cmp.runs[0].axes[k].axis))] = v[k];
        }
        imp[key] = per;
    }
    summary["improvement_percent"] = imp;
    written.push_back(dir / "comparison.json");
    write_text(written.back(), summary.dump(2) + "\n");
    return written;
}

std::vector<fs::path> emit_sysid(const std::vector<SysidAxisResult>& results, const fs::path& dir) {
    ensure_directory(dir);
    std::vector<fs::path> written;
    json summary = json::object();
    std::string plant_cfg = "# Fitted plant coefficients, b0 / (s^2 + a1 s + a0)\n";
    std::vector<svg::Panel> mag, phase;
    std::size_t color = 0;
    svg::Panel mag_panel{"FRF magnitude", "frequency [Hz]", "|H| [dB]", {}, true};
    svg::Panel phase_panel{"FRF phase", "frequency [Hz]", "phase [rad]", {}, true};
    for (const auto& r : results) {
        const std::string name(axis_name(r.axis));
        written.push_back(dir / ("frf_" + name + ".csv"));
        write_frf_csv(r.frf, written.back());
        json a;
        a["fit"] = {{"b0", r.fit.tf.b0}, {"a1", r.fit.tf.a1}, {"a0", r.fit.tf.a0}};
        a["true"] = {{"b0", r.truth.b0}, {"a1", r.truth.a1}, {"a0", r.truth.a0}};
        a["initial_guess"] = {{"b0", r.fit.initial_guess.b0}, {"a1", r.fit.initial_guess.a1},
                              {"a0", r.fit.initial_guess.a0}};
        a["residual"] = r.fit.residual;
        a["iterations"] = r.fit.iterations;
        a["natural_hz"] = r.resonance.natural_hz;
        a["zeta"] = r.resonance.zeta;
        a["damped_peak_hz"] = nullable(r.resonance.damped_peak_hz);
        a["empirical_peak_hz"] = r.empirical_peak_hz;
        summary[name] = a;
        char line[160];
        std::snprintf(line, sizeof line, "plant.%s.b0 = %.17g\nplant.%s.a1 = %.17g\nplant.%s.a0 = %.17g\n",
                      name.c_str(), r.fit.tf.b0, name.c_str(), r.fit.tf.a1, name.c_str(), r.fit.tf.a0);
        plant_cfg += line;

        const auto band = r.frf.band(0.0, 1e300);
        std::vector<double> db(band.size()), fit_db(band.size());
        const auto model = analytic_frf(r.fit.tf, band.frequencies);
        for (std::size_t i = 0; i < band.size(); ++i) {
            db[i] = 20.0 * std::log10(std::max(band.magnitude[i], 1e-300));
            fit_db[i] = 20.0 * std::log10(model.magnitude[i]);
        }
        const char* c = kColors[color++ % 4];
        mag_panel.series.push_back({name + " estimate", band.frequencies, db, c, 1.0});
        mag_panel.series.push_back({name + " fit", band.frequencies, fit_db, "#555555", 0.8});
        phase_panel.series.push_back({name + " estimate", band.frequencies, band.phase, c, 1.0});
    }
    written.push_back(dir / "fitted_plant.cfg");
    write_text(written.back(), plant_cfg);
    written.push_back(dir / "metrics.json");
    write_text(written.back(), summary.dump(2) + "\n");
    written.push_back(dir / "frf.svg");
    svg::write({mag_panel, phase_panel}, written.back());
    return written;
}

std::vector<fs::path> emit_resolution(const ExperimentRecord& record, const std::vector<ResolutionAxisResult>& res,
                                      const fs::path& dir) {
    auto written = emit_outputs(record, dir);
    json j = json::object();
    for (const auto& r : res) {
        j[std::string(axis_name(r.axis))] = {
            {"unit", unit(r.axis)}, {"step", r.step}, {"plateau_sigma", r.plateau_sigma}, {"resolved", r.resolved}};
    }
    written.push_back(dir / "resolution.json");
    write_text(written.back(), j.dump(2) + "\n");
    return written;
}

std::vector<fs::path> emit_workspace(const InverseJacobian& jinv, double stroke_half, const fs::path& dir) {
    ensure_directory(dir);
    std::vector<fs::path> written;
    const auto ext = workspace_extents(jinv, stroke_half);
    const auto verts = workspace_vertices(jinv, stroke_half);
    json j;
    j["stroke_half_um"] = stroke_half;
    for (Axis a : kAllAxes) {
        j["extents"][std::string(axis_name(a))] = {{"unit", unit(a)}, {"negative", ext[a].negative},
                                                   {"positive", ext[a].positive}};
    }
    written.push_back(dir / "workspace.json");
    write_text(written.back(), j.dump(2) + "\n");

    written.push_back(dir / "workspace_vertices.csv");
    csv::Writer w(written.back());
    w.header({"z", "theta_x", "theta_y"});
    for (const auto& v : verts) {
        const double row[3] = {v.z, v.theta_x, v.theta_y};
        w.row(row);
    }
    w.close();

    // Projection of the actuator-cube edges onto the tilt plane.
    svg::Panel tilt{"workspace projection", "theta_x [urad]", "theta_y [urad]", {}, false, true};
    for (std::size_t i = 0; i < verts.size(); ++i) {
        for (std::size_t bit = 1; bit < 8; bit <<= 1) {
            const std::size_t k = i ^ bit;
            if (k < i) continue;
            tilt.series.push_back({i == 0 && bit == 1 ? "cube edges" : "", {verts[i].theta_x, verts[k].theta_x},
                                   {verts[i].theta_y, verts[k].theta_y}, kColors[0], 1.0});
        }
    }
    written.push_back(dir / "workspace.svg");
    svg::write({tilt}, written.back());
    return written;
}

}  // namespace flexpos
