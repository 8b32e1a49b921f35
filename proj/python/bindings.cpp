#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "flexpos/config.hpp"
#include "flexpos/errors.hpp"
#include "flexpos/experiment.hpp"
#include "flexpos/kinematics.hpp"
#include "flexpos/metrics.hpp"

namespace py = pybind11;
using namespace flexpos;

namespace {

py::array_t<double> to_array(const std::vector<double>& v) {
    return py::array_t<double>(static_cast<py::ssize_t>(v.size()), v.data());
}

std::vector<double> to_vector(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 1) throw DomainError("expected a one-dimensional array");
    return {a.data(), a.data() + a.size()};
}

// Config values from Python: bools lower-case, sequences comma-joined.
std::string config_value(const py::handle& v) {
    if (py::isinstance<py::bool_>(v)) return v.cast<bool>() ? "true" : "false";
    if (py::isinstance<py::str>(v)) return v.cast<std::string>();
    if (py::isinstance<py::sequence>(v)) {
        std::string out;
        for (const auto& item : v.cast<py::sequence>()) {
            if (!out.empty()) out += ",";
            out += config_value(item);
        }
        return out;
    }
    return py::str(v).cast<std::string>();
}

Config make_config(const std::optional<std::filesystem::path>& path, const std::optional<py::dict>& overrides) {
    Config c = path ? Config::load(*path) : Config{};
    if (overrides)
        for (const auto& [k, v] : *overrides) c.set(py::str(k).cast<std::string>(), config_value(v));
    return c;
}

void check_unused(const Config& c, bool allow_unused) {
    if (allow_unused) return;
    const auto unused = c.unused_keys();
    if (unused.empty()) return;
    std::string msg = "unrecognised configuration keys:";
    for (const auto& k : unused) msg += " " + k;
    throw ConfigError(msg);
}

py::dict tf_dict(const TransferFunction2& tf) {
    py::dict d;
    d["b0"] = tf.b0;
    d["a1"] = tf.a1;
    d["a0"] = tf.a0;
    return d;
}

py::dict record_dict(const ExperimentRecord& rec) {
    py::dict out;
    out["controller"] = std::string(controller_name(rec.controller));
    out["trajectory"] = std::string(trajectory_name(rec.trajectory));
    out["sample_rate"] = rec.sample_rate;
    out["t"] = to_array(rec.t);
    py::dict axes;
    for (const auto& a : rec.axes) {
        py::dict s;
        s["desired"] = to_array(a.desired);
        s["measured"] = to_array(a.measured);
        s["true"] = to_array(a.true_pos);
        s["u"] = to_array(a.u);
        s["d"] = to_array(a.d);
        s["d_hat"] = to_array(a.d_hat);
        s["s"] = to_array(a.s);
        axes[py::str(std::string(axis_name(a.axis)))] = s;
    }
    out["axes"] = axes;
    py::dict metrics;
    for (const auto& m : rec.metrics.axes) {
        py::dict d;
        d["rmse"] = m.rmse;
        d["rmse_measured"] = m.rmse_measured;
        d["max_abs_error"] = m.max_abs_error;
        d["hysteresis_width_percent"] = m.hysteresis_width_percent ? py::cast(*m.hysteresis_width_percent) : py::none();
        metrics[py::str(std::string(axis_name(m.axis)))] = d;
    }
    out["metrics"] = metrics;
    return out;
}

py::dict run_experiment_py(std::optional<std::filesystem::path> path, std::optional<py::dict> overrides,
                           std::optional<std::string> controller, bool allow_unused) {
    const auto c = make_config(path, overrides);
    const auto cfg = experiment_config_from(c);
    check_unused(c, allow_unused);
    const auto kind = controller ? controller_from_name(*controller) : cfg.controllers.front();
    ExperimentRecord rec;
    {
        py::gil_scoped_release release;
        rec = run_experiment(cfg, kind);
    }
    return record_dict(rec);
}

py::dict run_comparison_py(std::optional<std::filesystem::path> path, std::optional<py::dict> overrides,
                           bool allow_unused) {
    auto c = make_config(path, overrides);
    if (!c.has("controller.type")) c.set("controller.type", "pid,smc,smc_ndo");
    const auto cfg = experiment_config_from(c);
    check_unused(c, allow_unused);
    Comparison cmp;
    {
        py::gil_scoped_release release;
        cmp = run_comparison(cfg);
    }
    py::dict runs;
    for (const auto& r : cmp.runs) runs[py::str(std::string(controller_name(r.controller)))] = record_dict(r);
    py::dict out;
    out["runs"] = runs;
    out["improvement"] = cmp.improvement;
    return out;
}

py::list run_sysid_py(std::optional<std::filesystem::path> path, std::optional<py::dict> overrides,
                      bool allow_unused) {
    const auto c = make_config(path, overrides);
    const auto cfg = experiment_config_from(c);
    const auto sys = sysid_config_from(c);
    check_unused(c, allow_unused);
    std::vector<SysidAxisResult> results;
    {
        py::gil_scoped_release release;
        results = run_sysid(cfg, sys);
    }
    py::list out;
    for (const auto& r : results) {
        py::dict d;
        d["axis"] = std::string(axis_name(r.axis));
        d["truth"] = tf_dict(r.truth);
        d["fit"] = tf_dict(r.fit.tf);
        d["residual"] = r.fit.residual;
        d["natural_hz"] = r.resonance.natural_hz;
        d["zeta"] = r.resonance.zeta;
        d["empirical_peak_hz"] = r.empirical_peak_hz;
        d["frequencies"] = to_array(r.frf.frequencies);
        d["magnitude"] = to_array(r.frf.magnitude);
        d["phase"] = to_array(r.frf.phase);
        out.append(d);
    }
    return out;
}

}  // namespace

PYBIND11_MODULE(_flexpos, m) {
    m.doc() = "Three-axis flexure stage simulator";

    // Leaked on purpose: the translator outlives module teardown.
    static const py::handle error = py::exception<Error>(m, "Error", PyExc_RuntimeError).release();
    static const py::handle config_error = py::exception<ConfigError>(m, "ConfigError", error).release();
    static const py::handle io_error = py::exception<IoError>(m, "IoError", error).release();
    static const py::handle fit_error = py::exception<FitError>(m, "FitError", error).release();
    static const py::handle numeric_error = py::exception<NumericError>(m, "NumericError", error).release();
    static const py::handle divergence_error =
        py::exception<DivergenceError>(m, "DivergenceError", numeric_error).release();
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const ParseError& e) {
            py::set_error(config_error, e.what());
        } catch (const ConfigError& e) {
            py::set_error(config_error, e.what());
        } catch (const IoError& e) {
            py::set_error(io_error, e.what());
        } catch (const FitError& e) {
            py::set_error(fit_error, e.what());
        } catch (const DivergenceError& e) {
            py::object exc = py::reinterpret_borrow<py::object>(divergence_error)(e.what());
            exc.attr("partial") = record_dict(e.partial());
            PyErr_SetObject(divergence_error.ptr(), exc.ptr());
        } catch (const NumericError& e) {
            py::set_error(numeric_error, e.what());
        } catch (const Error& e) {
            py::set_error(error, e.what());
        }
    });

    py::list axes;
    for (Axis a : kAllAxes) axes.append(std::string(axis_name(a)));
    m.attr("AXES") = py::tuple(axes);

    m.def(
        "identified_plant", [](const std::string& axis) { return tf_dict(identified_plant(axis_from_name(axis))); },
        py::arg("axis"), "Transfer function b0 / (s^2 + a1 s + a0) of one axis.");
    m.def(
        "natural_frequency_hz",
        [](double b0, double a1, double a0) {
            const auto r = natural_frequency_hz(TransferFunction2{b0, a1, a0});
            py::dict d;
            d["natural_hz"] = r.natural_hz;
            d["zeta"] = r.zeta;
            d["damped_peak_hz"] = r.damped_peak_hz ? py::cast(*r.damped_peak_hz) : py::none();
            return d;
        },
        py::arg("b0"), py::arg("a1"), py::arg("a0"));
    m.def(
        "workspace_extents",
        [](double stroke_half) {
            const auto ext = workspace_extents(InverseJacobian::identified(), stroke_half);
            py::dict d;
            for (Axis a : kAllAxes) d[py::str(std::string(axis_name(a)))] = py::make_tuple(ext[a].negative, ext[a].positive);
            return d;
        },
        py::arg("stroke_half") = kDefaultStrokeHalf, "Pure single-axis extents (negative, positive) per task axis.");
    m.def("settling_time_bound", &settling_time_bound, py::arg("a1"), py::arg("a2"), py::arg("s0"));
    m.def("improvement_percent", &improvement_percent, py::arg("rmse_new"), py::arg("rmse_base"));
    m.def(
        "rmse",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& actual,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& desired) {
            return rmse(to_vector(actual), to_vector(desired));
        },
        py::arg("actual"), py::arg("desired"));
    m.def(
        "hysteresis_width_percent",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& input,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& output) {
            return hysteresis_width_percent(to_vector(input), to_vector(output));
        },
        py::arg("input"), py::arg("output"));

    m.def("run_experiment", &run_experiment_py, py::arg("config") = py::none(), py::arg("overrides") = py::none(),
          py::arg("controller") = py::none(), py::arg("allow_unused") = false,
          "Closed-loop run of one controller. `config` is a key = value file, `overrides` a dict of keys.");
    m.def("run_comparison", &run_comparison_py, py::arg("config") = py::none(), py::arg("overrides") = py::none(),
          py::arg("allow_unused") = false, "Runs every configured controller (default pid, smc, smc_ndo).");
    m.def("run_sysid", &run_sysid_py, py::arg("config") = py::none(), py::arg("overrides") = py::none(),
          py::arg("allow_unused") = false, "Chirp identification of each axis.");
}
