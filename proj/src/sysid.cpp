#include "flexpos/sysid.hpp"

#include <fftw3.h>

#include <Eigen/Dense>
#include <unsupported/Eigen/NonLinearOptimization>
#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <optional>
#include <string>

#include "flexpos/csv.hpp"
#include "flexpos/errors.hpp"

namespace flexpos {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// FFTW planning is not thread-safe; execution is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

class RealFft {
public:
    explicit RealFft(std::size_t n) : n_(n) {
        in_ = fftw_alloc_real(n);
        out_ = fftw_alloc_complex(n / 2 + 1);
        if (!in_ || !out_) {
            release();
            throw NumericError("FFT buffer allocation failed");
        }
        std::lock_guard lock(planner_mutex());
        plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), in_, out_, FFTW_ESTIMATE);
        if (!plan_) {
            release();
            throw NumericError("FFT planning failed");
        }
    }
    RealFft(const RealFft&) = delete;
    RealFft& operator=(const RealFft&) = delete;
    ~RealFft() { release(); }

    double* input() { return in_; }
    std::complex<double> bin(std::size_t k) const { return {out_[k][0], out_[k][1]}; }
    void execute() { fftw_execute(plan_); }

private:
    void release() {
        std::lock_guard lock(planner_mutex());
        if (plan_) fftw_destroy_plan(plan_);
        if (in_) fftw_free(in_);
        if (out_) fftw_free(out_);
        plan_ = nullptr;
        in_ = nullptr;
        out_ = nullptr;
    }

    std::size_t n_;
    double* in_ = nullptr;
    fftw_complex* out_ = nullptr;
    fftw_plan plan_ = nullptr;
};

std::complex<double> model_response(double b0, double a1, double a0, double omega, double delay) {
    const std::complex<double> s(0.0, omega);
    std::complex<double> h = b0 / (s * s + a1 * s + a0);
    if (delay != 0.0) h *= std::polar(1.0, -omega * delay);
    return h;
}

// Residuals r = w (H_model - H) / |H|, real and imaginary parts stacked.
// Parameters are the coefficients divided by the initial guess.
struct FitFunctor {
    using Scalar = double;
    enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };
    using InputType = Eigen::VectorXd;
    using ValueType = Eigen::VectorXd;
    using JacobianType = Eigen::MatrixXd;

    std::vector<double> omega;
    std::vector<std::complex<double>> h;
    std::vector<double> weight;  // already divided by |H|
    Eigen::Vector3d scale;
    double delay = 0.0;

    int inputs() const { return 3; }
    int values() const { return static_cast<int>(2 * omega.size()); }

    int operator()(const Eigen::VectorXd& p, Eigen::VectorXd& r) const {
        const double b0 = p[0] * scale[0], a1 = p[1] * scale[1], a0 = p[2] * scale[2];
        for (std::size_t i = 0; i < omega.size(); ++i) {
            const auto diff = weight[i] * (model_response(b0, a1, a0, omega[i], delay) - h[i]);
            r[2 * i] = diff.real();
            r[2 * i + 1] = diff.imag();
        }
        return 0;
    }

    int df(const Eigen::VectorXd& p, Eigen::MatrixXd& jac) const {
        const double b0 = p[0] * scale[0], a1 = p[1] * scale[1], a0 = p[2] * scale[2];
        for (std::size_t i = 0; i < omega.size(); ++i) {
            const std::complex<double> s(0.0, omega[i]);
            const std::complex<double> den = s * s + a1 * s + a0;
            const std::complex<double> lag = delay != 0.0 ? std::polar(1.0, -omega[i] * delay) : 1.0;
            const std::complex<double> d_b0 = weight[i] * lag / den * scale[0];
            const std::complex<double> d_a1 = -weight[i] * lag * b0 * s / (den * den) * scale[1];
            const std::complex<double> d_a0 = -weight[i] * lag * b0 / (den * den) * scale[2];
            const std::complex<double> cols[3] = {d_b0, d_a1, d_a0};
            for (int c = 0; c < 3; ++c) {
                jac(2 * i, c) = cols[c].real();
                jac(2 * i + 1, c) = cols[c].imag();
            }
        }
        return 0;
    }
};

// Linear interpolation of the frequency where |H| crosses `level`, walking from the peak.
std::optional<double> half_power_crossing(const FrequencyResponse& frf, std::size_t peak, double level, int dir) {
    std::size_t i = peak;
    while (true) {
        if (dir < 0 && i == 0) return std::nullopt;
        if (dir > 0 && i + 1 >= frf.size()) return std::nullopt;
        const std::size_t j = dir < 0 ? i - 1 : i + 1;
        if (frf.magnitude[j] <= level) {
            const double m0 = frf.magnitude[i], m1 = frf.magnitude[j];
            const double frac = (m0 - level) / (m0 - m1);
            return frf.frequencies[i] + frac * (frf.frequencies[j] - frf.frequencies[i]);
        }
        i = j;
    }
}

}  // namespace

void validate(const SweepSpec& spec) {
    if (!(spec.sample_rate > 0.0)) throw ConfigError("sweep sample_rate must be positive");
    if (!(spec.f_start > 0.0 && spec.f_start < spec.f_end)) throw ConfigError("sweep needs 0 < f_start < f_end");
    if (!(spec.f_end < spec.sample_rate / 2.0)) {
        throw ConfigError("sweep f_end must be below the Nyquist frequency sample_rate/2");
    }
    if (!(spec.duration > 0.0)) throw ConfigError("sweep duration must be positive");
    if (!std::isfinite(spec.amplitude)) throw ConfigError("sweep amplitude must be finite");
}

std::vector<double> linear_chirp(const SweepSpec& spec) {
    validate(spec);
    const auto n = static_cast<std::size_t>(std::llround(spec.duration * spec.sample_rate));
    const double sweep = (spec.f_end - spec.f_start) / (2.0 * spec.duration);
    std::vector<double> u(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / spec.sample_rate;
        // Reduce the cycle count before scaling by 2 pi to keep the phase accurate.
        double cycles = t * (spec.f_start + sweep * t);
        cycles -= std::floor(cycles);
        u[i] = spec.amplitude * std::sin(kTwoPi * cycles);
    }
    return u;
}

double chirp_frequency_at(const SweepSpec& spec, double t) {
    return spec.f_start + (spec.f_end - spec.f_start) * t / spec.duration;
}

FrequencyResponse FrequencyResponse::band(double f_min, double f_max) const {
    FrequencyResponse out;
    for (std::size_t i = 0; i < size(); ++i) {
        if (!valid[i] || frequencies[i] < f_min || frequencies[i] > f_max) continue;
        out.frequencies.push_back(frequencies[i]);
        out.magnitude.push_back(magnitude[i]);
        out.phase.push_back(phase[i]);
        out.coherence.push_back(coherence[i]);
        out.valid.push_back(1);
    }
    return out;
}

FrequencyResponse estimate_frf(std::span<const double> input, std::span<const double> output, double sample_rate,
                               const WelchOptions& options) {
    if (!(sample_rate > 0.0)) throw ConfigError("sample_rate must be positive");
    if (input.size() != output.size()) throw DomainError("input and output must have equal length");
    std::size_t n = options.segment_length;
    if (n == 0) n = static_cast<std::size_t>(std::llround(sample_rate));
    if (n < 4) throw ConfigError("Welch segment length must be at least 4 samples");
    if (!(options.overlap >= 0.0 && options.overlap < 1.0)) throw ConfigError("Welch overlap must be in [0, 1)");
    const auto hop = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(n * (1.0 - options.overlap))));
    if (input.size() < n + hop) {
        throw DomainError("signal too short: need at least two Welch segments of " + std::to_string(n) + " samples");
    }

    std::vector<double> window(n);
    for (std::size_t i = 0; i < n; ++i) window[i] = 0.5 * (1.0 - std::cos(kTwoPi * i / n));

    const std::size_t bins = n / 2 + 1;
    std::vector<double> suu(bins, 0.0), syy(bins, 0.0);
    std::vector<std::complex<double>> suy(bins, 0.0);
    std::vector<std::complex<double>> ubins(bins);

    RealFft fft(n);
    for (std::size_t start = 0; start + n <= input.size(); start += hop) {
        for (std::size_t i = 0; i < n; ++i) fft.input()[i] = window[i] * input[start + i];
        fft.execute();
        for (std::size_t k = 0; k < bins; ++k) ubins[k] = fft.bin(k);
        for (std::size_t i = 0; i < n; ++i) fft.input()[i] = window[i] * output[start + i];
        fft.execute();
        for (std::size_t k = 0; k < bins; ++k) {
            const auto y = fft.bin(k);
            suu[k] += std::norm(ubins[k]);
            syy[k] += std::norm(y);
            suy[k] += std::conj(ubins[k]) * y;
        }
    }

    const double peak = *std::max_element(suu.begin(), suu.end());
    FrequencyResponse frf;
    frf.frequencies.resize(bins);
    frf.magnitude.resize(bins);
    frf.phase.resize(bins);
    frf.coherence.resize(bins);
    frf.valid.resize(bins);
    for (std::size_t k = 0; k < bins; ++k) {
        frf.frequencies[k] = k * sample_rate / n;
        const bool ok = peak > 0.0 && suu[k] > options.min_power_ratio * peak;
        frf.valid[k] = ok ? 1 : 0;
        if (!ok) {
            frf.magnitude[k] = 0.0;
            frf.phase[k] = 0.0;
            frf.coherence[k] = 0.0;
            continue;
        }
        const auto h = suy[k] / suu[k];
        frf.magnitude[k] = std::abs(h);
        frf.phase[k] = std::arg(h);
        frf.coherence[k] = syy[k] > 0.0 ? std::norm(suy[k]) / (suu[k] * syy[k]) : 0.0;
    }
    return frf;
}

FrequencyResponse analytic_frf(const TransferFunction2& tf, std::span<const double> frequencies, double delay_s) {
    validate(tf);
    FrequencyResponse frf;
    for (double f : frequencies) {
        const auto h = model_response(tf.b0, tf.a1, tf.a0, kTwoPi * f, delay_s);
        frf.frequencies.push_back(f);
        frf.magnitude.push_back(std::abs(h));
        frf.phase.push_back(std::arg(h));
        frf.coherence.push_back(1.0);
        frf.valid.push_back(1);
    }
    return frf;
}

SecondOrderFit fit_second_order(const FrequencyResponse& raw, const FitOptions& options) {
    const FrequencyResponse frf = raw.band(options.f_min, options.f_max);
    if (frf.size() < 4) throw FitError("fewer than four valid FRF bins in the fit band", 0.0);
    for (std::size_t i = 1; i < frf.size(); ++i) {
        if (!(frf.frequencies[i] > frf.frequencies[i - 1])) throw DomainError("FRF frequencies must be increasing");
    }

    // Initial guess: peak frequency, half-power bandwidth, low-frequency gain.
    std::size_t peak = 0;
    for (std::size_t i = 1; i < frf.size(); ++i) {
        if (frf.magnitude[i] > frf.magnitude[peak]) peak = i;
    }
    const double w_peak = kTwoPi * std::max(frf.frequencies[peak], 1e-9);
    const double level = frf.magnitude[peak] / std::sqrt(2.0);
    const auto lo = half_power_crossing(frf, peak, level, -1);
    const auto hi = half_power_crossing(frf, peak, level, +1);
    TransferFunction2 guess;
    guess.a0 = w_peak * w_peak;
    guess.a1 = (lo && hi) ? kTwoPi * (*hi - *lo) : w_peak;
    // Low-frequency gain b0/a0, corrected by the model magnitude at the first bin.
    const double w_first = kTwoPi * frf.frequencies.front();
    const double shape = std::abs(model_response(1.0, guess.a1, guess.a0, w_first, 0.0));
    guess.b0 = frf.magnitude.front() / shape;

    FitFunctor fn;
    for (std::size_t i = 0; i < frf.size(); ++i) {
        const double mag = frf.magnitude[i];
        if (!(mag > 0.0)) continue;
        fn.omega.push_back(kTwoPi * frf.frequencies[i]);
        fn.h.push_back(frf.value(i));
        fn.weight.push_back(frf.coherence[i] / mag);
    }
    if (fn.omega.size() < 4) throw FitError("fewer than four usable FRF bins", 0.0);
    fn.scale = {guess.b0, guess.a1, guess.a0};
    fn.delay = options.delay_s;

    Eigen::VectorXd p = Eigen::VectorXd::Ones(3);
    Eigen::LevenbergMarquardt<FitFunctor> lm(fn);
    lm.parameters.maxfev = 2000;
    lm.parameters.xtol = 1e-14;
    lm.parameters.ftol = 1e-14;
    const auto status = lm.minimize(p);

    Eigen::VectorXd r(fn.values());
    fn(p, r);
    double wnorm = 0.0;
    for (std::size_t i = 0; i < fn.omega.size(); ++i) wnorm += std::pow(fn.weight[i] * std::abs(fn.h[i]), 2);
    const double residual = wnorm > 0.0 ? std::sqrt(r.squaredNorm() / wnorm) : 0.0;

    SecondOrderFit fit;
    fit.initial_guess = guess;
    fit.tf = {p[0] * fn.scale[0], p[1] * fn.scale[1], p[2] * fn.scale[2]};
    fit.residual = residual;
    fit.iterations = static_cast<int>(lm.iter);

    if (status == Eigen::LevenbergMarquardtSpace::ImproperInputParameters || !p.allFinite()) {
        throw FitError("least-squares solver failed (status " + std::to_string(static_cast<int>(status)) + ")",
                       residual);
    }
    if (!(fit.tf.b0 > 0.0 && fit.tf.a1 > 0.0 && fit.tf.a0 > 0.0)) {
        throw FitError("fit converged to non-physical coefficients", residual);
    }
    if (residual > options.max_relative_residual) {
        throw FitError("fit residual " + std::to_string(residual) + " exceeds threshold " +
                           std::to_string(options.max_relative_residual),
                       residual);
    }
    const double fn_hz = std::sqrt(fit.tf.a0) / kTwoPi;
    if (fn_hz < frf.frequencies.front() || fn_hz > frf.frequencies.back()) {
        throw FitError("fitted natural frequency " + std::to_string(fn_hz) + " Hz lies outside the data band", residual);
    }
    return fit;
}

std::vector<double> simulate_open_loop(const AxisModel& model, std::span<const double> input, double sample_rate,
                                       NoiseModel* noise) {
    if (!(sample_rate > 0.0)) throw ConfigError("sample_rate must be positive");
    const double dt = 1.0 / sample_rate;
    AxisState x;
    std::vector<double> y(input.size());
    for (std::size_t i = 0; i < input.size(); ++i) {
        y[i] = noise ? measure(x, *noise) : x.x1;
        x = step(x, model, input[i], 0.0, dt);
    }
    return y;
}

void write_frf_csv(const FrequencyResponse& frf, const std::filesystem::path& path) {
    csv::Writer w(path);
    w.header({"freq_hz", "mag", "phase_rad"});
    for (std::size_t i = 0; i < frf.size(); ++i) {
        if (!frf.valid[i]) continue;
        const double row[3] = {frf.frequencies[i], frf.magnitude[i], frf.phase[i]};
        w.row(row);
    }
    w.close();
}

FrequencyResponse read_frf_csv(const std::filesystem::path& path) {
    const auto t = csv::read_numeric(path);
    if (t.header.size() != 3) throw ParseError(path.string(), 1, "FRF files have three columns (freq_hz, mag, phase_rad)");
    FrequencyResponse frf;
    frf.frequencies = t.columns[0];
    frf.magnitude = t.columns[1];
    frf.phase = t.columns[2];
    frf.coherence.assign(frf.frequencies.size(), 1.0);
    frf.valid.assign(frf.frequencies.size(), 1);
    for (std::size_t i = 1; i < frf.size(); ++i) {
        if (!(frf.frequencies[i] > frf.frequencies[i - 1])) {
            throw ParseError(path.string(), i + 2, "frequencies must be strictly increasing");
        }
    }
    return frf;
}

}  // namespace flexpos
