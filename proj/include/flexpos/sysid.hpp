#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <span>
#include <vector>

#include "flexpos/axis_dynamics.hpp"

namespace flexpos {

struct SweepSpec {
    double f_start = 1.0;
    double f_end = 250.0;
    double duration = 60.0;
    double amplitude = 1.0;
    double sample_rate = 10000.0;
};

void validate(const SweepSpec& spec);

/// amplitude * sin(2 pi (f_start t + (f_end - f_start) t^2 / (2 duration)))
std::vector<double> linear_chirp(const SweepSpec& spec);
double chirp_frequency_at(const SweepSpec& spec, double t);

struct WelchOptions {
    std::size_t segment_length = 0;  // 0: one second of samples
    double overlap = 0.5;
    /// Bins whose input power is below this fraction of the peak are flagged invalid.
    double min_power_ratio = 1e-8;
};

struct FrequencyResponse {
    std::vector<double> frequencies;  // Hz, strictly increasing
    std::vector<double> magnitude;
    std::vector<double> phase;        // rad, wrapped to (-pi, pi]
    std::vector<double> coherence;
    std::vector<std::uint8_t> valid;

    std::size_t size() const { return frequencies.size(); }
    std::complex<double> value(std::size_t i) const { return std::polar(magnitude[i], phase[i]); }
    /// Keeps only valid bins inside [f_min, f_max].
    FrequencyResponse band(double f_min, double f_max) const;
};

/// Welch H1 estimate S_uy / S_uu with Hann windows.
FrequencyResponse estimate_frf(std::span<const double> input, std::span<const double> output, double sample_rate,
                               const WelchOptions& options = {});

/// Samples b0 / (s^2 + a1 s + a0) at the given frequencies, optionally with a pure delay.
FrequencyResponse analytic_frf(const TransferFunction2& tf, std::span<const double> frequencies,
                               double delay_s = 0.0);

struct FitOptions {
    double f_min = 0.0;
    double f_max = std::numeric_limits<double>::infinity();
    /// Known pure delay in the data (e.g. half a sample for a zero-order-hold drive).
    double delay_s = 0.0;
    /// Rejection threshold on the weighted RMS relative residual.
    double max_relative_residual = 0.05;
};

struct SecondOrderFit {
    TransferFunction2 tf;
    TransferFunction2 initial_guess;
    double residual = 0.0;  // weighted RMS relative residual
    int iterations = 0;
};

/// Weighted complex least-squares fit of b0 / (s^2 + a1 s + a0). Throws FitError when
/// the solver fails, the residual exceeds the threshold, or f_n lies outside the data band.
SecondOrderFit fit_second_order(const FrequencyResponse& frf, const FitOptions& options = {});

/// Drives the axis from rest with a zero-order-held input; returns the sampled position.
std::vector<double> simulate_open_loop(const AxisModel& model, std::span<const double> input, double sample_rate,
                                       NoiseModel* noise = nullptr);

void write_frf_csv(const FrequencyResponse& frf, const std::filesystem::path& path);
FrequencyResponse read_frf_csv(const std::filesystem::path& path);

}  // namespace flexpos
