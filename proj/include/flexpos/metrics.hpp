#pragma once

#include <cstddef>
#include <span>

namespace flexpos {

/// sqrt(mean((actual - desired)^2)). Throws DomainError on empty or mismatched series.
double rmse(std::span<const double> actual, std::span<const double> desired);

double max_abs_error(std::span<const double> actual, std::span<const double> desired);

/// Largest separation between the ascending- and descending-input branches of
/// the output, as a percentage of the output range. The input range is split
/// into `bins` cells and each branch is averaged per cell. Throws DomainError
/// unless the input both rises and falls over a common range.
double hysteresis_width_percent(std::span<const double> input, std::span<const double> output,
                                std::size_t bins = 100);

/// 100 (1 - rmse_new / rmse_base); DomainError for a non-positive baseline.
double improvement_percent(double rmse_new, double rmse_base);

}  // namespace flexpos
