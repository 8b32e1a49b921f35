#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "flexpos/experiment.hpp"

namespace flexpos {

/// Column names of timeseries.csv: t, then per axis
/// {axis}_desired, _measured, _true, _u, _d, _d_hat, _s.
std::vector<std::string> timeseries_header(const ExperimentRecord& record);

void write_timeseries_csv(const ExperimentRecord& record, const std::filesystem::path& path);

/// Re-ingests a timeseries.csv; metrics are recomputed from the series.
ExperimentRecord read_timeseries_csv(const std::filesystem::path& path);

/// Metrics summary as JSON text.
std::string metrics_json(const ExperimentRecord& record);

/// timeseries.csv, metrics.json, tracking.svg, error.svg, hysteresis.svg.
/// Returns the written paths.
std::vector<std::filesystem::path> emit_outputs(const ExperimentRecord& record, const std::filesystem::path& dir);

/// One sub-directory per controller plus comparison.json.
std::vector<std::filesystem::path> emit_comparison(const Comparison& cmp, const std::filesystem::path& dir);

/// frf_<axis>.csv, fitted_plant.cfg (loadable as plant.file), metrics.json, frf.svg.
std::vector<std::filesystem::path> emit_sysid(const std::vector<SysidAxisResult>& results,
                                              const std::filesystem::path& dir);

std::vector<std::filesystem::path> emit_resolution(const ExperimentRecord& record,
                                                   const std::vector<ResolutionAxisResult>& res,
                                                   const std::filesystem::path& dir);

/// workspace.json, workspace_vertices.csv, workspace.svg.
std::vector<std::filesystem::path> emit_workspace(const InverseJacobian& jinv, double stroke_half,
                                                  const std::filesystem::path& dir);

/// Creates `dir` (and parents); IoError with the path on failure.
void ensure_directory(const std::filesystem::path& dir);

}  // namespace flexpos
