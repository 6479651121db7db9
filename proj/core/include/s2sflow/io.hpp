#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "s2sflow/cost_model.hpp"
#include "s2sflow/forecast_data.hpp"
#include "s2sflow/pipeline.hpp"
#include "s2sflow/regression.hpp"
#include "s2sflow/telemetry.hpp"
#include "s2sflow/verification.hpp"

/// File formats. Readers throw InputError with `file:line:` context;
/// writers create parent directories and emit deterministic text.
namespace s2sflow::io {

namespace fs = std::filesystem;

// telemetry_ingest
std::vector<telemetry::TelemetryRecord> read_telemetry(const fs::path& path);  // timestamp,water_level_m,power_w
void write_telemetry(const fs::path& path, const std::vector<telemetry::TelemetryRecord>& records);

/// Grid CSV: the header row holds a corner label followed by the water
/// levels (m); each data row holds a power (W) followed by the values.
telemetry::Grid2D read_grid(const fs::path& path);
void write_grid(const fs::path& path, const telemetry::Grid2D& grid);
telemetry::StorageCurve read_storage(const fs::path& path);  // level_m,volume_m3
void write_storage(const fs::path& path, const telemetry::StorageCurve& curve);
telemetry::CompensationSchedule read_compensation(const fs::path& path);  // start_date,end_date,flow_m3s
void write_compensation(const fs::path& path, const telemetry::CompensationSchedule& schedule);

/// `date,inflow_norm`; the JSON sidecar (same stem, `.json`) carries the
/// normalization constant and, when given, the cleaning report.
void write_inflow(const fs::path& csv_path, const telemetry::InflowSeries& series,
                  const telemetry::CleaningReport* report = nullptr,
                  const std::vector<telemetry::SkippedRecord>* skipped = nullptr);
/// Reads a daily inflow CSV; gaps in the date sequence become NaN.
telemetry::InflowSeries read_inflow(const fs::path& csv_path);

// forecast_data
/// Long-form ensemble CSV. Accepts `issue_date,member,lead_day,precip_mm_day`
/// or 6-hourly `issue_date,member,lead_step_hours,precip_mm` (steps summed to
/// daily totals). Either precipitation column may instead be given as a
/// large-scale/convective pair (`*_ls`, `*_cp` suffixes), which is summed.
std::vector<EnsemblePrecipForecast> read_ensemble(const fs::path& path);
void write_ensemble(const fs::path& path, const std::vector<EnsemblePrecipForecast>& forecasts);

DailySeries read_reanalysis(const fs::path& path);  // date,precip_mm_day (or _ls/_cp pair)
void write_reanalysis(const fs::path& path, const DailySeries& series);

MonthlyIndex read_nao(const fs::path& path);  // year,month,index
void write_nao(const fs::path& path, const MonthlyIndex& index);

// benchmark_regression + emos_calibration
void write_models(const fs::path& path, const pipeline::TrainedModels& models);
pipeline::TrainedModels read_models(const fs::path& path);
void write_benchmark(const fs::path& path, const std::vector<pipeline::ForecastCase>& cases);  // issue_date,horizon,member,inflow_norm
void write_forecasts(const fs::path& path, const std::vector<pipeline::ForecastCase>& cases);
/// issue_date,horizon,q05,q25,q50,q75,q95,nu,mu,sigma,offset; q columns are
/// informational, the distribution is rebuilt from nu,mu,sigma,offset.
std::vector<pipeline::ForecastCase> read_forecasts(const fs::path& path);

// verification
struct SkillTable {
  std::string source;  // "emos" or "benchmark"
  std::vector<SkillReport> reports;
};
void write_skill_report(const fs::path& path, const std::vector<SkillTable>& tables);
void write_reliability(const fs::path& path, const std::vector<std::pair<std::string, ReliabilityDiagram>>& diagrams);

// cost_model
void write_value_report(const fs::path& path, const std::vector<ValueRow>& rows);
void write_value_gain(const fs::path& path, const std::vector<ValueRow>& rows);
void write_decisions(const fs::path& path, const std::vector<CaseDecision>& decisions);

}  // namespace s2sflow::io
