#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "s2sflow/cost_model.hpp"
#include "s2sflow/emos.hpp"
#include "s2sflow/forecast_data.hpp"
#include "s2sflow/regression.hpp"
#include "s2sflow/synth.hpp"
#include "s2sflow/telemetry.hpp"

namespace s2sflow::cli {

namespace fs = std::filesystem;

/// Input file locations. Empty paths fall back to the run directory layout
/// (see `resolve`).
struct InputPaths {
  fs::path ensemble;
  fs::path inflow;
  fs::path reanalysis;
  fs::path nao;
  fs::path telemetry;
  fs::path storage;
  fs::path efficiency;
  fs::path head;
  fs::path compensation;
  fs::path models;
};

struct SynthSettings {
  synth::ScenarioConfig scenario;
  bool telemetry = false;  // also forward-simulate plant telemetry
  int telemetry_days = 365;
  double compensation_m3s = 0.5;
};

struct IngestSettings {
  telemetry::PhysicalBounds bounds{150.0, 250.0, 4.5e7};
  telemetry::StepLimits steps{0.5, 4.0e7};
  telemetry::Window window = telemetry::Window::Daily;
  double min_coverage = 0.8;
  int max_lag = 10;  // days, for the precipitation cross-correlation
};

struct TrainSettings {
  std::vector<HorizonSpec> horizons = canonical_horizons();
  CvOptions cv;
  EmosFitOptions emos;
};

struct VerifySettings {
  int crps_levels = 1024;
  std::size_t replicates = 1000;
  std::size_t min_cases = 20;
  std::size_t min_climatology_years = 3;
  double nao_threshold = 0.4;
  std::vector<double> reliability_levels;  // 0.05 ... 0.95 by default
};

struct CostSettings {
  OperatingEnvelope envelope;
  SweepOptions sweep;
  int quadrature_nodes = 256;
  double decision_differential = 30.0;  // price differential for decisions.csv
};

struct RunConfig {
  std::uint64_t seed = 1;
  unsigned threads = 1;
  InputPaths inputs;
  SynthSettings synth;
  IngestSettings ingest;
  TrainSettings train;
  VerifySettings verify;
  CostSettings cost;

  RunConfig();
  /// Throws InputError naming the offending `section.key`.
  void validate() const;
  /// Deterministic `section.key = value` listing of every setting; its hash
  /// identifies the configuration in run manifests.
  [[nodiscard]] std::string canonical_text() const;
};

/// Parses `[section]` / `key = value` text. Relative input paths are taken
/// relative to `base_dir`. Errors carry `source:line:`.
RunConfig parse_config(std::string_view text, const std::string& source, const fs::path& base_dir);
RunConfig load_config(const fs::path& path);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes);
std::string hex64(std::uint64_t v);

}  // namespace s2sflow::cli
