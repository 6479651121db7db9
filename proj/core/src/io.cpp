#include "s2sflow/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "s2sflow/csv.hpp"
#include "s2sflow/errors.hpp"

namespace s2sflow::io {

using csv::format_number;
using csv::Table;
using nlohmann::ordered_json;

namespace {

std::string num(double v) { return format_number(v); }

// Reads `base` or the `base_ls` + `base_cp` pair.
double precip_value(const Table& t, std::size_t row, const std::string& base) {
  if (auto c = t.column(base)) return t.number(row, *c);
  const auto ls = t.column(base + "_ls");
  const auto cp = t.column(base + "_cp");
  if (!ls || !cp) t.fail(row, fmt::format("missing column '{}' (or '{}_ls' and '{}_cp')", base, base, base));
  return t.number(row, *ls) + t.number(row, *cp);
}

Date date_cell(const Table& t, std::size_t row, std::size_t col) {
  try {
    return parse_date(t.cell(row, col));
  } catch (const InputError& e) {
    t.fail(row, e.what());
  }
}

fs::path sidecar_path(const fs::path& csv_path) {
  fs::path p = csv_path;
  p.replace_extension(".json");
  return p;
}

ordered_json to_json(const std::vector<double>& v) {
  ordered_json a = ordered_json::array();
  for (double x : v) {
    if (std::isnan(x)) {
      a.push_back(nullptr);
    } else {
      a.push_back(x);
    }
  }
  return a;
}

// Nulls stand for missing values.
std::vector<double> number_array(const ordered_json& a) {
  std::vector<double> out;
  for (const auto& x : a) out.push_back(x.is_null() ? kMissing : x.get<double>());
  return out;
}

std::vector<double> doubles(const ordered_json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_array()) throw InputError(fmt::format("model JSON: missing array '{}'", key));
  return number_array(j.at(key));
}

}  // namespace

// ------------------------------------------------------------ telemetry

std::vector<telemetry::TelemetryRecord> read_telemetry(const fs::path& path) {
  const auto t = Table::read(path);
  const auto ct = t.require_column("timestamp");
  const auto cl = t.require_column("water_level_m");
  const auto cp = t.require_column("power_w");
  std::vector<telemetry::TelemetryRecord> out;
  out.reserve(t.rows());
  for (std::size_t r = 0; r < t.rows(); ++r) {
    telemetry::TelemetryRecord rec;
    try {
      rec.timestamp = parse_instant(t.cell(r, ct));
    } catch (const InputError& e) {
      t.fail(r, e.what());
    }
    rec.water_level_m = t.number(r, cl);
    rec.power_w = t.number(r, cp);
    if (!out.empty() && rec.timestamp <= out.back().timestamp) t.fail(r, "timestamps must be strictly increasing");
    out.push_back(rec);
  }
  return out;
}

void write_telemetry(const fs::path& path, const std::vector<telemetry::TelemetryRecord>& records) {
  std::string s = "timestamp,water_level_m,power_w\n";
  for (const auto& r : records) {
    s += fmt::format("{},{},{}\n", format_instant(r.timestamp), num(r.water_level_m), num(r.power_w));
  }
  csv::write_file(path, s);
}

telemetry::Grid2D read_grid(const fs::path& path) {
  const auto t = Table::read(path);
  if (t.header().size() < 3) throw InputError(fmt::format("{}: grid needs at least two level columns", path.string()));
  std::vector<double> levels;
  for (std::size_t c = 1; c < t.header().size(); ++c) {
    try {
      levels.push_back(std::stod(t.header()[c]));
    } catch (const std::exception&) {
      throw InputError(fmt::format("{}:1: level axis value '{}' is not a number", path.string(), t.header()[c]));
    }
  }
  std::vector<double> powers;
  std::vector<double> values;
  for (std::size_t r = 0; r < t.rows(); ++r) {
    powers.push_back(t.number(r, 0));
    for (std::size_t c = 1; c < t.header().size(); ++c) values.push_back(t.number(r, c));
  }
  try {
    return telemetry::Grid2D(powers, levels, values);
  } catch (const InputError& e) {
    throw InputError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

void write_grid(const fs::path& path, const telemetry::Grid2D& grid) {
  std::string s = "power_w\\level_m";
  for (double l : grid.levels()) s += "," + num(l);
  s += "\n";
  const std::size_t nl = grid.levels().size();
  for (std::size_t i = 0; i < grid.powers().size(); ++i) {
    s += num(grid.powers()[i]);
    for (std::size_t j = 0; j < nl; ++j) s += "," + num(grid.values()[i * nl + j]);
    s += "\n";
  }
  csv::write_file(path, s);
}

telemetry::StorageCurve read_storage(const fs::path& path) {
  const auto t = Table::read(path);
  const auto cl = t.require_column("level_m");
  const auto cv = t.require_column("volume_m3");
  std::vector<double> levels;
  std::vector<double> volumes;
  for (std::size_t r = 0; r < t.rows(); ++r) {
    levels.push_back(t.number(r, cl));
    volumes.push_back(t.number(r, cv));
  }
  try {
    return telemetry::StorageCurve(levels, volumes);
  } catch (const InputError& e) {
    throw InputError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

void write_storage(const fs::path& path, const telemetry::StorageCurve& curve) {
  std::string s = "level_m,volume_m3\n";
  for (std::size_t i = 0; i < curve.levels().size(); ++i) {
    s += fmt::format("{},{}\n", num(curve.levels()[i]), num(curve.volumes()[i]));
  }
  csv::write_file(path, s);
}

telemetry::CompensationSchedule read_compensation(const fs::path& path) {
  const auto t = Table::read(path);
  const auto cs = t.require_column("start_date");
  const auto ce = t.require_column("end_date");
  const auto cf = t.require_column("flow_m3s");
  std::vector<telemetry::CompensationPeriod> periods;
  for (std::size_t r = 0; r < t.rows(); ++r) {
    periods.push_back({date_cell(t, r, cs), date_cell(t, r, ce), t.number(r, cf)});
  }
  try {
    return telemetry::CompensationSchedule(periods);
  } catch (const InputError& e) {
    throw InputError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

void write_compensation(const fs::path& path, const telemetry::CompensationSchedule& schedule) {
  std::string s = "start_date,end_date,flow_m3s\n";
  for (const auto& p : schedule.periods()) {
    s += fmt::format("{},{},{}\n", format_date(p.start), format_date(p.end), num(p.flow_m3s));
  }
  csv::write_file(path, s);
}

void write_inflow(const fs::path& csv_path, const telemetry::InflowSeries& series,
                  const telemetry::CleaningReport* report, const std::vector<telemetry::SkippedRecord>* skipped) {
  std::string s = "date,inflow_norm\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    s += fmt::format("{},{}\n", format_date(series.date_at(i)), num(series.values[i]));
  }
  csv::write_file(csv_path, s);

  ordered_json j;
  j["normalization_constant_m3s"] = series.normalization_constant;
  j["step_days"] = series.step_days;
  j["start_date"] = format_date(series.start);
  j["count"] = series.size();
  if (report != nullptr) {
    ordered_json r;
    r["input_count"] = report->input_count;
    r["kept_count"] = report->kept_count;
    r["removed_fraction"] = report->removed_fraction();
    r["excessive_removal"] = report->excessive_removal;
    ordered_json removed = ordered_json::array();
    for (const auto& rm : report->removed) {
      removed.push_back({{"index", rm.index}, {"reason", telemetry::to_string(rm.reason)}, {"field", rm.field}});
    }
    r["removed"] = removed;
    j["cleaning_report"] = r;
  }
  if (skipped != nullptr) {
    ordered_json a = ordered_json::array();
    for (const auto& sk : *skipped) a.push_back({{"index", sk.index}, {"reason", sk.reason}});
    j["skipped_records"] = a;
  }
  csv::write_file(sidecar_path(csv_path), j.dump(2) + "\n");
}

telemetry::InflowSeries read_inflow(const fs::path& csv_path) {
  const auto t = Table::read(csv_path);
  const auto cd = t.require_column("date");
  const auto cv = t.require_column("inflow_norm");
  if (t.rows() == 0) throw InputError(fmt::format("{}: no inflow rows", csv_path.string()));
  telemetry::InflowSeries s;
  s.start = date_cell(t, 0, cd);
  s.step_days = 1;
  Date prev = s.start - std::chrono::days{1};
  for (std::size_t r = 0; r < t.rows(); ++r) {
    const Date d = date_cell(t, r, cd);
    if (d <= prev) t.fail(r, "dates must be strictly increasing");
    for (Date g = prev + std::chrono::days{1}; g < d; g += std::chrono::days{1}) s.values.push_back(kMissing);
    s.values.push_back(t.number(r, cv));
    prev = d;
  }
  const auto side = sidecar_path(csv_path);
  if (fs::exists(side)) {
    std::ifstream in(side);
    try {
      const auto j = ordered_json::parse(in);
      s.normalization_constant = j.value("normalization_constant_m3s", 1.0);
    } catch (const nlohmann::json::exception& e) {
      throw InputError(fmt::format("{}: {}", side.string(), e.what()));
    }
  }
  return s;
}

// -------------------------------------------------------- forecast data

std::vector<EnsemblePrecipForecast> read_ensemble(const fs::path& path) {
  const auto t = Table::read(path);
  const auto ci = t.require_column("issue_date");
  const auto cm = t.require_column("member");
  const bool six_hourly = t.has_column("lead_step_hours");
  const auto cl = six_hourly ? t.require_column("lead_step_hours") : t.require_column("lead_day");
  const std::string base = six_hourly ? "precip_mm" : "precip_mm_day";

  // (issue, member) -> day index -> accumulated value and count of steps.
  std::map<Date, std::map<long, std::map<long, std::pair<double, int>>>> acc;
  for (std::size_t r = 0; r < t.rows(); ++r) {
    const Date issue = date_cell(t, r, ci);
    const long member = t.integer(r, cm);
    const long lead = t.integer(r, cl);
    const double v = precip_value(t, r, base);
    if (!(v >= 0.0)) t.fail(r, "precipitation must be a non-negative number");
    long day;
    if (six_hourly) {
      if (lead <= 0 || lead % 6 != 0) t.fail(r, "lead_step_hours must be a positive multiple of 6");
      day = (lead - 1) / 24 + 1;  // the step ending at `lead` hours
    } else {
      if (lead <= 0) t.fail(r, "lead_day must be positive");
      day = lead;
    }
    auto& cell = acc[issue][member][day];
    if (!six_hourly && cell.second > 0) t.fail(r, "duplicate (issue_date, member, lead_day)");
    cell.first += v;
    cell.second += 1;
  }

  std::vector<EnsemblePrecipForecast> out;
  for (const auto& [issue, members] : acc) {
    EnsemblePrecipForecast f;
    f.issue_date = issue;
    for (const auto& [member, days] : members) {
      const long n_days = days.rbegin()->first;
      std::vector<double> m(static_cast<std::size_t>(n_days), kMissing);
      for (const auto& [day, cell] : days) {
        if (six_hourly && cell.second != 4) {
          throw InputError(fmt::format("{}: issue {} member {} day {} has {} six-hourly steps, need 4",
                                       path.string(), format_date(issue), member, day, cell.second));
        }
        m[static_cast<std::size_t>(day - 1)] = cell.first;  // 4 x 6 h totals = mm/day
      }
      f.members.push_back(std::move(m));
    }
    try {
      f.validate();
    } catch (const InputError& e) {
      throw InputError(fmt::format("{}: issue {}: {}", path.string(), format_date(issue), e.what()));
    }
    out.push_back(std::move(f));
  }
  return out;
}

void write_ensemble(const fs::path& path, const std::vector<EnsemblePrecipForecast>& forecasts) {
  std::string s = "issue_date,member,lead_day,precip_mm_day\n";
  for (const auto& f : forecasts) {
    const auto issue = format_date(f.issue_date);
    for (std::size_t k = 0; k < f.members.size(); ++k) {
      for (std::size_t d = 0; d < f.members[k].size(); ++d) {
        s += fmt::format("{},{},{},{}\n", issue, k + 1, d + 1, num(f.members[k][d]));
      }
    }
  }
  csv::write_file(path, s);
}

DailySeries read_reanalysis(const fs::path& path) {
  const auto t = Table::read(path);
  const auto cd = t.require_column("date");
  if (t.rows() == 0) throw InputError(fmt::format("{}: no rows", path.string()));
  DailySeries s;
  s.start = date_cell(t, 0, cd);
  Date prev = s.start - std::chrono::days{1};
  for (std::size_t r = 0; r < t.rows(); ++r) {
    const Date d = date_cell(t, r, cd);
    if (d <= prev) t.fail(r, "dates must be strictly increasing");
    for (Date g = prev + std::chrono::days{1}; g < d; g += std::chrono::days{1}) s.values.push_back(kMissing);
    const double v = precip_value(t, r, "precip_mm_day");
    if (v < 0.0) t.fail(r, "precipitation must be non-negative");
    s.values.push_back(v);
    prev = d;
  }
  return s;
}

void write_reanalysis(const fs::path& path, const DailySeries& series) {
  std::string s = "date,precip_mm_day\n";
  for (std::size_t i = 0; i < series.values.size(); ++i) {
    s += fmt::format("{},{}\n", format_date(series.start + std::chrono::days{static_cast<long>(i)}),
                     num(series.values[i]));
  }
  csv::write_file(path, s);
}

MonthlyIndex read_nao(const fs::path& path) {
  const auto t = Table::read(path);
  const auto cy = t.require_column("year");
  const auto cm = t.require_column("month");
  const auto cv = t.require_column("index");
  MonthlyIndex idx;
  for (std::size_t r = 0; r < t.rows(); ++r) {
    const long m = t.integer(r, cm);
    if (m < 1 || m > 12) t.fail(r, "month must be 1-12");
    idx.set(static_cast<int>(t.integer(r, cy)), static_cast<unsigned>(m), t.number(r, cv));
  }
  return idx;
}

void write_nao(const fs::path& path, const MonthlyIndex& index) {
  std::string s = "year,month,index\n";
  for (const auto& [key, v] : index.values()) s += fmt::format("{},{},{}\n", key.first, key.second, num(v));
  csv::write_file(path, s);
}

// --------------------------------------------------------------- models

void write_models(const fs::path& path, const pipeline::TrainedModels& models) {
  ordered_json j;
  j["horizons"] = ordered_json::array();
  for (const auto& h : models.horizons) {
    j["horizons"].push_back({{"name", h.name}, {"start_day", h.start_day}, {"end_day", h.end_day}});
  }
  j["regression"] = ordered_json::array();
  for (std::size_t i = 0; i < models.regressions.size(); ++i) {
    const auto& m = models.regressions[i];
    j["regression"].push_back({{"fold", models.fold_years[i]},
                               {"slope", m.slope},
                               {"intercept", m.intercept},
                               {"excluded_years", m.excluded_years},
                               {"training_pairs", m.n_pairs}});
  }
  j["emos"] = ordered_json::array();
  for (const auto& m : models.emos) {
    const auto& c = m.coefficients;
    const auto& d = m.diagnostics;
    ordered_json e;
    e["horizon"] = m.horizon.name;
    e["fold"] = m.fold_year;
    e["offset"] = m.offset;
    e["knots"] = m.basis.size();
    e["knot_positions"] = to_json(m.basis.knot_positions());
    e["period_days"] = m.basis.period();
    e["log_mu"] = {{"beta", to_json(c.mu_beta)}, {"spline", to_json(c.mu_spline)}};
    e["log_sigma"] = {{"beta", to_json(c.sigma_beta)}, {"spline", to_json(c.sigma_spline)}};
    e["logit_nu"] = {{"beta", to_json(c.nu_beta)}};
    e["standard_errors"] = to_json(m.standard_errors);
    e["diagnostics"] = {{"converged", d.converged},
                        {"iterations", d.iterations},
                        {"loglik", d.loglik},
                        {"penalized_loglik", d.penalized_loglik},
                        {"gradient_norm", d.gradient_norm},
                        {"start_logliks", to_json(d.start_logliks)},
                        {"n_cases", d.n_cases}};
    j["emos"].push_back(e);
  }
  csv::write_file(path, j.dump(2) + "\n");
}

pipeline::TrainedModels read_models(const fs::path& path) {
  if (!fs::exists(path)) throw InputError(fmt::format("trained model file '{}' not found; run `train` first", path.string()));
  std::ifstream in(path);
  pipeline::TrainedModels m;
  try {
    const auto j = ordered_json::parse(in);
    for (const auto& h : j.at("horizons")) {
      m.horizons.push_back({h.at("name").get<std::string>(), h.at("start_day").get<int>(), h.at("end_day").get<int>()});
    }
    for (const auto& r : j.at("regression")) {
      LinearInflowModel lm;
      lm.slope = r.at("slope").get<double>();
      lm.intercept = r.at("intercept").get<double>();
      lm.excluded_years = r.at("excluded_years").get<std::vector<int>>();
      lm.n_pairs = r.at("training_pairs").get<std::size_t>();
      m.fold_years.push_back(r.at("fold").get<int>());
      m.regressions.push_back(lm);
    }
    for (const auto& e : j.at("emos")) {
      EmosModel em;
      em.horizon = horizon_by_name(e.at("horizon").get<std::string>());
      em.fold_year = e.at("fold").get<int>();
      em.offset = e.at("offset").get<double>();
      em.basis = SeasonalSplineBasis(e.at("knots").get<int>(), e.value("period_days", 365.25));
      em.coefficients.mu_beta = doubles(e.at("log_mu"), "beta");
      em.coefficients.mu_spline = doubles(e.at("log_mu"), "spline");
      em.coefficients.sigma_beta = doubles(e.at("log_sigma"), "beta");
      em.coefficients.sigma_spline = doubles(e.at("log_sigma"), "spline");
      em.coefficients.nu_beta = doubles(e.at("logit_nu"), "beta");
      const auto free = static_cast<std::size_t>(em.basis.free_size());
      if (em.coefficients.mu_beta.size() != 3 || em.coefficients.sigma_beta.size() != 3 ||
          em.coefficients.nu_beta.size() != 2 || em.coefficients.mu_spline.size() != free ||
          em.coefficients.sigma_spline.size() != free) {
        throw InputError(fmt::format("EMOS model {} / {}: coefficient vector sizes do not match the basis",
                                     em.horizon.name, em.fold_year));
      }
      if (e.contains("standard_errors")) em.standard_errors = number_array(e.at("standard_errors"));
      const auto& d = e.at("diagnostics");
      em.diagnostics.converged = d.at("converged").get<bool>();
      em.diagnostics.iterations = d.at("iterations").get<int>();
      em.diagnostics.loglik = d.at("loglik").get<double>();
      em.diagnostics.penalized_loglik = d.at("penalized_loglik").get<double>();
      em.diagnostics.gradient_norm = d.at("gradient_norm").get<double>();
      em.diagnostics.start_logliks = number_array(d.at("start_logliks"));
      em.diagnostics.n_cases = d.at("n_cases").get<std::size_t>();
      m.emos.push_back(std::move(em));
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(fmt::format("{}: malformed model JSON: {}", path.string(), e.what()));
  }
  if (!std::is_sorted(m.fold_years.begin(), m.fold_years.end())) {
    throw InputError(fmt::format("{}: regression folds must be in ascending year order", path.string()));
  }
  return m;
}

void write_benchmark(const fs::path& path, const std::vector<pipeline::ForecastCase>& cases) {
  std::string s = "issue_date,horizon,member,inflow_norm\n";
  for (const auto& c : cases) {
    const auto issue = format_date(c.issue_date);
    for (std::size_t k = 0; k < c.benchmark.size(); ++k) {
      s += fmt::format("{},{},{},{}\n", issue, c.horizon.name, k + 1, num(c.benchmark[k]));
    }
  }
  csv::write_file(path, s);
}

void write_forecasts(const fs::path& path, const std::vector<pipeline::ForecastCase>& cases) {
  std::string s = "issue_date,horizon,q05,q25,q50,q75,q95,nu,mu,sigma,offset\n";
  for (const auto& c : cases) {
    const auto& d = c.dist;
    s += fmt::format("{},{},{},{},{},{},{},{},{},{},{}\n", format_date(c.issue_date), c.horizon.name,
                     num(d.user_quantile(0.05)), num(d.user_quantile(0.25)), num(d.user_quantile(0.5)),
                     num(d.user_quantile(0.75)), num(d.user_quantile(0.95)), num(d.nu), num(d.mu), num(d.sigma),
                     num(d.offset));
  }
  csv::write_file(path, s);
}

std::vector<pipeline::ForecastCase> read_forecasts(const fs::path& path) {
  const auto t = Table::read(path);
  const auto ci = t.require_column("issue_date");
  const auto ch = t.require_column("horizon");
  const auto cn = t.require_column("nu");
  const auto cm = t.require_column("mu");
  const auto cs = t.require_column("sigma");
  const auto co = t.require_column("offset");
  std::vector<pipeline::ForecastCase> out;
  for (std::size_t r = 0; r < t.rows(); ++r) {
    pipeline::ForecastCase c;
    c.issue_date = date_cell(t, r, ci);
    try {
      c.horizon = horizon_by_name(t.cell(r, ch));
    } catch (const InputError& e) {
      t.fail(r, e.what());
    }
    c.fold_year = year_of(c.issue_date);
    c.dist = {t.number(r, cm), t.number(r, cs), t.number(r, cn), t.number(r, co)};
    try {
      c.dist.validate();
    } catch (const DomainError& e) {
      t.fail(r, e.what());
    }
    out.push_back(std::move(c));
  }
  return out;
}

// --------------------------------------------------------- verification

void write_skill_report(const fs::path& path, const std::vector<SkillTable>& tables) {
  ordered_json j = ordered_json::array();
  for (const auto& t : tables) {
    for (const auto& r : t.reports) {
      j.push_back({{"source", t.source},
                   {"horizon", r.horizon},
                   {"stratum", r.stratum},
                   {"fcrpss", r.fcrpss},
                   {"se", r.standard_error},
                   {"lower", r.lower},
                   {"upper", r.upper},
                   {"spread_method", r.spread_method},
                   {"class", to_string(r.skill_class)},
                   {"n", r.n}});
    }
  }
  csv::write_file(path, j.dump(2) + "\n");
}

void write_reliability(const fs::path& path,
                       const std::vector<std::pair<std::string, ReliabilityDiagram>>& diagrams) {
  std::string s = "horizon,level,coverage,n\n";
  for (const auto& [h, d] : diagrams) {
    for (std::size_t i = 0; i < d.levels.size(); ++i) {
      s += fmt::format("{},{},{},{}\n", h, num(d.levels[i]), num(d.coverage[i]), d.n);
    }
  }
  csv::write_file(path, s);
}

// ----------------------------------------------------------- cost model

void write_value_report(const fs::path& path, const std::vector<ValueRow>& rows) {
  std::string s = "forecast_type,horizon,differential,water_value,se,n\n";
  for (const auto& r : rows) {
    s += fmt::format("{},{},{},{},{},{}\n", to_string(r.type), r.horizon, num(r.differential), num(r.water_value),
                     num(r.se), r.n);
  }
  csv::write_file(path, s);
}

void write_value_gain(const fs::path& path, const std::vector<ValueRow>& rows) {
  std::string s = "forecast_type,horizon,differential,gain_vs_climatology,se,n\n";
  for (const auto& r : rows) {
    if (r.type == ForecastType::Climatological) continue;
    s += fmt::format("{},{},{},{},{},{}\n", to_string(r.type), r.horizon, num(r.differential), num(r.gain),
                     num(r.gain_se), r.n);
  }
  csv::write_file(path, s);
}

void write_decisions(const fs::path& path, const std::vector<CaseDecision>& decisions) {
  std::string s = "issue_date,horizon,type,A,stage1,stage2,total\n";
  for (const auto& d : decisions) {
    s += fmt::format("{},{},{},{},{},{},{}\n", format_date(d.issue_date), d.horizon, to_string(d.type), num(d.A),
                     num(d.cost.stage1), num(d.cost.stage2), num(d.cost.total));
  }
  csv::write_file(path, s);
}

}  // namespace s2sflow::io
