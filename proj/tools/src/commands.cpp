#include "commands.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>

#include <fmt/format.h>
#include <json.hpp>

#include "s2sflow/csv.hpp"
#include "s2sflow/errors.hpp"
#include "s2sflow/io.hpp"
#include "s2sflow/pipeline.hpp"
#include "s2sflow/random.hpp"
#include "s2sflow/synth.hpp"
#include "s2sflow/telemetry.hpp"

#ifndef S2SFLOW_VERSION
#define S2SFLOW_VERSION "unknown"
#endif

namespace s2sflow::cli {

namespace {

using ordered_json = nlohmann::ordered_json;

// Independent random streams derived from the run seed.
enum Stream : std::uint64_t { kScenario = 0, kEmos = 1, kSkill = 2, kSweep = 3, kPit = 4 };

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string display_path(const fs::path& p, const fs::path& out) {
  const auto rel = p.lexically_relative(out);
  if (!rel.empty() && *rel.begin() != "..") return rel.generic_string();
  return p.generic_string();
}

/// Collects the files a command read and wrote, then records them with
/// their hashes next to the configuration that produced them.
class Manifest {
public:
  explicit Manifest(const Invocation& inv) : inv_(inv) {}

  void input(const fs::path& p) { inputs_.push_back(p); }
  fs::path output(const fs::path& relative) {
    outputs_.push_back(relative);
    return inv_.out / relative;
  }
  void note(const std::string& key, const std::string& value) { notes_[key] = value; }

  void write() const {
    const std::string& config = inv_.config_text;
    ordered_json j;
    j["command"] = inv_.command;
    j["versions"] = {{"s2sflow", S2SFLOW_VERSION},
                     {"fmt", FMT_VERSION},
                     {"nlohmann_json", fmt::format("{}.{}.{}", NLOHMANN_JSON_VERSION_MAJOR,
                                                   NLOHMANN_JSON_VERSION_MINOR, NLOHMANN_JSON_VERSION_PATCH)},
                     {"compiler", __VERSION__}};
    j["seed"] = inv_.config.seed;
    j["config_hash"] = hex64(fnv1a(config));
    ordered_json lines = ordered_json::array();
    std::size_t start = 0;
    while (start < config.size()) {
      const auto end = config.find('\n', start);
      lines.push_back(config.substr(start, end - start));
      start = end + 1;
    }
    j["config"] = lines;
    auto files = [&](const std::vector<fs::path>& paths, bool relative_to_out) {
      ordered_json arr = ordered_json::array();
      for (const auto& p : paths) {
        const fs::path full = relative_to_out ? inv_.out / p : p;
        arr.push_back({{"path", relative_to_out ? p.generic_string() : display_path(p, inv_.out)},
                       {"fnv1a", hex64(fnv1a(read_bytes(full)))}});
      }
      return arr;
    };
    j["inputs"] = files(inputs_, false);
    j["outputs"] = files(outputs_, true);
    if (!notes_.empty()) j["notes"] = notes_;
    csv::write_file(inv_.out / "manifests" / (inv_.command + ".json"), j.dump(2) + "\n");
  }

private:
  const Invocation& inv_;
  std::vector<fs::path> inputs_;
  std::vector<fs::path> outputs_;
  std::map<std::string, std::string> notes_;
};

void require_file(const fs::path& p, const std::string& what) {
  if (!fs::exists(p)) throw InputError(fmt::format("missing {}: {} not found", what, p.generic_string()));
}

// ------------------------------------------------------------ shared steps

struct Evaluated {
  pipeline::TrainedModels models;
  std::vector<EnsemblePrecipForecast> forecasts;
  DailySeries inflow;
  std::vector<pipeline::ScoredCase> scored;
};

pipeline::TrainedModels load_models(const Invocation& inv, Manifest& m) {
  const auto& p = inv.config.inputs.models;
  require_file(p, "trained model artifact (run `train` first)");
  m.input(p);
  return io::read_models(p);
}

DailySeries load_inflow(const Invocation& inv, Manifest& m) {
  require_file(inv.config.inputs.inflow, "inflow series");
  m.input(inv.config.inputs.inflow);
  return to_daily(io::read_inflow(inv.config.inputs.inflow));
}

std::vector<EnsemblePrecipForecast> load_ensemble(const Invocation& inv, Manifest& m) {
  require_file(inv.config.inputs.ensemble, "ensemble forecasts");
  m.input(inv.config.inputs.ensemble);
  return io::read_ensemble(inv.config.inputs.ensemble);
}

Evaluated evaluate(const Invocation& inv, Manifest& m) {
  Evaluated e;
  // The model artifact is checked first so that its absence is the
  // reported problem.
  e.models = load_models(inv, m);
  e.forecasts = load_ensemble(inv, m);
  e.inflow = load_inflow(inv, m);
  const auto cases = pipeline::apply(e.models, e.forecasts, &e.inflow);
  pipeline::ScoreOptions so;
  so.crps_levels = inv.config.verify.crps_levels;
  so.min_climatology_years = inv.config.verify.min_climatology_years;
  so.threads = inv.config.threads;
  e.scored = pipeline::score(cases, e.inflow, so);
  if (e.scored.empty()) throw InputError("no forecast case has both an observation and a climatology");
  return e;
}

std::string num(double v) { return csv::format_number(v); }

}  // namespace

void resolve_inputs(Invocation& inv) {
  inv.config_text = inv.config.canonical_text();
  auto& in = inv.config.inputs;
  const fs::path data = inv.out / "data";
  const fs::path tel = data / "telemetry";
  auto fill = [](fs::path& p, const fs::path& def) {
    if (p.empty()) p = def;
  };
  fill(in.ensemble, data / "ensemble.csv");
  fill(in.inflow, data / "inflow.csv");
  fill(in.reanalysis, data / "reanalysis.csv");
  fill(in.nao, data / "nao.csv");
  fill(in.telemetry, tel / "telemetry.csv");
  fill(in.storage, tel / "storage.csv");
  fill(in.efficiency, tel / "efficiency.csv");
  fill(in.head, tel / "head.csv");
  fill(in.compensation, tel / "compensation.csv");
  fill(in.models, inv.out / "models.json");
}

// ---------------------------------------------------------------- synth

void run_synth(const Invocation& inv) {
  Manifest m(inv);
  const auto& cfg = inv.config;
  auto sc = cfg.synth.scenario;
  sc.seed = derive_seed(cfg.seed, kScenario);
  sc.threads = static_cast<int>(cfg.threads);
  const auto scenario = synth::generate_scenario(sc);

  io::write_ensemble(m.output("data/ensemble.csv"), scenario.forecasts);
  io::write_reanalysis(m.output("data/reanalysis.csv"), scenario.precipitation);
  io::write_inflow(m.output("data/inflow.csv"), scenario.inflow);
  m.output("data/inflow.json");
  io::write_nao(m.output("data/nao.csv"), scenario.nao);

  if (cfg.synth.telemetry) {
    const auto days = std::min<std::size_t>(static_cast<std::size_t>(cfg.synth.telemetry_days),
                                            scenario.raw_inflow.size());
    std::vector<double> daily_m3s(days);
    for (std::size_t i = 0; i < days; ++i) daily_m3s[i] = scenario.raw_inflow[i] * sc.inflow_scale_m3s;
    const Date start = scenario.inflow.start;
    const Date last = start + std::chrono::days{static_cast<long>(days)};
    const auto path = synth::hourly_from_daily(start, daily_m3s);

    synth::TelemetrySimConfig sim;
    sim.curves = synth::default_plant_curves();
    sim.compensation = synth::constant_compensation(start, last, cfg.synth.compensation_m3s);
    double mean = 0.0;
    for (double v : daily_m3s) mean += v;
    sim.mean_discharge_m3s = std::max(0.0, mean / static_cast<double>(days) - cfg.synth.compensation_m3s);
    const auto records = synth::simulate_telemetry(path, sim);

    io::write_telemetry(m.output("data/telemetry/telemetry.csv"), records);
    io::write_storage(m.output("data/telemetry/storage.csv"), sim.curves.storage);
    io::write_grid(m.output("data/telemetry/efficiency.csv"), sim.curves.efficiency);
    io::write_grid(m.output("data/telemetry/head.csv"), sim.curves.net_head);
    io::write_compensation(m.output("data/telemetry/compensation.csv"), sim.compensation);

    // The generating daily inflow, for checking reconstructions.
    std::string truth = "date,inflow_m3s\n";
    for (std::size_t i = 0; i < days; ++i) {
      truth += fmt::format("{},{}\n", format_date(start + std::chrono::days{static_cast<long>(i)}), num(daily_m3s[i]));
    }
    csv::write_file(m.output("data/telemetry/true_inflow.csv"), truth);
  }
  m.write();
}

// ---------------------------------------------------- reconstruct-inflow

void run_reconstruct_inflow(const Invocation& inv) {
  Manifest m(inv);
  const auto& cfg = inv.config;
  const auto& in = cfg.inputs;
  for (const auto* p : {&in.telemetry, &in.storage, &in.efficiency, &in.head, &in.compensation}) {
    require_file(*p, "telemetry input");
    m.input(*p);
  }
  const auto records = io::read_telemetry(in.telemetry);
  telemetry::PlantCurves curves;
  curves.storage = io::read_storage(in.storage);
  curves.efficiency = io::read_grid(in.efficiency);
  curves.net_head = io::read_grid(in.head);
  curves.validate();
  const auto compensation = io::read_compensation(in.compensation);

  const auto cleaned = telemetry::clean_telemetry(records, cfg.ingest.bounds, cfg.ingest.steps);
  const auto hourly = telemetry::reconstruct_net_inflow(cleaned.records, curves, compensation);
  const auto series = telemetry::aggregate_and_normalize(hourly, cfg.ingest.window, cfg.ingest.min_coverage);
  io::write_inflow(m.output("ingest/inflow.csv"), series, &cleaned.report, &hourly.skipped);
  m.output("ingest/inflow.json");
  m.note("removed_fraction", num(cleaned.report.removed_fraction()));
  if (cleaned.report.excessive_removal) {
    m.note("warning", "more than half of the telemetry was removed; check the cleaning thresholds");
    fmt::print(stderr, "warning: {} of {} telemetry records removed\n", cleaned.report.removed.size(),
               cleaned.report.input_count);
  }

  if (cfg.ingest.window == telemetry::Window::Daily && fs::exists(in.reanalysis)) {
    m.input(in.reanalysis);
    const auto precip = io::read_reanalysis(in.reanalysis);
    std::vector<double> a;
    std::vector<double> b;
    for (std::size_t i = 0; i < series.size(); ++i) {
      a.push_back(series.values[i]);
      b.push_back(precip.value_on(series.date_at(i)));
    }
    const auto xc = telemetry::cross_correlation(a, b, -cfg.ingest.max_lag, cfg.ingest.max_lag);
    std::string s = "lag,correlation\n";
    for (std::size_t i = 0; i < xc.lags.size(); ++i) s += fmt::format("{},{}\n", xc.lags[i], num(xc.correlation[i]));
    csv::write_file(m.output("ingest/cross_correlation.csv"), s);
    if (xc.best_lag) m.note("peak_lag_days", std::to_string(*xc.best_lag));
  }
  m.write();
}

// ---------------------------------------------------------------- train

void run_train(const Invocation& inv) {
  Manifest m(inv);
  const auto& cfg = inv.config;
  const auto forecasts = load_ensemble(inv, m);
  const auto inflow = load_inflow(inv, m);
  pipeline::TrainOptions opt;
  opt.horizons = cfg.train.horizons;
  opt.cv = cfg.train.cv;
  opt.cv.threads = cfg.threads;
  opt.emos = cfg.train.emos;
  opt.emos.seed = derive_seed(cfg.seed, kEmos);
  opt.threads = cfg.threads;
  const auto models = pipeline::train(forecasts, inflow, opt);
  io::write_models(m.output("models.json"), models);
  m.write();
}

// ------------------------------------------------------------- forecast

void run_forecast(const Invocation& inv) {
  Manifest m(inv);
  const auto models = load_models(inv, m);
  const auto forecasts = load_ensemble(inv, m);
  std::optional<DailySeries> inflow;
  if (fs::exists(inv.config.inputs.inflow)) inflow = load_inflow(inv, m);
  const auto cases = pipeline::apply(models, forecasts, inflow ? &*inflow : nullptr);
  if (cases.empty()) throw InputError("no ensemble issue falls in a trained fold year");
  io::write_forecasts(m.output("forecasts.csv"), cases);
  io::write_benchmark(m.output("benchmark.csv"), cases);
  m.write();
}

// --------------------------------------------------------------- verify

void run_verify(const Invocation& inv) {
  Manifest m(inv);
  const auto& cfg = inv.config;
  const auto e = evaluate(inv, m);

  std::optional<MonthlyIndex> nao;
  if (fs::exists(cfg.inputs.nao)) {
    m.input(cfg.inputs.nao);
    nao = io::read_nao(cfg.inputs.nao);
  } else {
    m.note("nao", "index not found; NAO strata omitted");
  }

  SkillOptions so;
  so.min_cases = cfg.verify.min_cases;
  so.replicates = cfg.verify.replicates;
  so.seed = derive_seed(cfg.seed, kSkill);

  io::SkillTable emos{"emos", {}};
  io::SkillTable bench{"benchmark", {}};
  io::SkillTable emos_fold{"emos", {}};
  emos.reports = pipeline::horizon_skill(e.scored, e.models.horizons, pipeline::ForecastSource::Emos, so);
  bench.reports = pipeline::horizon_skill(e.scored, e.models.horizons, pipeline::ForecastSource::Benchmark, so);

  std::string by_horizon = "source,horizon,fcrpss,se,lower,upper,class,n\n";
  for (const auto* t : {&emos, &bench}) {
    for (const auto& r : t->reports) {
      by_horizon += fmt::format("{},{},{},{},{},{},{},{}\n", t->source, r.horizon, num(r.fcrpss), num(r.standard_error),
                                num(r.lower), num(r.upper), to_string(r.skill_class), r.n);
    }
  }

  // Strata for the calibrated forecasts, including understaffed ones with
  // missing values.
  std::vector<StratumFilter> filters;
  for (Season s : {Season::All, Season::Summer, Season::Winter}) filters.push_back({s, NaoPhase::Any, cfg.verify.nao_threshold});
  if (nao) {
    for (Season s : {Season::Summer, Season::Winter}) {
      for (NaoPhase p : {NaoPhase::Positive, NaoPhase::Negative}) filters.push_back({s, p, cfg.verify.nao_threshold});
    }
  }
  io::SkillTable strata{"emos", {}};
  std::string stratified = "horizon,stratum,fcrpss,se,lower,upper,class,n\n";
  std::vector<std::pair<std::string, ReliabilityDiagram>> diagrams;
  std::string pit = "horizon,ks_statistic,p_value,n\n";
  for (std::size_t hi = 0; hi < e.models.horizons.size(); ++hi) {
    const auto& h = e.models.horizons[hi];
    const auto cases = pipeline::skill_cases(e.scored, h.name, pipeline::ForecastSource::Emos);
    if (cases.empty()) continue;
    if (cases.size() >= cfg.verify.min_cases) emos_fold.reports.push_back(fold_spread_report(cases, cfg.verify.min_cases));
    for (const auto& f : filters) {
      if (f.season == Season::All && f.nao == NaoPhase::Any) continue;
      const auto n = static_cast<std::size_t>(std::count_if(
          cases.begin(), cases.end(), [&](const SkillCase& c) { return in_stratum(c, f, nao ? &*nao : nullptr); }));
      SkillReport r;
      if (auto got = stratified_skill(cases, f, nao ? &*nao : nullptr, so)) {
        r = *got;
      } else {
        r.horizon = h.name;
        r.stratum = f.label();
        r.fcrpss = r.standard_error = r.lower = r.upper = kMissing;
        r.n = n;
      }
      strata.reports.push_back(r);
    }

    std::vector<ZagaDistribution> dists;
    std::vector<double> obs;
    for (const auto& s : e.scored) {
      if (s.forecast.horizon.name != h.name) continue;
      dists.push_back(s.forecast.dist);
      obs.push_back(s.forecast.observed);
    }
    if (dists.size() >= cfg.verify.min_cases) {
      diagrams.emplace_back(h.name, reliability_diagram(dists, obs, cfg.verify.reliability_levels, cfg.verify.min_cases));
      Rng rng(derive_seed(derive_seed(cfg.seed, kPit), hi));
      std::vector<double> u;
      u.reserve(dists.size());
      for (std::size_t i = 0; i < dists.size(); ++i) u.push_back(pit_value(dists[i], obs[i], rng));
      const auto ks = ks_uniform_test(u);
      pit += fmt::format("{},{},{},{}\n", h.name, num(ks.statistic), num(ks.p_value), u.size());
    }
  }
  // The "all" stratum rows are the per-horizon bootstrap reports.
  std::vector<SkillReport> all_strata;
  for (const auto& h : e.models.horizons) {
    for (const auto& r : emos.reports) {
      if (r.horizon == h.name) all_strata.push_back(r);
    }
    for (const auto& r : strata.reports) {
      if (r.horizon == h.name) all_strata.push_back(r);
    }
  }
  for (const auto& r : all_strata) {
    stratified += fmt::format("{},{},{},{},{},{},{},{}\n", r.horizon, r.stratum, num(r.fcrpss), num(r.standard_error),
                              num(r.lower), num(r.upper), to_string(r.skill_class), r.n);
  }

  io::write_skill_report(m.output("skill_report.json"), {emos, bench, emos_fold, strata});
  csv::write_file(m.output("skill_by_horizon.csv"), by_horizon);
  csv::write_file(m.output("stratified_skill.csv"), stratified);
  io::write_reliability(m.output("reliability.csv"), diagrams);
  csv::write_file(m.output("pit.csv"), pit);

  std::string scores = "issue_date,horizon,observed,crps_emos,crps_benchmark,crps_climatology\n";
  for (const auto& s : e.scored) {
    scores += fmt::format("{},{},{},{},{},{}\n", format_date(s.forecast.issue_date), s.forecast.horizon.name,
                          num(s.forecast.observed), num(s.crps_emos), num(s.crps_benchmark), num(s.crps_climatology));
  }
  csv::write_file(m.output("scores.csv"), scores);
  m.write();
}

// ------------------------------------------------------------ cost-eval

void run_cost_eval(const Invocation& inv) {
  Manifest m(inv);
  const auto& cfg = inv.config;
  const auto e = evaluate(inv, m);
  const auto& env = cfg.cost.envelope;
  PriceConfig prices{cfg.cost.sweep.peak_price, cfg.cost.decision_differential};
  prices.validate();

  SweepOptions sweep = cfg.cost.sweep;
  sweep.seed = derive_seed(cfg.seed, kSweep);
  sweep.threads = static_cast<int>(cfg.threads);

  std::vector<CaseDecision> decisions;
  std::vector<ValueRow> rows;
  for (const auto& h : e.models.horizons) {
    const auto cases = pipeline::cost_cases(e.scored, h.name, env, cfg.cost.quadrature_nodes);
    if (cases.empty()) continue;
    auto d = evaluate_cases(cases, env, prices, static_cast<int>(cfg.threads));
    decisions.insert(decisions.end(), d.begin(), d.end());
    auto r = price_sweep(cases, env, sweep);
    rows.insert(rows.end(), r.begin(), r.end());
  }
  if (rows.empty()) throw InputError("no horizon produced cost-model cases");
  io::write_decisions(m.output("decisions.csv"), decisions);
  io::write_value_report(m.output("value_report.csv"), rows);
  io::write_value_gain(m.output("value_gain.csv"), rows);
  m.write();
}

// --------------------------------------------------------------- report

void run_report(const Invocation& inv) {
  Manifest m(inv);
  const fs::path skill_path = inv.out / "skill_report.json";
  require_file(skill_path, "skill report (run `verify` first)");
  m.input(skill_path);
  const auto skill = ordered_json::parse(read_bytes(skill_path));

  auto cell = [](const ordered_json& v) { return v.is_null() ? std::string("NA") : fmt::format("{:.3f}", v.get<double>()); };

  std::string md = "# s2sflow run report\n\n";
  md += "## Forecast skill (fCRPSS against monthly climatology)\n\n";
  md += "| source | horizon | stratum | band | fCRPSS | lower | upper | class | n |\n";
  md += "|---|---|---|---|---|---|---|---|---|\n";
  for (const auto& r : skill) {
    md += fmt::format("| {} | {} | {} | {} | {} | {} | {} | {} | {} |\n", r["source"].get<std::string>(),
                      r["horizon"].get<std::string>(), r["stratum"].get<std::string>(),
                      r["spread_method"].get<std::string>(), cell(r["fcrpss"]), cell(r["lower"]), cell(r["upper"]),
                      r["class"].get<std::string>(), r["n"].get<std::size_t>());
  }

  const fs::path value_path = inv.out / "value_report.csv";
  if (fs::exists(value_path)) {
    m.input(value_path);
    const auto t = csv::Table::read(value_path);
    const auto c_type = t.require_column("forecast_type");
    const auto c_h = t.require_column("horizon");
    const auto c_d = t.require_column("differential");
    const auto c_v = t.require_column("water_value");
    const auto c_se = t.require_column("se");
    // Pivot to one row per (horizon, differential).
    std::vector<std::pair<std::string, std::string>> keys;
    std::map<std::pair<std::string, std::string>, std::map<std::string, std::string>> table;
    for (std::size_t i = 0; i < t.rows(); ++i) {
      const auto key = std::make_pair(t.cell(i, c_h), t.cell(i, c_d));
      if (!table.count(key)) keys.push_back(key);
      table[key][t.cell(i, c_type)] =
          fmt::format("{:.3f} ± {:.3f}", t.number(i, c_v), t.number(i, c_se));
    }
    md += "\n## Water value (GBP/MWh, ± bootstrap SE)\n\n";
    md += "| horizon | differential | climatological | deterministic | probabilistic |\n";
    md += "|---|---|---|---|---|\n";
    for (const auto& k : keys) {
      auto& row = table[k];
      md += fmt::format("| {} | {} | {} | {} | {} |\n", k.first, k.second, row["climatological"], row["deterministic"],
                        row["probabilistic"]);
    }
  } else {
    m.note("value_report", "not found; run `cost-eval` to add water values");
  }

  csv::write_file(m.output("report.md"), md);
  m.write();
}

}  // namespace s2sflow::cli
