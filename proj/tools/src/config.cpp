#include "config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include <fmt/format.h>

#include "s2sflow/csv.hpp"
#include "s2sflow/errors.hpp"

namespace s2sflow::cli {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto t = trim(item);
    if (!t.empty()) out.push_back(std::move(t));
  }
  return out;
}

// Value parse failures are reported as plain messages; the caller adds the
// source, line and key.
struct BadValue {
  std::string message;
};

double to_double(const std::string& v) {
  double out = 0.0;
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc{} || ptr != end || !std::isfinite(out)) throw BadValue{fmt::format("expected a number, got '{}'", v)};
  return out;
}

long long to_integer(const std::string& v) {
  long long out = 0;
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc{} || ptr != end) throw BadValue{fmt::format("expected an integer, got '{}'", v)};
  return out;
}

bool to_bool(const std::string& v) {
  if (v == "true" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "no" || v == "0") return false;
  throw BadValue{fmt::format("expected true or false, got '{}'", v)};
}

std::vector<double> to_doubles(const std::string& v) {
  std::vector<double> out;
  for (const auto& item : split_list(v)) out.push_back(to_double(item));
  if (out.empty()) throw BadValue{"expected a comma-separated list of numbers"};
  return out;
}

std::string join_numbers(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + csv::format_number(v[i]);
  return out;
}

std::string path_text(const fs::path& p) { return p.empty() ? std::string("(default)") : p.generic_string(); }

struct Field {
  std::string key;  // section.name
  std::function<void(RunConfig&, const std::string&, const fs::path&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <class T, class Access>
Field number_field(std::string key, Access access) {
  return {std::move(key),
          [access](RunConfig& c, const std::string& v, const fs::path&) {
            if constexpr (std::is_floating_point_v<T>) {
              access(c) = to_double(v);
            } else {
              const auto n = to_integer(v);
              if (std::is_unsigned_v<T> && n < 0) {
                throw BadValue{fmt::format("expected a non-negative integer, got '{}'", v)};
              }
              access(c) = static_cast<T>(n);
            }
          },
          [access](const RunConfig& c) {
            if constexpr (std::is_floating_point_v<T>) {
              return csv::format_number(access(c));
            } else {
              return std::to_string(access(c));
            }
          }};
}

#define NUM(key, type, expr) number_field<type>(key, [](auto& c) -> auto& { return expr; })

Field path_field(std::string key, fs::path InputPaths::*member) {
  return {std::move(key),
          [member](RunConfig& c, const std::string& v, const fs::path& base) {
            const fs::path p(v);
            c.inputs.*member = p.is_absolute() ? p : (base / p).lexically_normal();
          },
          [member](const RunConfig& c) { return path_text(c.inputs.*member); }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    f.push_back(NUM("run.seed", std::uint64_t, c.seed));
    f.push_back(NUM("run.threads", unsigned, c.threads));

    f.push_back(path_field("inputs.ensemble", &InputPaths::ensemble));
    f.push_back(path_field("inputs.inflow", &InputPaths::inflow));
    f.push_back(path_field("inputs.reanalysis", &InputPaths::reanalysis));
    f.push_back(path_field("inputs.nao", &InputPaths::nao));
    f.push_back(path_field("inputs.telemetry", &InputPaths::telemetry));
    f.push_back(path_field("inputs.storage", &InputPaths::storage));
    f.push_back(path_field("inputs.efficiency", &InputPaths::efficiency));
    f.push_back(path_field("inputs.head", &InputPaths::head));
    f.push_back(path_field("inputs.compensation", &InputPaths::compensation));
    f.push_back(path_field("inputs.models", &InputPaths::models));

    f.push_back(NUM("scenario.start_year", int, c.synth.scenario.start_year));
    f.push_back(NUM("scenario.years", int, c.synth.scenario.years));
    f.push_back(NUM("scenario.precip_mean_mm_day", double, c.synth.scenario.precip_mean_mm_day));
    f.push_back(NUM("scenario.seasonal_amplitude", double, c.synth.scenario.seasonal_amplitude));
    f.push_back(NUM("scenario.seasonal_peak_day", double, c.synth.scenario.seasonal_peak_day));
    f.push_back(NUM("scenario.signal_sd", double, c.synth.scenario.signal_sd));
    f.push_back(NUM("scenario.signal_ar1", double, c.synth.scenario.signal_ar1));
    f.push_back({"scenario.noise_family",
                 [](RunConfig& c, const std::string& v, const fs::path&) {
                   if (v == "gamma") {
                     c.synth.scenario.noise_family = synth::NoiseFamily::Gamma;
                   } else if (v == "lognormal") {
                     c.synth.scenario.noise_family = synth::NoiseFamily::Lognormal;
                   } else {
                     throw BadValue{fmt::format("expected gamma or lognormal, got '{}'", v)};
                   }
                 },
                 [](const RunConfig& c) {
                   return std::string(c.synth.scenario.noise_family == synth::NoiseFamily::Gamma ? "gamma" : "lognormal");
                 }});
    f.push_back(NUM("scenario.noise_cv", double, c.synth.scenario.noise_cv));
    f.push_back(NUM("scenario.inflow_slope", double, c.synth.scenario.inflow_slope));
    f.push_back(NUM("scenario.inflow_intercept", double, c.synth.scenario.inflow_intercept));
    f.push_back(NUM("scenario.inflow_drift", double, c.synth.scenario.inflow_drift));
    f.push_back(NUM("scenario.inflow_noise_sd", double, c.synth.scenario.inflow_noise_sd));
    f.push_back(NUM("scenario.inflow_scale_m3s", double, c.synth.scenario.inflow_scale_m3s));
    f.push_back(NUM("scenario.members", int, c.synth.scenario.members));
    f.push_back(NUM("scenario.lead_days", int, c.synth.scenario.lead_days));
    f.push_back(NUM("scenario.half_life_days", double, c.synth.scenario.half_life_days));
    f.push_back({"scenario.fixed_weight",
                 [](RunConfig& c, const std::string& v, const fs::path&) {
                   if (v == "none") {
                     c.synth.scenario.fixed_weight.reset();
                   } else {
                     c.synth.scenario.fixed_weight = to_double(v);
                   }
                 },
                 [](const RunConfig& c) {
                   return c.synth.scenario.fixed_weight ? csv::format_number(*c.synth.scenario.fixed_weight)
                                                        : std::string("none");
                 }});
    f.push_back(NUM("scenario.member_ar1", double, c.synth.scenario.member_ar1));
    f.push_back(NUM("scenario.nao_ar1", double, c.synth.scenario.nao_ar1));

    f.push_back({"telemetry.synthesize",
                 [](RunConfig& c, const std::string& v, const fs::path&) { c.synth.telemetry = to_bool(v); },
                 [](const RunConfig& c) { return std::string(c.synth.telemetry ? "true" : "false"); }});
    f.push_back(NUM("telemetry.days", int, c.synth.telemetry_days));
    f.push_back(NUM("telemetry.compensation_m3s", double, c.synth.compensation_m3s));
    f.push_back(NUM("telemetry.level_min_m", double, c.ingest.bounds.level_min_m));
    f.push_back(NUM("telemetry.level_max_m", double, c.ingest.bounds.level_max_m));
    f.push_back(NUM("telemetry.power_max_w", double, c.ingest.bounds.power_max_w));
    f.push_back(NUM("telemetry.max_level_step_m_per_hour", double, c.ingest.steps.level_m_per_hour));
    f.push_back(NUM("telemetry.max_power_step_w_per_hour", double, c.ingest.steps.power_w_per_hour));
    f.push_back({"telemetry.window",
                 [](RunConfig& c, const std::string& v, const fs::path&) {
                   if (v == "daily") {
                     c.ingest.window = telemetry::Window::Daily;
                   } else if (v == "weekly") {
                     c.ingest.window = telemetry::Window::Weekly;
                   } else {
                     throw BadValue{fmt::format("expected daily or weekly, got '{}'", v)};
                   }
                 },
                 [](const RunConfig& c) {
                   return std::string(c.ingest.window == telemetry::Window::Daily ? "daily" : "weekly");
                 }});
    f.push_back(NUM("telemetry.min_coverage", double, c.ingest.min_coverage));
    f.push_back(NUM("telemetry.max_lag_days", int, c.ingest.max_lag));

    f.push_back({"train.horizons",
                 [](RunConfig& c, const std::string& v, const fs::path&) {
                   if (v == "all") {
                     c.train.horizons = canonical_horizons();
                     return;
                   }
                   c.train.horizons.clear();
                   for (const auto& name : split_list(v)) {
                     try {
                       c.train.horizons.push_back(horizon_by_name(name));
                     } catch (const InputError&) {
                       throw BadValue{fmt::format("unknown horizon '{}'", name)};
                     }
                   }
                   if (c.train.horizons.empty()) throw BadValue{"expected at least one horizon"};
                 },
                 [](const RunConfig& c) {
                   std::string out;
                   for (std::size_t i = 0; i < c.train.horizons.size(); ++i) {
                     out += (i ? "," : "") + c.train.horizons[i].name;
                   }
                   return out;
                 }});
    f.push_back({"train.pair_mode",
                 [](RunConfig& c, const std::string& v, const fs::path&) {
                   if (v == "member") {
                     c.train.cv.mode = PairMode::MemberWise;
                   } else if (v == "mean") {
                     c.train.cv.mode = PairMode::EnsembleMean;
                   } else {
                     throw BadValue{fmt::format("expected member or mean, got '{}'", v)};
                   }
                 },
                 [](const RunConfig& c) {
                   return std::string(c.train.cv.mode == PairMode::MemberWise ? "member" : "mean");
                 }});
    f.push_back(NUM("train.min_years", std::size_t, c.train.cv.min_years));
    f.push_back(NUM("train.min_pairs", std::size_t, c.train.cv.min_pairs));
    f.push_back(NUM("train.knots", int, c.train.emos.knots));
    f.push_back(NUM("train.ridge", double, c.train.emos.ridge));
    f.push_back(NUM("train.max_iterations", int, c.train.emos.max_iterations));
    f.push_back(NUM("train.starts", int, c.train.emos.starts));
    f.push_back(NUM("train.min_cases", std::size_t, c.train.emos.min_cases));
    f.push_back({"train.standard_errors",
                 [](RunConfig& c, const std::string& v, const fs::path&) { c.train.emos.standard_errors = to_bool(v); },
                 [](const RunConfig& c) { return std::string(c.train.emos.standard_errors ? "true" : "false"); }});

    f.push_back(NUM("verify.crps_levels", int, c.verify.crps_levels));
    f.push_back(NUM("verify.bootstrap_replicates", std::size_t, c.verify.replicates));
    f.push_back(NUM("verify.min_cases", std::size_t, c.verify.min_cases));
    f.push_back(NUM("verify.min_climatology_years", std::size_t, c.verify.min_climatology_years));
    f.push_back(NUM("verify.nao_threshold", double, c.verify.nao_threshold));
    f.push_back({"verify.reliability_levels",
                 [](RunConfig& c, const std::string& v, const fs::path&) { c.verify.reliability_levels = to_doubles(v); },
                 [](const RunConfig& c) { return join_numbers(c.verify.reliability_levels); }});

    f.push_back(NUM("cost.peak_price", double, c.cost.sweep.peak_price));
    f.push_back({"cost.differentials",
                 [](RunConfig& c, const std::string& v, const fs::path&) { c.cost.sweep.differentials = to_doubles(v); },
                 [](const RunConfig& c) { return join_numbers(c.cost.sweep.differentials); }});
    f.push_back(NUM("cost.free_up_frac", double, c.cost.envelope.free_up_frac));
    f.push_back(NUM("cost.free_down_frac", double, c.cost.envelope.free_down_frac));
    f.push_back(NUM("cost.stage2_up_frac", double, c.cost.envelope.stage2_up_frac));
    f.push_back(NUM("cost.stage2_down_frac", double, c.cost.envelope.stage2_down_frac));
    f.push_back(NUM("cost.max_capacity_frac", double, c.cost.envelope.max_capacity_frac));
    f.push_back(NUM("cost.energy_per_inflow", double, c.cost.envelope.energy_per_inflow));
    f.push_back(NUM("cost.quadrature_nodes", int, c.cost.quadrature_nodes));
    f.push_back(NUM("cost.decision_differential", double, c.cost.decision_differential));
    f.push_back(NUM("cost.bootstrap_replicates", std::size_t, c.cost.sweep.replicates));
    return f;
  }();
  return table;
}

#undef NUM

[[noreturn]] void violation(const std::string& key, const std::string& message) {
  throw InputError(fmt::format("config: {} {}", key, message));
}

void require(bool ok, const std::string& key, const std::string& message) {
  if (!ok) violation(key, message);
}

}  // namespace

RunConfig::RunConfig() {
  for (int i = 1; i <= 19; ++i) verify.reliability_levels.push_back(5.0 * i / 100.0);
}

void RunConfig::validate() const {
  require(threads >= 1 && threads <= 256, "run.threads", "must be in [1, 256]");
  require(!train.horizons.empty(), "train.horizons", "must name at least one horizon");
  require(train.cv.min_years >= 2, "train.min_years", "must be at least 2");
  require(train.cv.min_pairs >= 3, "train.min_pairs", "must be at least 3");
  require(train.emos.knots >= 3 && train.emos.knots <= 24, "train.knots", "must be in [3, 24]");
  require(train.emos.ridge >= 0.0, "train.ridge", "must be non-negative");
  require(train.emos.max_iterations >= 1, "train.max_iterations", "must be positive");
  require(train.emos.starts >= 1 && train.emos.starts <= 50, "train.starts", "must be in [1, 50]");
  require(train.emos.min_cases >= 10, "train.min_cases", "must be at least 10");

  require(verify.crps_levels >= 16, "verify.crps_levels", "must be at least 16");
  require(verify.replicates >= 2, "verify.bootstrap_replicates", "must be at least 2");
  require(verify.min_cases >= 2, "verify.min_cases", "must be at least 2");
  require(verify.min_climatology_years >= 1, "verify.min_climatology_years", "must be at least 1");
  require(verify.nao_threshold >= 0.0, "verify.nao_threshold", "must be non-negative");
  for (double l : verify.reliability_levels) {
    require(l > 0.0 && l < 1.0, "verify.reliability_levels", "entries must lie in (0, 1)");
  }
  require(std::is_sorted(verify.reliability_levels.begin(), verify.reliability_levels.end()),
          "verify.reliability_levels", "must be ascending");

  require(cost.sweep.peak_price > 0.0, "cost.peak_price", "must be positive");
  for (double d : cost.sweep.differentials) {
    require(d >= 0.0, "cost.differentials", "entries must be non-negative");
  }
  require(cost.decision_differential >= 0.0, "cost.decision_differential", "must be non-negative");
  require(cost.sweep.replicates >= 2, "cost.bootstrap_replicates", "must be at least 2");
  require(cost.quadrature_nodes >= 8, "cost.quadrature_nodes", "must be at least 8");
  require(cost.envelope.free_up_frac > 0.0, "cost.free_up_frac", "must be positive");
  require(cost.envelope.free_down_frac > 0.0, "cost.free_down_frac", "must be positive");
  require(cost.envelope.stage2_up_frac > 0.0, "cost.stage2_up_frac", "must be positive");
  require(cost.envelope.stage2_down_frac > 0.0, "cost.stage2_down_frac", "must be positive");
  require(cost.envelope.max_capacity_frac > 1.0 + cost.envelope.free_up_frac, "cost.max_capacity_frac",
          "must exceed 1 + cost.free_up_frac");
  require(cost.envelope.energy_per_inflow > 0.0, "cost.energy_per_inflow", "must be positive");

  require(synth.telemetry_days >= 2, "telemetry.days", "must be at least 2");
  require(synth.compensation_m3s >= 0.0, "telemetry.compensation_m3s", "must be non-negative");
  require(ingest.bounds.level_max_m > ingest.bounds.level_min_m, "telemetry.level_max_m",
          "must exceed telemetry.level_min_m");
  require(ingest.bounds.power_max_w > 0.0, "telemetry.power_max_w", "must be positive");
  require(ingest.steps.level_m_per_hour > 0.0, "telemetry.max_level_step_m_per_hour", "must be positive");
  require(ingest.steps.power_w_per_hour > 0.0, "telemetry.max_power_step_w_per_hour", "must be positive");
  require(ingest.min_coverage > 0.0 && ingest.min_coverage <= 1.0, "telemetry.min_coverage", "must be in (0, 1]");
  require(ingest.max_lag >= 0, "telemetry.max_lag_days", "must be non-negative");

  try {
    synth.scenario.validate();
  } catch (const InputError& e) {
    throw InputError(fmt::format("config: {}", e.what()));
  }
}

std::string RunConfig::canonical_text() const {
  std::string out;
  for (const auto& f : fields()) out += f.key + " = " + f.get(*this) + "\n";
  return out;
}

RunConfig parse_config(std::string_view text, const std::string& source, const fs::path& base_dir) {
  RunConfig cfg;
  std::string section;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::vector<std::string> seen;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find_first_of("#;");
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto where = fmt::format("{}:{}", source, line_no);
    if (line.front() == '[') {
      if (line.back() != ']') throw InputError(fmt::format("{}: unterminated section header", where));
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      const bool known = std::any_of(fields().begin(), fields().end(),
                                     [&](const Field& f) { return f.key.rfind(section + ".", 0) == 0; });
      if (!known) throw InputError(fmt::format("{}: unknown section [{}]", where, section));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw InputError(fmt::format("{}: expected 'key = value'", where));
    if (section.empty()) throw InputError(fmt::format("{}: key outside any [section]", where));
    const std::string key = section + "." + trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    const auto it = std::find_if(fields().begin(), fields().end(), [&](const Field& f) { return f.key == key; });
    if (it == fields().end()) throw InputError(fmt::format("{}: unknown key {}", where, key));
    if (std::find(seen.begin(), seen.end(), key) != seen.end()) {
      throw InputError(fmt::format("{}: duplicate key {}", where, key));
    }
    seen.push_back(key);
    try {
      it->set(cfg, value, base_dir);
    } catch (const BadValue& e) {
      throw InputError(fmt::format("{}: {}: {}", where, key, e.message));
    }
  }
  return cfg;
}

RunConfig load_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(fmt::format("config file not found: {}", path.string()));
  const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return parse_config(text, path.string(), path.parent_path());
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) { return fmt::format("{:016x}", v); }

}  // namespace s2sflow::cli
