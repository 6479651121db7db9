#include "s2sflow/verification.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/binomial.hpp>
#include <fmt/format.h>

#include "s2sflow/errors.hpp"
#include "s2sflow/random.hpp"

namespace s2sflow {

double fair_crps_ensemble(std::span<const double> members, double y) {
  const std::size_t k = members.size();
  if (k < 2) throw InputError(fmt::format("fair CRPS needs at least 2 members, got {}", k));
  std::vector<double> x(members.begin(), members.end());
  std::sort(x.begin(), x.end());
  double abs_err = 0.0;
  double pair_sum = 0.0;  // sum over i < j of (x_j - x_i)
  const double kd = static_cast<double>(k);
  for (std::size_t i = 0; i < k; ++i) {
    abs_err += std::abs(x[i] - y);
    pair_sum += (2.0 * static_cast<double>(i) - kd + 1.0) * x[i];
  }
  return abs_err / kd - pair_sum / (kd * (kd - 1.0));
}

namespace {

// Integral over [x0, x1] of (F - c)^2 with F linear from f0 to f1.
double linear_square_integral(double x0, double x1, double f0, double f1, double c) {
  const double a = f0 - c;
  const double b = f1 - c;
  return (x1 - x0) * (a * a + a * b + b * b) / 3.0;
}

}  // namespace

double crps_parametric(const ZagaDistribution& dist, double y_user, int levels) {
  dist.validate();
  if (levels < 2) throw InputError("crps_parametric: need at least 2 quantile levels");
  const double y = y_user + dist.offset;
  const double nu = dist.nu;
  const double w = 1.0 - nu;
  const double a = dist.shape();
  const double s = dist.scale();

  double total = 0.0;
  if (y < 0.0) total += -y;  // F = 0 on [y, 0) while the indicator is 1

  // Nodes: gamma quantiles at i / Q for i = 0..Q-1, with y inserted.
  struct Node {
    double x;
    double f;
  };
  std::vector<Node> nodes;
  nodes.reserve(static_cast<std::size_t>(levels) + 1);
  for (int i = 0; i < levels; ++i) {
    const double u = static_cast<double>(i) / levels;
    nodes.push_back({gamma_p_inv(a, u) * s, nu + w * u});
  }
  const double x_last = nodes.back().x;
  if (y > 0.0 && y < x_last) {
    const auto it = std::lower_bound(nodes.begin(), nodes.end(), y, [](const Node& n, double v) { return n.x < v; });
    if (it->x != y) nodes.insert(it, Node{y, dist.cdf(y)});
  }
  for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
    const double c = nodes[i].x >= y ? 1.0 : 0.0;
    total += linear_square_integral(nodes[i].x, nodes[i + 1].x, nodes[i].f, nodes[i + 1].f, c);
  }

  // Beyond the last node. If y lies further out, [x_last, y] has indicator 0.
  double tail_start = x_last;
  if (y > x_last) {
    const double fy = dist.cdf(y);
    total += linear_square_integral(x_last, y, nodes.back().f, fy, 0.0);
    tail_start = y;
  }
  // Integral of (1 - F)^2 from tail_start, approximated by
  // (1 - F(t)) / 2 * integral of (1 - F); exact for an exponential tail.
  const double z = tail_start / s;
  const double surv = gamma_q(a, z);
  const double excess = s * (a * gamma_q(a + 1.0, z) - z * surv);  // E[(X - t)+]
  total += 0.5 * w * surv * w * std::max(excess, 0.0);
  return total;
}

double fcrpss(std::span<const double> forecast_crps, std::span<const double> climatology_crps,
              std::size_t min_pairs) {
  if (forecast_crps.size() != climatology_crps.size()) {
    throw InputError(fmt::format("fCRPSS: {} forecast scores vs {} climatology scores", forecast_crps.size(),
                                 climatology_crps.size()));
  }
  if (forecast_crps.size() < min_pairs) {
    throw InputError(fmt::format("fCRPSS: {} pairs, need at least {}", forecast_crps.size(), min_pairs));
  }
  const double f = std::accumulate(forecast_crps.begin(), forecast_crps.end(), 0.0);
  const double c = std::accumulate(climatology_crps.begin(), climatology_crps.end(), 0.0);
  if (c == 0.0) throw NumericalError("fCRPSS: climatology CRPS is zero");
  return 1.0 - f / c;
}

const char* to_string(SkillClass c) {
  switch (c) {
    case SkillClass::None: return "none";
    case SkillClass::Fair: return "fair";
    case SkillClass::Good: return "good";
    case SkillClass::VeryGood: return "very good";
  }
  return "none";
}

SkillClass classify_skill(double score) {
  if (!(score > 0.0)) return SkillClass::None;
  if (score < 0.15) return SkillClass::Fair;
  if (score <= 0.30) return SkillClass::Good;
  return SkillClass::VeryGood;
}

ReliabilityDiagram reliability_diagram(std::span<const std::vector<double>> quantiles,
                                       std::span<const double> observations, std::span<const double> levels,
                                       std::size_t min_cases) {
  if (quantiles.size() != observations.size()) throw InputError("reliability: quantile rows and observations differ");
  if (observations.size() < min_cases) {
    throw InputError(fmt::format("reliability: {} cases, need at least {}", observations.size(), min_cases));
  }
  ReliabilityDiagram out;
  out.levels.assign(levels.begin(), levels.end());
  out.coverage.assign(levels.size(), 0.0);
  out.n = observations.size();
  for (std::size_t i = 0; i < observations.size(); ++i) {
    if (quantiles[i].size() != levels.size()) throw InputError(fmt::format("reliability: row {} has wrong width", i));
    for (std::size_t j = 0; j < levels.size(); ++j) {
      if (observations[i] <= quantiles[i][j]) out.coverage[j] += 1.0;
    }
  }
  for (double& c : out.coverage) c /= static_cast<double>(out.n);
  return out;
}

ReliabilityDiagram reliability_diagram(std::span<const ZagaDistribution> forecasts,
                                       std::span<const double> observations, std::span<const double> levels,
                                       std::size_t min_cases) {
  if (forecasts.size() != observations.size()) throw InputError("reliability: forecasts and observations differ");
  if (observations.size() < min_cases) {
    throw InputError(fmt::format("reliability: {} cases, need at least {}", observations.size(), min_cases));
  }
  ReliabilityDiagram out;
  out.levels.assign(levels.begin(), levels.end());
  out.coverage.assign(levels.size(), 0.0);
  out.n = observations.size();
  for (std::size_t i = 0; i < observations.size(); ++i) {
    const auto& f = forecasts[i];
    const double y = observations[i] + f.offset;
    for (std::size_t j = 0; j < levels.size(); ++j) {
      if (y <= 0.0 && f.nu > 0.0) {
        // On the point mass the PIT is uniform on (0, nu); count the
        // probability that it falls at or below the level.
        out.coverage[j] += std::min(1.0, levels[j] / f.nu);
      } else if (y <= f.quantile(levels[j])) {
        out.coverage[j] += 1.0;
      }
    }
  }
  for (double& c : out.coverage) c /= static_cast<double>(out.n);
  return out;
}

std::pair<double, double> binomial_band(std::size_t n, double p, double confidence) {
  if (n == 0) return {0.0, 1.0};
  const boost::math::binomial_distribution<double> b(static_cast<double>(n), p);
  const double tail = 0.5 * (1.0 - confidence);
  const double nd = static_cast<double>(n);
  return {boost::math::quantile(b, tail) / nd, boost::math::quantile(boost::math::complement(b, tail)) / nd};
}

double pit_value(const ZagaDistribution& dist, double y_user, Rng& rng) {
  const double y = y_user + dist.offset;
  if (y < 0.0) return 0.0;
  if (y == 0.0) return rng.uniform() * dist.nu;
  return dist.cdf(y);
}

KsResult ks_uniform_test(std::span<const double> values) {
  if (values.empty()) throw InputError("KS test on an empty sample");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());
  double d = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double x = std::clamp(v[i], 0.0, 1.0);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - x, x - static_cast<double>(i) / n});
  }
  // Asymptotic Kolmogorov distribution with Stephens' small-sample correction.
  const double sn = std::sqrt(n);
  const double lambda = (sn + 0.12 + 0.11 / sn) * d;
  double p = 0.0;
  if (lambda < 0.2) {
    p = 1.0;
  } else {
    for (int k = 1; k <= 100; ++k) {
      const double term = std::exp(-2.0 * k * k * lambda * lambda);
      p += (k % 2 == 1 ? 2.0 : -2.0) * term;
      if (term < 1e-16) break;
    }
    p = std::clamp(p, 0.0, 1.0);
  }
  return {d, p};
}

std::vector<std::vector<std::size_t>> bootstrap_indices(std::size_t n_cases, std::size_t replicates,
                                                        std::uint64_t seed) {
  std::vector<std::vector<std::size_t>> out(replicates);
  for (std::size_t r = 0; r < replicates; ++r) {
    Rng rng(derive_seed(seed, r));
    auto& idx = out[r];
    idx.resize(n_cases);
    for (auto& i : idx) i = static_cast<std::size_t>(rng.index(n_cases));
  }
  return out;
}

BootstrapResult bootstrap_spread(std::size_t n_cases, const IndexStatistic& statistic, std::size_t replicates,
                                 std::uint64_t seed) {
  if (n_cases == 0) throw InputError("bootstrap on zero cases");
  if (replicates < 2) throw InputError("bootstrap needs at least 2 replicates");
  std::vector<std::size_t> all(n_cases);
  std::iota(all.begin(), all.end(), std::size_t{0});
  BootstrapResult out;
  out.estimate = statistic(all);
  out.replicates = replicates;

  std::vector<std::size_t> idx(n_cases);
  double mean = 0.0;
  double m2 = 0.0;
  for (std::size_t r = 0; r < replicates; ++r) {
    Rng rng(derive_seed(seed, r));
    for (auto& i : idx) i = static_cast<std::size_t>(rng.index(n_cases));
    const double v = statistic(idx);
    const double delta = v - mean;
    mean += delta / static_cast<double>(r + 1);
    m2 += delta * (v - mean);
  }
  out.standard_error = std::sqrt(m2 / static_cast<double>(replicates - 1));
  out.lower = out.estimate - 2.0 * out.standard_error;
  out.upper = out.estimate + 2.0 * out.standard_error;
  return out;
}

BootstrapResult bootstrap_mean(std::span<const double> values, std::size_t replicates, std::uint64_t seed) {
  return bootstrap_spread(
      values.size(),
      [&](std::span<const std::size_t> idx) {
        double s = 0.0;
        for (auto i : idx) s += values[i];
        return s / static_cast<double>(idx.size());
      },
      replicates, seed);
}

std::optional<double> MonthlyIndex::get(int year, unsigned month) const {
  const auto it = values_.find({year, month});
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::string StratumFilter::label() const {
  std::string s;
  switch (season) {
    case Season::All: s = "all"; break;
    case Season::Summer: s = "summer"; break;
    case Season::Winter: s = "winter"; break;
  }
  if (nao == NaoPhase::Positive) s += "+nao_pos";
  if (nao == NaoPhase::Negative) s += "+nao_neg";
  return s;
}

std::pair<int, unsigned> majority_month(Date issue_date, const HorizonSpec& h) {
  std::vector<std::pair<std::pair<int, unsigned>, int>> counts;
  for (int d = h.start_day; d <= h.end_day; ++d) {
    const Date day = issue_date + std::chrono::days{d};
    const std::pair<int, unsigned> key{year_of(day), month_of(day)};
    if (counts.empty() || counts.back().first != key) counts.push_back({key, 0});
    ++counts.back().second;
  }
  // Months appear in chronological order, so the first maximum is the earlier month.
  auto best = counts.begin();
  for (auto it = counts.begin(); it != counts.end(); ++it) {
    if (it->second > best->second) best = it;
  }
  return best->first;
}

bool in_stratum(const SkillCase& c, const StratumFilter& filter, const MonthlyIndex* nao) {
  const auto [year, month] = majority_month(c.issue_date, c.horizon);
  const bool summer = month >= 4 && month <= 9;
  if (filter.season == Season::Summer && !summer) return false;
  if (filter.season == Season::Winter && summer) return false;
  if (filter.nao == NaoPhase::Any) return true;
  if (nao == nullptr) throw InputError("NAO stratification requested without an NAO index");
  const auto v = nao->get(year, month);
  if (!v) return false;
  return filter.nao == NaoPhase::Positive ? *v > filter.nao_threshold : *v < -filter.nao_threshold;
}

namespace {

double ratio_skill(std::span<const SkillCase> cases, std::span<const std::size_t> idx) {
  double f = 0.0;
  double c = 0.0;
  for (auto i : idx) {
    f += cases[i].forecast_crps;
    c += cases[i].climatology_crps;
  }
  return c > 0.0 ? 1.0 - f / c : 0.0;
}

}  // namespace

SkillReport skill_report(std::span<const SkillCase> cases, const SkillOptions& options) {
  if (cases.size() < options.min_cases) {
    throw InputError(fmt::format("skill report: {} cases, need at least {}", cases.size(), options.min_cases));
  }
  std::vector<double> f;
  std::vector<double> c;
  for (const auto& sc : cases) {
    f.push_back(sc.forecast_crps);
    c.push_back(sc.climatology_crps);
  }
  SkillReport r;
  r.horizon = cases.front().horizon.name;
  r.fcrpss = fcrpss(f, c, options.min_cases);
  const auto b = bootstrap_spread(
      cases.size(), [&](std::span<const std::size_t> idx) { return ratio_skill(cases, idx); }, options.replicates,
      options.seed);
  r.standard_error = b.standard_error;
  r.lower = r.fcrpss - 2.0 * b.standard_error;
  r.upper = r.fcrpss + 2.0 * b.standard_error;
  r.skill_class = classify_skill(r.fcrpss);
  r.n = cases.size();
  return r;
}

SkillReport fold_spread_report(std::span<const SkillCase> cases, std::size_t min_cases) {
  if (cases.size() < min_cases) {
    throw InputError(fmt::format("skill report: {} cases, need at least {}", cases.size(), min_cases));
  }
  std::map<int, std::vector<std::size_t>> by_year;
  for (std::size_t i = 0; i < cases.size(); ++i) by_year[year_of(cases[i].issue_date)].push_back(i);
  std::vector<double> per_year;
  for (const auto& [year, idx] : by_year) per_year.push_back(ratio_skill(cases, idx));

  std::vector<std::size_t> all(cases.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  SkillReport r;
  r.horizon = cases.front().horizon.name;
  r.fcrpss = ratio_skill(cases, all);
  double sd = 0.0;
  if (per_year.size() > 1) {
    const double m = std::accumulate(per_year.begin(), per_year.end(), 0.0) / static_cast<double>(per_year.size());
    for (double v : per_year) sd += (v - m) * (v - m);
    sd = std::sqrt(sd / static_cast<double>(per_year.size() - 1));
  }
  r.standard_error = sd;
  r.lower = r.fcrpss - 2.0 * sd;
  r.upper = r.fcrpss + 2.0 * sd;
  r.spread_method = "fold-2sd";
  r.skill_class = classify_skill(r.fcrpss);
  r.n = cases.size();
  return r;
}

std::optional<SkillReport> stratified_skill(std::span<const SkillCase> cases, const StratumFilter& filter,
                                            const MonthlyIndex* nao, const SkillOptions& options) {
  std::vector<SkillCase> subset;
  for (const auto& c : cases) {
    if (in_stratum(c, filter, nao)) subset.push_back(c);
  }
  if (subset.size() < options.min_cases) return std::nullopt;
  auto r = skill_report(subset, options);
  r.stratum = filter.label();
  return r;
}

}  // namespace s2sflow
