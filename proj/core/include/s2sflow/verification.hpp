#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "s2sflow/forecast_data.hpp"
#include "s2sflow/zaga.hpp"

namespace s2sflow {

class Rng;

// ---------------------------------------------------------------- scores

/// Fair (ensemble-size-unbiased) CRPS of an ensemble against observation y:
///   (1/K) sum_k |x_k - y| - 1/(2K(K-1)) sum_{k != j} |x_k - x_j|.
/// O(K log K). Throws InputError for K < 2.
double fair_crps_ensemble(std::span<const double> members, double y);

/// CRPS of a ZAGA predictive distribution (user units) against y:
/// integral of (F(x) - 1{x >= y})^2 with nodes at `levels` equally spaced
/// probability levels of the gamma part, the CDF linearly interpolated
/// between nodes, the point mass handled exactly and an analytic tail.
double crps_parametric(const ZagaDistribution& dist, double y, int levels = 1024);

/// 1 - mean(forecast) / mean(climatology) over paired per-case scores.
/// Throws InputError for mismatched sizes or fewer than `min_pairs` pairs,
/// NumericalError when the climatology score is zero.
double fcrpss(std::span<const double> forecast_crps, std::span<const double> climatology_crps,
              std::size_t min_pairs = 20);

enum class SkillClass { None, Fair, Good, VeryGood };
const char* to_string(SkillClass c);
/// <= 0 none; (0, 0.15) fair; [0.15, 0.30] good; > 0.30 very good.
SkillClass classify_skill(double fcrpss);

// ---------------------------------------------------------- reliability

struct ReliabilityDiagram {
  std::vector<double> levels;
  std::vector<double> coverage;  // fraction of observations <= Q(level)
  std::size_t n = 0;
};

/// quantiles[i][j] is case i's predictive quantile at levels[j].
ReliabilityDiagram reliability_diagram(std::span<const std::vector<double>> quantiles,
                                       std::span<const double> observations, std::span<const double> levels,
                                       std::size_t min_cases = 50);
/// Observations on a forecast's point mass count min(1, level / nu), the
/// chance that their randomized PIT lies at or below the level.
ReliabilityDiagram reliability_diagram(std::span<const ZagaDistribution> forecasts,
                                       std::span<const double> observations, std::span<const double> levels,
                                       std::size_t min_cases = 50);

/// Central `confidence` band of Binomial(n, p) / n.
std::pair<double, double> binomial_band(std::size_t n, double p, double confidence = 0.95);

/// Probability integral transform of y; uniformly randomized inside the
/// point mass when y sits on it.
double pit_value(const ZagaDistribution& dist, double y, Rng& rng);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};
/// One-sample Kolmogorov-Smirnov test against U(0, 1).
KsResult ks_uniform_test(std::span<const double> values);

// ------------------------------------------------------------ bootstrap

struct BootstrapResult {
  double estimate = 0.0;
  double standard_error = 0.0;
  double lower = 0.0;  // estimate - 2 SE
  double upper = 0.0;  // estimate + 2 SE
  std::size_t replicates = 0;
};

/// Statistic over a resampled list of case indices.
using IndexStatistic = std::function<double(std::span<const std::size_t>)>;

/// i.i.d. case bootstrap with B replicates. Replicate r draws its indices
/// from a stream seeded by derive_seed(seed, r), so results do not depend
/// on evaluation order. The estimate is the statistic on the full sample.
BootstrapResult bootstrap_spread(std::size_t n_cases, const IndexStatistic& statistic, std::size_t replicates = 1000,
                                 std::uint64_t seed = 1);

/// The index lists used by bootstrap_spread, for paired resampling across
/// several statistics.
std::vector<std::vector<std::size_t>> bootstrap_indices(std::size_t n_cases, std::size_t replicates,
                                                        std::uint64_t seed);

BootstrapResult bootstrap_mean(std::span<const double> values, std::size_t replicates = 1000, std::uint64_t seed = 1);

// --------------------------------------------------------- stratification

/// Monthly teleconnection index (e.g. NAO) keyed by (year, month).
class MonthlyIndex {
public:
  void set(int year, unsigned month, double value) { values_[{year, month}] = value; }
  [[nodiscard]] std::optional<double> get(int year, unsigned month) const;
  [[nodiscard]] const std::map<std::pair<int, unsigned>, double>& values() const { return values_; }

private:
  std::map<std::pair<int, unsigned>, double> values_;
};

enum class Season { All, Summer, Winter };  // Summer = Apr-Sep, Winter = Oct-Mar
enum class NaoPhase { Any, Positive, Negative };

struct StratumFilter {
  Season season = Season::All;
  NaoPhase nao = NaoPhase::Any;
  double nao_threshold = 0.4;

  [[nodiscard]] std::string label() const;
};

/// (year, month) holding the majority of the horizon's days; ties go to
/// the earlier month.
std::pair<int, unsigned> majority_month(Date issue_date, const HorizonSpec& h);

/// Paired per-case scores for one forecast.
struct SkillCase {
  Date issue_date;
  HorizonSpec horizon;
  double observed = 0.0;
  double forecast_crps = 0.0;
  double climatology_crps = 0.0;
};

/// Whether a case falls in the stratum. NAO filters need `nao`; a case
/// whose month has no index value is excluded.
bool in_stratum(const SkillCase& c, const StratumFilter& filter, const MonthlyIndex* nao);

struct SkillReport {
  std::string horizon;
  std::string stratum = "all";
  double fcrpss = 0.0;
  double standard_error = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  std::string spread_method = "bootstrap-2se";  // or "fold-2sd"
  SkillClass skill_class = SkillClass::None;
  std::size_t n = 0;
};

struct SkillOptions {
  std::size_t min_cases = 20;
  std::size_t replicates = 1000;
  std::uint64_t seed = 1;
};

/// fCRPSS with a paired case-bootstrap 2-SE band.
SkillReport skill_report(std::span<const SkillCase> cases, const SkillOptions& options = {});

/// fCRPSS with a +-2 SD band from the spread of per-year scores.
SkillReport fold_spread_report(std::span<const SkillCase> cases, std::size_t min_cases = 20);

/// Skill on the subset selected by `filter`; nullopt when the stratum has
/// fewer than `options.min_cases` cases.
std::optional<SkillReport> stratified_skill(std::span<const SkillCase> cases, const StratumFilter& filter,
                                            const MonthlyIndex* nao, const SkillOptions& options = {});

}  // namespace s2sflow
