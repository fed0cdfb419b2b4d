#include "pharmatimeline/stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "pharmatimeline/rng.hpp"

namespace pharmatimeline {

std::string_view to_string(Dimension dim) {
  switch (dim) {
    case Dimension::TrustTotal: return "trust-total";
    case Dimension::Gender: return "gender";
    case Dimension::Ethnicity: return "ethnicity";
    case Dimension::AgeGroup: return "age_group";
    case Dimension::Smoking: return "smoking";
    case Dimension::Admission: return "admission";
    case Dimension::Diagnosis: return "diagnosis";
  }
  return "?";
}

std::vector<std::string> dimension_levels(Dimension dim) {
  switch (dim) {
    case Dimension::TrustTotal:
      return {"all"};
    case Dimension::Gender:
      return {"Male", "Female"};
    case Dimension::Ethnicity:
      return {"White", "Black", "Asian", "Other"};
    case Dimension::AgeGroup: {
      std::vector<std::string> levels;
      for (auto g : {AgeGroup::Under21, AgeGroup::From21To30, AgeGroup::From31To40,
                     AgeGroup::From41To50, AgeGroup::From51To60, AgeGroup::From61To70,
                     AgeGroup::From71To80, AgeGroup::Above80}) {
        levels.emplace_back(to_string(g));
      }
      return levels;
    }
    case Dimension::Smoking:
      return {"Smoker", "Non-Smoker"};
    case Dimension::Admission:
      return {"Inpatient", "Outpatient"};
    case Dimension::Diagnosis: {
      std::vector<std::string> levels;
      for (auto c : {DiagnosisCategory::Schizophrenia, DiagnosisCategory::Schizoaffective,
                     DiagnosisCategory::Bipolar, DiagnosisCategory::OtherMental,
                     DiagnosisCategory::OtherDiagnosis, DiagnosisCategory::NotAvailable}) {
        levels.emplace_back(to_string(c));
      }
      return levels;
    }
  }
  return {};
}

std::optional<std::string> TrustCohort::level_of(const AnalysisMember& member, Dimension dim) {
  switch (dim) {
    case Dimension::TrustTotal:
      return "all";
    case Dimension::Gender:
      if (member.gender == Gender::Unknown) return std::nullopt;
      return std::string(to_string(member.gender));
    case Dimension::Ethnicity:
      return std::string(to_string(member.strata.ethnicity));
    case Dimension::AgeGroup:
      if (!member.strata.age) return std::nullopt;
      return std::string(to_string(*member.strata.age));
    case Dimension::Smoking:
      if (member.strata.smoking == SmokingStatus::Unknown) return std::nullopt;
      return std::string(to_string(member.strata.smoking));
    case Dimension::Admission:
      if (!member.strata.admission) return std::nullopt;
      return std::string(to_string(*member.strata.admission));
    case Dimension::Diagnosis:
      return std::string(to_string(member.strata.diagnosis));
  }
  return std::nullopt;
}

bool TrustCohort::dimension_available(Dimension dim) const {
  if (members.empty()) return false;
  for (const AnalysisMember& member : members) {
    if (level_of(member, dim)) return true;
  }
  return false;
}

PrevalenceTable prevalence_table(const TrustCohort& cohort, Dimension dim,
                                 const std::vector<std::string>& ades) {
  PrevalenceTable table;

  // Stratum sizes and per-(ade, bucket) distinct-patient counts.
  std::map<std::string, long> denominators;
  std::map<std::string, std::map<std::pair<std::string, MonthBucket>, long>> numerators;
  for (const AnalysisMember& member : cohort.members) {
    auto level = TrustCohort::level_of(member, dim);
    if (!level) continue;
    ++denominators[*level];
    auto& level_counts = numerators[*level];
    for (const auto& key : member.affected) ++level_counts[key];
  }

  for (const std::string& level : dimension_levels(dim)) {
    auto denom_it = denominators.find(level);
    if (denom_it == denominators.end()) {
      table.warnings.push_back("dropped empty level '" + level + "' of " +
                               std::string(to_string(dim)) + " in trust " + cohort.trust);
      continue;
    }
    for (const std::string& ade : ades) {
      for (MonthBucket bucket : kAllBuckets) {
        PrevalenceCell cell;
        cell.ade = ade;
        cell.dimension = dim;
        cell.level = level;
        cell.bucket = bucket;
        cell.denominator = denom_it->second;
        auto& level_counts = numerators[level];
        auto it = level_counts.find({ade, bucket});
        cell.numerator = it == level_counts.end() ? 0 : it->second;
        table.cells.push_back(std::move(cell));
      }
    }
  }

  // (ade, level, bucket) with levels in canonical order, then buckets.
  std::sort(table.cells.begin(), table.cells.end(),
            [&](const PrevalenceCell& a, const PrevalenceCell& b) {
              if (a.ade != b.ade) return a.ade < b.ade;
              if (a.level != b.level) {
                auto levels = dimension_levels(dim);
                auto rank = [&](const std::string& level) {
                  return std::find(levels.begin(), levels.end(), level) - levels.begin();
                };
                return rank(a.level) < rank(b.level);
              }
              return a.bucket < b.bucket;
            });
  return table;
}

ChiSquare chi_square(const ContingencyTable& table) {
  const size_t r = table.rows();
  if (r < 2) throw StatsError("chi_square: need at least two rows");
  const size_t c = table.cols();
  if (c < 2) throw StatsError("chi_square: need at least two columns");

  std::vector<double> row_sums(r, 0.0), col_sums(c, 0.0);
  double total = 0.0;
  for (size_t i = 0; i < r; ++i) {
    if (table.cells[i].size() != c) throw StatsError("chi_square: ragged table");
    for (size_t j = 0; j < c; ++j) {
      long v = table.cells[i][j];
      if (v < 0) throw StatsError("chi_square: negative cell");
      row_sums[i] += double(v);
      col_sums[j] += double(v);
      total += double(v);
    }
  }
  for (double s : row_sums) {
    if (s == 0.0) throw StatsError("chi_square: zero row margin (degenerate table)");
  }
  for (double s : col_sums) {
    if (s == 0.0) throw StatsError("chi_square: zero column margin (degenerate table)");
  }

  double statistic = 0.0;
  for (size_t i = 0; i < r; ++i) {
    for (size_t j = 0; j < c; ++j) {
      double expected = row_sums[i] * col_sums[j] / total;
      double diff = double(table.cells[i][j]) - expected;
      statistic += diff * diff / expected;
    }
  }
  return ChiSquare{statistic, int((r - 1) * (c - 1))};
}

namespace {

constexpr double kGammaTol = 1e-14;
constexpr int kGammaMaxIter = 10000;

// Regularized lower incomplete gamma P(a, x) by series; valid for x < a + 1.
double lower_gamma_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  double ap = a;
  for (int n = 0; n < kGammaMaxIter; ++n) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::fabs(term) < std::fabs(sum) * kGammaTol) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Regularized upper incomplete gamma Q(a, x) by continued fraction (modified
// Lentz); valid for x >= a + 1.
double upper_gamma_cf(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= kGammaMaxIter; ++i) {
    double an = -double(i) * (double(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < kGammaTol) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

double chi_square_pvalue(double statistic, int df) {
  if (df < 1) throw StatsError("chi_square_pvalue: df must be >= 1");
  if (statistic < 0.0 || !std::isfinite(statistic)) {
    throw StatsError("chi_square_pvalue: statistic must be finite and >= 0");
  }
  const double a = 0.5 * double(df);
  const double x = 0.5 * statistic;
  if (x == 0.0) return 1.0;
  double q = (x < a + 1.0) ? 1.0 - lower_gamma_series(a, x) : upper_gamma_cf(a, x);
  return std::min(1.0, std::max(0.0, q));
}

double bonferroni(double p, int m) {
  if (m < 1) throw StatsError("bonferroni: m must be >= 1");
  if (p < 0.0 || p > 1.0) throw StatsError("bonferroni: p outside [0,1]");
  return std::min(1.0, p * double(m));
}

namespace {

// Per-level (affected, unaffected) counts for one (ade, bucket).
struct LevelCounts {
  std::string level;
  long affected = 0;
  long total = 0;
};

std::vector<LevelCounts> level_counts(const TrustCohort& cohort, Dimension dim,
                                      const std::string& ade, MonthBucket bucket) {
  std::map<std::string, LevelCounts> by_level;
  for (const AnalysisMember& member : cohort.members) {
    auto level = TrustCohort::level_of(member, dim);
    if (!level) continue;
    LevelCounts& counts = by_level[*level];
    counts.level = *level;
    ++counts.total;
    if (member.affected.count({ade, bucket})) ++counts.affected;
  }
  std::vector<LevelCounts> ordered;
  for (const std::string& level : dimension_levels(dim)) {
    auto it = by_level.find(level);
    if (it != by_level.end()) ordered.push_back(it->second);
  }
  return ordered;
}

ChiSquareResult run_test(const TrustCohort& cohort, Dimension dim, const std::string& ade,
                         MonthBucket bucket, int family_m, double alpha) {
  ChiSquareResult result;
  result.ade = ade;
  result.dimension = dim;
  result.bucket = bucket;

  auto counts = level_counts(cohort, dim, ade, bucket);
  result.df = std::max<int>(1, int(counts.size()) - 1);

  long affected_total = 0, unaffected_total = 0;
  for (const LevelCounts& c : counts) {
    affected_total += c.affected;
    unaffected_total += c.total - c.affected;
  }
  if (counts.size() < 2 || affected_total == 0 || unaffected_total == 0) {
    result.statistic = 0.0;
    result.p = 1.0;
    result.p_adjusted = 1.0;
    result.significant = false;
    result.warnings.push_back("degenerate-table");
    return result;
  }

  ContingencyTable table;
  double grand_total = 0.0;
  for (const LevelCounts& c : counts) {
    table.cells.push_back({c.affected, c.total - c.affected});
    grand_total += double(c.total);
  }
  // Expected-count guard: flag, never suppress.
  for (const LevelCounts& c : counts) {
    double row = double(c.total);
    if (row * double(affected_total) / grand_total < 1.0 ||
        row * double(unaffected_total) / grand_total < 1.0) {
      result.warnings.push_back("low-expected-count");
      break;
    }
  }

  ChiSquare chi = chi_square(table);
  result.statistic = chi.statistic;
  result.df = chi.df;
  result.p = chi_square_pvalue(chi.statistic, chi.df);
  result.p_adjusted = bonferroni(result.p, family_m);
  result.significant = result.p_adjusted < alpha;
  return result;
}

}  // namespace

std::vector<ChiSquareResult> chi_square_analysis(const TrustCohort& cohort, Dimension dim,
                                                 const std::vector<std::string>& ades,
                                                 const AnalysisOptions& options) {
  const int family_m =
      options.bonferroni_family_size > 0 ? options.bonferroni_family_size : int(ades.size());
  std::vector<ChiSquareResult> results;
  results.reserve(ades.size() * options.buckets.size());
  for (const std::string& ade : ades) {
    for (MonthBucket bucket : options.buckets) {
      results.push_back(run_test(cohort, dim, ade, bucket, std::max(1, family_m), options.alpha));
    }
  }
  return results;
}

CombinedAnalysis combined_analysis(std::span<const TrustCohort> trusts, Dimension dim,
                                   const std::vector<std::string>& ades,
                                   const AnalysisOptions& options) {
  CombinedAnalysis combined;
  TrustCohort pooled;
  pooled.trust = "combined";
  for (const TrustCohort& trust : trusts) {
    if (!trust.dimension_available(dim)) {
      combined.warnings.push_back("trust " + trust.trust + " excluded from dimension " +
                                  std::string(to_string(dim)));
      continue;
    }
    pooled.members.insert(pooled.members.end(), trust.members.begin(), trust.members.end());
  }
  if (pooled.members.empty()) {
    combined.warnings.push_back("no trust provides dimension " + std::string(to_string(dim)));
    return combined;
  }
  combined.results = chi_square_analysis(pooled, dim, ades, options);
  return combined;
}

KappaResult cohen_kappa(const std::array<std::array<long, 2>, 2>& counts) {
  const double n = double(counts[0][0] + counts[0][1] + counts[1][0] + counts[1][1]);
  if (n <= 0.0) throw StatsError("cohen_kappa: empty table");
  const double observed = double(counts[0][0] + counts[1][1]) / n;
  const double row0 = double(counts[0][0] + counts[0][1]);
  const double row1 = double(counts[1][0] + counts[1][1]);
  const double col0 = double(counts[0][0] + counts[1][0]);
  const double col1 = double(counts[0][1] + counts[1][1]);
  const double expected = (row0 * col0 + row1 * col1) / (n * n);
  if (expected >= 1.0) {
    throw StatsError("cohen_kappa: chance agreement is 1, kappa undefined");
  }
  KappaResult result;
  result.kappa = (observed - expected) / (1.0 - expected);
  result.percent_agreement = 100.0 * observed;
  return result;
}

ValidationMetrics ppv_fdr(const std::vector<bool>& verdicts) {
  if (verdicts.empty()) throw StatsError("ppv_fdr: no verdicts");
  long confirmed = 0;
  for (bool v : verdicts) confirmed += v ? 1 : 0;
  ValidationMetrics metrics;
  metrics.ppv = double(confirmed) / double(verdicts.size());
  metrics.fdr = 1.0 - metrics.ppv;
  return metrics;
}

std::vector<size_t> sample_indices(size_t population, size_t n, uint64_t seed) {
  if (n > population) {
    throw StatsError("sample size " + std::to_string(n) + " exceeds population " +
                     std::to_string(population));
  }
  // Selection sampling: include index i with probability needed/remaining.
  Rng rng(seed);
  std::vector<size_t> picked;
  picked.reserve(n);
  size_t needed = n;
  for (size_t i = 0; i < population && needed > 0; ++i) {
    size_t remaining = population - i;
    if (rng.bounded(remaining) < needed) {
      picked.push_back(i);
      --needed;
    }
  }
  return picked;
}

std::vector<AdrEvent> sample_for_validation(std::span<const AdrEvent> events, size_t n,
                                            uint64_t seed) {
  std::vector<AdrEvent> sample;
  sample.reserve(n);
  for (size_t index : sample_indices(events.size(), n, seed)) {
    sample.push_back(events[index]);
  }
  return sample;
}

}  // namespace pharmatimeline
