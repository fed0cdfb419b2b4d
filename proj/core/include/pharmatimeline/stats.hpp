#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pharmatimeline/adr.hpp"
#include "pharmatimeline/cohort.hpp"

namespace pharmatimeline {

enum class Dimension {
  TrustTotal,
  Gender,
  Ethnicity,
  AgeGroup,
  Smoking,
  Admission,
  Diagnosis,
};

inline constexpr std::array<Dimension, 7> kAllDimensions = {
    Dimension::TrustTotal, Dimension::Gender,    Dimension::Ethnicity,
    Dimension::AgeGroup,   Dimension::Smoking,   Dimension::Admission,
    Dimension::Diagnosis};

std::string_view to_string(Dimension dim);

// Canonical level order within a dimension; report rows follow it.
std::vector<std::string> dimension_levels(Dimension dim);

// One cohort member prepared for counting: strata plus the set of
// (ade, bucket) pairs the member is affected by. A patient counts at most
// once per pair no matter how many events they had.
struct AnalysisMember {
  std::string patient_id;
  Date index_date;
  Gender gender = Gender::Unknown;
  Strata strata;
  std::set<std::pair<std::string, MonthBucket>> affected;
};

// Everything the statistics need from one trust. Dimension availability
// mirrors the source data: a trust that never supplied smoking observations
// is excluded from the smoking analyses rather than reported as all-unknown.
struct TrustCohort {
  std::string trust;
  std::vector<AnalysisMember> members;

  bool dimension_available(Dimension dim) const;

  // Level of this member within dim; nullopt when unknown (excluded from the
  // dimension's denominators).
  static std::optional<std::string> level_of(const AnalysisMember& member, Dimension dim);
};

struct PrevalenceCell {
  std::string ade;
  Dimension dimension = Dimension::TrustTotal;
  std::string level;
  MonthBucket bucket = MonthBucket::PlusOne;
  long numerator = 0;    // distinct affected patients
  long denominator = 0;  // stratum size

  double pct() const { return denominator == 0 ? 0.0 : 100.0 * double(numerator) / double(denominator); }
};

struct PrevalenceTable {
  std::vector<PrevalenceCell> cells;
  std::vector<std::string> warnings;  // dropped empty levels, etc.
};

// Cells for every (ade, level, bucket) of the dimension. Levels with no
// members are dropped and reported in warnings; denominator-0 cells are never
// emitted.
PrevalenceTable prevalence_table(const TrustCohort& cohort, Dimension dim,
                                 const std::vector<std::string>& ades);

// General r x c contingency table of non-negative counts.
struct ContingencyTable {
  std::vector<std::vector<long>> cells;

  size_t rows() const { return cells.size(); }
  size_t cols() const { return cells.empty() ? 0 : cells[0].size(); }
};

// Pearson statistic with expected counts from the margins; df = (r-1)(c-1).
// Throws StatsError on ragged input, negative cells, any zero margin, or
// tables smaller than 2x2.
struct ChiSquare {
  double statistic = 0.0;
  int df = 0;
};
ChiSquare chi_square(const ContingencyTable& table);

class StatsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Upper-tail probability of the chi-square distribution, evaluated through
// the regularized incomplete gamma function (series for x < a+1, continued
// fraction otherwise). Absolute error well under 1e-10.
double chi_square_pvalue(double statistic, int df);

// min(1, m*p).
double bonferroni(double p, int m);

struct ChiSquareResult {
  std::string ade;
  Dimension dimension = Dimension::Gender;
  MonthBucket bucket = MonthBucket::PlusOne;
  double statistic = 0.0;
  int df = 1;
  double p = 1.0;
  double p_adjusted = 1.0;
  bool significant = false;
  std::vector<std::string> warnings;
};

struct AnalysisOptions {
  int bonferroni_family_size = 0;  // 0 = number of ADEs under test
  std::vector<MonthBucket> buckets{kPostBuckets.begin(), kPostBuckets.end()};
  double alpha = 0.05;
};

// Affected vs not-affected across the dimension's levels, one test per
// (ade, bucket). Tables with a zero margin are reported with statistic 0,
// p 1 and a "degenerate-table" warning; expected cells below 1 add a
// "low-expected-count" warning.
std::vector<ChiSquareResult> chi_square_analysis(const TrustCohort& cohort, Dimension dim,
                                                 const std::vector<std::string>& ades,
                                                 const AnalysisOptions& options = {});

struct CombinedAnalysis {
  std::vector<ChiSquareResult> results;
  std::vector<std::string> warnings;  // trusts excluded from the dimension
};

// Pools members of every trust where the dimension is available and reruns
// the per-(ade, bucket) tests on the pooled cohort.
CombinedAnalysis combined_analysis(std::span<const TrustCohort> trusts, Dimension dim,
                                   const std::vector<std::string>& ades,
                                   const AnalysisOptions& options = {});

// Agreement between two annotators over the same items.
struct KappaResult {
  double kappa = 0.0;
  double percent_agreement = 0.0;  // 0..100
};

// counts[i][j]: items annotator A labelled i and annotator B labelled j.
// Throws StatsError when empty or when chance agreement is 1 (kappa undefined).
KappaResult cohen_kappa(const std::array<std::array<long, 2>, 2>& counts);

struct ValidationMetrics {
  double ppv = 0.0;
  double fdr = 0.0;
};

// verdicts: human review of predicted-positive samples (true = confirmed).
ValidationMetrics ppv_fdr(const std::vector<bool>& verdicts);

// Uniform sample without replacement, reproducible from the seed; preserves
// input order. Throws StatsError when n exceeds the population.
std::vector<size_t> sample_indices(size_t population, size_t n, uint64_t seed);
std::vector<AdrEvent> sample_for_validation(std::span<const AdrEvent> events, size_t n,
                                            uint64_t seed);

}  // namespace pharmatimeline
