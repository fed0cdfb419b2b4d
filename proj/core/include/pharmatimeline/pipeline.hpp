#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pharmatimeline/adr.hpp"
#include "pharmatimeline/cohort.hpp"
#include "pharmatimeline/config.hpp"
#include "pharmatimeline/episodes.hpp"
#include "pharmatimeline/extraction.hpp"
#include "pharmatimeline/lexicon.hpp"
#include "pharmatimeline/stats.hpp"

namespace pharmatimeline {

uint64_t fnv1a64(std::string_view bytes);
std::string to_hex(uint64_t value);

// Fixed two-decimal / scientific formatting used by every report writer.
std::string format_pct(double value);  // "%.2f"
std::string format_sci(double value);  // "%.2e"

// Everything one run needs, resolved from the key-value config file plus CLI
// overrides. Input paths default to <corpus_dir>/<name> so a single config
// drives both the generator and the pipeline.
struct RunConfig {
  std::string drugs_csv = "data/drugs.csv";
  std::string ades_csv = "data/ades.csv";
  std::string sider_csv = "data/sider.csv";
  std::string documents_jsonl;
  std::string prescriptions_csv;  // empty = no structured prescriptions
  bool prescriptions_explicit = false;
  std::string patients_csv;
  std::string admissions_csv;
  std::string diagnoses_csv;
  std::string smoking_csv;

  std::string drug_of_interest = "clozapine";
  EpisodeThresholds thresholds;
  BucketPolicy bucket_policy;
  int min_treatment_days = 90;
  int bonferroni_family_size = 0;  // 0 = number of ADEs under test
  bool strict_attribution = false;
  bool count_hedged = false;
  CueConfig cues = CueConfig::defaults();
  StrataPolicies strata;
  uint64_t seed = 1;
  unsigned workers = 0;  // 0 = hardware concurrency

  std::string corpus_dir = "corpus";
  std::string out_dir = "out";

  Config raw;  // source key-value map, hashed into the manifest

  static RunConfig from_config(const Config& cfg);

  // MissingFile errors naming the path; split so the stage subcommands only
  // demand the files they actually read.
  void validate_lexicon_inputs() const;
  void validate_corpus_inputs() const;
  void validate_cohort_inputs() const;
};

enum class SiderFlag { Below, Within, Above, NoReference };
std::string_view to_string(SiderFlag flag);

struct SiderComparison {
  std::string ade;
  std::string trust;
  MonthBucket bucket = MonthBucket::PlusOne;
  double pct = 0.0;
  std::optional<double> low;
  std::optional<double> high;
  SiderFlag flag = SiderFlag::NoReference;
};

// Flags each trust-total post-index percentage against the reference range.
// One-sided references compare against the single reported end, so a value
// above a low-only reference is Above.
std::vector<SiderComparison> compare_with_sider(std::span<const PrevalenceCell> trust_total_cells,
                                                const std::string& trust,
                                                const SiderReference& reference);

struct TrustPrevalence {
  std::string trust;
  std::map<Dimension, PrevalenceTable> tables;
};

struct RunReport {
  std::map<std::string, size_t> counts;
  std::vector<std::string> warnings;
  std::string manifest_hash;
  std::string config_hash;
};

// Staged pipeline; each CLI subcommand drives it up to the stage it reports
// on. Stages are idempotent within one instance and must run in order.
class Pipeline {
 public:
  explicit Pipeline(RunConfig config);

  void load_lexicons();
  void load_corpus();      // documents + optional prescriptions
  void extract();          // mentions + daily events
  void build_episodes();   // per-patient episode segmentation
  void build_cohort();     // registry, strata, bucketed ADR events
  void analyze();          // prevalence + chi-square + SIDER comparison

  // Artifact writers; each creates out_dir when needed.
  void write_extraction_outputs() const;  // mentions.csv, daily_events.csv
  void write_episodes_output() const;     // episodes.csv
  void write_cohort_outputs() const;      // members.csv, adr_events.csv
  void write_prevalence_output() const;   // prevalence.csv
  void write_stats_outputs() const;       // chisq_per_trust.csv, chisq_combined.csv
  void write_sider_output() const;        // sider_compare.csv

  RunReport run_all();  // all stages, all artifacts, plus run_manifest.json

  const RunConfig& config() const { return config_; }
  const DrugLexicon& drugs() const { return drugs_; }
  const AdeLexicon& ades() const { return ades_; }
  const SiderReference& sider() const { return sider_; }
  const std::vector<ClinicalDocument>& documents() const { return documents_; }
  const std::vector<Mention>& mentions() const { return mentions_; }
  const std::vector<DailyEvent>& daily_events() const { return daily_events_; }
  const std::vector<MedicationEpisode>& episodes() const { return episodes_; }
  const std::vector<CohortMember>& cohort_members() const { return members_; }
  const std::vector<TrustCohort>& trust_cohorts() const { return trust_cohorts_; }
  const std::vector<AdrEvent>& adr_events() const { return adr_events_; }
  const std::vector<TrustPrevalence>& prevalence() const { return prevalence_; }
  const std::vector<std::pair<std::string, std::vector<ChiSquareResult>>>& per_trust_chisq() const {
    return per_trust_chisq_;
  }
  const std::vector<ChiSquareResult>& combined_chisq() const { return combined_chisq_; }
  const std::vector<SiderComparison>& sider_rows() const { return sider_rows_; }
  const std::map<std::string, size_t>& counts() const { return counts_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  void ensure_out_dir() const;

  RunConfig config_;
  DrugLexicon drugs_;
  AdeLexicon ades_;
  SiderReference sider_;
  std::vector<ClinicalDocument> documents_;
  std::vector<Mention> mentions_;
  std::vector<DailyEvent> daily_events_;
  std::vector<MedicationEpisode> episodes_;
  std::vector<PatientDemographics> registry_;
  std::vector<CohortMember> members_;
  std::vector<TrustCohort> trust_cohorts_;
  std::vector<AdrEvent> adr_events_;
  std::vector<TrustPrevalence> prevalence_;
  std::vector<std::pair<std::string, std::vector<ChiSquareResult>>> per_trust_chisq_;
  std::vector<ChiSquareResult> combined_chisq_;
  std::vector<SiderComparison> sider_rows_;
  std::map<std::string, size_t> counts_;
  std::vector<std::string> warnings_;
  bool lexicons_loaded_ = false;
  bool corpus_loaded_ = false;
  bool extracted_ = false;
  bool episodes_built_ = false;
  bool cohort_built_ = false;
  bool analyzed_ = false;
};

RunReport run_pipeline(const RunConfig& config);

// Dimensions reported per trust (prevalence) and tested (chi-square).
std::vector<Dimension> prevalence_dimensions();
std::vector<Dimension> test_dimensions();

}  // namespace pharmatimeline
