#include "pharmatimeline/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "pharmatimeline/csv.hpp"
#include "pharmatimeline/errors.hpp"
#include "pharmatimeline/log.hpp"
#include "pharmatimeline/parallel.hpp"

namespace pharmatimeline {

uint64_t fnv1a64(std::string_view bytes) {
  uint64_t hash = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ull;
  }
  return hash;
}

std::string to_hex(uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

std::string format_pct(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", value);
  return buf;
}

std::string format_sci(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2e", value);
  return buf;
}

std::string_view to_string(SiderFlag flag) {
  switch (flag) {
    case SiderFlag::Below: return "Below";
    case SiderFlag::Within: return "Within";
    case SiderFlag::Above: return "Above";
    case SiderFlag::NoReference: return "NoReference";
  }
  return "?";
}

std::vector<Dimension> prevalence_dimensions() {
  return {Dimension::TrustTotal, Dimension::Gender, Dimension::Ethnicity,
          Dimension::AgeGroup,   Dimension::Smoking, Dimension::Admission};
}

std::vector<Dimension> test_dimensions() {
  return {Dimension::Gender, Dimension::Ethnicity, Dimension::AgeGroup,
          Dimension::Smoking, Dimension::Admission};
}

RunConfig RunConfig::from_config(const Config& cfg) {
  RunConfig rc;
  rc.raw = cfg;
  rc.corpus_dir = cfg.get_string("corpus_dir", rc.corpus_dir);
  auto path_or_default = [&](const char* key, const std::string& fallback) {
    return cfg.has(key) ? cfg.get_string(key) : fallback;
  };
  rc.drugs_csv = path_or_default("drugs", rc.drugs_csv);
  rc.ades_csv = path_or_default("ades", rc.ades_csv);
  rc.sider_csv = path_or_default("sider", rc.sider_csv);
  rc.documents_jsonl = path_or_default("documents", rc.corpus_dir + "/documents.jsonl");
  rc.prescriptions_explicit = cfg.has("prescriptions");
  rc.prescriptions_csv =
      path_or_default("prescriptions", rc.corpus_dir + "/prescriptions.csv");
  rc.patients_csv = path_or_default("patients", rc.corpus_dir + "/patients.csv");
  rc.admissions_csv = path_or_default("admissions", rc.corpus_dir + "/admissions.csv");
  rc.diagnoses_csv = path_or_default("diagnoses", rc.corpus_dir + "/diagnoses.csv");
  rc.smoking_csv = path_or_default("smoking", rc.corpus_dir + "/smoking.csv");

  rc.drug_of_interest = normalize_term(cfg.get_string("drug_of_interest", rc.drug_of_interest));
  rc.thresholds.max_gap_days = cfg.get_int("max_gap_days", rc.thresholds.max_gap_days);
  if (rc.thresholds.max_gap_days < 1) throw ParseError("max_gap_days must be >= 1");
  for (const auto& [drug, days] : cfg.get_map("per_drug_gap_days")) {
    int value = 0;
    auto [ptr, ec] = std::from_chars(days.data(), days.data() + days.size(), value);
    if (ec != std::errc() || ptr != days.data() + days.size() || value < 1) {
      throw ParseError("per_drug_gap_days: bad threshold '" + days + "' for " + drug);
    }
    rc.thresholds.per_drug[normalize_term(drug)] = value;
  }
  rc.bucket_policy.month_length_days =
      cfg.get_int("month_length_days", rc.bucket_policy.month_length_days);
  if (rc.bucket_policy.month_length_days < 1) throw ParseError("month_length_days must be >= 1");
  rc.bucket_policy.index_day_in_first_month =
      cfg.get_bool("index_day_in_first_month", rc.bucket_policy.index_day_in_first_month);
  rc.min_treatment_days = cfg.get_int("min_treatment_days", rc.min_treatment_days);
  if (rc.min_treatment_days < 0) throw ParseError("min_treatment_days must be >= 0");
  rc.bonferroni_family_size = cfg.get_int("bonferroni_family_size", rc.bonferroni_family_size);
  if (rc.bonferroni_family_size < 0) throw ParseError("bonferroni_family_size must be >= 0");
  rc.strict_attribution = cfg.get_bool("strict_attribution", rc.strict_attribution);
  rc.count_hedged = cfg.get_bool("count_hedged", rc.count_hedged);
  rc.cues = CueConfig::from_config(cfg);
  rc.strata.ethnicity = EthnicityMap::from_config(cfg);
  rc.strata.smoking.window_days = cfg.get_int("smoking_window_days", rc.strata.smoking.window_days);
  std::string smoking_rule = cfg.get_string("smoking_rule", "any_smoker");
  if (smoking_rule == "any_smoker") rc.strata.smoking.any_smoker_wins = true;
  else if (smoking_rule == "latest") rc.strata.smoking.any_smoker_wins = false;
  else throw ParseError("smoking_rule must be any_smoker|latest");
  rc.strata.diagnosis.initial_window_days =
      cfg.get_int("diagnosis_window_days", rc.strata.diagnosis.initial_window_days);
  std::string tiebreak = cfg.get_string("diagnosis_tiebreak", "post");
  if (tiebreak == "post") rc.strata.diagnosis.tie_prefers_post_index = true;
  else if (tiebreak == "pre") rc.strata.diagnosis.tie_prefers_post_index = false;
  else throw ParseError("diagnosis_tiebreak must be post|pre");
  rc.seed = cfg.get_u64("seed", rc.seed);
  rc.workers = unsigned(cfg.get_int("workers", 0));
  rc.out_dir = cfg.get_string("out_dir", rc.out_dir);
  return rc;
}

namespace {

void require_file(const std::string& path, const char* what) {
  if (path.empty() || !std::filesystem::exists(path)) {
    throw PipelineError(ErrorCode::MissingFile,
                        std::string("missing ") + what + " file: " + path);
  }
}

}  // namespace

void RunConfig::validate_lexicon_inputs() const {
  require_file(drugs_csv, "drug dictionary");
  require_file(ades_csv, "ADE dictionary");
  require_file(sider_csv, "reference");
}

void RunConfig::validate_corpus_inputs() const {
  require_file(documents_jsonl, "documents");
  if (prescriptions_explicit && !prescriptions_csv.empty() &&
      !std::filesystem::exists(prescriptions_csv)) {
    throw PipelineError(ErrorCode::MissingFile,
                        "missing prescriptions file: " + prescriptions_csv);
  }
}

void RunConfig::validate_cohort_inputs() const {
  require_file(patients_csv, "patients");
  require_file(admissions_csv, "admissions");
  require_file(diagnoses_csv, "diagnoses");
  require_file(smoking_csv, "smoking");
}

std::vector<SiderComparison> compare_with_sider(std::span<const PrevalenceCell> trust_total_cells,
                                                const std::string& trust,
                                                const SiderReference& reference) {
  std::vector<SiderComparison> rows;
  for (const PrevalenceCell& cell : trust_total_cells) {
    if (cell.dimension != Dimension::TrustTotal) continue;
    bool post = cell.bucket == MonthBucket::PlusOne || cell.bucket == MonthBucket::PlusTwo ||
                cell.bucket == MonthBucket::PlusThree;
    if (!post) continue;

    SiderComparison row;
    row.ade = cell.ade;
    row.trust = trust;
    row.bucket = cell.bucket;
    row.pct = cell.pct();
    auto range = reference.range_for(cell.ade);
    if (!range) {
      row.flag = SiderFlag::NoReference;
    } else {
      row.low = range->low_pct;
      row.high = range->high_pct;
      // One-sided rows compare against the single reported end.
      double low = range->low_pct ? *range->low_pct : *range->high_pct;
      double high = range->high_pct ? *range->high_pct : *range->low_pct;
      if (row.pct < low) row.flag = SiderFlag::Below;
      else if (row.pct > high) row.flag = SiderFlag::Above;
      else row.flag = SiderFlag::Within;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

Pipeline::Pipeline(RunConfig config) : config_(std::move(config)) {}

void Pipeline::load_lexicons() {
  if (lexicons_loaded_) return;
  config_.validate_lexicon_inputs();
  drugs_ = DrugLexicon::load(config_.drugs_csv);
  ades_ = AdeLexicon::load(config_.ades_csv);
  sider_ = SiderReference::load(config_.sider_csv);
  counts_["lexicon_drugs"] = drugs_.entries().size();
  counts_["lexicon_ades"] = ades_.entries().size();
  counts_["sider_rows"] = sider_.rows().size();
  if (!drugs_.generic_for(config_.drug_of_interest)) {
    throw PipelineError(ErrorCode::SchemaError, "drug of interest '" + config_.drug_of_interest +
                                                    "' is not in the drug dictionary");
  }
  lexicons_loaded_ = true;
}

void Pipeline::load_corpus() {
  if (corpus_loaded_) return;
  load_lexicons();
  config_.validate_corpus_inputs();
  documents_ = read_documents_jsonl(config_.documents_jsonl);
  counts_["documents"] = documents_.size();
  corpus_loaded_ = true;
}

void Pipeline::extract() {
  if (extracted_) return;
  load_corpus();

  MentionExtractor extractor(drugs_, ades_, config_.cues);
  mentions_ = parallel_flat_map(
      documents_, [&](const ClinicalDocument& doc) { return extractor.extract(doc); },
      config_.workers);
  counts_["text_mentions"] = mentions_.size();

  size_t prescription_mentions = 0;
  if (!config_.prescriptions_csv.empty() &&
      (config_.prescriptions_explicit || std::filesystem::exists(config_.prescriptions_csv))) {
    size_t skipped = 0;
    auto rows = read_prescriptions_csv(config_.prescriptions_csv, drugs_, &skipped);
    prescription_mentions = rows.size();
    counts_["prescription_rows_skipped"] = skipped;
    if (skipped > 0) {
      warnings_.push_back(std::to_string(skipped) + " prescription rows name unknown drugs");
    }
    mentions_.insert(mentions_.end(), std::make_move_iterator(rows.begin()),
                     std::make_move_iterator(rows.end()));
  }
  counts_["prescription_mentions"] = prescription_mentions;
  counts_["mentions"] = mentions_.size();

  size_t countable = 0;
  for (const Mention& m : mentions_) {
    if (m.polarity == Polarity::Positive ||
        (config_.count_hedged && m.polarity == Polarity::Hedged)) {
      ++countable;
    }
  }
  counts_["countable_mentions"] = countable;

  daily_events_ = collapse_daily(mentions_, config_.count_hedged);
  counts_["daily_events"] = daily_events_.size();
  size_t drug_events = 0;
  for (const DailyEvent& e : daily_events_) drug_events += e.kind == MentionKind::Drug ? 1 : 0;
  counts_["daily_events_drug"] = drug_events;
  counts_["daily_events_ade"] = daily_events_.size() - drug_events;
  extracted_ = true;
}

void Pipeline::build_episodes() {
  if (episodes_built_) return;
  extract();

  episodes_.clear();
  size_t begin = 0;
  while (begin < daily_events_.size()) {
    size_t end = begin;
    while (end < daily_events_.size() &&
           daily_events_[end].patient_id == daily_events_[begin].patient_id) {
      ++end;
    }
    std::vector<DailyEvent> drug_events;
    for (size_t i = begin; i < end; ++i) {
      if (daily_events_[i].kind == MentionKind::Drug) drug_events.push_back(daily_events_[i]);
    }
    auto episodes = pharmatimeline::build_episodes(drug_events, config_.thresholds);
    episodes_.insert(episodes_.end(), std::make_move_iterator(episodes.begin()),
                     std::make_move_iterator(episodes.end()));
    begin = end;
  }
  counts_["episodes"] = episodes_.size();
  episodes_built_ = true;
}

void Pipeline::build_cohort() {
  if (cohort_built_) return;
  build_episodes();

  config_.validate_cohort_inputs();
  registry_ = read_patients_csv(config_.patients_csv);
  counts_["registry_patients"] = registry_.size();

  std::unordered_map<std::string, const PatientDemographics*> by_id;
  std::vector<std::string> registry_ids;
  std::vector<std::string> trust_order;
  std::unordered_set<std::string> seen_trusts;
  for (const PatientDemographics& p : registry_) {
    if (!by_id.emplace(p.patient_id, &p).second) {
      throw PipelineError(ErrorCode::SchemaError,
                          "duplicate patient_id in registry: " + p.patient_id);
    }
    registry_ids.push_back(p.patient_id);
    if (seen_trusts.insert(p.trust).second) trust_order.push_back(p.trust);
  }

  size_t unknown_patients = 0;
  {
    std::unordered_set<std::string> episode_ids;
    for (const MedicationEpisode& e : episodes_) episode_ids.insert(e.patient_id);
    for (const std::string& id : episode_ids) {
      if (!by_id.count(id)) ++unknown_patients;
    }
  }
  if (unknown_patients > 0) {
    warnings_.push_back(std::to_string(unknown_patients) +
                        " patients with episodes are absent from the registry");
  }

  members_ = select_cohort(registry_ids, episodes_, config_.drug_of_interest,
                           config_.min_treatment_days, config_.thresholds);
  counts_["cohort_members"] = members_.size();
  size_t qualifying = 0;
  for (const CohortMember& m : members_) qualifying += m.qualifying ? 1 : 0;
  counts_["cohort_qualifying"] = qualifying;
  if (qualifying == 0) {
    throw PipelineError(ErrorCode::EmptyCohort,
                        "empty cohort: no patient qualifies for '" + config_.drug_of_interest +
                            "' with min_treatment_days=" +
                            std::to_string(config_.min_treatment_days));
  }

  // Patient-keyed views of the supporting tables.
  std::unordered_map<std::string, std::vector<AdmissionRecord>> admissions_by_id;
  for (AdmissionRecord& r : read_admissions_csv(config_.admissions_csv)) {
    admissions_by_id[r.patient_id].push_back(std::move(r));
  }
  std::unordered_map<std::string, std::vector<DiagnosisRecord>> diagnoses_by_id;
  for (DiagnosisRecord& r : read_diagnoses_csv(config_.diagnoses_csv)) {
    diagnoses_by_id[r.patient_id].push_back(std::move(r));
  }
  std::unordered_map<std::string, std::vector<SmokingObservation>> smoking_by_id;
  for (SmokingObservation& r : read_smoking_csv(config_.smoking_csv)) {
    smoking_by_id[r.patient_id].push_back(std::move(r));
  }

  // A trust with no admission rows at all never exposes the dimension.
  std::unordered_set<std::string> trusts_with_admissions;
  for (const auto& [patient_id, rows] : admissions_by_id) {
    auto it = by_id.find(patient_id);
    if (it != by_id.end() && !rows.empty()) trusts_with_admissions.insert(it->second->trust);
  }

  std::unordered_map<std::string, std::vector<const MedicationEpisode*>> episodes_by_id;
  for (const MedicationEpisode& e : episodes_) episodes_by_id[e.patient_id].push_back(&e);
  std::unordered_map<std::string, std::vector<const DailyEvent*>> ade_events_by_id;
  for (const DailyEvent& e : daily_events_) {
    if (e.kind == MentionKind::Ade) ade_events_by_id[e.patient_id].push_back(&e);
  }

  std::unordered_map<std::string, size_t> trust_index;
  trust_cohorts_.clear();
  for (const std::string& trust : trust_order) {
    trust_index.emplace(trust, trust_cohorts_.size());
    trust_cohorts_.push_back(TrustCohort{trust, {}});
  }

  adr_events_.clear();
  size_t bucketed = 0;
  for (const CohortMember& member : members_) {
    if (!member.qualifying) continue;
    const PatientDemographics& demo = *by_id.at(member.patient_id);

    static const std::vector<AdmissionRecord> no_admissions;
    static const std::vector<DiagnosisRecord> no_diagnoses;
    static const std::vector<SmokingObservation> no_smoking;
    auto adm_it = admissions_by_id.find(member.patient_id);
    auto diag_it = diagnoses_by_id.find(member.patient_id);
    auto smoke_it = smoking_by_id.find(member.patient_id);
    const auto& admissions = adm_it == admissions_by_id.end() ? no_admissions : adm_it->second;
    const auto& diagnoses = diag_it == diagnoses_by_id.end() ? no_diagnoses : diag_it->second;
    const auto& smoking = smoke_it == smoking_by_id.end() ? no_smoking : smoke_it->second;

    AnalysisMember row;
    row.patient_id = member.patient_id;
    row.index_date = member.index_date;
    row.gender = demo.gender;
    row.strata = derive_strata(demo, admissions, diagnoses, smoking, member.index_date,
                               config_.strata, trusts_with_admissions.count(demo.trust) > 0);

    // Per-patient ADR timeline, bucketed against the member's index date.
    std::vector<DailyEvent> patient_events;
    auto events_it = ade_events_by_id.find(member.patient_id);
    if (events_it != ade_events_by_id.end()) {
      for (const DailyEvent* e : events_it->second) patient_events.push_back(*e);
    }
    std::vector<MedicationEpisode> patient_episodes;
    auto eps_it = episodes_by_id.find(member.patient_id);
    if (eps_it != episodes_by_id.end()) {
      for (const MedicationEpisode* e : eps_it->second) patient_episodes.push_back(*e);
    }
    for (AdrEvent& event : build_adr_timeline(patient_events, patient_episodes)) {
      event.interval = month_bucket(member.index_date, event.date, config_.bucket_policy);
      if (event.interval) {
        ++bucketed;
        bool counted = true;
        bool post = *event.interval == MonthBucket::PlusOne ||
                    *event.interval == MonthBucket::PlusTwo ||
                    *event.interval == MonthBucket::PlusThree;
        if (post && config_.strict_attribution &&
            !event.concurrent_drugs.count(config_.drug_of_interest)) {
          counted = false;
        }
        if (counted) row.affected.emplace(event.ade, *event.interval);
      }
      adr_events_.push_back(std::move(event));
    }

    trust_cohorts_[trust_index.at(demo.trust)].members.push_back(std::move(row));
  }
  counts_["adr_events"] = adr_events_.size();
  counts_["adr_events_bucketed"] = bucketed;

  // Trusts with no qualifying members drop out entirely.
  std::erase_if(trust_cohorts_, [&](const TrustCohort& t) {
    if (t.members.empty()) {
      warnings_.push_back("trust " + t.trust + " has no qualifying cohort members");
      return true;
    }
    return false;
  });
  counts_["trusts"] = trust_cohorts_.size();
  cohort_built_ = true;
}

void Pipeline::analyze() {
  if (analyzed_) return;
  build_cohort();

  const std::vector<std::string> ades = ades_.canonical_names();
  AnalysisOptions options;
  options.bonferroni_family_size = config_.bonferroni_family_size;

  prevalence_.clear();
  per_trust_chisq_.clear();
  size_t prevalence_cells = 0;
  for (const TrustCohort& trust : trust_cohorts_) {
    TrustPrevalence tp;
    tp.trust = trust.trust;
    for (Dimension dim : prevalence_dimensions()) {
      if (dim != Dimension::TrustTotal && !trust.dimension_available(dim)) {
        warnings_.push_back("trust " + trust.trust + ": dimension " +
                            std::string(to_string(dim)) + " unavailable, skipped");
        continue;
      }
      PrevalenceTable table = prevalence_table(trust, dim, ades);
      prevalence_cells += table.cells.size();
      for (const std::string& warning : table.warnings) warnings_.push_back(warning);
      tp.tables.emplace(dim, std::move(table));
    }
    prevalence_.push_back(std::move(tp));

    std::vector<ChiSquareResult> trust_results;
    for (Dimension dim : test_dimensions()) {
      if (!trust.dimension_available(dim)) continue;
      auto results = chi_square_analysis(trust, dim, ades, options);
      trust_results.insert(trust_results.end(), std::make_move_iterator(results.begin()),
                           std::make_move_iterator(results.end()));
    }
    per_trust_chisq_.emplace_back(trust.trust, std::move(trust_results));
  }
  counts_["prevalence_cells"] = prevalence_cells;
  size_t per_trust_rows = 0;
  for (const auto& [trust, results] : per_trust_chisq_) per_trust_rows += results.size();
  counts_["chisq_per_trust_rows"] = per_trust_rows;

  combined_chisq_.clear();
  for (Dimension dim : test_dimensions()) {
    CombinedAnalysis combined = combined_analysis(trust_cohorts_, dim, ades, options);
    for (const std::string& warning : combined.warnings) warnings_.push_back(warning);
    combined_chisq_.insert(combined_chisq_.end(),
                           std::make_move_iterator(combined.results.begin()),
                           std::make_move_iterator(combined.results.end()));
  }
  counts_["chisq_combined_rows"] = combined_chisq_.size();

  sider_rows_.clear();
  for (const TrustPrevalence& tp : prevalence_) {
    auto it = tp.tables.find(Dimension::TrustTotal);
    if (it == tp.tables.end()) continue;
    auto rows = compare_with_sider(it->second.cells, tp.trust, sider_);
    sider_rows_.insert(sider_rows_.end(), std::make_move_iterator(rows.begin()),
                       std::make_move_iterator(rows.end()));
  }
  counts_["sider_rows"] = sider_rows_.size();
  analyzed_ = true;
}

void Pipeline::ensure_out_dir() const {
  std::filesystem::create_directories(config_.out_dir);
}

void Pipeline::write_extraction_outputs() const {
  ensure_out_dir();
  write_mentions_csv(config_.out_dir + "/mentions.csv", mentions_);
  write_daily_events_csv(config_.out_dir + "/daily_events.csv", daily_events_);
}

void Pipeline::write_episodes_output() const {
  ensure_out_dir();
  write_episodes_csv(config_.out_dir + "/episodes.csv", episodes_);
}

void Pipeline::write_cohort_outputs() const {
  ensure_out_dir();
  write_adr_events_csv(config_.out_dir + "/adr_events.csv", adr_events_);

  // Member roster with derived strata; the qualifying flag mirrors the
  // cohort filter, so Table-1-style breakdowns can be rebuilt from this file.
  std::ofstream out(config_.out_dir + "/members.csv", std::ios::binary);
  if (!out) throw PipelineError(ErrorCode::MissingFile, "cannot write members.csv");
  out << "patient_id,trust,index_date,qualifying,gender,age_group,ethnicity,smoking,admission,diagnosis\n";
  std::unordered_map<std::string, const AnalysisMember*> analysis_by_id;
  std::unordered_map<std::string, const std::string*> trust_by_id;
  for (const TrustCohort& trust : trust_cohorts_) {
    for (const AnalysisMember& m : trust.members) {
      analysis_by_id.emplace(m.patient_id, &m);
      trust_by_id.emplace(m.patient_id, &trust.trust);
    }
  }
  std::unordered_map<std::string, const PatientDemographics*> demo_by_id;
  for (const PatientDemographics& p : registry_) demo_by_id.emplace(p.patient_id, &p);
  for (const CohortMember& member : members_) {
    const AnalysisMember* analysis = nullptr;
    auto it = analysis_by_id.find(member.patient_id);
    if (it != analysis_by_id.end()) analysis = it->second;
    auto demo_it = demo_by_id.find(member.patient_id);
    std::string trust = demo_it != demo_by_id.end() ? demo_it->second->trust : "";
    std::vector<std::string> fields{
        member.patient_id,
        trust,
        member.index_date.to_string(),
        member.qualifying ? "true" : "false",
        analysis ? std::string(to_string(analysis->gender)) : "",
        analysis && analysis->strata.age ? std::string(to_string(*analysis->strata.age)) : "",
        analysis ? std::string(to_string(analysis->strata.ethnicity)) : "",
        analysis ? std::string(to_string(analysis->strata.smoking)) : "",
        analysis && analysis->strata.admission
            ? std::string(to_string(*analysis->strata.admission))
            : "",
        analysis ? std::string(to_string(analysis->strata.diagnosis)) : ""};
    write_csv_row(out, fields);
  }
}

namespace {

// (ade file order, trust order, dimension, level order) for report rows.
struct AdeRank {
  std::unordered_map<std::string, size_t> rank;
  explicit AdeRank(const std::vector<std::string>& ades) {
    for (size_t i = 0; i < ades.size(); ++i) rank.emplace(ades[i], i);
  }
  size_t of(const std::string& ade) const {
    auto it = rank.find(ade);
    return it == rank.end() ? rank.size() : it->second;
  }
};

}  // namespace

void Pipeline::write_prevalence_output() const {
  ensure_out_dir();
  std::ofstream out(config_.out_dir + "/prevalence.csv", std::ios::binary);
  if (!out) throw PipelineError(ErrorCode::MissingFile, "cannot write prevalence.csv");
  out << "ade,trust,dimension,level,m-3,m-2,m-1,m+1,m+2,m+3,sider_low,sider_high\n";

  AdeRank ade_rank(ades_.canonical_names());
  struct Row {
    size_t ade_order;
    size_t trust_order;
    Dimension dim;
    size_t level_order;
    std::vector<std::string> fields;
  };
  std::vector<Row> rows;

  for (size_t trust_idx = 0; trust_idx < prevalence_.size(); ++trust_idx) {
    const TrustPrevalence& tp = prevalence_[trust_idx];
    for (const auto& [dim, table] : tp.tables) {
      auto levels = dimension_levels(dim);
      auto level_rank = [&](const std::string& level) {
        return size_t(std::find(levels.begin(), levels.end(), level) - levels.begin());
      };
      // Cells arrive sorted (ade, level, bucket): consume six buckets per row.
      for (size_t i = 0; i + 6 <= table.cells.size(); i += 6) {
        const PrevalenceCell& first = table.cells[i];
        for (size_t b = 1; b < 6; ++b) {
          if (table.cells[i + b].ade != first.ade || table.cells[i + b].level != first.level) {
            throw std::runtime_error("prevalence cells not grouped by (ade, level)");
          }
        }
        Row row;
        row.ade_order = ade_rank.of(first.ade);
        row.trust_order = trust_idx;
        row.dim = dim;
        row.level_order = level_rank(first.level);
        row.fields = {first.ade, tp.trust, std::string(to_string(dim)), first.level};
        for (size_t b = 0; b < 6; ++b) {
          row.fields.push_back(format_pct(table.cells[i + b].pct()));
        }
        auto range = sider_.range_for(first.ade);
        row.fields.push_back(range && range->low_pct ? format_pct(*range->low_pct) : "");
        row.fields.push_back(range && range->high_pct ? format_pct(*range->high_pct) : "");
        rows.push_back(std::move(row));
      }
    }
  }
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    return std::tie(a.ade_order, a.trust_order, a.dim, a.level_order) <
           std::tie(b.ade_order, b.trust_order, b.dim, b.level_order);
  });
  for (const Row& row : rows) write_csv_row(out, row.fields);
}

namespace {

std::string join_warnings(const std::vector<std::string>& warnings) {
  std::string out;
  for (const std::string& w : warnings) {
    if (!out.empty()) out += ';';
    out += w;
  }
  return out;
}

std::vector<std::string> chisq_fields(const ChiSquareResult& r) {
  return {r.ade,
          std::string(to_string(r.dimension)),
          std::string(bucket_label(r.bucket)),
          format_sci(r.statistic),
          std::to_string(r.df),
          format_sci(r.p),
          format_sci(r.p_adjusted),
          r.significant ? "true" : "false",
          join_warnings(r.warnings)};
}

}  // namespace

void Pipeline::write_stats_outputs() const {
  ensure_out_dir();
  {
    std::ofstream out(config_.out_dir + "/chisq_per_trust.csv", std::ios::binary);
    if (!out) throw PipelineError(ErrorCode::MissingFile, "cannot write chisq_per_trust.csv");
    out << "ade,trust,dimension,bucket,statistic,df,p,p_adjusted,significant,warnings\n";
    for (const auto& [trust, results] : per_trust_chisq_) {
      for (const ChiSquareResult& r : results) {
        std::vector<std::string> fields = chisq_fields(r);
        fields.insert(fields.begin() + 1, trust);
        write_csv_row(out, fields);
      }
    }
  }
  {
    std::ofstream out(config_.out_dir + "/chisq_combined.csv", std::ios::binary);
    if (!out) throw PipelineError(ErrorCode::MissingFile, "cannot write chisq_combined.csv");
    out << "ade,dimension,bucket,statistic,df,p,p_adjusted,significant,warnings\n";
    for (const ChiSquareResult& r : combined_chisq_) {
      write_csv_row(out, chisq_fields(r));
    }
  }
}

void Pipeline::write_sider_output() const {
  ensure_out_dir();
  std::ofstream out(config_.out_dir + "/sider_compare.csv", std::ios::binary);
  if (!out) throw PipelineError(ErrorCode::MissingFile, "cannot write sider_compare.csv");
  out << "ade,trust,bucket,pct,sider_low,sider_high,flag\n";
  for (const SiderComparison& row : sider_rows_) {
    std::vector<std::string> fields{row.ade,
                                    row.trust,
                                    std::string(bucket_label(row.bucket)),
                                    format_pct(row.pct),
                                    row.low ? format_pct(*row.low) : "",
                                    row.high ? format_pct(*row.high) : "",
                                    std::string(to_string(row.flag))};
    write_csv_row(out, fields);
  }
}

RunReport Pipeline::run_all() {
  analyze();
  write_extraction_outputs();
  write_episodes_output();
  write_cohort_outputs();
  write_prevalence_output();
  write_stats_outputs();
  write_sider_output();

  // Filter-only stages can only shrink.
  auto check = [](bool ok, const char* what) {
    if (!ok) throw std::runtime_error(std::string("internal invariant violated: ") + what);
  };
  check(counts_.at("daily_events") <= counts_.at("countable_mentions"),
        "daily events exceed countable mentions");
  check(counts_.at("cohort_qualifying") <= counts_.at("cohort_members"),
        "qualifying members exceed members");
  check(counts_.at("cohort_members") <= counts_.at("registry_patients"),
        "members exceed registry");
  check(counts_.at("adr_events_bucketed") <= counts_.at("adr_events"),
        "bucketed events exceed events");

  RunReport report;
  report.counts = counts_;
  report.warnings = warnings_;

  std::string config_blob;
  for (const auto& [key, value] : config_.raw.values()) {
    config_blob += key;
    config_blob += '=';
    config_blob += value;
    config_blob += '\n';
  }
  report.config_hash = to_hex(fnv1a64(config_blob));

  const char* output_names[] = {"mentions.csv",  "daily_events.csv", "episodes.csv",
                                "members.csv",   "adr_events.csv",   "prevalence.csv",
                                "chisq_per_trust.csv", "chisq_combined.csv", "sider_compare.csv"};
  nlohmann::json outputs = nlohmann::json::object();
  for (const char* name : output_names) {
    outputs[name] = to_hex(fnv1a64(read_file(config_.out_dir + "/" + std::string(name))));
  }

  nlohmann::json counts = nlohmann::json::object();
  for (const auto& [key, value] : counts_) counts[key] = value;

  nlohmann::json manifest{{"config_hash", report.config_hash},
                          {"seed", config_.seed},
                          {"inputs",
                           {{"drugs", config_.drugs_csv},
                            {"ades", config_.ades_csv},
                            {"sider", config_.sider_csv},
                            {"documents", config_.documents_jsonl},
                            {"prescriptions", config_.prescriptions_csv},
                            {"patients", config_.patients_csv},
                            {"admissions", config_.admissions_csv},
                            {"diagnoses", config_.diagnoses_csv},
                            {"smoking", config_.smoking_csv}}},
                          {"counts", counts},
                          {"outputs", outputs},
                          {"warnings", warnings_}};
  report.manifest_hash = to_hex(fnv1a64(manifest.dump()));
  manifest["manifest_hash"] = report.manifest_hash;

  std::ofstream out(config_.out_dir + "/run_manifest.json", std::ios::binary);
  if (!out) throw PipelineError(ErrorCode::MissingFile, "cannot write run_manifest.json");
  out << manifest.dump(2) << '\n';

  return report;
}

RunReport run_pipeline(const RunConfig& config) {
  Pipeline pipeline(config);
  return pipeline.run_all();
}

}  // namespace pharmatimeline
