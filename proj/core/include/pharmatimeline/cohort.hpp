#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "pharmatimeline/date.hpp"

namespace pharmatimeline {

class Config;

enum class Gender { Male, Female, Unknown };
enum class AgeGroup {
  Under21, From21To30, From31To40, From41To50,
  From51To60, From61To70, From71To80, Above80,
};
enum class EthnicityGroup { White, Black, Asian, Other };
enum class SmokingStatus { Smoker, NonSmoker, Unknown };
enum class AdmissionStatus { Inpatient, Outpatient };
enum class DiagnosisCategory {
  Schizophrenia,    // F20-F29 except F25
  Schizoaffective,  // F25
  Bipolar,          // F31
  OtherMental,      // other F01-F99
  OtherDiagnosis,
  NotAvailable,
};

std::string_view to_string(Gender g);
std::string_view to_string(AgeGroup g);
std::string_view to_string(EthnicityGroup g);
std::string_view to_string(SmokingStatus s);
std::string_view to_string(AdmissionStatus s);
std::string_view to_string(DiagnosisCategory c);

struct PatientDemographics {
  std::string patient_id;
  std::optional<Date> dob;  // absent when the source never recorded it
  Gender gender = Gender::Unknown;
  std::string ethnicity_raw;
  std::string trust;
};

struct AdmissionRecord {
  std::string patient_id;
  Date admit_date;
  std::optional<Date> discharge_date;  // absent = still admitted
};

struct DiagnosisRecord {
  std::string patient_id;
  Date date;
  std::string icd10;  // validated against the ICD-10 lexical pattern at load
};

struct SmokingObservation {
  std::string patient_id;
  Date date;
  bool smoker = false;
};

// Completed age at the index date mapped to the eight reporting buckets;
// interval labels include both endpoints (21-30 covers ages 21..30).
AgeGroup age_group(Date dob, Date index);

// Raw ethnicity string -> one of the four groups; unmapped values fall back
// to Other. Keys are matched after normalize_term().
class EthnicityMap {
 public:
  static EthnicityMap defaults();
  static EthnicityMap from_config(const Config& cfg);

  EthnicityGroup group_for(std::string_view raw) const;
  void add(std::string_view raw, EthnicityGroup group);

 private:
  std::unordered_map<std::string, EthnicityGroup> mapping_;
};

struct SmokingPolicy {
  int window_days = 183;      // six months either side of the index
  bool any_smoker_wins = true;  // false: latest in-window observation decides
};

SmokingStatus smoking_status(std::span<const SmokingObservation> observations, Date index,
                             const SmokingPolicy& policy = {});

// Inpatient iff some admission interval contains the index; an open discharge
// counts as ongoing.
AdmissionStatus admission_status(std::span<const AdmissionRecord> admissions, Date index);

struct DiagnosisPolicy {
  int initial_window_days = 183;  // doubled until a record falls inside
  bool tie_prefers_post_index = true;
};

// Closest-in-time code classified into the six categories. The search window
// starts at +/-initial_window_days and doubles until a record is found or the
// records are exhausted. Ties at equal distance prefer the post-index record,
// then the higher-priority category, then the smaller code string.
DiagnosisCategory diagnosis_category(std::span<const DiagnosisRecord> diagnoses, Date index,
                                     const DiagnosisPolicy& policy = {});

DiagnosisCategory classify_icd10(std::string_view code);
bool valid_icd10(std::string_view code);

// Stratification values for one cohort member. age is absent without a dob;
// admission is absent when the trust supplied no admission data at all.
struct Strata {
  std::optional<AgeGroup> age;
  EthnicityGroup ethnicity = EthnicityGroup::Other;
  SmokingStatus smoking = SmokingStatus::Unknown;
  std::optional<AdmissionStatus> admission;
  DiagnosisCategory diagnosis = DiagnosisCategory::NotAvailable;
};

struct StrataPolicies {
  EthnicityMap ethnicity = EthnicityMap::defaults();
  SmokingPolicy smoking;
  DiagnosisPolicy diagnosis;
};

Strata derive_strata(const PatientDemographics& demographics,
                     std::span<const AdmissionRecord> admissions,
                     std::span<const DiagnosisRecord> diagnoses,
                     std::span<const SmokingObservation> smoking, Date index,
                     const StrataPolicies& policies, bool trust_has_admission_data);

// Input table loaders. Column sets are fixed by the file contracts; malformed
// rows raise ParseError with the offending line.
std::vector<PatientDemographics> read_patients_csv(const std::string& path);
std::vector<AdmissionRecord> read_admissions_csv(const std::string& path);
std::vector<DiagnosisRecord> read_diagnoses_csv(const std::string& path);
std::vector<SmokingObservation> read_smoking_csv(const std::string& path);

}  // namespace pharmatimeline
