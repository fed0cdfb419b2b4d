#include "pharmatimeline/cohort.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <stdexcept>

#include "pharmatimeline/config.hpp"
#include "pharmatimeline/csv.hpp"
#include "pharmatimeline/errors.hpp"
#include "pharmatimeline/lexicon.hpp"

namespace pharmatimeline {

std::string_view to_string(Gender g) {
  switch (g) {
    case Gender::Male: return "Male";
    case Gender::Female: return "Female";
    case Gender::Unknown: return "Unknown";
  }
  return "?";
}

std::string_view to_string(AgeGroup g) {
  switch (g) {
    case AgeGroup::Under21: return "Under 21";
    case AgeGroup::From21To30: return "21-30";
    case AgeGroup::From31To40: return "31-40";
    case AgeGroup::From41To50: return "41-50";
    case AgeGroup::From51To60: return "51-60";
    case AgeGroup::From61To70: return "61-70";
    case AgeGroup::From71To80: return "71-80";
    case AgeGroup::Above80: return "Above 80";
  }
  return "?";
}

std::string_view to_string(EthnicityGroup g) {
  switch (g) {
    case EthnicityGroup::White: return "White";
    case EthnicityGroup::Black: return "Black";
    case EthnicityGroup::Asian: return "Asian";
    case EthnicityGroup::Other: return "Other";
  }
  return "?";
}

std::string_view to_string(SmokingStatus s) {
  switch (s) {
    case SmokingStatus::Smoker: return "Smoker";
    case SmokingStatus::NonSmoker: return "Non-Smoker";
    case SmokingStatus::Unknown: return "Unknown";
  }
  return "?";
}

std::string_view to_string(AdmissionStatus s) {
  return s == AdmissionStatus::Inpatient ? "Inpatient" : "Outpatient";
}

std::string_view to_string(DiagnosisCategory c) {
  switch (c) {
    case DiagnosisCategory::Schizophrenia: return "Schizophrenia";
    case DiagnosisCategory::Schizoaffective: return "Schizoaffective";
    case DiagnosisCategory::Bipolar: return "Bipolar";
    case DiagnosisCategory::OtherMental: return "OtherMental";
    case DiagnosisCategory::OtherDiagnosis: return "OtherDiagnosis";
    case DiagnosisCategory::NotAvailable: return "NotAvailable";
  }
  return "?";
}

AgeGroup age_group(Date dob, Date index) {
  int age = completed_years(dob, index);
  if (age < 21) return AgeGroup::Under21;
  if (age <= 30) return AgeGroup::From21To30;
  if (age <= 40) return AgeGroup::From31To40;
  if (age <= 50) return AgeGroup::From41To50;
  if (age <= 60) return AgeGroup::From51To60;
  if (age <= 70) return AgeGroup::From61To70;
  if (age <= 80) return AgeGroup::From71To80;
  return AgeGroup::Above80;
}

EthnicityMap EthnicityMap::defaults() {
  EthnicityMap map;
  const char* white[] = {"white", "white british", "white irish", "white other",
                         "white european", "british", "irish"};
  const char* black[] = {"black", "black british", "black caribbean", "black african",
                         "black other", "african", "caribbean"};
  const char* asian[] = {"asian", "asian british", "asian indian", "asian pakistani",
                         "asian bangladeshi", "asian other", "indian", "pakistani",
                         "bangladeshi", "chinese"};
  for (const char* k : white) map.add(k, EthnicityGroup::White);
  for (const char* k : black) map.add(k, EthnicityGroup::Black);
  for (const char* k : asian) map.add(k, EthnicityGroup::Asian);
  map.add("mixed", EthnicityGroup::Other);
  map.add("other", EthnicityGroup::Other);
  return map;
}

EthnicityMap EthnicityMap::from_config(const Config& cfg) {
  EthnicityMap map = defaults();
  if (!cfg.has("ethnicity_map")) return map;
  for (const auto& [raw, group] : cfg.get_map("ethnicity_map")) {
    std::string g = normalize_term(group);
    if (g == "white") map.add(raw, EthnicityGroup::White);
    else if (g == "black") map.add(raw, EthnicityGroup::Black);
    else if (g == "asian") map.add(raw, EthnicityGroup::Asian);
    else if (g == "other") map.add(raw, EthnicityGroup::Other);
    else throw ParseError("ethnicity_map: unknown group '" + group + "'");
  }
  return map;
}

EthnicityGroup EthnicityMap::group_for(std::string_view raw) const {
  auto it = mapping_.find(normalize_term(raw));
  return it == mapping_.end() ? EthnicityGroup::Other : it->second;
}

void EthnicityMap::add(std::string_view raw, EthnicityGroup group) {
  mapping_[normalize_term(raw)] = group;
}

SmokingStatus smoking_status(std::span<const SmokingObservation> observations, Date index,
                             const SmokingPolicy& policy) {
  bool saw_smoker = false;
  bool saw_nonsmoker = false;
  std::optional<Date> latest_date;
  bool latest_smoker = false;
  for (const SmokingObservation& obs : observations) {
    int distance = obs.date - index;
    if (distance < -policy.window_days || distance > policy.window_days) continue;
    if (obs.smoker) saw_smoker = true;
    else saw_nonsmoker = true;
    if (!latest_date || obs.date > *latest_date ||
        (obs.date == *latest_date && obs.smoker)) {
      latest_date = obs.date;
      latest_smoker = obs.smoker;
    }
  }
  if (!saw_smoker && !saw_nonsmoker) return SmokingStatus::Unknown;
  if (policy.any_smoker_wins) {
    return saw_smoker ? SmokingStatus::Smoker : SmokingStatus::NonSmoker;
  }
  return latest_smoker ? SmokingStatus::Smoker : SmokingStatus::NonSmoker;
}

AdmissionStatus admission_status(std::span<const AdmissionRecord> admissions, Date index) {
  for (const AdmissionRecord& admission : admissions) {
    if (admission.admit_date > index) continue;
    if (!admission.discharge_date || index <= *admission.discharge_date) {
      return AdmissionStatus::Inpatient;
    }
  }
  return AdmissionStatus::Outpatient;
}

bool valid_icd10(std::string_view code) {
  if (code.size() < 3) return false;
  if (!std::isalpha(static_cast<unsigned char>(code[0]))) return false;
  if (!std::isdigit(static_cast<unsigned char>(code[1])) ||
      !std::isdigit(static_cast<unsigned char>(code[2]))) {
    return false;
  }
  if (code.size() == 3) return true;
  if (code[3] != '.') return false;
  if (code.size() == 4 || code.size() > 9) return false;
  for (size_t i = 4; i < code.size(); ++i) {
    if (!std::isalnum(static_cast<unsigned char>(code[i]))) return false;
  }
  return true;
}

DiagnosisCategory classify_icd10(std::string_view code) {
  if (code.size() < 3) return DiagnosisCategory::OtherDiagnosis;
  char letter = static_cast<char>(std::toupper(static_cast<unsigned char>(code[0])));
  if (letter != 'F') return DiagnosisCategory::OtherDiagnosis;
  int number = (code[1] - '0') * 10 + (code[2] - '0');
  if (number == 25) return DiagnosisCategory::Schizoaffective;
  if (number >= 20 && number <= 29) return DiagnosisCategory::Schizophrenia;
  if (number == 31) return DiagnosisCategory::Bipolar;
  if (number >= 1 && number <= 99) return DiagnosisCategory::OtherMental;
  return DiagnosisCategory::OtherDiagnosis;  // F00 sits outside F01-F99
}

namespace {

// Category priority used only to break exact-distance, same-side ties.
int category_rank(DiagnosisCategory c) {
  switch (c) {
    case DiagnosisCategory::Schizoaffective: return 0;
    case DiagnosisCategory::Schizophrenia: return 1;
    case DiagnosisCategory::Bipolar: return 2;
    case DiagnosisCategory::OtherMental: return 3;
    case DiagnosisCategory::OtherDiagnosis: return 4;
    case DiagnosisCategory::NotAvailable: return 5;
  }
  return 6;
}

}  // namespace

DiagnosisCategory diagnosis_category(std::span<const DiagnosisRecord> diagnoses, Date index,
                                     const DiagnosisPolicy& policy) {
  if (diagnoses.empty()) return DiagnosisCategory::NotAvailable;
  if (policy.initial_window_days < 1) {
    throw std::invalid_argument("initial_window_days must be >= 1");
  }

  int max_distance = 0;
  for (const DiagnosisRecord& rec : diagnoses) {
    max_distance = std::max(max_distance, std::abs(rec.date - index));
  }

  for (long window = policy.initial_window_days;; window *= 2) {
    const DiagnosisRecord* best = nullptr;
    DiagnosisCategory best_category = DiagnosisCategory::NotAvailable;
    for (const DiagnosisRecord& rec : diagnoses) {
      int distance = std::abs(rec.date - index);
      if (distance > window) continue;
      DiagnosisCategory category = classify_icd10(rec.icd10);
      if (!best) {
        best = &rec;
        best_category = category;
        continue;
      }
      int best_distance = std::abs(best->date - index);
      bool rec_post = rec.date >= index;
      bool best_post = best->date >= index;
      bool rec_preferred_side = policy.tie_prefers_post_index ? rec_post : !rec_post;
      bool best_preferred_side = policy.tie_prefers_post_index ? best_post : !best_post;
      auto rec_key = std::make_tuple(distance, rec_preferred_side ? 0 : 1,
                                     category_rank(category), std::string_view(rec.icd10));
      auto best_key = std::make_tuple(best_distance, best_preferred_side ? 0 : 1,
                                      category_rank(best_category), std::string_view(best->icd10));
      if (rec_key < best_key) {
        best = &rec;
        best_category = category;
      }
    }
    if (best) return best_category;
    if (window > max_distance) return DiagnosisCategory::NotAvailable;
  }
}

Strata derive_strata(const PatientDemographics& demographics,
                     std::span<const AdmissionRecord> admissions,
                     std::span<const DiagnosisRecord> diagnoses,
                     std::span<const SmokingObservation> smoking, Date index,
                     const StrataPolicies& policies, bool trust_has_admission_data) {
  Strata strata;
  if (demographics.dob) strata.age = age_group(*demographics.dob, index);
  strata.ethnicity = policies.ethnicity.group_for(demographics.ethnicity_raw);
  strata.smoking = smoking_status(smoking, index, policies.smoking);
  if (trust_has_admission_data) {
    strata.admission = admission_status(admissions, index);
  }
  strata.diagnosis = diagnosis_category(diagnoses, index, policies.diagnosis);
  return strata;
}

std::vector<PatientDemographics> read_patients_csv(const std::string& path) {
  auto rows = read_csv(path);
  if (rows.empty()) throw ParseError(path, 1, "empty patients file");
  CsvHeader header(rows[0], path);
  size_t col_id = header.require("patient_id");
  size_t col_dob = header.require("dob");
  size_t col_gender = header.require("gender");
  size_t col_ethnicity = header.require("ethnicity");
  size_t col_trust = header.require("trust");

  std::vector<PatientDemographics> patients;
  for (size_t i = 1; i < rows.size(); ++i) {
    const CsvRow& row = rows[i];
    header.check_width(row);
    PatientDemographics p;
    p.patient_id = trim(CsvHeader::field(row, col_id));
    if (p.patient_id.empty()) throw ParseError(path, row.line_no, "empty patient_id");
    std::string dob = trim(CsvHeader::field(row, col_dob));
    if (!dob.empty()) {
      auto parsed = Date::try_parse(dob);
      if (!parsed) throw ParseError(path, row.line_no, "bad dob '" + dob + "'");
      p.dob = *parsed;
    }
    std::string gender = normalize_term(CsvHeader::field(row, col_gender));
    if (gender == "male" || gender == "m") p.gender = Gender::Male;
    else if (gender == "female" || gender == "f") p.gender = Gender::Female;
    else p.gender = Gender::Unknown;
    p.ethnicity_raw = trim(CsvHeader::field(row, col_ethnicity));
    p.trust = trim(CsvHeader::field(row, col_trust));
    patients.push_back(std::move(p));
  }
  return patients;
}

std::vector<AdmissionRecord> read_admissions_csv(const std::string& path) {
  auto rows = read_csv(path);
  if (rows.empty()) throw ParseError(path, 1, "empty admissions file");
  CsvHeader header(rows[0], path);
  size_t col_id = header.require("patient_id");
  size_t col_admit = header.require("admit_date");
  size_t col_discharge = header.require("discharge_date");

  std::vector<AdmissionRecord> records;
  for (size_t i = 1; i < rows.size(); ++i) {
    const CsvRow& row = rows[i];
    header.check_width(row);
    AdmissionRecord rec;
    rec.patient_id = trim(CsvHeader::field(row, col_id));
    auto admit = Date::try_parse(trim(CsvHeader::field(row, col_admit)));
    if (rec.patient_id.empty() || !admit) {
      throw ParseError(path, row.line_no, "expected patient_id and admit_date");
    }
    rec.admit_date = *admit;
    std::string discharge = trim(CsvHeader::field(row, col_discharge));
    if (!discharge.empty()) {
      auto parsed = Date::try_parse(discharge);
      if (!parsed) throw ParseError(path, row.line_no, "bad discharge_date '" + discharge + "'");
      if (*parsed < rec.admit_date) {
        throw ParseError(path, row.line_no, "discharge precedes admission");
      }
      rec.discharge_date = *parsed;
    }
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<DiagnosisRecord> read_diagnoses_csv(const std::string& path) {
  auto rows = read_csv(path);
  if (rows.empty()) throw ParseError(path, 1, "empty diagnoses file");
  CsvHeader header(rows[0], path);
  size_t col_id = header.require("patient_id");
  size_t col_date = header.require("date");
  size_t col_code = header.require("icd10");

  std::vector<DiagnosisRecord> records;
  for (size_t i = 1; i < rows.size(); ++i) {
    const CsvRow& row = rows[i];
    header.check_width(row);
    DiagnosisRecord rec;
    rec.patient_id = trim(CsvHeader::field(row, col_id));
    auto date = Date::try_parse(trim(CsvHeader::field(row, col_date)));
    rec.icd10 = trim(CsvHeader::field(row, col_code));
    if (rec.patient_id.empty() || !date) {
      throw ParseError(path, row.line_no, "expected patient_id and date");
    }
    if (!valid_icd10(rec.icd10)) {
      throw ParseError(path, row.line_no, "malformed ICD-10 code '" + rec.icd10 + "'");
    }
    rec.date = *date;
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<SmokingObservation> read_smoking_csv(const std::string& path) {
  auto rows = read_csv(path);
  if (rows.empty()) throw ParseError(path, 1, "empty smoking file");
  CsvHeader header(rows[0], path);
  size_t col_id = header.require("patient_id");
  size_t col_date = header.require("date");
  size_t col_status = header.require("status");

  std::vector<SmokingObservation> records;
  for (size_t i = 1; i < rows.size(); ++i) {
    const CsvRow& row = rows[i];
    header.check_width(row);
    SmokingObservation obs;
    obs.patient_id = trim(CsvHeader::field(row, col_id));
    auto date = Date::try_parse(trim(CsvHeader::field(row, col_date)));
    std::string status = normalize_term(CsvHeader::field(row, col_status));
    if (obs.patient_id.empty() || !date) {
      throw ParseError(path, row.line_no, "expected patient_id and date");
    }
    if (status == "smoker") obs.smoker = true;
    else if (status == "non smoker" || status == "nonsmoker") obs.smoker = false;
    else throw ParseError(path, row.line_no, "status must be smoker|non-smoker");
    obs.date = *date;
    records.push_back(std::move(obs));
  }
  return records;
}

}  // namespace pharmatimeline
