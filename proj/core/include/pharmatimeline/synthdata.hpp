#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pharmatimeline/adr.hpp"
#include "pharmatimeline/cohort.hpp"
#include "pharmatimeline/date.hpp"

namespace pharmatimeline {

class Config;

// One generated data partition. Trusts flagged without smoking/admission/age
// data get empty columns or no rows there, which downstream reads as the
// dimension being unavailable for that trust.
struct SynthTrust {
  std::string name;
  int n_patients = 0;
  bool with_smoking = true;
  bool with_admissions = true;
  bool with_age = true;
};

// Recipe for a synthetic corpus. Everything is drawn from one seeded stream,
// so identical specs produce byte-identical files.
struct SynthSpec {
  uint64_t seed = 1;
  std::vector<SynthTrust> trusts{{"alpha", 100}};

  std::string drug = "clozapine";
  std::string brand = "Clozaril";
  double brand_mention_frac = 0.3;

  int cadence_days = 21;    // days between consecutive drug evidence dates
  int coverage_days = 120;  // drug evidence span after the index date

  double male_frac = 0.66;
  std::vector<std::pair<EthnicityGroup, double>> ethnicity_mix{
      {EthnicityGroup::White, 0.56},
      {EthnicityGroup::Black, 0.30},
      {EthnicityGroup::Asian, 0.06},
      {EthnicityGroup::Other, 0.08}};
  std::vector<std::pair<AgeGroup, double>> age_mix{
      {AgeGroup::Under21, 0.03},   {AgeGroup::From21To30, 0.22},
      {AgeGroup::From31To40, 0.28}, {AgeGroup::From41To50, 0.27},
      {AgeGroup::From51To60, 0.14}, {AgeGroup::From61To70, 0.04},
      {AgeGroup::From71To80, 0.015}, {AgeGroup::Above80, 0.005}};
  double smoker_frac = 0.6;
  double inpatient_frac = 0.3;
  std::vector<std::pair<std::string, double>> diagnosis_mix{
      {"F20.0", 0.75}, {"F25.1", 0.13}, {"F31.0", 0.03},
      {"F41.1", 0.02}, {"I10", 0.05},   {"", 0.02}};  // "" = no record

  // Planted monthly event probabilities per ADE (m-3..m+3 order), and exact
  // per-bucket patient counts for calibration corpora (the first k patients
  // of each trust receive one event; never negated).
  std::map<std::string, std::array<double, 6>> ade_rates;
  std::map<std::string, std::array<int, 6>> ade_exact;

  // Chance that a rate-planted mention renders as a negated / hedged sentence
  // instead of a positive one.
  double negation_rate = 0.0;
  double hedge_rate = 0.0;
  int noise_negations = 1;  // extra "no evidence of X." documents per patient

  Date base_index = Date::from_ymd(2014, 1, 1);
  int index_spread_days = 365;

  static SynthSpec from_config(const Config& cfg);
  void validate() const;  // throws ParseError on out-of-range settings
};

struct SynthResult {
  size_t patients = 0;
  size_t documents = 0;
  size_t prescriptions = 0;
  size_t planted_positive_events = 0;
  size_t planted_negated_events = 0;
  size_t planted_hedged_events = 0;
};

// Writes patients.csv, documents.jsonl, prescriptions.csv, admissions.csv,
// diagnoses.csv and smoking.csv into out_dir (created if needed).
SynthResult generate(const SynthSpec& spec, const std::string& out_dir);

}  // namespace pharmatimeline
