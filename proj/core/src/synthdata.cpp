#include "pharmatimeline/synthdata.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "pharmatimeline/config.hpp"
#include "pharmatimeline/csv.hpp"
#include "pharmatimeline/errors.hpp"
#include "pharmatimeline/rng.hpp"

namespace pharmatimeline {

namespace {

// Day offset range of a bucket relative to the index date (default policy).
std::pair<int, int> bucket_offsets(MonthBucket bucket) {
  switch (bucket) {
    case MonthBucket::MinusThree: return {-90, -61};
    case MonthBucket::MinusTwo: return {-60, -31};
    case MonthBucket::MinusOne: return {-30, -1};
    case MonthBucket::PlusOne: return {0, 29};
    case MonthBucket::PlusTwo: return {30, 59};
    case MonthBucket::PlusThree: return {60, 89};
  }
  return {0, 0};
}

double parse_weight(const std::string& value, const std::string& key) {
  char* end = nullptr;
  double out = std::strtod(value.c_str(), &end);
  if (end != value.c_str() + value.size() || out < 0.0) {
    throw ParseError(key + ": bad weight '" + value + "'");
  }
  return out;
}

std::array<double, 6> parse_rate_array(const std::string& value, const std::string& key) {
  std::array<double, 6> rates{};
  size_t pos = 0;
  for (int i = 0; i < 6; ++i) {
    size_t comma = value.find(',', pos);
    std::string cell = trim(std::string_view(value).substr(
        pos, comma == std::string::npos ? value.size() - pos : comma - pos));
    if (cell.empty()) throw ParseError(key + ": expected six comma-separated values");
    char* end = nullptr;
    rates[size_t(i)] = std::strtod(cell.c_str(), &end);
    if (end != cell.c_str() + cell.size()) {
      throw ParseError(key + ": bad number '" + cell + "'");
    }
    if (comma == std::string::npos) {
      if (i != 5) throw ParseError(key + ": expected six comma-separated values");
      break;
    }
    pos = comma + 1;
  }
  return rates;
}

int weighted_pick(Rng& rng, const std::vector<double>& weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  double draw = rng.uniform01() * total;
  double cumulative = 0.0;
  for (size_t i = 0; i < weights.size(); ++i) {
    cumulative += weights[i];
    if (draw < cumulative) return int(i);
  }
  return int(weights.size()) - 1;
}

std::pair<int, int> age_range(AgeGroup group) {
  switch (group) {
    case AgeGroup::Under21: return {16, 20};
    case AgeGroup::From21To30: return {21, 30};
    case AgeGroup::From31To40: return {31, 40};
    case AgeGroup::From41To50: return {41, 50};
    case AgeGroup::From51To60: return {51, 60};
    case AgeGroup::From61To70: return {61, 70};
    case AgeGroup::From71To80: return {71, 80};
    case AgeGroup::Above80: return {81, 90};
  }
  return {30, 40};
}

// dob such that completed age at index equals target exactly.
Date dob_for_age(Rng& rng, Date index, int age) {
  unsigned day = index.day();
  Date anniversary = [&] {
    for (;;) {
      try {
        return Date::from_ymd(index.year() - age, index.month(), day);
      } catch (const std::invalid_argument&) {
        --day;  // e.g. Feb 29 in a non-leap year
      }
    }
  }();
  return anniversary - int(rng.bounded(330));
}

std::string ethnicity_surface(Rng& rng, EthnicityGroup group) {
  switch (group) {
    case EthnicityGroup::White: {
      const char* options[] = {"White British", "White Irish"};
      return options[rng.bounded(2)];
    }
    case EthnicityGroup::Black: {
      const char* options[] = {"Black Caribbean", "Black African"};
      return options[rng.bounded(2)];
    }
    case EthnicityGroup::Asian: {
      const char* options[] = {"Asian Indian", "Chinese"};
      return options[rng.bounded(2)];
    }
    case EthnicityGroup::Other: {
      const char* options[] = {"Mixed", "Other"};
      return options[rng.bounded(2)];
    }
  }
  return "Other";
}

struct PendingDoc {
  Date date;
  std::string text;
};

}  // namespace

SynthSpec SynthSpec::from_config(const Config& cfg) {
  SynthSpec spec;
  spec.seed = cfg.get_u64("seed", spec.seed);
  spec.drug = cfg.get_string("synth_drug", spec.drug);
  spec.brand = cfg.get_string("synth_brand", spec.brand);
  spec.brand_mention_frac = cfg.get_double("synth_brand_mention_frac", spec.brand_mention_frac);
  spec.cadence_days = cfg.get_int("synth_cadence_days", spec.cadence_days);
  spec.coverage_days = cfg.get_int("synth_coverage_days", spec.coverage_days);
  spec.male_frac = cfg.get_double("synth_male_frac", spec.male_frac);
  spec.smoker_frac = cfg.get_double("synth_smoker_frac", spec.smoker_frac);
  spec.inpatient_frac = cfg.get_double("synth_inpatient_frac", spec.inpatient_frac);
  spec.negation_rate = cfg.get_double("synth_negation_rate", spec.negation_rate);
  spec.hedge_rate = cfg.get_double("synth_hedge_rate", spec.hedge_rate);
  spec.noise_negations = cfg.get_int("synth_noise_negations", spec.noise_negations);
  spec.index_spread_days = cfg.get_int("synth_index_spread_days", spec.index_spread_days);
  if (cfg.has("synth_base_index")) {
    spec.base_index = Date::parse(cfg.get_string("synth_base_index"));
  }

  if (cfg.has("synth_trusts")) {
    spec.trusts.clear();
    for (const auto& [name, count] : cfg.get_map("synth_trusts")) {
      SynthTrust trust;
      trust.name = name;
      auto [ptr, ec] = std::from_chars(count.data(), count.data() + count.size(),
                                       trust.n_patients);
      if (ec != std::errc() || ptr != count.data() + count.size()) {
        throw ParseError("synth_trusts: bad patient count '" + count + "' for " + name);
      }
      spec.trusts.push_back(std::move(trust));
    }
  }
  auto apply_trust_flag = [&](const std::string& key, auto set) {
    for (const std::string& name : cfg.get_list(key)) {
      for (SynthTrust& trust : spec.trusts) {
        if (trust.name == name) set(trust);
      }
    }
  };
  apply_trust_flag("synth_trusts_without_smoking",
                   [](SynthTrust& t) { t.with_smoking = false; });
  apply_trust_flag("synth_trusts_without_admissions",
                   [](SynthTrust& t) { t.with_admissions = false; });
  apply_trust_flag("synth_trusts_without_age", [](SynthTrust& t) { t.with_age = false; });

  if (cfg.has("synth_ethnicity_mix")) {
    spec.ethnicity_mix.clear();
    for (const auto& [name, weight] : cfg.get_map("synth_ethnicity_mix")) {
      std::string n = trim(name);
      EthnicityGroup group;
      if (n == "White") group = EthnicityGroup::White;
      else if (n == "Black") group = EthnicityGroup::Black;
      else if (n == "Asian") group = EthnicityGroup::Asian;
      else if (n == "Other") group = EthnicityGroup::Other;
      else throw ParseError("synth_ethnicity_mix: unknown group '" + name + "'");
      spec.ethnicity_mix.emplace_back(group, parse_weight(weight, "synth_ethnicity_mix"));
    }
  }
  if (cfg.has("synth_diagnosis_mix")) {
    spec.diagnosis_mix.clear();
    for (const auto& [code, weight] : cfg.get_map("synth_diagnosis_mix")) {
      std::string c = trim(code);
      if (c == "none") c.clear();
      spec.diagnosis_mix.emplace_back(c, parse_weight(weight, "synth_diagnosis_mix"));
    }
  }

  for (const auto& [key, value] : cfg.values()) {
    const std::string rate_prefix = "synth_rate.";
    const std::string exact_prefix = "synth_exact.";
    if (key.rfind(rate_prefix, 0) == 0) {
      spec.ade_rates[trim(key.substr(rate_prefix.size()))] = parse_rate_array(value, key);
    } else if (key.rfind(exact_prefix, 0) == 0) {
      auto rates = parse_rate_array(value, key);
      std::array<int, 6> counts{};
      for (size_t i = 0; i < 6; ++i) counts[i] = int(rates[i]);
      spec.ade_exact[trim(key.substr(exact_prefix.size()))] = counts;
    }
  }
  spec.validate();
  return spec;
}

void SynthSpec::validate() const {
  auto check01 = [](double v, const char* what) {
    if (v < 0.0 || v > 1.0) {
      throw ParseError(std::string(what) + " outside [0,1]: " + std::to_string(v));
    }
  };
  check01(male_frac, "synth_male_frac");
  check01(smoker_frac, "synth_smoker_frac");
  check01(inpatient_frac, "synth_inpatient_frac");
  check01(negation_rate, "synth_negation_rate");
  check01(hedge_rate, "synth_hedge_rate");
  check01(brand_mention_frac, "synth_brand_mention_frac");
  check01(negation_rate + hedge_rate, "synth_negation_rate + synth_hedge_rate");
  if (cadence_days < 1) throw ParseError("synth_cadence_days must be >= 1");
  if (coverage_days < 0) throw ParseError("synth_coverage_days must be >= 0");
  if (noise_negations < 0) throw ParseError("synth_noise_negations must be >= 0");
  if (index_spread_days < 0) throw ParseError("synth_index_spread_days must be >= 0");
  if (trusts.empty()) throw ParseError("synth_trusts must list at least one trust");
  for (const SynthTrust& trust : trusts) {
    if (trust.n_patients < 0) throw ParseError("trust " + trust.name + ": negative patient count");
  }
  for (const auto& [ade, rates] : ade_rates) {
    for (double r : rates) check01(r, ("synth_rate." + ade).c_str());
  }
  for (const auto& [ade, counts] : ade_exact) {
    for (int c : counts) {
      if (c < 0) throw ParseError("synth_exact." + ade + ": negative count");
    }
  }
}

SynthResult generate(const SynthSpec& spec, const std::string& out_dir) {
  spec.validate();
  std::filesystem::create_directories(out_dir);

  std::ofstream patients(out_dir + "/patients.csv", std::ios::binary);
  std::ofstream documents(out_dir + "/documents.jsonl", std::ios::binary);
  std::ofstream prescriptions(out_dir + "/prescriptions.csv", std::ios::binary);
  std::ofstream admissions(out_dir + "/admissions.csv", std::ios::binary);
  std::ofstream diagnoses(out_dir + "/diagnoses.csv", std::ios::binary);
  std::ofstream smoking(out_dir + "/smoking.csv", std::ios::binary);
  if (!patients || !documents || !prescriptions || !admissions || !diagnoses || !smoking) {
    throw PipelineError(ErrorCode::MissingFile, "cannot write corpus into " + out_dir);
  }
  patients << "patient_id,dob,gender,ethnicity,trust\n";
  prescriptions << "patient_id,date,drug\n";
  admissions << "patient_id,admit_date,discharge_date\n";
  diagnoses << "patient_id,date,icd10\n";
  smoking << "patient_id,date,status\n";

  // Noise negations draw from the ADEs the recipe plants.
  std::vector<std::string> known_ades;
  for (const auto& [ade, rates] : spec.ade_rates) known_ades.push_back(ade);
  for (const auto& [ade, counts] : spec.ade_exact) {
    if (!spec.ade_rates.count(ade)) known_ades.push_back(ade);
  }
  std::sort(known_ades.begin(), known_ades.end());

  std::vector<double> ethnicity_weights, age_weights, diagnosis_weights;
  for (const auto& [group, w] : spec.ethnicity_mix) ethnicity_weights.push_back(w);
  for (const auto& [group, w] : spec.age_mix) age_weights.push_back(w);
  for (const auto& [code, w] : spec.diagnosis_mix) diagnosis_weights.push_back(w);

  Rng rng(spec.seed);
  SynthResult result;

  for (const SynthTrust& trust : spec.trusts) {
    for (int local = 0; local < trust.n_patients; ++local) {
      char id_buf[64];
      std::snprintf(id_buf, sizeof(id_buf), "%s-%06d", trust.name.c_str(), local + 1);
      std::string patient_id = id_buf;
      ++result.patients;

      Date index = spec.base_index +
                   (spec.index_spread_days > 0 ? int(rng.bounded(uint64_t(spec.index_spread_days))) : 0);

      bool male = rng.bernoulli(spec.male_frac);
      EthnicityGroup ethnicity = spec.ethnicity_mix[size_t(weighted_pick(rng, ethnicity_weights))].first;
      std::string ethnicity_raw = ethnicity_surface(rng, ethnicity);
      AgeGroup age_bucket = spec.age_mix[size_t(weighted_pick(rng, age_weights))].first;
      auto [age_lo, age_hi] = age_range(age_bucket);
      int age = int(rng.range(age_lo, age_hi));
      Date dob = dob_for_age(rng, index, age);

      {
        std::vector<std::string> fields{patient_id, trust.with_age ? dob.to_string() : "",
                                        male ? "Male" : "Female", ethnicity_raw, trust.name};
        write_csv_row(patients, fields);
      }

      if (trust.with_smoking) {
        bool smoker = rng.bernoulli(spec.smoker_frac);
        Date obs_date = index - 60 + int(rng.bounded(121));
        std::vector<std::string> fields{patient_id, obs_date.to_string(),
                                        smoker ? "smoker" : "non-smoker"};
        write_csv_row(smoking, fields);
      }

      if (trust.with_admissions) {
        if (rng.bernoulli(spec.inpatient_frac)) {
          Date admit = index - 1 - int(rng.bounded(10));
          Date discharge = index + 5 + int(rng.bounded(20));
          std::vector<std::string> fields{patient_id, admit.to_string(), discharge.to_string()};
          write_csv_row(admissions, fields);
        } else if (rng.bernoulli(0.5)) {
          // An old stay that must not flip the member to inpatient.
          Date admit = index - 400 - int(rng.bounded(100));
          Date discharge = admit + 3 + int(rng.bounded(10));
          std::vector<std::string> fields{patient_id, admit.to_string(), discharge.to_string()};
          write_csv_row(admissions, fields);
        }
      }

      {
        const std::string& code =
            spec.diagnosis_mix[size_t(weighted_pick(rng, diagnosis_weights))].first;
        if (!code.empty()) {
          Date diag_date = index - 90 + int(rng.bounded(181));
          std::vector<std::string> fields{patient_id, diag_date.to_string(), code};
          write_csv_row(diagnoses, fields);
        }
      }

      std::vector<PendingDoc> docs;

      // Drug evidence at the configured cadence; even steps become documents,
      // odd steps prescription rows, so both sources feed the episode.
      for (int offset = 0, step = 0; offset <= spec.coverage_days;
           offset += spec.cadence_days, ++step) {
        Date day = index + offset;
        if (step % 2 == 1) {
          std::vector<std::string> fields{patient_id, day.to_string(), spec.drug};
          write_csv_row(prescriptions, fields);
          ++result.prescriptions;
          continue;
        }
        std::string surface =
            rng.bernoulli(spec.brand_mention_frac) ? spec.brand : spec.drug;
        std::string text = step == 0 ? "Started " + surface + " today."
                                     : "Continues on " + surface + ".";
        docs.push_back(PendingDoc{day, std::move(text)});
      }

      auto plant_event = [&](const std::string& ade, MonthBucket bucket, int offset,
                             bool allow_negation) {
        Date day = index + offset;
        if (allow_negation) {
          double draw = rng.uniform01();
          if (draw < spec.negation_rate) {
            docs.push_back(PendingDoc{day, "No evidence of " + ade + "."});
            ++result.planted_negated_events;
            return;
          }
          if (draw < spec.negation_rate + spec.hedge_rate) {
            docs.push_back(PendingDoc{day, "Discussed risk of " + ade + "."});
            ++result.planted_hedged_events;
            return;
          }
        }
        docs.push_back(PendingDoc{day, "Patient complains of " + ade + "."});
        ++result.planted_positive_events;
        (void)bucket;
      };

      for (const auto& [ade, rates] : spec.ade_rates) {
        for (MonthBucket bucket : kAllBuckets) {
          double rate = rates[size_t(bucket)];
          if (rate <= 0.0) continue;
          if (!rng.bernoulli(rate)) continue;
          auto [lo, hi] = bucket_offsets(bucket);
          int offset = lo + int(rng.bounded(uint64_t(hi - lo + 1)));
          plant_event(ade, bucket, offset, /*allow_negation=*/true);
        }
      }
      for (const auto& [ade, counts] : spec.ade_exact) {
        for (MonthBucket bucket : kAllBuckets) {
          if (local >= counts[size_t(bucket)]) continue;
          auto [lo, hi] = bucket_offsets(bucket);
          int offset = lo + std::min(10, hi - lo);
          plant_event(ade, bucket, offset, /*allow_negation=*/false);
        }
      }

      for (int i = 0; i < spec.noise_negations && !known_ades.empty(); ++i) {
        const std::string& ade = known_ades[rng.bounded(known_ades.size())];
        int offset = -90 + int(rng.bounded(180));
        docs.push_back(PendingDoc{index + offset, "No evidence of " + ade + "."});
      }

      std::stable_sort(docs.begin(), docs.end(),
                       [](const PendingDoc& a, const PendingDoc& b) { return a.date < b.date; });
      for (size_t i = 0; i < docs.size(); ++i) {
        char doc_buf[32];
        std::snprintf(doc_buf, sizeof(doc_buf), "D%04zu", i + 1);
        nlohmann::json line{{"patient_id", patient_id},
                            {"doc_id", doc_buf},
                            {"date", docs[i].date.to_string()},
                            {"text", docs[i].text}};
        documents << line.dump() << '\n';
        ++result.documents;
      }
    }
  }
  return result;
}

}  // namespace pharmatimeline
