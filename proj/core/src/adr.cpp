#include "pharmatimeline/adr.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <stdexcept>
#include <unordered_set>

#include "pharmatimeline/config.hpp"
#include "pharmatimeline/csv.hpp"
#include "pharmatimeline/errors.hpp"

namespace pharmatimeline {

std::string_view bucket_label(MonthBucket bucket) {
  switch (bucket) {
    case MonthBucket::MinusThree: return "m-3";
    case MonthBucket::MinusTwo: return "m-2";
    case MonthBucket::MinusOne: return "m-1";
    case MonthBucket::PlusOne: return "m+1";
    case MonthBucket::PlusTwo: return "m+2";
    case MonthBucket::PlusThree: return "m+3";
  }
  return "?";
}

std::optional<MonthBucket> bucket_from_label(std::string_view label) {
  for (MonthBucket bucket : kAllBuckets) {
    if (bucket_label(bucket) == label) return bucket;
  }
  return std::nullopt;
}

std::optional<MonthBucket> month_bucket(Date index, Date event, const BucketPolicy& policy) {
  if (policy.month_length_days < 1) {
    throw std::invalid_argument("month_length_days must be >= 1");
  }
  int delta = event - index;
  if (!policy.index_day_in_first_month) delta -= 1;
  const int m = policy.month_length_days;
  if (delta >= 0) {
    int k = delta / m;
    if (k <= 2) {
      return static_cast<MonthBucket>(static_cast<int>(MonthBucket::PlusOne) + k);
    }
  } else {
    int k = (-delta - 1) / m;
    if (k <= 2) {
      return static_cast<MonthBucket>(static_cast<int>(MonthBucket::MinusOne) - k);
    }
  }
  return std::nullopt;
}

std::vector<AdrEvent> build_adr_timeline(std::span<const DailyEvent> ade_events,
                                         std::span<const MedicationEpisode> episodes) {
  std::vector<AdrEvent> out;
  out.reserve(ade_events.size());
  const std::string* patient_id = nullptr;
  for (const DailyEvent& event : ade_events) {
    if (event.kind != MentionKind::Ade) {
      throw std::invalid_argument("build_adr_timeline: non-ADE event for '" + event.canonical + "'");
    }
    if (patient_id && event.patient_id != *patient_id) {
      throw std::invalid_argument("build_adr_timeline: events span multiple patients");
    }
    patient_id = &event.patient_id;

    AdrEvent adr;
    adr.patient_id = event.patient_id;
    adr.ade = event.canonical;
    adr.date = event.date;
    adr.concurrent_drugs = active_drugs(episodes, event.date);
    out.push_back(std::move(adr));
  }
  std::sort(out.begin(), out.end(), [](const AdrEvent& a, const AdrEvent& b) {
    return std::tie(a.date, a.ade) < std::tie(b.date, b.ade);
  });
  return out;
}

std::vector<CohortMember> select_cohort(const std::vector<std::string>& all_patients,
                                        std::span<const MedicationEpisode> episodes,
                                        std::string_view drug, int min_days,
                                        const EpisodeThresholds& thresholds) {
  std::unordered_set<std::string> registry(all_patients.begin(), all_patients.end());
  const int max_gap = thresholds.gap_for(drug);

  std::map<std::string, std::vector<MedicationEpisode>> by_patient;
  for (const MedicationEpisode& episode : episodes) {
    if (episode.generic != drug) continue;
    if (!registry.count(episode.patient_id)) continue;
    by_patient[episode.patient_id].push_back(episode);
  }

  std::vector<CohortMember> members;
  members.reserve(by_patient.size());
  for (auto& [patient_id, eps] : by_patient) {
    std::sort(eps.begin(), eps.end(), [](const MedicationEpisode& a, const MedicationEpisode& b) {
      return std::tie(a.start, a.stop) < std::tie(b.start, b.stop);
    });
    CohortMember member;
    member.patient_id = patient_id;
    member.index_date = eps.front().start;

    // Chain coverage forward from the index while gaps stay within threshold.
    Date coverage_end = eps.front().stop;
    for (size_t i = 1; i < eps.size(); ++i) {
      if (eps[i].start - coverage_end > max_gap) break;
      coverage_end = std::max(coverage_end, eps[i].stop);
    }
    member.qualifying = (coverage_end - member.index_date) >= min_days;
    members.push_back(std::move(member));
  }
  return members;  // map iteration: sorted by patient_id
}

void write_adr_events_csv(const std::string& path, std::span<const AdrEvent> events) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw PipelineError(ErrorCode::MissingFile, "cannot write " + path);
  out << "patient_id,ade,date,bucket,concurrent_drugs\n";
  for (const AdrEvent& e : events) {
    std::string drugs;
    for (const std::string& d : e.concurrent_drugs) {
      if (!drugs.empty()) drugs += '|';
      drugs += d;
    }
    std::vector<std::string> fields{
        e.patient_id, e.ade, e.date.to_string(),
        e.interval ? std::string(bucket_label(*e.interval)) : std::string(), drugs};
    write_csv_row(out, fields);
  }
}

}  // namespace pharmatimeline
