#pragma once

#include <array>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pharmatimeline/date.hpp"
#include "pharmatimeline/episodes.hpp"

namespace pharmatimeline {

// Six 30-day windows around the index date, three either side.
enum class MonthBucket : int {
  MinusThree = 0,
  MinusTwo = 1,
  MinusOne = 2,
  PlusOne = 3,
  PlusTwo = 4,
  PlusThree = 5,
};

inline constexpr std::array<MonthBucket, 6> kAllBuckets = {
    MonthBucket::MinusThree, MonthBucket::MinusTwo, MonthBucket::MinusOne,
    MonthBucket::PlusOne,    MonthBucket::PlusTwo,  MonthBucket::PlusThree};

inline constexpr std::array<MonthBucket, 3> kPostBuckets = {
    MonthBucket::PlusOne, MonthBucket::PlusTwo, MonthBucket::PlusThree};

std::string_view bucket_label(MonthBucket bucket);  // "m-3" .. "m+3"
std::optional<MonthBucket> bucket_from_label(std::string_view label);

struct BucketPolicy {
  int month_length_days = 30;
  bool index_day_in_first_month = true;  // day 0 belongs to m+1
};

// Offset-based bucketing: with delta = event - index in days,
// [0,30) -> m+1, [30,60) -> m+2, [60,90) -> m+3,
// [-30,0) -> m-1, [-60,-30) -> m-2, [-90,-60) -> m-3, else none.
// When index_day_in_first_month is false the whole grid shifts one day later.
std::optional<MonthBucket> month_bucket(Date index, Date event,
                                        const BucketPolicy& policy = {});

// One adverse event on one day, joined to the drugs active that day.
// An empty concurrent set marks an event with no active episode (kept for
// the pre-treatment months).
struct AdrEvent {
  std::string patient_id;
  std::string ade;
  Date date;
  std::set<std::string> concurrent_drugs;
  std::optional<MonthBucket> interval;
};

// Joins one patient's ADE daily events against that patient's episodes.
// Output sorted by (date, ade).
std::vector<AdrEvent> build_adr_timeline(std::span<const DailyEvent> ade_events,
                                         std::span<const MedicationEpisode> episodes);

// Patient admitted to the study: index date is the first episode start of the
// study drug; qualifying means gap-free coverage for min_days from the index.
struct CohortMember {
  std::string patient_id;
  Date index_date;
  bool qualifying = false;
};

// Members are the registry patients holding at least one episode of drug.
// Coverage may chain across episodes when the inter-episode gap is within the
// threshold (episode lists loaded from external files need not be maximal).
std::vector<CohortMember> select_cohort(const std::vector<std::string>& all_patients,
                                        std::span<const MedicationEpisode> episodes,
                                        std::string_view drug, int min_days = 90,
                                        const EpisodeThresholds& thresholds = {});

void write_adr_events_csv(const std::string& path, std::span<const AdrEvent> events);

}  // namespace pharmatimeline
