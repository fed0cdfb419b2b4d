#pragma once

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pharmatimeline/date.hpp"
#include "pharmatimeline/extraction.hpp"

namespace pharmatimeline {

// Continuous on-treatment interval inferred from dated drug evidence.
// Within one (patient, generic) episodes are disjoint; consecutive evidence
// dates inside an episode are never more than the gap threshold apart.
struct MedicationEpisode {
  std::string patient_id;
  std::string generic;
  Date start;
  Date stop;
  int evidence_count = 0;  // distinct evidence dates in the episode
};

// Gap rule: a gap of up to max_gap_days between consecutive dates continues
// the episode; anything longer closes it at the last date seen.
struct EpisodeThresholds {
  int max_gap_days = 42;
  std::map<std::string, int> per_drug;  // generic -> override

  int gap_for(std::string_view generic) const {
    auto it = per_drug.find(std::string(generic));
    return it == per_drug.end() ? max_gap_days : it->second;
  }
};

// Segments one patient's drug events into episodes. Events must all carry the
// same patient_id and kind Drug; duplicates per day are tolerated. Output is
// sorted by (generic, start).
std::vector<MedicationEpisode> build_episodes(std::span<const DailyEvent> events,
                                              const EpisodeThresholds& thresholds);

// Generics whose episode interval [start, stop] contains d.
std::set<std::string> active_drugs(std::span<const MedicationEpisode> episodes, Date d);

// Earliest episode start for the generic; nullopt when it has no episodes.
std::optional<Date> first_episode_start(std::span<const MedicationEpisode> episodes,
                                        std::string_view generic);

void write_episodes_csv(const std::string& path, std::span<const MedicationEpisode> episodes);
std::vector<MedicationEpisode> read_episodes_csv(const std::string& path);

}  // namespace pharmatimeline
