#include "pharmatimeline/episodes.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <stdexcept>

#include "pharmatimeline/config.hpp"
#include "pharmatimeline/csv.hpp"
#include "pharmatimeline/errors.hpp"

namespace pharmatimeline {

std::vector<MedicationEpisode> build_episodes(std::span<const DailyEvent> events,
                                              const EpisodeThresholds& thresholds) {
  if (events.empty()) return {};

  const std::string& patient_id = events.front().patient_id;
  std::map<std::string, std::vector<Date>> dates_by_generic;
  for (const DailyEvent& event : events) {
    if (event.patient_id != patient_id) {
      throw std::invalid_argument("build_episodes: events span multiple patients");
    }
    if (event.kind != MentionKind::Drug) {
      throw std::invalid_argument("build_episodes: non-drug event for '" + event.canonical + "'");
    }
    dates_by_generic[event.canonical].push_back(event.date);
  }

  std::vector<MedicationEpisode> episodes;
  for (auto& [generic, dates] : dates_by_generic) {
    std::sort(dates.begin(), dates.end());
    dates.erase(std::unique(dates.begin(), dates.end()), dates.end());
    const int max_gap = thresholds.gap_for(generic);

    MedicationEpisode current{patient_id, generic, dates[0], dates[0], 1};
    for (size_t i = 1; i < dates.size(); ++i) {
      int gap = dates[i] - current.stop;
      if (gap <= max_gap) {
        current.stop = dates[i];
        ++current.evidence_count;
      } else {
        episodes.push_back(current);
        current = MedicationEpisode{patient_id, generic, dates[i], dates[i], 1};
      }
    }
    episodes.push_back(current);
  }
  // map iteration already orders by generic; episodes per generic are built
  // in start order, so the output is sorted by (generic, start).
  return episodes;
}

std::set<std::string> active_drugs(std::span<const MedicationEpisode> episodes, Date d) {
  std::set<std::string> active;
  for (const MedicationEpisode& episode : episodes) {
    if (episode.start <= d && d <= episode.stop) active.insert(episode.generic);
  }
  return active;
}

std::optional<Date> first_episode_start(std::span<const MedicationEpisode> episodes,
                                        std::string_view generic) {
  std::optional<Date> earliest;
  for (const MedicationEpisode& episode : episodes) {
    if (episode.generic != generic) continue;
    if (!earliest || episode.start < *earliest) earliest = episode.start;
  }
  return earliest;
}

void write_episodes_csv(const std::string& path, std::span<const MedicationEpisode> episodes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw PipelineError(ErrorCode::MissingFile, "cannot write " + path);
  out << "patient_id,generic,start,stop,evidence_count\n";
  for (const MedicationEpisode& e : episodes) {
    std::vector<std::string> fields{e.patient_id, e.generic, e.start.to_string(),
                                    e.stop.to_string(), std::to_string(e.evidence_count)};
    write_csv_row(out, fields);
  }
}

std::vector<MedicationEpisode> read_episodes_csv(const std::string& path) {
  auto rows = read_csv(path);
  if (rows.empty()) throw ParseError(path, 1, "empty episodes file");
  CsvHeader header(rows[0], path);
  size_t col_patient = header.require("patient_id");
  size_t col_generic = header.require("generic");
  size_t col_start = header.require("start");
  size_t col_stop = header.require("stop");
  size_t col_count = header.require("evidence_count");

  std::vector<MedicationEpisode> episodes;
  for (size_t i = 1; i < rows.size(); ++i) {
    const CsvRow& row = rows[i];
    header.check_width(row);
    MedicationEpisode e;
    e.patient_id = trim(CsvHeader::field(row, col_patient));
    e.generic = trim(CsvHeader::field(row, col_generic));
    auto start = Date::try_parse(trim(CsvHeader::field(row, col_start)));
    auto stop = Date::try_parse(trim(CsvHeader::field(row, col_stop)));
    std::string count = trim(CsvHeader::field(row, col_count));
    int n = 0;
    auto [ptr, ec] = std::from_chars(count.data(), count.data() + count.size(), n);
    if (e.patient_id.empty() || e.generic.empty() || !start || !stop ||
        ec != std::errc() || ptr != count.data() + count.size() || n < 1) {
      throw ParseError(path, row.line_no, "malformed episode row");
    }
    if (*stop < *start) {
      throw ParseError(path, row.line_no, "episode stop precedes start");
    }
    e.start = *start;
    e.stop = *stop;
    e.evidence_count = n;
    episodes.push_back(std::move(e));
  }
  return episodes;
}

}  // namespace pharmatimeline
