#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace pharmatimeline {

// Lowercases, trims and collapses runs of non-alphanumeric characters to a
// single space: "  White - British " -> "white british". All dictionary
// lookups and gazetteer matches go through this.
std::string normalize_term(std::string_view raw);

enum class DrugCategory {
  Antidepressants,
  Antidiabetics,
  Antiepileptics,
  Antihypertensives,
  Antipsychotics,
  AntiDementia,
  HypnoticsAnxiolytics,
  LipidRegulatory,
  MoodStabilizers,
  Nsaid,
  AntiParkinson,
};

DrugCategory parse_drug_category(std::string_view name);
std::string_view drug_category_name(DrugCategory category);

struct DrugEntry {
  std::string generic;
  std::vector<std::string> brands;
  DrugCategory category;
};

// Generic names plus brand aliases (discontinued brands included as ordinary
// rows). Immutable after load; lookups are safe from any number of threads.
class DrugLexicon {
 public:
  static DrugLexicon load(const std::string& path);
  static DrugLexicon from_entries(std::vector<DrugEntry> entries,
                                  const std::string& origin = "<memory>");

  // Brand or generic surface form -> generic name; nullopt for unknown terms.
  std::optional<std::string> generic_for(std::string_view surface) const;

  bool has_term(const std::string& normalized) const {
    return alias_to_generic_.count(normalized) > 0;
  }
  const std::string& generic_of(const std::string& normalized) const {
    return alias_to_generic_.at(normalized);
  }

  const std::vector<DrugEntry>& entries() const { return entries_; }
  const std::unordered_map<std::string, std::string>& alias_index() const {
    return alias_to_generic_;
  }
  size_t max_term_tokens() const { return max_term_tokens_; }

  // Round-trips through load(); used to snapshot a dictionary.
  std::string to_csv() const;

 private:
  std::vector<DrugEntry> entries_;
  std::unordered_map<std::string, std::string> alias_to_generic_;
  size_t max_term_tokens_ = 0;
};

struct AdeEntry {
  std::string canonical;
  std::vector<std::string> synonyms;
};

class AdeLexicon {
 public:
  static AdeLexicon load(const std::string& path);
  static AdeLexicon from_entries(std::vector<AdeEntry> entries,
                                 const std::string& origin = "<memory>");

  std::optional<std::string> canonical_for(std::string_view surface) const;

  bool has_term(const std::string& normalized) const {
    return synonym_to_canonical_.count(normalized) > 0;
  }
  const std::string& canonical_of(const std::string& normalized) const {
    return synonym_to_canonical_.at(normalized);
  }

  const std::vector<AdeEntry>& entries() const { return entries_; }
  // Canonical names in file order; the reporting order of every table.
  std::vector<std::string> canonical_names() const;
  size_t max_term_tokens() const { return max_term_tokens_; }

 private:
  std::vector<AdeEntry> entries_;
  std::unordered_map<std::string, std::string> synonym_to_canonical_;
  size_t max_term_tokens_ = 0;
};

struct SiderRange {
  std::optional<double> low_pct;
  std::optional<double> high_pct;
};

// External reported-frequency ranges per ADE. Rows with both ends empty are
// kept distinct from missing rows only in the file; both mean "no reference".
class SiderReference {
 public:
  static SiderReference load(const std::string& path);
  static SiderReference from_rows(std::vector<std::pair<std::string, SiderRange>> rows);

  // nullopt when the ADE has no row or the row has neither end.
  std::optional<SiderRange> range_for(std::string_view ade) const;

  const std::unordered_map<std::string, SiderRange>& rows() const { return rows_; }

 private:
  std::unordered_map<std::string, SiderRange> rows_;
};

}  // namespace pharmatimeline
