#include "pharmatimeline/lexicon.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <sstream>

#include "pharmatimeline/config.hpp"
#include "pharmatimeline/csv.hpp"
#include "pharmatimeline/errors.hpp"

namespace pharmatimeline {

std::string normalize_term(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  bool pending_space = false;
  for (char c : raw) {
    unsigned char uc = static_cast<unsigned char>(c);
    if (std::isalnum(uc)) {
      if (pending_space && !out.empty()) out.push_back(' ');
      pending_space = false;
      out.push_back(static_cast<char>(std::tolower(uc)));
    } else {
      pending_space = true;
    }
  }
  return out;
}

namespace {

size_t token_count(const std::string& normalized) {
  if (normalized.empty()) return 0;
  return static_cast<size_t>(std::count(normalized.begin(), normalized.end(), ' ')) + 1;
}

std::vector<std::string> split_bar(std::string_view cell) {
  std::vector<std::string> out;
  size_t pos = 0;
  while (pos <= cell.size()) {
    size_t bar = cell.find('|', pos);
    std::string_view item = cell.substr(pos, bar == std::string_view::npos ? cell.size() - pos : bar - pos);
    std::string trimmed = trim(item);
    if (!trimmed.empty()) out.push_back(std::move(trimmed));
    if (bar == std::string_view::npos) break;
    pos = bar + 1;
  }
  return out;
}

std::optional<double> parse_pct_cell(std::string_view cell, const std::string& origin,
                                     size_t line_no, const char* what) {
  std::string v = trim(cell);
  if (v.empty()) return std::nullopt;
  char* end = nullptr;
  double out = std::strtod(v.c_str(), &end);
  if (end != v.c_str() + v.size()) {
    throw ParseError(origin, line_no, std::string(what) + ": expected percentage, got '" + v + "'");
  }
  if (out < 0.0 || out > 100.0) {
    throw ParseError(origin, line_no, std::string(what) + ": percentage out of [0,100]: " + v);
  }
  return out;
}

}  // namespace

DrugCategory parse_drug_category(std::string_view name) {
  std::string n = normalize_term(name);
  if (n == "antidepressants") return DrugCategory::Antidepressants;
  if (n == "antidiabetics") return DrugCategory::Antidiabetics;
  if (n == "antiepileptics") return DrugCategory::Antiepileptics;
  if (n == "antihypertensives") return DrugCategory::Antihypertensives;
  if (n == "antipsychotics") return DrugCategory::Antipsychotics;
  if (n == "anti dementia") return DrugCategory::AntiDementia;
  if (n == "hypnotics anxiolytics") return DrugCategory::HypnoticsAnxiolytics;
  if (n == "lipid regulatory") return DrugCategory::LipidRegulatory;
  if (n == "mood stabilizers") return DrugCategory::MoodStabilizers;
  if (n == "non steroidal anti inflammatory") return DrugCategory::Nsaid;
  if (n == "anti parkinson") return DrugCategory::AntiParkinson;
  throw ParseError("unknown drug category '" + std::string(name) + "'");
}

std::string_view drug_category_name(DrugCategory category) {
  switch (category) {
    case DrugCategory::Antidepressants: return "Antidepressants";
    case DrugCategory::Antidiabetics: return "Antidiabetics";
    case DrugCategory::Antiepileptics: return "Antiepileptics";
    case DrugCategory::Antihypertensives: return "Antihypertensives";
    case DrugCategory::Antipsychotics: return "Antipsychotics";
    case DrugCategory::AntiDementia: return "Anti-Dementia";
    case DrugCategory::HypnoticsAnxiolytics: return "Hypnotics & Anxiolytics";
    case DrugCategory::LipidRegulatory: return "Lipid Regulatory";
    case DrugCategory::MoodStabilizers: return "Mood Stabilizers";
    case DrugCategory::Nsaid: return "Non-Steroidal Anti-Inflammatory";
    case DrugCategory::AntiParkinson: return "Anti-Parkinson";
  }
  return "?";
}

DrugLexicon DrugLexicon::load(const std::string& path) {
  auto rows = read_csv(path);
  if (rows.empty()) throw ParseError(path, 1, "empty drug dictionary");
  CsvHeader header(rows[0], path);
  size_t col_generic = header.require("generic");
  size_t col_brands = header.require("brands");
  size_t col_category = header.require("category");

  std::vector<DrugEntry> entries;
  for (size_t i = 1; i < rows.size(); ++i) {
    const CsvRow& row = rows[i];
    header.check_width(row);
    DrugEntry entry;
    entry.generic = trim(CsvHeader::field(row, col_generic));
    if (entry.generic.empty()) {
      throw ParseError(path, row.line_no, "empty generic name");
    }
    entry.brands = split_bar(CsvHeader::field(row, col_brands));
    try {
      entry.category = parse_drug_category(CsvHeader::field(row, col_category));
    } catch (const ParseError& e) {
      throw ParseError(path, row.line_no, e.what());
    }
    entries.push_back(std::move(entry));
  }
  return from_entries(std::move(entries), path);
}

DrugLexicon DrugLexicon::from_entries(std::vector<DrugEntry> entries,
                                      const std::string& origin) {
  DrugLexicon lex;
  lex.entries_ = std::move(entries);
  auto add_alias = [&](const std::string& surface, const std::string& generic) {
    std::string key = normalize_term(surface);
    if (key.empty()) {
      throw ParseError(origin + ": alias '" + surface + "' normalizes to nothing");
    }
    auto [it, inserted] = lex.alias_to_generic_.emplace(key, generic);
    if (!inserted && it->second != generic) {
      throw ParseError(origin + ": ambiguous alias '" + surface + "' maps to both '" +
                       it->second + "' and '" + generic + "'");
    }
    lex.max_term_tokens_ = std::max(lex.max_term_tokens_, token_count(key));
  };
  std::unordered_map<std::string, bool> seen_generics;
  for (const DrugEntry& entry : lex.entries_) {
    std::string canonical = normalize_term(entry.generic);
    if (!seen_generics.emplace(canonical, true).second) {
      throw ParseError(origin + ": duplicate generic row '" + entry.generic + "'");
    }
    add_alias(entry.generic, canonical);
    for (const std::string& brand : entry.brands) add_alias(brand, canonical);
  }
  return lex;
}

std::optional<std::string> DrugLexicon::generic_for(std::string_view surface) const {
  auto it = alias_to_generic_.find(normalize_term(surface));
  if (it == alias_to_generic_.end()) return std::nullopt;
  return it->second;
}

std::string DrugLexicon::to_csv() const {
  std::ostringstream out;
  out << "generic,brands,category\n";
  for (const DrugEntry& entry : entries_) {
    std::string brands;
    for (size_t i = 0; i < entry.brands.size(); ++i) {
      if (i) brands += '|';
      brands += entry.brands[i];
    }
    std::vector<std::string> fields{entry.generic, brands,
                                    std::string(drug_category_name(entry.category))};
    write_csv_row(out, fields);
  }
  return out.str();
}

AdeLexicon AdeLexicon::load(const std::string& path) {
  auto rows = read_csv(path);
  if (rows.empty()) throw ParseError(path, 1, "empty ADE dictionary");
  CsvHeader header(rows[0], path);
  size_t col_canonical = header.require("canonical");
  size_t col_synonyms = header.require("synonyms");

  std::vector<AdeEntry> entries;
  for (size_t i = 1; i < rows.size(); ++i) {
    const CsvRow& row = rows[i];
    header.check_width(row);
    AdeEntry entry;
    entry.canonical = trim(CsvHeader::field(row, col_canonical));
    if (entry.canonical.empty()) {
      throw ParseError(path, row.line_no, "empty canonical ADE name");
    }
    entry.synonyms = split_bar(CsvHeader::field(row, col_synonyms));
    entries.push_back(std::move(entry));
  }
  return from_entries(std::move(entries), path);
}

AdeLexicon AdeLexicon::from_entries(std::vector<AdeEntry> entries,
                                    const std::string& origin) {
  AdeLexicon lex;
  lex.entries_ = std::move(entries);
  auto add_synonym = [&](const std::string& surface, const std::string& canonical) {
    std::string key = normalize_term(surface);
    if (key.empty()) {
      throw ParseError(origin + ": synonym '" + surface + "' normalizes to nothing");
    }
    auto [it, inserted] = lex.synonym_to_canonical_.emplace(key, canonical);
    if (!inserted && it->second != canonical) {
      throw ParseError(origin + ": ambiguous synonym '" + surface + "' maps to both '" +
                       it->second + "' and '" + canonical + "'");
    }
    lex.max_term_tokens_ = std::max(lex.max_term_tokens_, token_count(key));
  };
  std::unordered_map<std::string, bool> seen_canonicals;
  for (const AdeEntry& entry : lex.entries_) {
    std::string canonical = normalize_term(entry.canonical);
    if (!seen_canonicals.emplace(canonical, true).second) {
      throw ParseError(origin + ": duplicate canonical row '" + entry.canonical + "'");
    }
    add_synonym(entry.canonical, canonical);
    for (const std::string& syn : entry.synonyms) add_synonym(syn, canonical);
  }
  return lex;
}

std::optional<std::string> AdeLexicon::canonical_for(std::string_view surface) const {
  auto it = synonym_to_canonical_.find(normalize_term(surface));
  if (it == synonym_to_canonical_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> AdeLexicon::canonical_names() const {
  std::vector<std::string> names;
  names.reserve(entries_.size());
  for (const AdeEntry& entry : entries_) names.push_back(normalize_term(entry.canonical));
  return names;
}

SiderReference SiderReference::load(const std::string& path) {
  auto rows = read_csv(path);
  if (rows.empty()) throw ParseError(path, 1, "empty reference file");
  CsvHeader header(rows[0], path);
  size_t col_ade = header.require("ade");
  size_t col_low = header.require("low_pct");
  size_t col_high = header.require("high_pct");

  std::vector<std::pair<std::string, SiderRange>> parsed;
  for (size_t i = 1; i < rows.size(); ++i) {
    const CsvRow& row = rows[i];
    header.check_width(row);
    std::string ade = normalize_term(CsvHeader::field(row, col_ade));
    if (ade.empty()) throw ParseError(path, row.line_no, "empty ade name");
    SiderRange range;
    range.low_pct = parse_pct_cell(CsvHeader::field(row, col_low), path, row.line_no, "low_pct");
    range.high_pct = parse_pct_cell(CsvHeader::field(row, col_high), path, row.line_no, "high_pct");
    if (range.low_pct && range.high_pct && *range.low_pct > *range.high_pct) {
      throw ParseError(path, row.line_no, "low_pct > high_pct");
    }
    parsed.emplace_back(std::move(ade), range);
  }
  return from_rows(std::move(parsed));
}

SiderReference SiderReference::from_rows(std::vector<std::pair<std::string, SiderRange>> rows) {
  SiderReference ref;
  for (auto& [ade, range] : rows) {
    if (!ref.rows_.emplace(normalize_term(ade), range).second) {
      throw ParseError("duplicate reference row for '" + ade + "'");
    }
  }
  return ref;
}

std::optional<SiderRange> SiderReference::range_for(std::string_view ade) const {
  auto it = rows_.find(normalize_term(ade));
  if (it == rows_.end()) return std::nullopt;
  if (!it->second.low_pct && !it->second.high_pct) return std::nullopt;
  return it->second;
}

}  // namespace pharmatimeline
