#include "pharmatimeline/extraction.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "pharmatimeline/config.hpp"
#include "pharmatimeline/csv.hpp"
#include "pharmatimeline/errors.hpp"

namespace pharmatimeline {

std::string_view to_string(MentionKind kind) {
  return kind == MentionKind::Drug ? "drug" : "ade";
}

std::string_view to_string(Polarity polarity) {
  switch (polarity) {
    case Polarity::Positive: return "positive";
    case Polarity::Negated: return "negated";
    case Polarity::Hedged: return "hedged";
  }
  return "?";
}

std::string_view to_string(MentionSource source) {
  return source == MentionSource::Text ? "text" : "prescription";
}

CueConfig CueConfig::defaults() {
  CueConfig cues;
  cues.negation_cues = {"no", "not", "denies", "no evidence of", "without"};
  cues.hedge_cues = {"risk of", "warned", "potential", "suspected", "monitor for", "?"};
  cues.window_tokens = 5;
  return cues;
}

CueConfig CueConfig::from_config(const Config& cfg) {
  CueConfig cues = defaults();
  if (cfg.has("negation_cues")) cues.negation_cues = cfg.get_list("negation_cues");
  if (cfg.has("hedge_cues")) cues.hedge_cues = cfg.get_list("hedge_cues");
  cues.window_tokens = cfg.get_int("window_tokens", cues.window_tokens);
  if (cues.window_tokens < 1) {
    throw ParseError("window_tokens must be >= 1");
  }
  return cues;
}

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> out;
  size_t i = 0;
  while (i < text.size()) {
    unsigned char c = static_cast<unsigned char>(text[i]);
    if (std::isalnum(c)) {
      Token tok;
      tok.begin = i;
      while (i < text.size() && std::isalnum(static_cast<unsigned char>(text[i]))) {
        tok.text.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(text[i]))));
        ++i;
      }
      tok.end = i;
      tok.is_word = true;
      out.push_back(std::move(tok));
    } else {
      if (c == '.' || c == ';' || c == '?') {
        out.push_back(Token{i, i + 1, std::string(1, static_cast<char>(c)), false});
      }
      ++i;
    }
  }
  return out;
}

namespace {

std::vector<std::string> phrase_tokens(const std::string& phrase) {
  std::vector<std::string> out;
  for (const Token& tok : tokenize(phrase)) out.push_back(tok.text);
  return out;
}

std::vector<std::vector<std::string>> compile_phrases(const std::vector<std::string>& phrases) {
  std::vector<std::vector<std::string>> out;
  for (const std::string& phrase : phrases) {
    auto tokens = phrase_tokens(phrase);
    if (!tokens.empty()) out.push_back(std::move(tokens));
  }
  return out;
}

bool is_scope_breaker(const Token& tok) {
  if (tok.is_word) return tok.text == "but";
  return tok.text == "." || tok.text == ";";
}

bool window_contains_phrase(const std::vector<const Token*>& window,
                            const std::vector<std::string>& phrase) {
  if (phrase.size() > window.size()) return false;
  for (size_t i = 0; i + phrase.size() <= window.size(); ++i) {
    bool match = true;
    for (size_t j = 0; j < phrase.size(); ++j) {
      if (window[i + j]->text != phrase[j]) {
        match = false;
        break;
      }
    }
    if (match) return true;
  }
  return false;
}

// Walks back from the token at match_index collecting up to window_tokens
// words (punctuation tokens ride along); stops at a scope breaker.
Polarity classify_at(const std::vector<Token>& tokens, size_t match_index,
                     int window_tokens,
                     const std::vector<std::vector<std::string>>& negation,
                     const std::vector<std::vector<std::string>>& hedge) {
  std::vector<const Token*> window;
  int words_seen = 0;
  for (size_t j = match_index; j-- > 0;) {
    const Token& tok = tokens[j];
    if (is_scope_breaker(tok)) break;
    if (tok.is_word) {
      if (words_seen == window_tokens) break;
      ++words_seen;
    }
    window.push_back(&tok);
  }
  std::reverse(window.begin(), window.end());
  for (const auto& phrase : negation) {
    if (window_contains_phrase(window, phrase)) return Polarity::Negated;
  }
  for (const auto& phrase : hedge) {
    if (window_contains_phrase(window, phrase)) return Polarity::Hedged;
  }
  return Polarity::Positive;
}

}  // namespace

Polarity classify_polarity(std::string_view text, size_t span_begin, size_t span_end,
                           const CueConfig& cues) {
  if (span_begin >= span_end || span_end > text.size()) {
    throw std::invalid_argument("classify_polarity: span outside text");
  }
  std::vector<Token> tokens = tokenize(text);
  size_t match_index = tokens.size();
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i].end > span_begin) {
      match_index = i;
      break;
    }
  }
  if (match_index == tokens.size()) {
    throw std::invalid_argument("classify_polarity: span does not cover a token");
  }
  return classify_at(tokens, match_index, cues.window_tokens,
                     compile_phrases(cues.negation_cues), compile_phrases(cues.hedge_cues));
}

MentionExtractor::MentionExtractor(const DrugLexicon& drugs, const AdeLexicon& ades,
                                   CueConfig cues)
    : drugs_(drugs), ades_(ades), cues_(std::move(cues)) {
  negation_phrases_ = compile_phrases(cues_.negation_cues);
  hedge_phrases_ = compile_phrases(cues_.hedge_cues);
  max_tokens_ = std::max<size_t>(1, std::max(drugs_.max_term_tokens(), ades_.max_term_tokens()));
}

std::vector<Mention> MentionExtractor::extract(const ClinicalDocument& doc) const {
  std::vector<Token> tokens = tokenize(doc.text);
  std::vector<size_t> words;
  words.reserve(tokens.size());
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i].is_word) words.push_back(i);
  }

  std::vector<Mention> out;
  size_t w = 0;
  while (w < words.size()) {
    size_t limit = std::min(max_tokens_, words.size() - w);
    size_t matched_len = 0;
    const std::string* drug_canonical = nullptr;
    const std::string* ade_canonical = nullptr;
    for (size_t len = limit; len >= 1; --len) {
      std::string key;
      for (size_t k = 0; k < len; ++k) {
        if (k) key.push_back(' ');
        key += tokens[words[w + k]].text;
      }
      bool drug_hit = drugs_.has_term(key);
      bool ade_hit = ades_.has_term(key);
      if (drug_hit || ade_hit) {
        matched_len = len;
        if (drug_hit) drug_canonical = &drugs_.generic_of(key);
        if (ade_hit) ade_canonical = &ades_.canonical_of(key);
        break;
      }
    }
    if (matched_len == 0) {
      ++w;
      continue;
    }

    size_t span_begin = tokens[words[w]].begin;
    size_t span_end = tokens[words[w + matched_len - 1]].end;
    Polarity polarity = classify_at(tokens, words[w], cues_.window_tokens,
                                    negation_phrases_, hedge_phrases_);
    auto make_mention = [&](MentionKind kind, const std::string& canonical) {
      Mention m;
      m.patient_id = doc.patient_id;
      m.date = doc.date;
      m.kind = kind;
      m.canonical = canonical;
      m.surface = std::string(doc.text.substr(span_begin, span_end - span_begin));
      m.polarity = polarity;
      m.source = MentionSource::Text;
      m.begin = span_begin;
      m.end = span_end;
      return m;
    };
    if (drug_canonical) out.push_back(make_mention(MentionKind::Drug, *drug_canonical));
    if (ade_canonical) out.push_back(make_mention(MentionKind::Ade, *ade_canonical));
    w += matched_len;
  }
  return out;
}

std::vector<Mention> extract_mentions(const ClinicalDocument& doc, const DrugLexicon& drugs,
                                      const AdeLexicon& ades, const CueConfig& cues) {
  return MentionExtractor(drugs, ades, cues).extract(doc);
}

std::vector<DailyEvent> collapse_daily(std::span<const Mention> mentions, bool include_hedged) {
  std::vector<DailyEvent> events;
  for (const Mention& m : mentions) {
    if (m.polarity == Polarity::Positive ||
        (include_hedged && m.polarity == Polarity::Hedged)) {
      events.push_back(DailyEvent{m.patient_id, m.date, m.kind, m.canonical});
    }
  }
  std::sort(events.begin(), events.end(), [](const DailyEvent& a, const DailyEvent& b) {
    return std::tie(a.patient_id, a.date, a.canonical, a.kind) <
           std::tie(b.patient_id, b.date, b.canonical, b.kind);
  });
  events.erase(std::unique(events.begin(), events.end()), events.end());
  return events;
}

std::vector<ClinicalDocument> read_documents_jsonl(const std::string& path) {
  std::string content = read_file(path);
  std::vector<ClinicalDocument> docs;
  std::unordered_set<std::string> doc_keys;
  size_t pos = 0;
  size_t line_no = 0;
  while (pos < content.size()) {
    size_t nl = content.find('\n', pos);
    std::string_view line(content.data() + pos,
                          (nl == std::string::npos ? content.size() : nl) - pos);
    pos = nl == std::string::npos ? content.size() : nl + 1;
    ++line_no;
    std::string stripped = trim(line);
    if (stripped.empty()) continue;

    nlohmann::json obj = nlohmann::json::parse(stripped, nullptr, false);
    if (obj.is_discarded() || !obj.is_object()) {
      throw ParseError(path, line_no, "invalid JSON object");
    }
    ClinicalDocument doc;
    try {
      doc.patient_id = obj.at("patient_id").get<std::string>();
      doc.doc_id = obj.at("doc_id").get<std::string>();
      doc.text = obj.at("text").get<std::string>();
      doc.date = Date::parse(obj.at("date").get<std::string>());
    } catch (const std::exception& e) {
      throw ParseError(path, line_no, e.what());
    }
    if (!doc_keys.insert(doc.patient_id + "\x1f" + doc.doc_id).second) {
      throw ParseError(path, line_no,
                       "duplicate doc_id '" + doc.doc_id + "' for patient " + doc.patient_id);
    }
    docs.push_back(std::move(doc));
  }
  return docs;
}

std::vector<Mention> read_prescriptions_csv(const std::string& path, const DrugLexicon& drugs,
                                            size_t* skipped) {
  auto rows = read_csv(path);
  if (rows.empty()) throw ParseError(path, 1, "empty prescriptions file");
  CsvHeader header(rows[0], path);
  size_t col_patient = header.require("patient_id");
  size_t col_date = header.require("date");
  size_t col_drug = header.require("drug");

  size_t dropped = 0;
  std::vector<Mention> mentions;
  for (size_t i = 1; i < rows.size(); ++i) {
    const CsvRow& row = rows[i];
    header.check_width(row);
    std::string surface = trim(CsvHeader::field(row, col_drug));
    auto generic = drugs.generic_for(surface);
    if (!generic) {
      ++dropped;
      continue;
    }
    Mention m;
    m.patient_id = trim(CsvHeader::field(row, col_patient));
    auto date = Date::try_parse(trim(CsvHeader::field(row, col_date)));
    if (m.patient_id.empty() || !date) {
      throw ParseError(path, row.line_no, "expected patient_id and YYYY-MM-DD date");
    }
    m.date = *date;
    m.kind = MentionKind::Drug;
    m.canonical = *generic;
    m.surface = surface;
    m.polarity = Polarity::Positive;
    m.source = MentionSource::StructuredPrescription;
    mentions.push_back(std::move(m));
  }
  if (skipped) *skipped = dropped;
  return mentions;
}

void write_mentions_csv(const std::string& path, std::span<const Mention> mentions) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw PipelineError(ErrorCode::MissingFile, "cannot write " + path);
  out << "patient_id,date,kind,canonical,surface,polarity,source\n";
  for (const Mention& m : mentions) {
    std::vector<std::string> fields{
        m.patient_id,           m.date.to_string(),
        std::string(to_string(m.kind)),     m.canonical,
        m.surface,              std::string(to_string(m.polarity)),
        std::string(to_string(m.source))};
    write_csv_row(out, fields);
  }
}

void write_daily_events_csv(const std::string& path, std::span<const DailyEvent> events) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw PipelineError(ErrorCode::MissingFile, "cannot write " + path);
  out << "patient_id,date,kind,canonical\n";
  for (const DailyEvent& e : events) {
    std::vector<std::string> fields{e.patient_id, e.date.to_string(),
                                    std::string(to_string(e.kind)), e.canonical};
    write_csv_row(out, fields);
  }
}

}  // namespace pharmatimeline
