#pragma once

#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "pharmatimeline/date.hpp"
#include "pharmatimeline/lexicon.hpp"

namespace pharmatimeline {

class Config;

struct ClinicalDocument {
  std::string patient_id;
  std::string doc_id;
  Date date;
  std::string text;
};

enum class MentionKind { Drug, Ade };
enum class Polarity { Positive, Negated, Hedged };
enum class MentionSource { Text, StructuredPrescription };

std::string_view to_string(MentionKind kind);
std::string_view to_string(Polarity polarity);
std::string_view to_string(MentionSource source);

struct Mention {
  std::string patient_id;
  Date date;
  MentionKind kind = MentionKind::Drug;
  std::string canonical;  // key of the matching lexicon
  std::string surface;    // raw text of the matched span
  Polarity polarity = Polarity::Positive;
  MentionSource source = MentionSource::Text;
  size_t begin = 0;  // character span in the source text, [begin, end)
  size_t end = 0;
};

// One per (patient, date, kind, canonical): same-day repeats collapse.
struct DailyEvent {
  std::string patient_id;
  Date date;
  MentionKind kind = MentionKind::Drug;
  std::string canonical;

  friend auto operator<=>(const DailyEvent&, const DailyEvent&) = default;
};

// Negation/hedge cue phrases searched in a token window before each match.
// A scope breaker ('.', ';' or "but") between cue and match cancels the cue.
struct CueConfig {
  std::vector<std::string> negation_cues;
  std::vector<std::string> hedge_cues;
  int window_tokens = 5;

  static CueConfig defaults();
  static CueConfig from_config(const Config& cfg);
};

struct Token {
  size_t begin = 0;
  size_t end = 0;
  std::string text;  // lowercased word, or the punctuation mark itself
  bool is_word = true;
};

// Words are maximal alphanumeric runs (lowercased). Of the punctuation only
// '.', ';' and '?' appear as tokens: the scope breakers and the '?' cue.
std::vector<Token> tokenize(std::string_view text);

// Polarity of the term occupying [span_begin, span_end) in text.
// Negation cues win over hedge cues when both are in the window.
Polarity classify_polarity(std::string_view text, size_t span_begin, size_t span_end,
                           const CueConfig& cues);

// Gazetteer matcher over both lexicons: token-sequence terms, longest match
// wins at each position, mentions emitted in span order.
class MentionExtractor {
 public:
  MentionExtractor(const DrugLexicon& drugs, const AdeLexicon& ades, CueConfig cues);

  std::vector<Mention> extract(const ClinicalDocument& doc) const;

 private:
  const DrugLexicon& drugs_;
  const AdeLexicon& ades_;
  CueConfig cues_;
  std::vector<std::vector<std::string>> negation_phrases_;
  std::vector<std::vector<std::string>> hedge_phrases_;
  size_t max_tokens_ = 1;
};

std::vector<Mention> extract_mentions(const ClinicalDocument& doc, const DrugLexicon& drugs,
                                      const AdeLexicon& ades,
                                      const CueConfig& cues = CueConfig::defaults());

// Keeps positive mentions (hedged ones too when include_hedged), deduplicates
// per (patient, date, kind, canonical) and sorts by (patient, date, canonical).
std::vector<DailyEvent> collapse_daily(std::span<const Mention> mentions,
                                       bool include_hedged = false);

// documents.jsonl: one {patient_id, doc_id, date, text} object per line.
std::vector<ClinicalDocument> read_documents_jsonl(const std::string& path);

// prescriptions.csv rows become positive Drug mentions; rows whose drug is
// not in the lexicon are dropped (count returned via *skipped).
std::vector<Mention> read_prescriptions_csv(const std::string& path, const DrugLexicon& drugs,
                                            size_t* skipped = nullptr);

void write_mentions_csv(const std::string& path, std::span<const Mention> mentions);
void write_daily_events_csv(const std::string& path, std::span<const DailyEvent> events);

}  // namespace pharmatimeline
