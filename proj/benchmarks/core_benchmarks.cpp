#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "pharmatimeline/episodes.hpp"
#include "pharmatimeline/extraction.hpp"
#include "pharmatimeline/lexicon.hpp"
#include "pharmatimeline/rng.hpp"
#include "pharmatimeline/stats.hpp"

namespace {

using namespace pharmatimeline;

std::vector<DailyEvent> random_drug_events(size_t n, uint64_t seed) {
  Rng rng(seed);
  Date base = Date::parse("2010-01-01");
  std::vector<DailyEvent> events;
  events.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    events.push_back(
        DailyEvent{"p1", base + int(rng.bounded(1096)), MentionKind::Drug, "clozapine"});
  }
  return events;
}

void BM_BuildEpisodes(benchmark::State& state) {
  auto events = random_drug_events(size_t(state.range(0)), 7);
  EpisodeThresholds thresholds;
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_episodes(events, thresholds));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_BuildEpisodes)->Range(8, 4096);

void BM_ExtractMentions(benchmark::State& state) {
  DrugLexicon drugs = DrugLexicon::from_entries(
      {{"clozapine", {"clozaril", "denzapine"}, DrugCategory::Antipsychotics},
       {"olanzapine", {"zyprexa"}, DrugCategory::Antipsychotics}});
  AdeLexicon ades = AdeLexicon::from_entries(
      {{"sedation", {"drowsy"}}, {"tremor", {}}, {"weight gain", {"gained weight"}}});
  MentionExtractor extractor(drugs, ades, CueConfig::defaults());

  std::string text;
  for (int i = 0; i < state.range(0); ++i) {
    text += "Continues on Clozaril. No evidence of tremor today; some weight gain noted. ";
  }
  ClinicalDocument doc{"p1", "d1", Date::parse("2014-01-01"), text};
  for (auto _ : state) {
    benchmark::DoNotOptimize(extractor.extract(doc));
  }
  state.SetBytesProcessed(state.iterations() * int64_t(text.size()));
}
BENCHMARK(BM_ExtractMentions)->Range(1, 256);

void BM_ChiSquarePvalue(benchmark::State& state) {
  Rng rng(3);
  std::vector<double> stats;
  for (int i = 0; i < 1024; ++i) stats.push_back(rng.uniform01() * 50.0);
  size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(chi_square_pvalue(stats[i & 1023], 1 + int(i % 7)));
    ++i;
  }
}
BENCHMARK(BM_ChiSquarePvalue);

void BM_CollapseDaily(benchmark::State& state) {
  Rng rng(11);
  Date base = Date::parse("2014-01-01");
  std::vector<Mention> mentions;
  for (int i = 0; i < state.range(0); ++i) {
    Mention m;
    m.patient_id = "p" + std::to_string(rng.bounded(50));
    m.date = base + int(rng.bounded(180));
    m.kind = rng.bernoulli(0.5) ? MentionKind::Drug : MentionKind::Ade;
    m.canonical = m.kind == MentionKind::Drug ? "clozapine" : "sedation";
    m.polarity = rng.bernoulli(0.8) ? Polarity::Positive : Polarity::Negated;
    mentions.push_back(std::move(m));
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(collapse_daily(mentions));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_CollapseDaily)->Range(64, 8192);

}  // namespace

BENCHMARK_MAIN();
