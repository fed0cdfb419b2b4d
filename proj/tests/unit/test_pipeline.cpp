#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "pharmatimeline/csv.hpp"
#include "pharmatimeline/errors.hpp"
#include "pharmatimeline/pipeline.hpp"
#include "pharmatimeline/synthdata.hpp"

using namespace pharmatimeline;

namespace {

std::string data_path(const char* name) {
  return std::string(PHARMATIMELINE_DATA_DIR) + "/" + name;
}

std::filesystem::path fresh_dir(const char* name) {
  auto dir = std::filesystem::temp_directory_path() / "pharmatimeline_pipeline_tests" / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

Config base_config(const std::filesystem::path& corpus, const std::filesystem::path& out) {
  Config cfg;
  cfg.set("drugs", data_path("drugs.csv"));
  cfg.set("ades", data_path("ades.csv"));
  cfg.set("sider", data_path("sider.csv"));
  cfg.set("corpus_dir", corpus.string());
  cfg.set("out_dir", out.string());
  return cfg;
}

PrevalenceCell find_cell(const PrevalenceTable& table, const std::string& ade,
                         const std::string& level, MonthBucket bucket) {
  for (const auto& cell : table.cells) {
    if (cell.ade == ade && cell.level == level && cell.bucket == bucket) return cell;
  }
  FAIL("cell not found: ", ade, " ", level, " ", bucket_label(bucket));
  return {};
}

}  // namespace

TEST_CASE("pipeline runs a small corpus end to end") {
  auto corpus = fresh_dir("small_corpus");
  auto out = fresh_dir("small_out");
  SynthSpec spec;
  spec.seed = 5;
  spec.trusts = {{"alpha", 30}, {"beta", 20}};
  spec.ade_rates["sedation"] = {0.05, 0.05, 0.05, 0.5, 0.3, 0.2};
  spec.ade_rates["tremor"] = {0.0, 0.0, 0.0, 0.2, 0.1, 0.1};
  spec.negation_rate = 0.1;
  generate(spec, corpus.string());

  Pipeline pipeline(RunConfig::from_config(base_config(corpus, out)));
  RunReport report = pipeline.run_all();

  CHECK(report.counts.at("documents") > 0);
  CHECK(report.counts.at("cohort_qualifying") == 50);  // cadence <= gap, coverage >= 90
  CHECK(report.counts.at("cohort_members") == 50);
  CHECK(report.counts.at("trusts") == 2);
  CHECK(report.counts.at("daily_events") <= report.counts.at("countable_mentions"));
  CHECK_FALSE(report.manifest_hash.empty());

  for (const char* name :
       {"mentions.csv", "daily_events.csv", "episodes.csv", "members.csv", "adr_events.csv",
        "prevalence.csv", "chisq_per_trust.csv", "chisq_combined.csv", "sider_compare.csv",
        "run_manifest.json"}) {
    CHECK(std::filesystem::exists(out / name));
  }

  // Every generated patient carries one clozapine episode.
  CHECK(report.counts.at("episodes") == 50);

  // Gender partition consistency inside the analysis tables.
  for (const TrustPrevalence& tp : pipeline.prevalence()) {
    const auto& total = tp.tables.at(Dimension::TrustTotal);
    const auto& gender = tp.tables.at(Dimension::Gender);
    for (MonthBucket bucket : kAllBuckets) {
      long male = find_cell(gender, "sedation", "Male", bucket).numerator;
      long female = find_cell(gender, "sedation", "Female", bucket).numerator;
      CHECK(male + female == find_cell(total, "sedation", "all", bucket).numerator);
    }
  }
}

TEST_CASE("missing inputs surface distinct error codes") {
  auto corpus = fresh_dir("missing_corpus");
  auto out = fresh_dir("missing_out");
  Config cfg = base_config(corpus, out);  // corpus dir exists but is empty
  try {
    Pipeline pipeline(RunConfig::from_config(cfg));
    pipeline.load_corpus();
    FAIL("expected missing-file error");
  } catch (const PipelineError& e) {
    CHECK(e.code() == ErrorCode::MissingFile);
    CHECK(std::string(e.what()).find(corpus.string()) != std::string::npos);
    CHECK(e.exit_code() == 2);
  }
}

TEST_CASE("extraction and episodes run without the cohort tables") {
  auto corpus = fresh_dir("partial_corpus");
  auto out = fresh_dir("partial_out");
  SynthSpec spec;
  spec.trusts = {{"alpha", 5}};
  spec.ade_rates["sedation"] = {0.0, 0.0, 0.0, 0.5, 0.0, 0.0};
  generate(spec, corpus.string());
  // Strip everything the early stages do not need.
  for (const char* name : {"patients.csv", "admissions.csv", "diagnoses.csv", "smoking.csv"}) {
    std::filesystem::remove(corpus / name);
  }

  Pipeline pipeline(RunConfig::from_config(base_config(corpus, out)));
  pipeline.build_episodes();
  pipeline.write_extraction_outputs();
  pipeline.write_episodes_output();
  CHECK(pipeline.episodes().size() == 5);

  // The cohort stage still demands its tables.
  try {
    pipeline.build_cohort();
    FAIL("expected missing-file error");
  } catch (const PipelineError& e) {
    CHECK(e.code() == ErrorCode::MissingFile);
  }
}

TEST_CASE("cohort below the treatment threshold is an empty-cohort error") {
  auto corpus = fresh_dir("short_corpus");
  auto out = fresh_dir("short_out");
  SynthSpec spec;
  spec.trusts = {{"alpha", 5}};
  spec.coverage_days = 40;  // never reaches 90 days of coverage
  generate(spec, corpus.string());

  Pipeline pipeline(RunConfig::from_config(base_config(corpus, out)));
  try {
    pipeline.build_cohort();
    FAIL("expected empty-cohort error");
  } catch (const PipelineError& e) {
    CHECK(e.code() == ErrorCode::EmptyCohort);
    CHECK(e.exit_code() == 4);
  }
}

TEST_CASE("strict attribution drops post-index events outside drug coverage") {
  auto corpus = fresh_dir("strict_corpus");
  SynthSpec spec;
  spec.trusts = {{"alpha", 4}};
  spec.coverage_days = 40;                       // episode ends ~40 days after index
  spec.ade_exact["sedation"] = {0, 0, 0, 0, 0, 4};  // events in m+3, day 70
  spec.noise_negations = 0;
  generate(spec, corpus.string());

  auto run_with = [&](bool strict, const char* out_name) {
    Config cfg = base_config(corpus, fresh_dir(out_name));
    cfg.set("min_treatment_days", "20");  // keep the short episodes qualifying
    cfg.set("strict_attribution", strict ? "true" : "false");
    Pipeline pipeline(RunConfig::from_config(cfg));
    pipeline.analyze();
    const auto& total = pipeline.prevalence().at(0).tables.at(Dimension::TrustTotal);
    return find_cell(total, "sedation", "all", MonthBucket::PlusThree).numerator;
  };

  CHECK(run_with(false, "strict_out_off") == 4);  // cohort-level attribution
  CHECK(run_with(true, "strict_out_on") == 0);    // drug not active on day 70
}

TEST_CASE("count_hedged config resurrects hedged mentions") {
  auto corpus = fresh_dir("hedged_corpus");
  SynthSpec spec;
  spec.trusts = {{"alpha", 6}};
  spec.ade_rates["sedation"] = {0.0, 0.0, 0.0, 1.0, 0.0, 0.0};
  spec.hedge_rate = 1.0;  // every planted mention is "risk of sedation"
  spec.noise_negations = 0;
  generate(spec, corpus.string());

  auto numerator_with = [&](bool hedged, const char* out_name) {
    Config cfg = base_config(corpus, fresh_dir(out_name));
    cfg.set("count_hedged", hedged ? "true" : "false");
    Pipeline pipeline(RunConfig::from_config(cfg));
    pipeline.analyze();
    const auto& total = pipeline.prevalence().at(0).tables.at(Dimension::TrustTotal);
    return find_cell(total, "sedation", "all", MonthBucket::PlusOne).numerator;
  };
  CHECK(numerator_with(false, "hedged_off") == 0);
  CHECK(numerator_with(true, "hedged_on") == 6);
}

TEST_CASE("negation rate one drives measured prevalence to zero") {
  auto corpus = fresh_dir("allneg_corpus");
  auto out = fresh_dir("allneg_out");
  SynthSpec spec;
  spec.trusts = {{"alpha", 12}};
  spec.ade_rates["tremor"] = {0.0, 0.0, 0.0, 1.0, 1.0, 1.0};
  spec.negation_rate = 1.0;
  spec.noise_negations = 0;
  generate(spec, corpus.string());

  Pipeline pipeline(RunConfig::from_config(base_config(corpus, out)));
  pipeline.analyze();
  const auto& total = pipeline.prevalence().at(0).tables.at(Dimension::TrustTotal);
  for (MonthBucket bucket : kPostBuckets) {
    CHECK(find_cell(total, "tremor", "all", bucket).numerator == 0);
  }
}

TEST_CASE("worker count does not change extraction output") {
  auto corpus = fresh_dir("workers_corpus");
  SynthSpec spec;
  spec.seed = 77;
  spec.trusts = {{"alpha", 40}};
  spec.ade_rates["sedation"] = {0.1, 0.1, 0.1, 0.4, 0.2, 0.1};
  generate(spec, corpus.string());

  auto mentions_with = [&](const char* workers, const char* out_name) {
    auto out = fresh_dir(out_name);
    Config cfg = base_config(corpus, out);
    cfg.set("workers", workers);
    Pipeline pipeline(RunConfig::from_config(cfg));
    pipeline.extract();
    pipeline.write_extraction_outputs();
    return read_file((out / "mentions.csv").string());
  };
  CHECK(mentions_with("1", "workers_seq") == mentions_with("4", "workers_par"));
}

TEST_CASE("trust without smoking data is excluded from combined smoking analysis") {
  auto corpus = fresh_dir("gap_corpus");
  auto out = fresh_dir("gap_out");
  SynthSpec spec;
  spec.trusts = {{"alpha", 20}, {"oxford", 15}};
  spec.trusts[1].with_smoking = false;
  spec.trusts[1].with_admissions = false;
  spec.ade_rates["sedation"] = {0.0, 0.0, 0.0, 0.4, 0.2, 0.1};
  generate(spec, corpus.string());

  Pipeline pipeline(RunConfig::from_config(base_config(corpus, out)));
  pipeline.analyze();

  bool excluded_warning = false;
  for (const std::string& warning : pipeline.warnings()) {
    if (warning.find("oxford") != std::string::npos &&
        warning.find("smoking") != std::string::npos) {
      excluded_warning = true;
    }
  }
  CHECK(excluded_warning);

  // The oxford-like trust publishes no smoking prevalence table.
  for (const TrustPrevalence& tp : pipeline.prevalence()) {
    if (tp.trust == "oxford") {
      CHECK(tp.tables.count(Dimension::Smoking) == 0);
      CHECK(tp.tables.count(Dimension::Admission) == 0);
      CHECK(tp.tables.count(Dimension::TrustTotal) == 1);
    } else {
      CHECK(tp.tables.count(Dimension::Smoking) == 1);
    }
  }
}

TEST_CASE("compare_with_sider flags the worked examples") {
  SiderReference ref = SiderReference::load(data_path("sider.csv"));
  auto cell = [](const char* ade, MonthBucket bucket, long num, long denom) {
    PrevalenceCell c;
    c.ade = ade;
    c.dimension = Dimension::TrustTotal;
    c.level = "all";
    c.bucket = bucket;
    c.numerator = num;
    c.denominator = denom;
    return c;
  };
  std::vector<PrevalenceCell> cells{
      cell("sedation", MonthBucket::PlusOne, 162, 514),   // 31.52 inside [25,46]
      cell("agitation", MonthBucket::PlusOne, 176, 514),  // 34.24 above low-only 4.00
      cell("fatigue", MonthBucket::PlusOne, 181, 514),    // no reference row
      cell("sedation", MonthBucket::PlusTwo, 0, 514),     // 0.00 below 25
      cell("sedation", MonthBucket::MinusOne, 162, 514),  // pre-index: not compared
  };
  auto rows = compare_with_sider(cells, "oxford", ref);
  REQUIRE(rows.size() == 4);

  auto flag_of = [&](const char* ade, MonthBucket bucket) {
    for (const auto& row : rows) {
      if (row.ade == ade && row.bucket == bucket) return row.flag;
    }
    FAIL("row not found");
    return SiderFlag::NoReference;
  };
  CHECK(flag_of("sedation", MonthBucket::PlusOne) == SiderFlag::Within);
  CHECK(flag_of("agitation", MonthBucket::PlusOne) == SiderFlag::Above);
  CHECK(flag_of("fatigue", MonthBucket::PlusOne) == SiderFlag::NoReference);
  CHECK(flag_of("sedation", MonthBucket::PlusTwo) == SiderFlag::Below);
}

TEST_CASE("prevalence csv pins column order and two-decimal formatting") {
  auto corpus = fresh_dir("format_corpus");
  auto out = fresh_dir("format_out");
  SynthSpec spec;
  spec.trusts = {{"alpha", 10}};
  spec.ade_exact["sedation"] = {0, 0, 0, 5, 0, 0};
  spec.noise_negations = 0;
  generate(spec, corpus.string());

  Pipeline pipeline(RunConfig::from_config(base_config(corpus, out)));
  pipeline.analyze();
  pipeline.write_prevalence_output();

  auto rows = read_csv((out / "prevalence.csv").string());
  REQUIRE(rows.size() > 1);
  CHECK(rows[0].fields ==
        std::vector<std::string>{"ade", "trust", "dimension", "level", "m-3", "m-2", "m-1",
                                 "m+1", "m+2", "m+3", "sider_low", "sider_high"});
  bool found = false;
  for (size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].fields[0] == "sedation" && rows[i].fields[2] == "trust-total") {
      found = true;
      CHECK(rows[i].fields[7] == "50.00");  // 5 of 10 in m+1
      CHECK(rows[i].fields[10] == "25.00");
      CHECK(rows[i].fields[11] == "46.00");
    }
  }
  CHECK(found);
}

TEST_CASE("per-trust and combined chi-square files carry the pinned schemas") {
  auto corpus = fresh_dir("chisq_corpus");
  auto out = fresh_dir("chisq_out");
  SynthSpec spec;
  spec.trusts = {{"alpha", 25}};
  spec.ade_rates["sedation"] = {0.0, 0.0, 0.0, 0.5, 0.2, 0.1};
  generate(spec, corpus.string());

  Pipeline pipeline(RunConfig::from_config(base_config(corpus, out)));
  pipeline.analyze();
  pipeline.write_stats_outputs();

  auto per_trust = read_csv((out / "chisq_per_trust.csv").string());
  CHECK(per_trust[0].fields ==
        std::vector<std::string>{"ade", "trust", "dimension", "bucket", "statistic", "df", "p",
                                 "p_adjusted", "significant", "warnings"});
  auto combined = read_csv((out / "chisq_combined.csv").string());
  CHECK(combined[0].fields ==
        std::vector<std::string>{"ade", "dimension", "bucket", "statistic", "df", "p",
                                 "p_adjusted", "significant", "warnings"});
  REQUIRE(combined.size() > 1);
  // Scientific notation, %.2e style.
  CHECK(combined[1].fields[3].find('e') != std::string::npos);
}
