// Command-line driver: composable pipeline stages over one config file.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "pharmatimeline/config.hpp"
#include "pharmatimeline/csv.hpp"
#include "pharmatimeline/errors.hpp"
#include "pharmatimeline/log.hpp"
#include "pharmatimeline/pipeline.hpp"
#include "pharmatimeline/stats.hpp"
#include "pharmatimeline/synthdata.hpp"

namespace {

using namespace pharmatimeline;

struct GlobalOptions {
  std::string config_path;
  std::string out_dir;
  std::optional<uint64_t> seed;
  bool strict_attribution = false;
};

Config effective_config(const GlobalOptions& options) {
  Config cfg;
  if (!options.config_path.empty()) cfg = Config::load(options.config_path);
  if (!options.out_dir.empty()) cfg.set("out_dir", options.out_dir);
  if (options.seed) cfg.set("seed", std::to_string(*options.seed));
  if (options.strict_attribution) cfg.set("strict_attribution", "true");
  return cfg;
}

void print_counts(const std::map<std::string, size_t>& counts) {
  for (const auto& [key, value] : counts) {
    std::printf("%s: %zu\n", key.c_str(), value);
  }
}

int cmd_synth(const GlobalOptions& options) {
  Config cfg = effective_config(options);
  SynthSpec spec = SynthSpec::from_config(cfg);
  std::string corpus_dir = cfg.get_string("corpus_dir", "corpus");
  SynthResult result = generate(spec, corpus_dir);
  std::printf("corpus written to %s\n", corpus_dir.c_str());
  std::printf("patients: %zu\ndocuments: %zu\nprescriptions: %zu\n", result.patients,
              result.documents, result.prescriptions);
  std::printf("planted events: %zu positive, %zu negated, %zu hedged\n",
              result.planted_positive_events, result.planted_negated_events,
              result.planted_hedged_events);
  return 0;
}

int cmd_stage(const GlobalOptions& options, const std::string& stage) {
  Config cfg = effective_config(options);
  Pipeline pipeline(RunConfig::from_config(cfg));
  if (stage == "extract") {
    pipeline.extract();
    pipeline.write_extraction_outputs();
  } else if (stage == "episodes") {
    pipeline.build_episodes();
    pipeline.write_episodes_output();
  } else if (stage == "adr") {
    pipeline.build_cohort();
    pipeline.write_cohort_outputs();
  } else if (stage == "prevalence") {
    pipeline.analyze();
    pipeline.write_prevalence_output();
  } else if (stage == "stats") {
    pipeline.analyze();
    pipeline.write_stats_outputs();
  } else if (stage == "compare-sider") {
    pipeline.analyze();
    pipeline.write_sider_output();
  }
  print_counts(pipeline.counts());
  for (const std::string& warning : pipeline.warnings()) log_warn(warning);
  return 0;
}

int cmd_run(const GlobalOptions& options) {
  Config cfg = effective_config(options);
  RunConfig run_config = RunConfig::from_config(cfg);
  RunReport report = run_pipeline(run_config);
  print_counts(report.counts);
  for (const std::string& warning : report.warnings) log_warn(warning);
  std::printf("config_hash: %s\n", report.config_hash.c_str());
  std::printf("manifest_hash: %s\n", report.manifest_hash.c_str());
  std::printf("report bundle in %s\n", run_config.out_dir.c_str());
  return 0;
}

bool parse_verdict(const std::string& cell, const std::string& path, size_t line_no) {
  std::string v = normalize_term(cell);
  if (v == "tp" || v == "true" || v == "yes" || v == "1" || v == "t") return true;
  if (v == "fp" || v == "false" || v == "no" || v == "0" || v == "f") return false;
  throw ParseError(path, line_no, "verdict must be tp/fp (or true/false), got '" + cell + "'");
}

int cmd_validate_sample(const GlobalOptions& options, size_t n, const std::string& score_path) {
  Config cfg = effective_config(options);
  RunConfig run_config = RunConfig::from_config(cfg);

  if (!score_path.empty()) {
    // Score a filled worksheet: PPV/FDR from annotator A, agreement and kappa
    // when annotator B is present on every row.
    auto rows = read_csv(score_path);
    if (rows.size() < 2) throw ParseError(score_path, 1, "no scored rows");
    CsvHeader header(rows[0], score_path);
    size_t col_a = header.require("verdict_a");
    auto col_b = header.find("verdict_b");

    std::vector<bool> verdicts_a;
    std::vector<bool> verdicts_b;
    bool b_complete = col_b.has_value();
    for (size_t i = 1; i < rows.size(); ++i) {
      verdicts_a.push_back(
          parse_verdict(std::string(CsvHeader::field(rows[i], col_a)), score_path, rows[i].line_no));
      if (col_b) {
        std::string cell = trim(CsvHeader::field(rows[i], *col_b));
        if (cell.empty()) b_complete = false;
        else verdicts_b.push_back(parse_verdict(cell, score_path, rows[i].line_no));
      }
    }
    ValidationMetrics metrics = ppv_fdr(verdicts_a);

    std::filesystem::create_directories(run_config.out_dir);
    std::ofstream out(run_config.out_dir + "/validation_metrics.csv", std::ios::binary);
    if (!out) throw PipelineError(ErrorCode::MissingFile, "cannot write validation_metrics.csv");
    out << "metric,value\n";
    out << "n," << verdicts_a.size() << "\n";
    out << "ppv," << format_pct(100.0 * metrics.ppv) << "\n";
    out << "fdr," << format_pct(100.0 * metrics.fdr) << "\n";
    std::printf("ppv: %.2f\nfdr: %.2f\n", metrics.ppv, metrics.fdr);
    if (b_complete && verdicts_b.size() == verdicts_a.size() && !verdicts_a.empty()) {
      std::array<std::array<long, 2>, 2> counts{{{0, 0}, {0, 0}}};
      for (size_t i = 0; i < verdicts_a.size(); ++i) {
        ++counts[verdicts_a[i] ? 0 : 1][verdicts_b[i] ? 0 : 1];
      }
      KappaResult kappa = cohen_kappa(counts);
      out << "percent_agreement," << format_pct(kappa.percent_agreement) << "\n";
      out << "kappa," << format_pct(kappa.kappa) << "\n";
      std::printf("agreement: %.0f%%\nkappa: %.2f\n", kappa.percent_agreement, kappa.kappa);
    }
    return 0;
  }

  Pipeline pipeline(RunConfig::from_config(cfg));
  pipeline.build_cohort();

  // ADR events only: mentions with at least one concurrently active drug.
  std::vector<AdrEvent> linked;
  for (const AdrEvent& event : pipeline.adr_events()) {
    if (!event.concurrent_drugs.empty()) linked.push_back(event);
  }
  if (n > linked.size()) {
    throw PipelineError(ErrorCode::SchemaError,
                        "sample size " + std::to_string(n) + " exceeds " +
                            std::to_string(linked.size()) + " drug-linked events");
  }
  auto sample = sample_for_validation(linked, n, run_config.seed);

  std::filesystem::create_directories(run_config.out_dir);
  std::string path = run_config.out_dir + "/validation_sample.csv";
  std::ofstream out(path, std::ios::binary);
  if (!out) throw PipelineError(ErrorCode::MissingFile, "cannot write validation_sample.csv");
  out << "event_id,patient_id,ade,date,bucket,concurrent_drugs,verdict_a,verdict_b\n";
  for (size_t i = 0; i < sample.size(); ++i) {
    const AdrEvent& event = sample[i];
    std::string drugs;
    for (const std::string& d : event.concurrent_drugs) {
      if (!drugs.empty()) drugs += '|';
      drugs += d;
    }
    std::vector<std::string> fields{
        std::to_string(i + 1),
        event.patient_id,
        event.ade,
        event.date.to_string(),
        event.interval ? std::string(bucket_label(*event.interval)) : std::string(),
        drugs,
        "",
        ""};
    write_csv_row(out, fields);
  }
  std::printf("worksheet with %zu events written to %s\n", sample.size(), path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  init_log_from_env();

  CLI::App app{"Medication episode and adverse-event prevalence pipeline"};
  app.require_subcommand(1);

  GlobalOptions options;
  app.add_option("--config", options.config_path, "Key-value config file")
      ->check(CLI::ExistingFile);
  app.add_option("--out", options.out_dir, "Output directory (overrides config)");
  uint64_t seed_value = 0;
  auto* seed_opt = app.add_option("--seed", seed_value, "RNG seed (overrides config)");
  app.add_flag("--strict-attribution", options.strict_attribution,
               "Count post-index events only when the study drug is active");

  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus");
  auto* extract = app.add_subcommand("extract", "Extract mentions and daily events");
  auto* episodes = app.add_subcommand("episodes", "Build medication episodes");
  auto* adr = app.add_subcommand("adr", "Build the ADR timeline and cohort");
  auto* prevalence = app.add_subcommand("prevalence", "Write the prevalence table");
  auto* stats = app.add_subcommand("stats", "Run chi-square analyses");
  auto* compare = app.add_subcommand("compare-sider", "Compare prevalence against the reference");
  auto* validate = app.add_subcommand("validate-sample", "Sample events for manual validation");
  auto* run = app.add_subcommand("run", "Run the full pipeline");
  for (auto* sub : {synth, extract, episodes, adr, prevalence, stats, compare, validate, run}) {
    sub->fallthrough();  // global flags may follow the subcommand
  }

  size_t sample_n = 300;
  std::string score_path;
  validate->add_option("--n", sample_n, "Sample size (default 300)");
  validate->add_option("--score", score_path, "Scored worksheet to compute PPV/FDR and kappa")
      ->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);
  if (seed_opt->count() > 0) options.seed = seed_value;

  try {
    if (synth->parsed()) return cmd_synth(options);
    if (extract->parsed()) return cmd_stage(options, "extract");
    if (episodes->parsed()) return cmd_stage(options, "episodes");
    if (adr->parsed()) return cmd_stage(options, "adr");
    if (prevalence->parsed()) return cmd_stage(options, "prevalence");
    if (stats->parsed()) return cmd_stage(options, "stats");
    if (compare->parsed()) return cmd_stage(options, "compare-sider");
    if (validate->parsed()) return cmd_validate_sample(options, sample_n, score_path);
    if (run->parsed()) return cmd_run(options);
  } catch (const PipelineError& e) {
    log_error(e.what());
    return e.exit_code();
  } catch (const std::exception& e) {
    log_error(e.what());
    return 1;
  }
  return 0;
}
