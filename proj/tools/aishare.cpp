// aishare: population-normalized AI adoption indicator pipeline.
//
// Subcommands: compute, rank, correlate, timeseries, synthcheck.
// Exit codes: 0 ok, 1 input error, 2 config error, 3 analysis error,
// 4 validation mismatch.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "aishare/errors.hpp"
#include "aishare/pipeline.hpp"
#include "aishare/version.hpp"

namespace {

using aishare::Period;
using aishare::pipeline::Mode;
using aishare::pipeline::OutputFormat;
using aishare::pipeline::RunConfig;

struct CommonArgs {
  std::string config_path;
  std::string input_dir;
  std::string output_dir;
  std::string period_range;  // "YYYY-MM..YYYY-MM"
  std::string mode;
  std::string format;
};

void add_common_options(CLI::App& cmd, CommonArgs& args) {
  cmd.add_option("--config", args.config_path, "JSON config file mirroring RunConfig");
  cmd.add_option("--input", args.input_dir, "Directory holding the input CSV tables");
  cmd.add_option("--out", args.output_dir, "Output directory");
  cmd.add_option("--period", args.period_range, "Period range YYYY-MM..YYYY-MM");
  cmd.add_option("--mode", args.mode, "pooled | latest")
      ->check(CLI::IsMember({"pooled", "latest"}));
  cmd.add_option("--format", args.format, "csv | json")
      ->check(CLI::IsMember({"csv", "json"}));
}

Period parse_period_arg(const std::string& text, const char* what) {
  auto period = Period::parse(text);
  if (!period) {
    throw aishare::ConfigError(std::string(what) + " is not a valid YYYY-MM period: '" +
                               text + "'");
  }
  return *period;
}

RunConfig build_config(const CLI::App& cmd, const CommonArgs& args) {
  RunConfig config;
  if (cmd.count("--config") > 0) {
    config = RunConfig::from_json_file(args.config_path);
  }
  if (cmd.count("--input") > 0) {
    config.input_dir = args.input_dir;
  }
  if (cmd.count("--out") > 0) {
    config.output_dir = args.output_dir;
  }
  if (cmd.count("--period") > 0) {
    auto separator = args.period_range.find("..");
    if (separator == std::string::npos) {
      throw aishare::ConfigError("--period expects YYYY-MM..YYYY-MM, got '" +
                                 args.period_range + "'");
    }
    config.period_from =
        parse_period_arg(args.period_range.substr(0, separator), "--period start");
    config.period_to =
        parse_period_arg(args.period_range.substr(separator + 2), "--period end");
  }
  if (cmd.count("--mode") > 0) {
    config.mode = args.mode == "latest" ? Mode::latest : Mode::pooled;
  }
  if (cmd.count("--format") > 0) {
    config.format = args.format == "json" ? OutputFormat::json : OutputFormat::csv;
  }
  config.validate();
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"AI User Share indicator pipeline"};
  app.set_version_flag("--version", std::string(aishare::kVersion));
  app.require_subcommand(1);

  CommonArgs compute_args;
  auto* compute = app.add_subcommand("compute", "Estimate shares and write estimates + report");
  add_common_options(*compute, compute_args);

  CommonArgs rank_args;
  std::optional<int> top_k;
  std::string rank_estimates;
  auto* rank = app.add_subcommand("rank", "Rank economies by AI user share");
  add_common_options(*rank, rank_args);
  rank->add_option("--top-k", top_k, "Keep only the first N rows");
  rank->add_option("--estimates", rank_estimates,
                   "Rank a previously written estimates.csv instead of recomputing");

  CommonArgs correlate_args;
  std::string correlate_estimates;
  auto* correlate =
      app.add_subcommand("correlate", "Spearman correlation and log-linear trend vs gdp");
  add_common_options(*correlate, correlate_args);
  correlate->add_option("--estimates", correlate_estimates,
                        "Use a previously written estimates.csv instead of recomputing");

  CommonArgs timeseries_args;
  std::vector<std::string> economies;
  int window = 3;
  std::string event;
  int pre_months = 3;
  int post_months = 3;
  auto* timeseries =
      app.add_subcommand("timeseries", "Rolling-average series and optional event deltas");
  add_common_options(*timeseries, timeseries_args);
  timeseries->add_option("--economy", economies, "Economies to include (default: all)");
  timeseries->add_option("--window", window, "Rolling window in months")->capture_default_str();
  timeseries->add_option("--event", event, "Event period YYYY-MM for pre/post deltas");
  timeseries->add_option("--pre", pre_months, "Months in the pre-event window")
      ->capture_default_str();
  timeseries->add_option("--post", post_months, "Months in the post-event window")
      ->capture_default_str();

  std::string spec_path;
  double tolerance_pp = 1.5;
  std::string synth_out = "out";
  auto* synthcheck =
      app.add_subcommand("synthcheck", "Validate the pipeline against a synthetic population");
  synthcheck->add_option("--spec", spec_path, "Population spec JSON")->required();
  synthcheck->add_option("--tolerance-pp", tolerance_pp,
                         "Maximum per-economy error, percentage points")
      ->capture_default_str();
  synthcheck->add_option("--out", synth_out, "Output directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    // Help and version land here with code 0; real parse errors are config
    // mistakes under the exit-code taxonomy.
    return code == 0 ? 0 : 2;
  }

  try {
    if (compute->parsed()) {
      return aishare::pipeline::cmd_compute(build_config(*compute, compute_args));
    }
    if (rank->parsed()) {
      aishare::pipeline::RankOptions options;
      options.top_k = top_k;
      if (rank->count("--estimates") > 0) {
        options.estimates_file = rank_estimates;
      }
      return aishare::pipeline::cmd_rank(build_config(*rank, rank_args), options);
    }
    if (correlate->parsed()) {
      aishare::pipeline::CorrelateOptions options;
      if (correlate->count("--estimates") > 0) {
        options.estimates_file = correlate_estimates;
      }
      return aishare::pipeline::cmd_correlate(build_config(*correlate, correlate_args),
                                              options);
    }
    if (timeseries->parsed()) {
      aishare::pipeline::TimeseriesOptions options;
      for (const auto& economy : economies) {
        auto id = aishare::EconomyId::parse(economy);
        if (!id) {
          throw aishare::ConfigError("--economy is not a valid code: '" + economy + "'");
        }
        options.economies.push_back(*id);
      }
      options.window = window;
      if (timeseries->count("--event") > 0) {
        options.event = parse_period_arg(event, "--event");
      }
      options.pre_months = pre_months;
      options.post_months = post_months;
      return aishare::pipeline::cmd_timeseries(build_config(*timeseries, timeseries_args),
                                               options);
    }
    if (synthcheck->parsed()) {
      return aishare::pipeline::cmd_synthcheck(spec_path, tolerance_pp, synth_out);
    }
  } catch (const aishare::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const aishare::InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 1;
  } catch (const aishare::AnalysisError& e) {
    std::cerr << "analysis error: " << e.what() << "\n";
    return 3;
  } catch (const aishare::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
