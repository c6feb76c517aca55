#include <iostream>
#include <memory>

#include <CLI11.hpp>

#include "cdrgeo/cli.hpp"
#include "cdrgeo/error.hpp"
#include "cdrgeo/home_detection.hpp"
#include "cdrgeo/text.hpp"
#include "reports.hpp"

#ifndef CDRGEO_VERSION
#define CDRGEO_VERSION "0.0.0"
#endif

namespace cdrgeo {
namespace {

using cli::OutputDir;
using cli::Pipeline;
using cli::RunConfig;
using cli::Timings;
using json = nlohmann::ordered_json;

struct Options {
  std::string config_file;
  std::string out_dir = "out";
  std::string period;
  std::optional<long> seed;
  std::optional<long> workers;
  std::vector<std::string> sets;

  std::string heuristic = "all";
  std::string indicator;
  std::string validation;
  std::string level;
  std::optional<long> synth_users;
  std::optional<long> synth_days;
};

RunConfig load_config(const Options& o) {
  RunConfig cfg;
  if (!o.config_file.empty()) cfg.load_file(o.config_file);
  if (!o.period.empty()) cfg.set("period", o.period);
  if (o.seed) cfg.set("seed", std::to_string(*o.seed));
  if (o.workers) cfg.set("workers", std::to_string(*o.workers));
  if (o.synth_users) cfg.set("synth_users", std::to_string(*o.synth_users));
  if (o.synth_days) cfg.set("synth_days", std::to_string(*o.synth_days));
  for (const std::string& s : o.sets) cfg.set_assignment(s);
  return cfg;
}

json base_manifest(const std::string& command, const RunConfig& cfg) {
  json config = json::object();
  for (const auto& [k, v] : cfg.snapshot()) config[k] = v;
  return {{"tool", "cdrgeo"}, {"version", CDRGEO_VERSION}, {"command", command}, {"config", std::move(config)}};
}

std::vector<HeuristicSpec> heuristics_from(const std::string& name) {
  if (name == "all") return {standard_heuristics().begin(), standard_heuristics().end()};
  return {heuristic_by_name(name)};
}

void print_report(std::ostream& out, const MultiScaleReport& report) {
  for (const MultiScaleRow& row : report.rows) {
    out << row.pair << ':';
    for (std::size_t l = 0; l < report.levels.size(); ++l) {
      const auto& c = row.by_level[l];
      out << ' ' << report.levels[l] << '=' << (c ? format_fixed(c->r, 2) : std::string("undefined"));
    }
    out << '\n';
  }
  for (const ScaleDifference& d : report.differences) {
    if (!d.flag) continue;
    out << "  flagged " << d.pair << ' ' << d.level_a << "->" << d.level_b << ": "
        << (d.delta >= 0 ? "+" : "") << format_fixed(d.delta, 2) << '\n';
  }
}

/// Runs one pipeline command inside a staged output directory.
template <typename Body>
void run_pipeline(const std::string& command, const Options& o, Body&& body) {
  const RunConfig cfg = load_config(o);
  OutputDir out(o.out_dir);
  Timings timings;
  Pipeline p(cfg, out, timings);
  body(p);
  p.write_ingest_summary();
  json manifest = base_manifest(command, cfg);
  manifest["inputs"] = p.inputs_json();
  manifest["timings"] = timings.to_json();
  out.commit(std::move(manifest));
}

void run_report(Pipeline& p, std::ostream& out) {
  const RunConfig& cfg = p.config();
  const auto all = heuristics_from("all");
  cli::write_homes(p, all);
  const bool calibrated = p.indicators().calibration.has_value();
  if (!calibrated) out << "note: corrected entropy skipped: " << p.indicators().calibration_error << '\n';
  cli::write_indicators(p, calibrated);
  cli::write_tessellation(p);
  if (cfg.has_value("census_cell")) {
    cli::write_cosine(p);
    cli::write_hotspots(p);
  }
  if (cfg.has_value("admin")) {
    for (const std::string& level : cfg.get_list("levels"))
      if (level != "cell") cli::write_aggregate(p, level);
    print_report(out, cli::write_correlate(p));
  }
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Home detection, mobility indicators and scale analysis for call detail records", "cdrgeo"};
  app.set_version_flag("--version", CDRGEO_VERSION);
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--config", o.config_file, "key = value run configuration file");
  app.add_option("--out-dir", o.out_dir, "output directory")->capture_default_str();
  app.add_option("--period", o.period, "analysis period START..END inside the study window");
  app.add_option("--seed", o.seed, "random seed");
  app.add_option("--workers", o.workers, "worker threads");
  app.add_option("--set", o.sets, "override a config key (key=value), repeatable");

  auto* synth = app.add_subcommand("synth", "write a synthetic world and its CDR stream");
  synth->add_option("--users", o.synth_users, "number of subscribers");
  synth->add_option("--days", o.synth_days, "number of days");
  app.add_subcommand("ingest-check", "parse every configured input and log rejects");
  auto* homes = app.add_subcommand("homes", "detect home towers");
  homes->add_option("--heuristic", o.heuristic, "H1..H5 or all")->capture_default_str();
  auto* indicators = app.add_subcommand("indicators", "mobility entropy and corrected entropy");
  indicators->add_option("indicator", o.indicator, "entropy or cme")
      ->required()
      ->check(CLI::IsMember({"entropy", "cme"}));
  auto* validate = app.add_subcommand("validate", "compare detected homes with the census");
  validate->add_option("what", o.validation, "cosine or hotspots")
      ->required()
      ->check(CLI::IsMember({"cosine", "hotspots"}));
  auto* aggregate = app.add_subcommand("aggregate", "aggregate tower values to an administrative level");
  aggregate->add_option("--level", o.level, "iris, commune or a custom level name")->required();
  app.add_subcommand("correlate", "correlations across spatial levels");
  app.add_subcommand("report", "run every stage");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  if (!rev.empty()) rev.pop_back();
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << CDRGEO_VERSION << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  }

  try {
    const std::string command = app.get_subcommands().front()->get_name();
    if (command == "synth") {
      const RunConfig cfg = load_config(o);
      OutputDir dir(o.out_dir);
      Timings timings;
      cli::write_synth(cfg, dir, timings);
      json manifest = base_manifest(command, cfg);
      manifest["inputs"] = json::array();
      manifest["timings"] = timings.to_json();
      dir.commit(std::move(manifest));
    } else if (command == "ingest-check") {
      run_pipeline(command, o, [](Pipeline& p) { cli::write_ingest_check(p); });
    } else if (command == "homes") {
      run_pipeline(command, o, [&](Pipeline& p) { cli::write_homes(p, heuristics_from(o.heuristic)); });
    } else if (command == "indicators") {
      run_pipeline(command + " " + o.indicator, o,
                   [&](Pipeline& p) { cli::write_indicators(p, o.indicator == "cme"); });
    } else if (command == "validate") {
      run_pipeline(command + " " + o.validation, o, [&](Pipeline& p) {
        if (o.validation == "cosine") {
          cli::write_cosine(p);
        } else {
          cli::write_hotspots(p);
          cli::write_tessellation(p);
        }
      });
    } else if (command == "aggregate") {
      run_pipeline(command, o, [&](Pipeline& p) {
        std::string level = o.level;
        if (level == "custom") {
          level = p.config().get("custom_level");
          if (level.empty()) throw InputError("aggregate --level custom needs the custom_level key");
        }
        cli::write_aggregate(p, level);
      });
    } else if (command == "correlate") {
      run_pipeline(command, o, [&](Pipeline& p) { print_report(out, cli::write_correlate(p)); });
    } else if (command == "report") {
      run_pipeline(command, o, [&](Pipeline& p) { run_report(p, out); });
    }
    out << "wrote " << o.out_dir << '\n';
    return kExitOk;
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const DegenerateField& e) {
    err << "error: degenerate field: " << e.what() << '\n';
    return kExitInput;
  } catch (const InvariantError& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInvariant;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInvariant;
  }
}

int run_cli(int argc, const char* const* argv) {
  return run_cli(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}

}  // namespace cdrgeo
