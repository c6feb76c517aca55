#pragma once

#include <span>
#include <string>

#include "cdrgeo/scales.hpp"
#include "pipeline.hpp"

namespace cdrgeo::cli {

/// Parses every configured input; only reject logs and the summary remain.
void write_ingest_check(Pipeline& p);
/// assignments.csv, population_<H>.csv, and agreement.csv when several
/// heuristics are given.
void write_homes(Pipeline& p, std::span<const HeuristicSpec> specs);
/// user_indicators.csv and tower_H.csv; with `cme` also calibration.csv and
/// tower_CME.csv.
void write_indicators(Pipeline& p, bool cme);
void write_cosine(Pipeline& p);
void write_hotspots(Pipeline& p);
void write_tessellation(Pipeline& p);
void write_aggregate(Pipeline& p, const std::string& level);
/// multiscale_r.csv, multiscale_delta.csv, sensitivity.csv and
/// sensitivity_flags.csv; returns the report for console output.
MultiScaleReport write_correlate(Pipeline& p);

/// Synthetic world and CDR stream in the input formats, plus study.conf and
/// ground_truth.csv.
void write_synth(const RunConfig& config, OutputDir& out, Timings& timings);

}  // namespace cdrgeo::cli
