#pragma once

#include "stf/config.hpp"
#include "stf/eval.hpp"
#include "stf/model_io.hpp"

#include <optional>
#include <ostream>
#include <vector>

namespace stf {

// Output files, relative to RunConfig::out_dir unless overridden in [data] / [model].
//   ingest    tensors.txt, ingest.json
//   ranks     ranks.json
//   fit       model.json, fit.json
//   forecast  forecast.csv, forecast.txt
//   backtest  report.csv, report.json, report.md, trace.csv
//   simulate  tensors.txt, truth.json
//   report    report.csv, report.md, trace.csv rebuilt from report.json
// Progress and summaries go to `log`; verbose adds per-step detail.

// Reads data.archive, else ingests data.paths, else reads <out>/tensors.txt.
TensorSeries load_series(const RunConfig& cfg, std::ostream& log);

void cmd_ingest(const RunConfig& cfg, std::ostream& log);
RankSelection cmd_ranks(const RunConfig& cfg, std::ostream& log);
ModelArchive cmd_fit(const RunConfig& cfg, std::ostream& log);
TensorSeries cmd_forecast(const RunConfig& cfg, std::size_t n, std::ostream& log);
// `models` replaces the configured TFM and benchmark set when given.
EvalReport cmd_backtest(const RunConfig& cfg, std::ostream& log,
                        const std::optional<std::vector<Forecaster>>& models = std::nullopt);
Simulation cmd_simulate(const RunConfig& cfg, std::ostream& log);
void cmd_report(const RunConfig& cfg, std::ostream& log);

std::vector<Forecaster> configured_forecasters(const RunConfig& cfg, const Ranks& ranks);

// Full command line: parses flags, loads and validates the config, runs the
// subcommand. Returns 0 on success, 1 on computation failure, 2 on usage or
// config errors.
int run_cli(int argc, const char* const* argv, std::ostream& log);

}  // namespace stf
