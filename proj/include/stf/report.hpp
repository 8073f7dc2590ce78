#pragma once

#include "stf/eval.hpp"

#include <filesystem>
#include <string>

namespace stf {

// model,horizon,provider,mse,normalizer,relative_mse,status
std::string report_csv(const EvalReport& r);
// model,horizon,provider,window,mse
std::string trace_csv(const EvalReport& r);
std::string report_json(const EvalReport& r);
// One block per model, one row per horizon, one column per provider; the
// lowest relative MSE in each (horizon, provider) column is bold.
std::string report_markdown(const EvalReport& r);

// Parses report_csv output. Traces and metadata are not part of the CSV.
EvalReport parse_report_csv(const std::string& text);
EvalReport parse_report_json(const std::string& text);

// Writes report.csv, report.json, report.md and trace.csv into `dir`.
void emit_report(const EvalReport& r, const std::filesystem::path& dir);

std::string horizon_label(std::size_t horizon);

}  // namespace stf
