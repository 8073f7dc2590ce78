#pragma once

#include "stf/panel.hpp"
#include "stf/tfm.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace stf {

// Everything needed to forecast from a fitted model without the data.
struct ModelArchive {
    TfmFit fit;
    std::vector<std::string> provider_ids;
    std::vector<std::size_t> periods;
    std::vector<Hour> period_starts;
    std::size_t seasonal_period = 52;
    double in_sample_mse = 0.0;
};

// JSON document with keys "format", "ranks", "providers", "periods",
// "period_starts", "seasonal_period", "in_sample_mse", "degenerate",
// "lambda", "b" (row-major nested arrays), "mu", "sigma" ({dims, data}),
// "clamped_cells" and "factors" (list of flat core tensors). Doubles are
// written in round-trip form, so save -> load reproduces the fit exactly.
std::string model_to_json(const ModelArchive& m);
ModelArchive model_from_json(const std::string& text);

void save_model(const std::filesystem::path& path, const ModelArchive& m);
ModelArchive load_model(const std::filesystem::path& path);

}  // namespace stf
