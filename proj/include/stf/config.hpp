#pragma once

#include "stf/benchmarks.hpp"
#include "stf/eval.hpp"
#include "stf/panel.hpp"
#include "stf/simulate.hpp"
#include "stf/tfm.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace stf {

// Raised for anything the user can fix by editing the config or command line.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    std::uint64_t seed = 1;

    // [data]
    std::vector<std::filesystem::path> csv_paths;
    std::optional<std::filesystem::path> archive;  // folded tensor archive, preferred over csv_paths
    std::optional<Span> span;

    // [calendar]
    CalendarSpec calendar;

    // [model]
    std::optional<Ranks> ranks;  // empty = auto
    std::size_t r_max = 3;
    std::vector<std::size_t> k_max{3, 3};
    Scaling scaling = Scaling::Estimate;
    std::size_t seasonal_period = 52;
    std::optional<std::filesystem::path> model_path;

    // [forecast]
    std::size_t horizon = 26;

    // [backtest]
    RollingPlan plan;
    bool use_mfm = true;
    bool use_vfm = true;
    bool use_fts = true;
    MfmOptions mfm;
    VfmOptions vfm;
    bool vfm_stacked = false;
    FpcaOptions fpca;

    // [simulate]
    SimSpec sim;

    // [output]
    std::filesystem::path out_dir = "out";

    bool verbose = false;

    std::filesystem::path tensor_archive_path() const;  // archive or <out>/tensors.txt
    std::filesystem::path model_file() const;           // model_path or <out>/model.json

    void validate() const;  // throws ConfigError
    std::string canonical() const;
    std::string hash() const;
};

// Sectioned key = value text. Keys before the first section are global.
// Unknown sections or keys are rejected with ConfigError.
RunConfig parse_config(const std::string& text, const std::string& source = "config");
RunConfig load_config(const std::filesystem::path& path);

// The accepted schema with defaults, one line per key.
std::string config_schema();

}  // namespace stf
