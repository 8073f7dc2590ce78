#pragma once

#include "stf/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace stf {

// Naive local wall-clock time in whole hours since 1970-01-01 00:00.
using Hour = std::int64_t;

Hour parse_datetime(std::string_view text);  // "YYYY-MM-DD HH:MM:SS"
std::string format_datetime(Hour h);

// Hours from the epoch to the first Monday 00:00 (1970-01-05).
inline constexpr Hour kMondayAnchor = 96;

struct PanelSeries {
    std::vector<std::string> provider_ids;
    Hour start = 0;                          // timestamps are start, start+1, ...
    std::vector<std::vector<double>> values; // [provider][hour], MW

    std::size_t providers() const noexcept { return provider_ids.size(); }
    std::size_t hours() const noexcept { return values.empty() ? 0 : values.front().size(); }

    friend bool operator==(const PanelSeries&, const PanelSeries&) = default;
};

struct IngestReport {
    std::size_t duplicates_averaged = 0;
    std::size_t cells_interpolated = 0;
    std::size_t hours_trimmed = 0;
};

struct IngestResult {
    PanelSeries panel;
    IngestReport report;
};

struct Span {
    Hour first;
    Hour last;  // inclusive
};

// Reads one `Datetime,<PROVIDER>_MW` file per provider and aligns them on a
// common hourly grid. Duplicate hours are averaged, interior gaps of up to
// six hours are linearly interpolated, missing hours at the span edges are
// trimmed. Longer interior gaps or more than 5% missing hours are errors.
IngestResult ingest_csv(const std::vector<std::filesystem::path>& paths,
                        std::optional<Span> span = std::nullopt);

struct CalendarSpec {
    std::vector<std::size_t> periods{7, 24};  // slowest first: day-of-week, hour-of-day
    Hour anchor = kMondayAnchor;              // any instant where every seasonal index is 0

    std::size_t cycle() const { return product(periods); }
    void validate() const;
};

struct TensorSeries {
    std::vector<std::string> provider_ids;
    std::vector<std::size_t> periods;
    std::vector<Tensor> tensors;     // dims (N, S1, ..., SM)
    std::vector<Hour> period_starts;

    std::size_t length() const noexcept { return tensors.size(); }
    Dims dims() const;
    TensorSeries slice(std::size_t begin, std::size_t count) const;

    friend bool operator==(const TensorSeries&, const TensorSeries&) = default;
};

// Drops partial periods at both ends and reshapes the rest.
TensorSeries fold(const PanelSeries& panel, const CalendarSpec& cal);
PanelSeries unfold_panel(const TensorSeries& ts);

struct Standardization {
    Tensor mu;
    Tensor sigma;
    std::size_t clamped_cells = 0;

    static Standardization identity(const Dims& dims);
};

Standardization estimate_standardization(const TensorSeries& ts);
TensorSeries standardize(const TensorSeries& ts, const Standardization& z);
TensorSeries destandardize(const TensorSeries& ts, const Standardization& z);
Tensor destandardize(const Tensor& x, const Standardization& z);

// Provider slice of every tensor, kept as dims (1, S1, ..., SM).
TensorSeries provider_series(const TensorSeries& ts, std::size_t provider);

}  // namespace stf
