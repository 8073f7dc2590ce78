#include "stf/panel.hpp"

#include "stf/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

namespace stf {

namespace {

// Proleptic Gregorian day count, 1970-01-01 = 0.
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const auto yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m > 2 ? m - 3 : m + 9) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& y, unsigned& m, unsigned& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const auto doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = doy - (153 * mp + 2) / 5 + 1;
    m = mp < 10 ? mp + 3 : mp - 9;
    y = static_cast<int>(static_cast<std::int64_t>(yoe) + era * 400 + (m <= 2));
}

template <typename T>
bool parse_int(std::string_view s, T& out) {
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

Hour floor_mod(Hour a, Hour b) { return ((a % b) + b) % b; }

struct Readings {
    std::string provider;
    std::map<Hour, std::pair<double, int>> by_hour;  // sum, count
};

Readings read_provider_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    const std::string source = path.string();
    std::string line;
    if (!std::getline(in, line)) throw ParseError(source, 1, "missing header");
    const auto header = trim(line);
    const auto comma = header.find(',');
    if (comma == std::string_view::npos || trim(header.substr(0, comma)) != "Datetime")
        throw ParseError(source, 1, "expected header 'Datetime,<PROVIDER>_MW'");
    std::string_view column = trim(header.substr(comma + 1));
    if (column.empty() || column.find(',') != std::string_view::npos)
        throw ParseError(source, 1, "expected exactly one value column");
    if (column.size() > 3 && column.ends_with("_MW")) column.remove_suffix(3);

    Readings r{std::string(column), {}};
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        const auto row = trim(line);
        if (row.empty()) continue;
        const auto c = row.find(',');
        if (c == std::string_view::npos) throw ParseError(source, lineno, "expected two fields");
        Hour h;
        try {
            h = parse_datetime(trim(row.substr(0, c)));
        } catch (const std::invalid_argument& e) {
            throw ParseError(source, lineno, e.what());
        }
        const auto field = trim(row.substr(c + 1));
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
        if (ec != std::errc() || ptr != field.data() + field.size() || !std::isfinite(v))
            throw ParseError(source, lineno, "bad value '" + std::string(field) + "'");
        auto& slot = r.by_hour[h];
        slot.first += v;
        slot.second += 1;
    }
    if (r.by_hour.empty()) throw ParseError(source, lineno, "no data rows");
    return r;
}

}  // namespace

Hour parse_datetime(std::string_view text) {
    // YYYY-MM-DD HH:MM:SS
    if (text.size() != 19 || text[4] != '-' || text[7] != '-' || (text[10] != ' ' && text[10] != 'T') ||
        text[13] != ':' || text[16] != ':')
        throw std::invalid_argument("bad timestamp '" + std::string(text) + "'");
    int y = 0;
    unsigned mo = 0, d = 0, hh = 0, mm = 0, ss = 0;
    if (!parse_int(text.substr(0, 4), y) || !parse_int(text.substr(5, 2), mo) ||
        !parse_int(text.substr(8, 2), d) || !parse_int(text.substr(11, 2), hh) ||
        !parse_int(text.substr(14, 2), mm) || !parse_int(text.substr(17, 2), ss))
        throw std::invalid_argument("bad timestamp '" + std::string(text) + "'");
    if (mo < 1 || mo > 12 || d < 1 || d > 31 || hh > 23 || mm != 0 || ss != 0)
        throw std::invalid_argument("timestamp '" + std::string(text) + "' is not on the hour");
    return days_from_civil(y, mo, d) * 24 + hh;
}

std::string format_datetime(Hour h) {
    const Hour day = h >= 0 ? h / 24 : (h - 23) / 24;
    int y;
    unsigned m, d;
    civil_from_days(day, y, m, d);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u %02d:00:00", y, m, d,
                  static_cast<int>(h - day * 24));
    return buf;
}

IngestResult ingest_csv(const std::vector<std::filesystem::path>& paths, std::optional<Span> span) {
    if (paths.empty()) throw std::invalid_argument("no input files");
    std::vector<Readings> readings;
    readings.reserve(paths.size());
    for (const auto& p : paths) readings.push_back(read_provider_file(p));
    std::sort(readings.begin(), readings.end(),
              [](const Readings& a, const Readings& b) { return a.provider < b.provider; });
    for (std::size_t i = 1; i < readings.size(); ++i)
        if (readings[i].provider == readings[i - 1].provider)
            throw std::invalid_argument("provider " + readings[i].provider + " given twice");

    Hour first = std::numeric_limits<Hour>::min(), last = std::numeric_limits<Hour>::max();
    for (const auto& r : readings) {
        first = std::max(first, r.by_hour.begin()->first);
        last = std::min(last, r.by_hour.rbegin()->first);
    }
    if (span) {
        first = span->first;
        last = span->last;
    }
    if (first > last) throw std::runtime_error("empty intersection span");

    IngestReport report;
    const auto length = static_cast<std::size_t>(last - first + 1);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<std::vector<double>> grid(readings.size(), std::vector<double>(length, nan));
    for (std::size_t i = 0; i < readings.size(); ++i) {
        std::size_t missing = length;
        for (auto it = readings[i].by_hour.lower_bound(first);
             it != readings[i].by_hour.end() && it->first <= last; ++it) {
            const auto [sum, count] = it->second;
            grid[i][static_cast<std::size_t>(it->first - first)] = sum / count;
            if (count > 1) report.duplicates_averaged += 1;
            --missing;
        }
        if (static_cast<double>(missing) > 0.05 * static_cast<double>(length))
            throw std::runtime_error("provider " + readings[i].provider + " is missing " +
                                     std::to_string(missing) + " of " + std::to_string(length) +
                                     " hours in span");
    }

    // Missing hours at either edge shrink the common span.
    std::size_t lo = 0, hi = length;  // [lo, hi)
    for (const auto& g : grid) {
        std::size_t a = 0;
        while (a < length && std::isnan(g[a])) ++a;
        std::size_t b = length;
        while (b > a && std::isnan(g[b - 1])) --b;
        lo = std::max(lo, a);
        hi = std::min(hi, b);
    }
    if (lo >= hi) throw std::runtime_error("empty intersection span");
    report.hours_trimmed = length - (hi - lo);

    PanelSeries panel;
    panel.start = first + static_cast<Hour>(lo);
    for (std::size_t i = 0; i < readings.size(); ++i) {
        panel.provider_ids.push_back(readings[i].provider);
        std::vector<double> v(grid[i].begin() + static_cast<std::ptrdiff_t>(lo),
                              grid[i].begin() + static_cast<std::ptrdiff_t>(hi));
        for (std::size_t t = 0; t < v.size();) {
            if (!std::isnan(v[t])) {
                ++t;
                continue;
            }
            std::size_t end = t;
            while (end < v.size() && std::isnan(v[end])) ++end;
            const std::size_t gap = end - t;
            if (gap > 6)
                throw std::runtime_error("provider " + readings[i].provider + " has a " +
                                         std::to_string(gap) + "-hour gap starting " +
                                         format_datetime(panel.start + static_cast<Hour>(t)));
            // Edges were trimmed, so both neighbours exist.
            const double a = v[t - 1], b = v[end];
            for (std::size_t k = t; k < end; ++k)
                v[k] = a + (b - a) * static_cast<double>(k - t + 1) / static_cast<double>(gap + 1);
            report.cells_interpolated += gap;
            t = end;
        }
        panel.values.push_back(std::move(v));
    }
    return {std::move(panel), report};
}

void CalendarSpec::validate() const {
    if (periods.empty()) throw std::invalid_argument("calendar needs at least one period");
    for (auto s : periods)
        if (s < 2) throw std::invalid_argument("seasonal periods must be at least 2");
}

Dims TensorSeries::dims() const {
    if (tensors.empty()) throw std::logic_error("empty tensor series");
    return tensors.front().dims();
}

TensorSeries TensorSeries::slice(std::size_t begin, std::size_t count) const {
    if (begin + count > tensors.size()) throw std::out_of_range("tensor series slice out of range");
    TensorSeries out{provider_ids, periods, {}, {}};
    out.tensors.assign(tensors.begin() + static_cast<std::ptrdiff_t>(begin),
                       tensors.begin() + static_cast<std::ptrdiff_t>(begin + count));
    if (period_starts.size() == tensors.size())
        out.period_starts.assign(period_starts.begin() + static_cast<std::ptrdiff_t>(begin),
                                 period_starts.begin() + static_cast<std::ptrdiff_t>(begin + count));
    return out;
}

TensorSeries fold(const PanelSeries& panel, const CalendarSpec& cal) {
    cal.validate();
    const auto cycle = static_cast<Hour>(cal.cycle());
    const Hour phase = floor_mod(panel.start - cal.anchor, cycle);
    const std::size_t skip = static_cast<std::size_t>((cycle - phase) % cycle);
    const std::size_t hours = panel.hours();
    if (hours < skip + static_cast<std::size_t>(cycle))
        throw std::runtime_error("panel span is shorter than one full seasonal cycle");
    const std::size_t count = (hours - skip) / static_cast<std::size_t>(cycle);

    const std::size_t n = panel.providers();
    Dims dims{n};
    dims.insert(dims.end(), cal.periods.begin(), cal.periods.end());

    // Position p inside a cycle has the last period varying fastest; the
    // tensor stores mode 0 fastest, so map p to a flat offset once.
    std::vector<std::size_t> cell_offset(static_cast<std::size_t>(cycle));
    std::vector<std::size_t> index(dims.size(), 0);
    for (std::size_t p = 0; p < cell_offset.size(); ++p) {
        std::size_t rest = p;
        for (std::size_t j = cal.periods.size(); j-- > 0;) {
            index[j + 1] = rest % cal.periods[j];
            rest /= cal.periods[j];
        }
        std::size_t flat = 0, stride = n;
        for (std::size_t j = 1; j < dims.size(); ++j) {
            flat += index[j] * stride;
            stride *= dims[j];
        }
        cell_offset[p] = flat;
    }

    TensorSeries ts{panel.provider_ids, cal.periods, {}, {}};
    ts.tensors.reserve(count);
    for (std::size_t t = 0; t < count; ++t) {
        Tensor x(dims);
        const std::size_t base = skip + t * static_cast<std::size_t>(cycle);
        for (std::size_t p = 0; p < cell_offset.size(); ++p)
            for (std::size_t i = 0; i < n; ++i) x[cell_offset[p] + i] = panel.values[i][base + p];
        ts.tensors.push_back(std::move(x));
        ts.period_starts.push_back(panel.start + static_cast<Hour>(base));
    }
    return ts;
}

PanelSeries unfold_panel(const TensorSeries& ts) {
    const Dims dims = ts.dims();
    const std::size_t n = dims[0];
    const std::size_t cycle = product(ts.periods);
    PanelSeries panel;
    panel.provider_ids = ts.provider_ids;
    panel.start = ts.period_starts.empty() ? 0 : ts.period_starts.front();
    panel.values.assign(n, std::vector<double>(cycle * ts.length()));
    std::vector<std::size_t> index(dims.size(), 0);
    for (std::size_t p = 0; p < cycle; ++p) {
        std::size_t rest = p;
        for (std::size_t j = ts.periods.size(); j-- > 0;) {
            index[j + 1] = rest % ts.periods[j];
            rest /= ts.periods[j];
        }
        for (std::size_t t = 0; t < ts.length(); ++t)
            for (std::size_t i = 0; i < n; ++i) {
                index[0] = i;
                panel.values[i][t * cycle + p] = ts.tensors[t](index);
            }
    }
    return panel;
}

Standardization Standardization::identity(const Dims& dims) {
    return {Tensor(dims, 0.0), Tensor(dims, 1.0), 0};
}

Standardization estimate_standardization(const TensorSeries& ts) {
    const std::size_t T = ts.length();
    if (T < 2) throw std::invalid_argument("standardization needs at least two periods");
    const Dims dims = ts.dims();
    Tensor mu(dims, 0.0), sigma(dims, 0.0);
    for (const auto& x : ts.tensors) mu += x;
    mu *= 1.0 / static_cast<double>(T);
    for (const auto& x : ts.tensors)
        for (std::size_t c = 0; c < x.size(); ++c) {
            const double d = x[c] - mu[c];
            sigma[c] += d * d;
        }
    std::size_t clamped = 0;
    for (std::size_t c = 0; c < sigma.size(); ++c) {
        sigma[c] = std::sqrt(sigma[c] / static_cast<double>(T));
        const double floor = std::max(1e-8 * std::abs(mu[c]), 1e-12);
        if (sigma[c] < floor) {
            sigma[c] = floor;
            ++clamped;
        }
    }
    return {std::move(mu), std::move(sigma), clamped};
}

TensorSeries standardize(const TensorSeries& ts, const Standardization& z) {
    TensorSeries out = ts;
    for (auto& x : out.tensors) {
        if (x.dims() != z.mu.dims()) throw std::invalid_argument("standardize: dims mismatch");
        for (std::size_t c = 0; c < x.size(); ++c) x[c] = (x[c] - z.mu[c]) / z.sigma[c];
    }
    return out;
}

Tensor destandardize(const Tensor& x, const Standardization& z) {
    if (x.dims() != z.mu.dims()) throw std::invalid_argument("destandardize: dims mismatch");
    Tensor y = x;
    for (std::size_t c = 0; c < y.size(); ++c) y[c] = z.mu[c] + z.sigma[c] * y[c];
    return y;
}

TensorSeries destandardize(const TensorSeries& ts, const Standardization& z) {
    TensorSeries out = ts;
    for (auto& x : out.tensors) x = destandardize(x, z);
    return out;
}

TensorSeries provider_series(const TensorSeries& ts, std::size_t provider) {
    const Dims dims = ts.dims();
    if (provider >= dims[0]) throw std::out_of_range("provider index out of range");
    Dims sub = dims;
    sub[0] = 1;
    TensorSeries out{{ts.provider_ids.at(provider)}, ts.periods, {}, ts.period_starts};
    out.tensors.reserve(ts.length());
    const std::size_t n = dims[0];
    for (const auto& x : ts.tensors) {
        Tensor y(sub);
        for (std::size_t c = 0; c < y.size(); ++c) y[c] = x[c * n + provider];
        out.tensors.push_back(std::move(y));
    }
    return out;
}

}  // namespace stf
