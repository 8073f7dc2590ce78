#include "stf/archive.hpp"
#include "stf/errors.hpp"
#include "stf/panel.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <sstream>

using namespace stf;
using stf::testing::random_tensor;
using stf::testing::TempDir;

namespace {

// Hourly rows for [first, first + hours), value f(h).
template <class F>
std::string provider_csv(const std::string& name, Hour first, std::size_t hours, F f) {
    std::string out = "Datetime," + name + "_MW\n";
    for (std::size_t k = 0; k < hours; ++k) {
        const Hour h = first + static_cast<Hour>(k);
        out += format_datetime(h) + "," + format_double(f(h)) + "\n";
    }
    return out;
}

TensorSeries random_series(std::size_t T, const Dims& dims, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    TensorSeries ts;
    for (std::size_t i = 0; i < dims[0]; ++i) ts.provider_ids.push_back("P" + std::to_string(i));
    ts.periods.assign(dims.begin() + 1, dims.end());
    for (std::size_t t = 0; t < T; ++t) {
        ts.tensors.push_back(random_tensor(dims, rng));
        ts.period_starts.push_back(static_cast<Hour>(t * product(ts.periods)));
    }
    return ts;
}

}  // namespace

TEST(Datetime, ParseAndFormat) {
    EXPECT_EQ(parse_datetime("1970-01-01 00:00:00"), 0);
    EXPECT_EQ(parse_datetime("1970-01-05 00:00:00"), kMondayAnchor);
    EXPECT_EQ(parse_datetime("2012-01-02T05:00:00"), 15341 * 24 + 5);
    EXPECT_EQ(format_datetime(parse_datetime("2016-02-29 23:00:00")), "2016-02-29 23:00:00");
    EXPECT_THROW(parse_datetime("2016-02-29 23:30:00"), std::invalid_argument);
    EXPECT_THROW(parse_datetime("2016/02/29 23:00:00"), std::invalid_argument);
}

TEST(Ingest, CleanFilePassesThrough) {
    TempDir dir;
    const Hour first = parse_datetime("2013-03-04 00:00:00");
    auto p = dir.write("a.csv", provider_csv("AEP", first, 48, [](Hour h) { return 1000.0 + static_cast<double>(h % 97); }));
    auto res = ingest_csv({p});
    ASSERT_EQ(res.panel.provider_ids, std::vector<std::string>{"AEP"});
    EXPECT_EQ(res.panel.start, first);
    ASSERT_EQ(res.panel.values[0].size(), 48u);
    for (std::size_t k = 0; k < 48; ++k)
        EXPECT_EQ(res.panel.values[0][k], 1000.0 + static_cast<double>((first + static_cast<Hour>(k)) % 97));
    EXPECT_EQ(res.report.duplicates_averaged, 0u);
    EXPECT_EQ(res.report.cells_interpolated, 0u);
}

TEST(Ingest, DuplicateHourIsAveraged) {
    TempDir dir;
    auto p = dir.write("dst.csv",
                       "Datetime,DUQ_MW\n"
                       "2014-11-02 01:00:00,1500.0\n"
                       "2014-11-02 01:00:00,1431.0\n"
                       "2014-11-02 02:00:00,1400.0\n");
    auto res = ingest_csv({p});
    ASSERT_EQ(res.panel.values[0].size(), 2u);
    EXPECT_DOUBLE_EQ(res.panel.values[0][0], (1500.0 + 1431.0) / 2.0);
    EXPECT_DOUBLE_EQ(res.panel.values[0][1], 1400.0);
    EXPECT_EQ(res.report.duplicates_averaged, 1u);
}

TEST(Ingest, ShortGapIsInterpolatedLinearly) {
    TempDir dir;
    std::string csv = "Datetime,X_MW\n";
    const Hour first = parse_datetime("2015-01-05 00:00:00");
    for (Hour k = 0; k < 200; ++k)
        if (k < 10 || k > 12) csv += format_datetime(first + k) + "," + format_double(static_cast<double>(k * k)) + "\n";
    auto res = ingest_csv({dir.write("x.csv", csv)});
    const auto& v = res.panel.values[0];
    ASSERT_EQ(v.size(), 200u);
    const double a = 81.0, b = 169.0;
    for (int k = 10; k <= 12; ++k) EXPECT_DOUBLE_EQ(v[static_cast<std::size_t>(k)], a + (b - a) * (k - 9) / 4.0);
    EXPECT_EQ(res.report.cells_interpolated, 3u);
}

TEST(Ingest, LongGapIsAnError) {
    TempDir dir;
    std::string csv = "Datetime,X_MW\n";
    const Hour first = parse_datetime("2015-01-05 00:00:00");
    for (Hour k = 0; k < 400; ++k)
        if (k < 100 || k > 106) csv += format_datetime(first + k) + ",1\n";
    EXPECT_THROW(ingest_csv({dir.write("x.csv", csv)}), std::runtime_error);
}

TEST(Ingest, TooManyMissingHoursIsAnError) {
    TempDir dir;
    std::string csv = "Datetime,X_MW\n";
    const Hour first = parse_datetime("2015-01-05 00:00:00");
    for (Hour k = 0; k < 100; ++k)
        if (k % 10 != 5) csv += format_datetime(first + k) + ",1\n";
    EXPECT_THROW(ingest_csv({dir.write("x.csv", csv)}), std::runtime_error);
}

TEST(Ingest, MalformedRowReportsLine) {
    TempDir dir;
    auto p = dir.write("bad.csv", "Datetime,X_MW\n2015-01-05 00:00:00,1\n2015-01-05 01:00:00,abc\n");
    try {
        ingest_csv({p});
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 3u);
    }
    EXPECT_THROW(ingest_csv({dir.write("hdr.csv", "time,value\n")}), ParseError);
}

TEST(Ingest, ProvidersSortedAndSpanIntersected) {
    TempDir dir;
    const Hour first = parse_datetime("2016-05-02 00:00:00");
    auto b = dir.write("b.csv", provider_csv("ZED", first + 5, 100, [](Hour) { return 2.0; }));
    auto a = dir.write("a.csv", provider_csv("ABC", first, 90, [](Hour) { return 1.0; }));
    auto res = ingest_csv({b, a});
    EXPECT_EQ(res.panel.provider_ids, (std::vector<std::string>{"ABC", "ZED"}));
    EXPECT_EQ(res.panel.start, first + 5);
    EXPECT_EQ(res.panel.values[0].size(), 85u);
    EXPECT_EQ(res.panel.values[1][0], 2.0);
}

TEST(Fold, SingleAlignedWeek) {
    PanelSeries p;
    p.provider_ids = {"A", "B"};
    p.start = parse_datetime("2018-01-01 00:00:00");  // a Monday
    p.values.assign(2, std::vector<double>(168));
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t h = 0; h < 168; ++h) p.values[i][h] = static_cast<double>(1000 * i + h);
    auto ts = fold(p, CalendarSpec{});
    ASSERT_EQ(ts.length(), 1u);
    EXPECT_EQ(ts.dims(), (Dims{2, 7, 24}));
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t d = 0; d < 7; ++d)
            for (std::size_t h = 0; h < 24; ++h) EXPECT_EQ(ts.tensors[0]({i, d, h}), double(1000 * i + 24 * d + h));
    EXPECT_EQ(ts.period_starts[0], p.start);
}

TEST(Fold, DropsPartialWeeksAtBothEnds) {
    PanelSeries p;
    p.provider_ids = {"A"};
    p.start = parse_datetime("2018-01-03 05:00:00");  // Wednesday
    p.values.assign(1, std::vector<double>(24 * 20, 1.0));
    auto ts = fold(p, CalendarSpec{});
    EXPECT_EQ(ts.length(), 2u);
    EXPECT_EQ(format_datetime(ts.period_starts[0]), "2018-01-08 00:00:00");
}

TEST(Fold, RoundTripsThroughUnfold) {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> normal;
    PanelSeries p;
    p.provider_ids = {"A", "B"};
    p.start = parse_datetime("2017-06-05 00:00:00");
    p.values.assign(2, std::vector<double>(3 * 168));
    for (auto& v : p.values)
        for (auto& x : v) x = normal(rng);
    auto ts = fold(p, CalendarSpec{});
    ASSERT_EQ(ts.length(), 3u);
    auto back = unfold_panel(ts);
    EXPECT_EQ(back.provider_ids, p.provider_ids);
    EXPECT_EQ(back.start, p.start);
    EXPECT_EQ(back.values, p.values);
}

TEST(Standardization, ConstantCellIsClamped) {
    TensorSeries ts = random_series(6, {2, 2, 2}, 1);
    for (auto& x : ts.tensors) x[3] = 42.0;
    auto z = estimate_standardization(ts);
    EXPECT_EQ(z.mu[3], 42.0);
    EXPECT_NEAR(z.sigma[3], 42e-8, 1e-20);
    EXPECT_EQ(z.clamped_cells, 1u);
}

TEST(Standardization, AlternatingSignCell) {
    TensorSeries ts = random_series(8, {1, 2, 2}, 2);
    for (std::size_t t = 0; t < 8; ++t) ts.tensors[t][0] = t % 2 ? -1.0 : 1.0;
    auto z = estimate_standardization(ts);
    EXPECT_EQ(z.mu[0], 0.0);
    EXPECT_DOUBLE_EQ(z.sigma[0], 1.0);
}

TEST(Standardization, MatchesTwoPassOracle) {
    TensorSeries ts = random_series(5, {2, 2, 2}, 3);
    for (auto& x : ts.tensors)
        for (std::size_t c = 0; c < x.size(); ++c) x[c] = 100.0 + 7.0 * x[c];
    auto z = estimate_standardization(ts);
    for (std::size_t c = 0; c < 8; ++c) {
        double m = 0.0;
        for (const auto& x : ts.tensors) m += x[c];
        m /= 5.0;
        double v = 0.0;
        for (const auto& x : ts.tensors) v += (x[c] - m) * (x[c] - m);
        v /= 5.0;
        EXPECT_NEAR(z.mu[c], m, 1e-12);
        EXPECT_NEAR(z.sigma[c], std::sqrt(v), 1e-12);
    }
}

TEST(Standardization, StandardizedMomentsAndInverse) {
    TensorSeries ts = random_series(30, {3, 2, 4}, 5);
    auto z = estimate_standardization(ts);
    auto s = standardize(ts, z);
    for (std::size_t c = 0; c < s.tensors[0].size(); ++c) {
        double m = 0.0, v = 0.0;
        for (const auto& x : s.tensors) m += x[c];
        m /= 30.0;
        for (const auto& x : s.tensors) v += (x[c] - m) * (x[c] - m);
        EXPECT_NEAR(m, 0.0, 1e-10);
        EXPECT_NEAR(v / 30.0, 1.0, 1e-10);
    }
    auto back = destandardize(s, z);
    for (std::size_t t = 0; t < 30; ++t)
        for (std::size_t c = 0; c < back.tensors[t].size(); ++c) EXPECT_NEAR(back.tensors[t][c], ts.tensors[t][c], 1e-12);
}

TEST(Standardization, IdentityAndScaleOnly) {
    TensorSeries ts = random_series(3, {2, 3}, 6);
    auto id = Standardization::identity(ts.dims());
    EXPECT_EQ(standardize(ts, id), ts);
    EXPECT_EQ(destandardize(Tensor(ts.dims(), 0.0), id), id.mu);

    Standardization z = id;
    for (std::size_t c = 0; c < z.sigma.size(); ++c) z.sigma[c] = 1.0 + static_cast<double>(c);
    Tensor y = destandardize(ts.tensors[0], z);
    for (std::size_t c = 0; c < y.size(); ++c) EXPECT_EQ(y[c], z.sigma[c] * ts.tensors[0][c]);

    std::mt19937_64 rng(1);
    z.mu = random_tensor(ts.dims(), rng);
    EXPECT_EQ(destandardize(Tensor(ts.dims(), 0.0), z), z.mu);
}

TEST(ProviderSeries, SlicesOneProvider) {
    TensorSeries ts = random_series(4, {3, 2, 2}, 7);
    auto p = provider_series(ts, 1);
    EXPECT_EQ(p.dims(), (Dims{1, 2, 2}));
    EXPECT_EQ(p.provider_ids, std::vector<std::string>{"P1"});
    for (std::size_t t = 0; t < 4; ++t) EXPECT_EQ(p.tensors[t]({0, 1, 0}), ts.tensors[t]({1, 1, 0}));
}

TEST(Archive, RoundTripIsExact) {
    TensorSeries ts = random_series(4, {2, 3, 2}, 8);
    for (auto& x : ts.tensors) x[0] = 1.0 / 3.0;
    std::stringstream ss;
    write_tensor_archive(ss, ts);
    auto back = read_tensor_archive(ss, "mem");
    EXPECT_EQ(back, ts);
}

TEST(Archive, RejectsTruncatedInput) {
    TensorSeries ts = random_series(2, {2, 2}, 9);
    std::stringstream ss;
    write_tensor_archive(ss, ts);
    std::string text = ss.str();
    text.resize(text.size() / 2);
    std::stringstream cut(text);
    EXPECT_THROW(read_tensor_archive(cut, "mem"), ParseError);
}
