#include "stf/eval.hpp"
#include "stf/report.hpp"
#include "stf/simulate.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <stdexcept>

using namespace stf;
using stf::testing::random_tensor;

namespace {

TensorSeries noisy_series(std::size_t N, Dims periods, std::size_t T, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    TensorSeries ts;
    Dims dims{N};
    dims.insert(dims.end(), periods.begin(), periods.end());
    for (std::size_t i = 0; i < N; ++i) ts.provider_ids.push_back("P" + std::to_string(i));
    ts.periods = periods;
    for (std::size_t t = 0; t < T; ++t) {
        ts.tensors.push_back(random_tensor(dims, rng));
        ts.period_starts.push_back(static_cast<Hour>(t * 168));
    }
    return ts;
}

// Returns the realized future: needs the full series and the window origin.
Forecaster oracle(const TensorSeries& full) {
    return {"ORACLE", [&full](const ForecastRequest& req) {
                std::vector<Tensor> out;
                const std::size_t start = req.origin + req.train.length();
                for (std::size_t h = 0; h < req.horizon; ++h) out.push_back(full.tensors[start + h]);
                return out;
            }};
}

Forecaster last_value() {
    return {"NAIVE", [](const ForecastRequest& req) {
                return std::vector<Tensor>(req.horizon, req.train.tensors.back());
            }};
}

}  // namespace

TEST(Rolling, OracleScoresZero) {
    auto ts = noisy_series(3, {2, 3}, 30, 1);
    RollingPlan plan{20, {1, 4}, Normalizer::Variance, 1};
    auto r = rolling_evaluate({oracle(ts)}, ts, plan);
    ASSERT_EQ(r.cells.size(), 6u);
    for (const auto& c : r.cells) {
        EXPECT_FALSE(c.failed);
        EXPECT_EQ(c.mse, 0.0);
        EXPECT_EQ(c.relative_mse, 0.0);
    }
}

TEST(Rolling, PerCellMeanScoresOne) {
    auto ts = noisy_series(2, {3, 2}, 25, 2);
    const std::size_t train = 15, h = 3, W = ts.length() - train - h;
    Tensor mean(ts.dims(), 0.0);
    for (std::size_t w = 0; w < W; ++w) mean = mean + ts.tensors[w + train + h - 1];
    mean = (1.0 / static_cast<double>(W)) * mean;
    Forecaster f{"MEAN", [mean](const ForecastRequest& req) { return std::vector<Tensor>(req.horizon, mean); }};
    auto r = rolling_evaluate({f}, ts, RollingPlan{train, {h}, Normalizer::Variance, 1});
    for (const auto& c : r.cells) EXPECT_NEAR(c.relative_mse, 1.0, 1e-12);
}

TEST(Rolling, WindowCountsPerHorizon) {
    auto ts = noisy_series(1, {2, 2}, 40, 3);
    auto r = rolling_evaluate({last_value()}, ts, RollingPlan{30, {1, 4, 9}, Normalizer::Variance, 1});
    EXPECT_EQ(r.find("NAIVE", 1, "P0")->trace.size(), 9u);
    EXPECT_EQ(r.find("NAIVE", 4, "P0")->trace.size(), 6u);
    EXPECT_EQ(r.find("NAIVE", 9, "P0")->trace.size(), 1u);
}

TEST(Rolling, HorizonBeyondSeriesIsRejected) {
    auto ts = noisy_series(1, {2, 2}, 20, 4);
    EXPECT_THROW(rolling_evaluate({last_value()}, ts, RollingPlan{15, {6}, Normalizer::Variance, 1}),
                 std::invalid_argument);
}

// Explicit loop over windows, providers and cells for a last-value forecaster.
TEST(Rolling, MatchesHandComputedLoop) {
    auto ts = noisy_series(2, {3, 4}, 18, 5);
    const std::size_t train = 10;
    const std::vector<std::size_t> horizons{1, 3};
    auto r = rolling_evaluate({last_value()}, ts, RollingPlan{train, horizons, Normalizer::Variance, 1});
    for (auto h : horizons) {
        const std::size_t W = ts.length() - train - h;
        for (std::size_t i = 0; i < 2; ++i) {
            double sse = 0.0, var = 0.0;
            for (std::size_t d = 0; d < 3; ++d)
                for (std::size_t s = 0; s < 4; ++s) {
                    double mean = 0.0;
                    for (std::size_t w = 0; w < W; ++w) mean += ts.tensors[w + train + h - 1]({i, d, s});
                    mean /= double(W);
                    for (std::size_t w = 0; w < W; ++w) {
                        const double y = ts.tensors[w + train + h - 1]({i, d, s});
                        const double yhat = ts.tensors[w + train - 1]({i, d, s});
                        sse += (y - yhat) * (y - yhat);
                        var += (y - mean) * (y - mean);
                    }
                }
            const double mse = sse / (double(W) * 12.0), norm = var / (double(W) * 12.0);
            const EvalCell* c = r.find("NAIVE", h, "P" + std::to_string(i));
            ASSERT_NE(c, nullptr);
            EXPECT_NEAR(c->mse, mse, 1e-12 * mse);
            EXPECT_NEAR(c->normalizer, norm, 1e-12 * norm);
            EXPECT_NEAR(c->relative_mse, mse / norm, 1e-12);
        }
    }
}

TEST(Rolling, StandardDeviationNormalizer) {
    auto ts = noisy_series(1, {2, 2}, 30, 6);
    auto var = rolling_evaluate({last_value()}, ts, RollingPlan{20, {2}, Normalizer::Variance, 1});
    auto sd = rolling_evaluate({last_value()}, ts, RollingPlan{20, {2}, Normalizer::StandardDeviation, 1});
    EXPECT_NEAR(sd.cells[0].relative_mse, var.cells[0].mse / std::sqrt(var.cells[0].normalizer), 1e-12);
}

TEST(Rolling, ThreadCountDoesNotChangeResults) {
    auto ts = noisy_series(3, {7, 24}, 50, 7);
    const std::vector<Forecaster> models{tfm_forecaster(Ranks{1, {1, 2}}, 8), mfm_forecaster({1, 2, 8}),
                                         vfm_forecaster({2, 8})};
    auto one = rolling_evaluate(models, ts, RollingPlan{40, {1, 4}, Normalizer::Variance, 1});
    auto many = rolling_evaluate(models, ts, RollingPlan{40, {1, 4}, Normalizer::Variance, 4});
    EXPECT_EQ(one, many);
}

TEST(Rolling, FailingModelIsMarkedOthersContinue) {
    auto ts = noisy_series(2, {2, 2}, 20, 8);
    Forecaster bad{"BAD", [](const ForecastRequest& req) -> std::vector<Tensor> {
                       if (req.origin == 2) throw std::runtime_error("boom");
                       return std::vector<Tensor>(req.horizon, req.train.tensors.back());
                   }};
    Forecaster nan{"NAN", [](const ForecastRequest& req) {
                       Tensor t = req.train.tensors.back();
                       t[0] = std::nan("");
                       return std::vector<Tensor>(req.horizon, t);
                   }};
    auto r = rolling_evaluate({bad, last_value(), nan}, ts, RollingPlan{12, {1, 2}, Normalizer::Variance, 2});
    for (const auto& c : r.cells) {
        if (c.model == "NAIVE") {
            EXPECT_FALSE(c.failed);
        } else {
            EXPECT_TRUE(c.failed);
            if (c.model == "BAD") EXPECT_NE(c.failure.find("window 2"), std::string::npos);
        }
    }
}

TEST(Rolling, ConstantTargetsFailOnZeroNormalizer) {
    TensorSeries ts;
    ts.provider_ids = {"A"};
    ts.periods = {2};
    for (int t = 0; t < 10; ++t) ts.tensors.emplace_back(Dims{1, 2}, 5.0);
    auto r = rolling_evaluate({last_value()}, ts, RollingPlan{5, {1}, Normalizer::Variance, 1});
    EXPECT_TRUE(r.cells[0].failed);
}

TEST(Simulate, CompactMatchesRecursive) {
    SimSpec spec;
    spec.providers = 4;
    spec.periods = {3, 5};
    spec.ranks = Ranks{2, {2, 3}};
    spec.length = 30;
    spec.idiosyncratic_sd = 0.3;
    spec.layer_sd = {0.5, 0.7};
    spec.mean_level = 10.0;
    spec.mean_spread = 2.0;
    spec.scale_spread = 0.5;
    spec.seed = 99;
    auto a = simulate(spec);
    auto b = simulate_compact(spec);
    ASSERT_EQ(a.y.length(), b.y.length());
    for (std::size_t t = 0; t < a.y.length(); ++t)
        EXPECT_LT(stf::testing::relative_error(b.y.tensors[t], a.y.tensors[t]), 1e-12);
}

TEST(Simulate, NoiselessIsTuckerOfTruth) {
    SimSpec spec;
    spec.providers = 5;
    spec.periods = {3, 4};
    spec.ranks = Ranks{1, {1, 2}};
    spec.length = 12;
    spec.mean_level = 3.0;
    spec.scale_level = 2.0;
    auto sim = simulate(spec);
    for (std::size_t t = 0; t < spec.length; ++t) {
        const auto mats = sim.loadings.per_mode();
        Tensor common = multi_mode_product(sim.factors.tensors[t], mats);
        Tensor expected = sim.truth.mu + hadamard(sim.truth.sigma, common);
        EXPECT_LT(stf::testing::relative_error(sim.y.tensors[t], expected), 1e-13);
    }
}

TEST(Simulate, RandomLoadingsFollowScaleConventions) {
    auto l = random_loadings(Dims{6, 7, 24}, Ranks{2, {3, 4}}, 5);
    EXPECT_LT((l.lambda.transpose() * l.lambda - 6.0 * Matrix::Identity(2, 2)).norm(), 1e-10);
    EXPECT_LT((l.b[0].transpose() * l.b[0] - 7.0 * Matrix::Identity(3, 3)).norm(), 1e-10);
    EXPECT_LT((l.b[1].transpose() * l.b[1] - 24.0 * Matrix::Identity(4, 4)).norm(), 1e-10);
}

TEST(Simulate, SameSeedSameSeries) {
    SimSpec spec;
    spec.idiosyncratic_sd = 1.0;
    spec.seed = 17;
    EXPECT_EQ(simulate(spec).y, simulate(spec).y);
    spec.seed = 18;
    auto other = simulate(spec).y;
    spec.seed = 17;
    EXPECT_NE(simulate(spec).y, other);
}

TEST(Simulate, InvalidSpecIsRejected) {
    SimSpec spec;
    spec.layer_sd = {1.0};
    EXPECT_THROW(simulate(spec), std::invalid_argument);
    spec.layer_sd.clear();
    spec.ranks = Ranks{10, {1, 1}};
    EXPECT_THROW(simulate(spec), std::invalid_argument);
}

TEST(Report, CsvRoundTripIsExact) {
    auto ts = noisy_series(2, {2, 3}, 30, 9);
    auto r = rolling_evaluate({last_value(), oracle(ts)}, ts, RollingPlan{20, {1, 4}, Normalizer::Variance, 1});
    r.cells[1].failed = true;
    r.cells[1].failure = "x";
    auto back = parse_report_csv(report_csv(r));
    ASSERT_EQ(back.cells.size(), r.cells.size());
    for (std::size_t k = 0; k < r.cells.size(); ++k) {
        const auto &a = r.cells[k], &b = back.cells[k];
        EXPECT_EQ(a.model, b.model);
        EXPECT_EQ(a.horizon, b.horizon);
        EXPECT_EQ(a.provider, b.provider);
        EXPECT_EQ(a.failed, b.failed);
        if (a.failed) continue;
        EXPECT_LE(std::abs(a.mse - b.mse), 1e-15 * std::abs(a.mse));
        EXPECT_LE(std::abs(a.normalizer - b.normalizer), 1e-15 * a.normalizer);
        EXPECT_LE(std::abs(a.relative_mse - b.relative_mse), 1e-15 * std::abs(a.relative_mse));
    }
}

TEST(Report, JsonRoundTripIsExact) {
    auto ts = noisy_series(2, {2, 3}, 26, 10);
    auto r = rolling_evaluate({last_value()}, ts, RollingPlan{20, {1, 2}, Normalizer::Variance, 1});
    r.metadata["config_hash"] = "abc";
    EXPECT_EQ(parse_report_json(report_json(r)), r);
}

TEST(Report, EmptyReportIsHeaderOnly) {
    EvalReport r;
    EXPECT_EQ(report_csv(r), "model,horizon,provider,mse,normalizer,relative_mse,status\n");
    EXPECT_TRUE(parse_report_csv(report_csv(r)).cells.empty());
}

TEST(Report, MalformedCsvNamesTheLine) {
    const std::string text = "model,horizon,provider,mse,normalizer,relative_mse,status\nTFM,1,A,1,2,0.5,ok\nTFM,x,A,1,2,3,ok\n";
    try {
        parse_report_csv(text);
        FAIL();
    } catch (const std::exception& e) {
        EXPECT_NE(std::string(e.what()).find('3'), std::string::npos);
    }
}

TEST(Report, MarkdownBoldsTheBestModel) {
    EvalReport r;
    r.cells.push_back({"TFM", 1, "A", 1.0, 2.0, 0.5, false, "", {}});
    r.cells.push_back({"VFM", 1, "A", 1.0, 1.0, 1.0, false, "", {}});
    const auto md = report_markdown(r);
    EXPECT_NE(md.find("**0.5000**"), std::string::npos);
    EXPECT_EQ(md.find("**1.0000**"), std::string::npos);
    EXPECT_NE(md.find("| Week |"), std::string::npos);

    EvalReport single;
    single.cells.push_back({"TFM", 4, "A", 1.0, 2.0, 0.25, false, "", {}});
    EXPECT_NE(report_markdown(single).find("| Month | **0.2500** |"), std::string::npos);
}

TEST(Autocorrelation, MatchesDirectFormula) {
    std::vector<double> x{1, 3, 2, 5, 4, 6, 5, 8};
    auto acf = autocorrelation(x, 3);
    double mean = 0;
    for (double v : x) mean += v;
    mean /= 8;
    double c0 = 0, c2 = 0;
    for (std::size_t t = 0; t < 8; ++t) c0 += (x[t] - mean) * (x[t] - mean);
    for (std::size_t t = 2; t < 8; ++t) c2 += (x[t] - mean) * (x[t - 2] - mean);
    EXPECT_DOUBLE_EQ(acf[0], 1.0);
    EXPECT_NEAR(acf[2], c2 / c0, 1e-15);
    EXPECT_THROW(autocorrelation(std::vector<double>{2, 2, 2}, 1), std::invalid_argument);
}

TEST(Autocorrelation, DominantCycleOfSinusoid) {
    std::vector<double> x;
    for (int t = 0; t < 520; ++t) x.push_back(std::sin(2.0 * std::numbers::pi * t / 52.0) + 0.01 * (t % 3));
    EXPECT_EQ(dominant_cycle_lag(autocorrelation(x, 80)), 52u);
    std::vector<double> decay{1.0, 0.5, 0.25, 0.1};
    EXPECT_EQ(dominant_cycle_lag(decay), 0u);
}
