#pragma once

#include "stf/benchmarks.hpp"
#include "stf/panel.hpp"
#include "stf/tfm.hpp"

#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace stf {

struct ForecastRequest {
    const TensorSeries& train;
    std::size_t origin;   // index of train.tensors[0] in the full series
    std::size_t horizon;  // number of steps to return
};

// A named forecaster. `forecast` must be callable concurrently.
struct Forecaster {
    std::string name;
    std::function<std::vector<Tensor>(const ForecastRequest&)> forecast;
};

Forecaster tfm_forecaster(Ranks ranks, std::size_t period, Scaling scaling = Scaling::Estimate);
Forecaster mfm_forecaster(MfmOptions options = {});
Forecaster vfm_forecaster(VfmOptions options = {}, bool stacked = false);
Forecaster fpca_forecaster(FpcaOptions options = {});

enum class Normalizer { Variance, StandardDeviation };

// Fixed-length rolling windows advancing by one period. Window w (from 0)
// trains on [w, w + train_length) and is scored at w + train_length + n - 1
// for horizon n; a horizon has W = (T - train_length) - n windows.
struct RollingPlan {
    std::size_t train_length = 171;
    std::vector<std::size_t> horizons{1, 4, 13, 26};
    Normalizer normalizer = Normalizer::Variance;
    std::size_t threads = 1;  // 0 = hardware concurrency

    void validate(std::size_t series_length) const;
};

struct EvalCell {
    std::string model;
    std::size_t horizon = 0;
    std::string provider;
    double mse = 0.0;           // sum_w ||Y - Yhat||_F^2 / (W * S)
    double normalizer = 0.0;    // mean out-of-sample per-cell variance
    double relative_mse = 0.0;
    bool failed = false;
    std::string failure;
    std::vector<double> trace;  // per-window ||Y - Yhat||_F^2 / S

    friend bool operator==(const EvalCell&, const EvalCell&) = default;
};

struct EvalReport {
    std::vector<EvalCell> cells;  // model-major, then horizon, then provider
    std::map<std::string, std::string> metadata;

    const EvalCell* find(const std::string& model, std::size_t horizon, const std::string& provider) const;

    friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

// The normalizer for provider i and horizon n is the variance of the scored
// target cells around their per-cell mean over the W windows, averaged over
// cells. A forecaster that always returns that per-cell mean scores exactly 1.
EvalReport rolling_evaluate(const std::vector<Forecaster>& models, const TensorSeries& ts, const RollingPlan& plan);

// Sample autocorrelation at lags 0..max_lag.
std::vector<double> autocorrelation(std::span<const double> x, std::size_t max_lag);

// Lag of the highest autocorrelation inside the first positive lobe that
// follows the first sign change. Returns 0 if there is none.
std::size_t dominant_cycle_lag(std::span<const double> acf);

}  // namespace stf
