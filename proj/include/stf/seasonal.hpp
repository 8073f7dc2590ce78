#pragma once

#include "stf/panel.hpp"
#include "stf/tfm.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace stf {

// Classical additive decomposition x = trend + seasonal + remainder.
// `seasonal` has one zero-sum index per position t mod period; the trend is
// a centered moving average (2 x m for even m) with its undefined edges
// filled by the nearest defined value.
struct SeasonalDecomp {
    std::size_t period = 0;
    std::vector<double> seasonal;
    std::vector<double> trend;
    std::vector<double> remainder;
    std::size_t trend_begin = 0;  // [trend_begin, trend_end) is moving-average defined
    std::size_t trend_end = 0;

    double index_at(std::size_t t) const { return seasonal[t % period]; }
};

SeasonalDecomp classical_decompose(std::span<const double> x, std::size_t period);

struct AR1Fit {
    double intercept = 0.0;
    double coefficient = 0.0;
    double innovation_variance = 0.0;
};

// Conditional least squares of x_t on (1, x_{t-1}).
AR1Fit fit_ar1(std::span<const double> x);

std::vector<double> forecast_ar1(const AR1Fit& fit, double last, std::size_t n);

struct ARFit {
    double intercept = 0.0;
    std::vector<double> coefficients;  // phi_1 .. phi_p
    double innovation_variance = 0.0;
    double aic = 0.0;
};

ARFit fit_ar(std::span<const double> x, std::size_t order);

// Order in [0, max_order] minimising AIC on the common sample x[max_order:].
ARFit select_ar_aic(std::span<const double> x, std::size_t max_order);

std::vector<double> forecast_ar(const ARFit& fit, std::span<const double> history, std::size_t n);

enum class ScoreModel { AR1, AutoAR };

struct ScoreForecastOptions {
    std::size_t period = 52;
    ScoreModel model = ScoreModel::AR1;
    std::size_t max_order = 5;  // AutoAR only
};

// Remove the classical seasonal component, extrapolate the adjusted series
// with the configured autoregression and add the future seasonal indices
// back. A numerically constant adjusted series is extrapolated flat.
// Every factor-score forecast in the library goes through this function.
std::vector<double> forecast_scores(std::span<const double> x, std::size_t n,
                                    const ScoreForecastOptions& options);

struct FactorForecast {
    std::vector<Tensor> tensors;  // step h = 1..n at index h-1

    std::size_t horizon() const noexcept { return tensors.size(); }
};

FactorForecast forecast_factors(const FactorSeries& f, std::size_t period, std::size_t n);

TensorSeries forecast_observations(const FactorForecast& ff, const LoadingSet& l, const Standardization& z);

// fit -> factor forecast -> observation forecast.
TensorSeries forecast_tfm(const TfmFit& fit, std::size_t period, std::size_t n);

}  // namespace stf
