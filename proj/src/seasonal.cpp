#include "stf/seasonal.hpp"

#include "stf/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace stf {

SeasonalDecomp classical_decompose(std::span<const double> x, std::size_t period) {
    const std::size_t T = x.size();
    if (period < 2) throw std::invalid_argument("seasonal period must be at least 2");
    if (T < 2 * period)
        throw std::invalid_argument("classical decomposition needs at least two full periods (" +
                                    std::to_string(2 * period) + " points), got " + std::to_string(T));
    SeasonalDecomp d;
    d.period = period;
    d.trend.assign(T, 0.0);

    std::vector<double> prefix(T + 1, 0.0);
    for (std::size_t t = 0; t < T; ++t) prefix[t + 1] = prefix[t] + x[t];
    const double m = static_cast<double>(period);
    const std::size_t half = period / 2;
    if (period % 2 == 0) {
        for (std::size_t t = half; t + half < T; ++t) {
            const double inner = prefix[t + half] - prefix[t - half + 1];
            d.trend[t] = (inner + 0.5 * (x[t - half] + x[t + half])) / m;
        }
    } else {
        for (std::size_t t = half; t + half < T; ++t) d.trend[t] = (prefix[t + half + 1] - prefix[t - half]) / m;
    }
    d.trend_begin = half;
    d.trend_end = T - half;

    std::vector<double> sums(period, 0.0);
    std::vector<std::size_t> counts(period, 0);
    for (std::size_t t = d.trend_begin; t < d.trend_end; ++t) {
        sums[t % period] += x[t] - d.trend[t];
        counts[t % period] += 1;
    }
    d.seasonal.resize(period);
    for (std::size_t p = 0; p < period; ++p) d.seasonal[p] = sums[p] / static_cast<double>(counts[p]);
    const double mean = std::accumulate(d.seasonal.begin(), d.seasonal.end(), 0.0) / m;
    for (auto& s : d.seasonal) s -= mean;

    for (std::size_t t = 0; t < d.trend_begin; ++t) d.trend[t] = d.trend[d.trend_begin];
    for (std::size_t t = d.trend_end; t < T; ++t) d.trend[t] = d.trend[d.trend_end - 1];

    d.remainder.resize(T);
    for (std::size_t t = 0; t < T; ++t) d.remainder[t] = x[t] - d.trend[t] - d.index_at(t);
    return d;
}

AR1Fit fit_ar1(std::span<const double> x) {
    const std::size_t T = x.size();
    if (T < 3) throw std::invalid_argument("AR(1) fit needs at least 3 observations");
    const std::size_t n = T - 1;
    double mx = 0.0, my = 0.0;
    for (std::size_t t = 1; t < T; ++t) {
        mx += x[t - 1];
        my += x[t];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t t = 1; t < T; ++t) {
        sxx += (x[t - 1] - mx) * (x[t - 1] - mx);
        sxy += (x[t - 1] - mx) * (x[t] - my);
    }
    if (!(sxx > 0.0)) throw DegenerateError("AR(1) fit on a constant series");
    AR1Fit fit;
    fit.coefficient = sxy / sxx;
    fit.intercept = my - fit.coefficient * mx;
    double rss = 0.0;
    for (std::size_t t = 1; t < T; ++t) {
        const double e = x[t] - fit.intercept - fit.coefficient * x[t - 1];
        rss += e * e;
    }
    fit.innovation_variance = rss / static_cast<double>(n);
    return fit;
}

std::vector<double> forecast_ar1(const AR1Fit& fit, double last, std::size_t n) {
    std::vector<double> out;
    out.reserve(n);
    double prev = last;
    for (std::size_t h = 0; h < n; ++h) {
        prev = fit.intercept + fit.coefficient * prev;
        out.push_back(prev);
    }
    return out;
}

namespace {

// Least squares of x_t on (1, x_{t-1}, ..., x_{t-p}) for t in [begin, T).
ARFit fit_ar_from(std::span<const double> x, std::size_t order, std::size_t begin) {
    const std::size_t n = x.size() - begin;
    Matrix design(n, order + 1);
    Vector target(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t t = begin + i;
        design(i, 0) = 1.0;
        for (std::size_t l = 1; l <= order; ++l) design(i, l) = x[t - l];
        target(i) = x[t];
    }
    const Vector beta = design.colPivHouseholderQr().solve(target);
    ARFit fit;
    fit.intercept = beta(0);
    for (std::size_t l = 1; l <= order; ++l) fit.coefficients.push_back(beta(l));
    const double rss = (target - design * beta).squaredNorm();
    fit.innovation_variance = rss / static_cast<double>(n);
    const double nd = static_cast<double>(n);
    fit.aic = fit.innovation_variance > 0.0
                  ? nd * std::log(fit.innovation_variance) + 2.0 * static_cast<double>(order + 1)
                  : -std::numeric_limits<double>::infinity();
    return fit;
}

double regressor_spread(std::span<const double> x) {
    if (x.size() < 2) return 0.0;
    const auto lag = x.first(x.size() - 1);
    const double mean = std::accumulate(lag.begin(), lag.end(), 0.0) / static_cast<double>(lag.size());
    double ss = 0.0;
    for (double v : lag) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / static_cast<double>(lag.size()));
}

}  // namespace

ARFit fit_ar(std::span<const double> x, std::size_t order) {
    if (x.size() < order + 3)
        throw std::invalid_argument("AR(" + std::to_string(order) + ") fit needs at least " +
                                    std::to_string(order + 3) + " observations");
    return fit_ar_from(x, order, order);
}

ARFit select_ar_aic(std::span<const double> x, std::size_t max_order) {
    if (x.size() < max_order + 3) throw std::invalid_argument("series too short for AR order selection");
    std::size_t best = 0;
    double best_aic = std::numeric_limits<double>::infinity();
    for (std::size_t p = 0; p <= max_order; ++p) {
        const double aic = fit_ar_from(x, p, max_order).aic;
        if (aic < best_aic) {
            best_aic = aic;
            best = p;
        }
    }
    return fit_ar(x, best);
}

std::vector<double> forecast_ar(const ARFit& fit, std::span<const double> history, std::size_t n) {
    const std::size_t p = fit.coefficients.size();
    if (history.size() < p) throw std::invalid_argument("history shorter than AR order");
    std::vector<double> path(history.end() - static_cast<std::ptrdiff_t>(p), history.end());
    std::vector<double> out;
    out.reserve(n);
    for (std::size_t h = 0; h < n; ++h) {
        double v = fit.intercept;
        for (std::size_t l = 1; l <= p; ++l) v += fit.coefficients[l - 1] * path[path.size() - l];
        path.push_back(v);
        out.push_back(v);
    }
    return out;
}

std::vector<double> forecast_scores(std::span<const double> x, std::size_t n, const ScoreForecastOptions& options) {
    if (n < 1) throw std::invalid_argument("forecast horizon must be at least 1");
    const SeasonalDecomp d = classical_decompose(x, options.period);
    std::vector<double> adjusted(x.size());
    for (std::size_t t = 0; t < x.size(); ++t) adjusted[t] = x[t] - d.index_at(t);

    double scale = 1.0;
    for (double v : x) scale = std::max(scale, std::abs(v));
    std::vector<double> path;
    if (regressor_spread(adjusted) <= 1e-10 * scale) {
        const double level = std::accumulate(adjusted.begin(), adjusted.end(), 0.0) /
                             static_cast<double>(adjusted.size());
        path.assign(n, level);
    } else if (options.model == ScoreModel::AR1) {
        path = forecast_ar1(fit_ar1(adjusted), adjusted.back(), n);
    } else {
        path = forecast_ar(select_ar_aic(adjusted, options.max_order), adjusted, n);
    }
    for (std::size_t h = 0; h < n; ++h) path[h] += d.index_at(x.size() + h);
    return path;
}

FactorForecast forecast_factors(const FactorSeries& f, std::size_t period, std::size_t n) {
    if (f.length() == 0) throw std::invalid_argument("empty factor series");
    const Dims core = f.tensors.front().dims();
    FactorForecast ff;
    ff.tensors.assign(n, Tensor(core, 0.0));
    const ScoreForecastOptions opts{period, ScoreModel::AR1, 0};
    for (std::size_t c = 0; c < product(core); ++c) {
        const auto path = forecast_scores(f.coordinate(c), n, opts);
        for (std::size_t h = 0; h < n; ++h) ff.tensors[h][c] = path[h];
    }
    return ff;
}

TensorSeries forecast_observations(const FactorForecast& ff, const LoadingSet& l, const Standardization& z) {
    FactorSeries as_series{ff.tensors};
    return fitted_values(as_series, l, z);
}

TensorSeries forecast_tfm(const TfmFit& fit, std::size_t period, std::size_t n) {
    if (fit.degenerate) {
        TensorSeries out;
        out.tensors.assign(n, fit.z.mu);
        return out;
    }
    return forecast_observations(forecast_factors(fit.factors, period, n), fit.loadings, fit.z);
}

}  // namespace stf
