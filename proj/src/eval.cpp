#include "stf/eval.hpp"

#include "stf/seasonal.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <stdexcept>
#include <string>
#include <thread>

namespace stf {

namespace {

// Runs a per-provider matrix forecaster and stacks the results back into
// full (N, S1, S2) tensors.
template <typename PerProvider>
std::vector<Tensor> per_provider(const ForecastRequest& req, PerProvider fn) {
    const Dims dims = req.train.dims();
    if (dims.size() != 3) throw std::invalid_argument("benchmarks need dims (N, S1, S2)");
    std::vector<Tensor> out(req.horizon, Tensor(dims, 0.0));
    for (std::size_t i = 0; i < dims[0]; ++i) {
        const auto mats = fn(provider_matrices(req.train, i), req.horizon);
        for (std::size_t h = 0; h < req.horizon; ++h)
            for (std::size_t d = 0; d < dims[1]; ++d)
                for (std::size_t s = 0; s < dims[2]; ++s)
                    out[h]({i, d, s}) = mats[h](static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(s));
    }
    return out;
}

}  // namespace

Forecaster tfm_forecaster(Ranks ranks, std::size_t period, Scaling scaling) {
    return {"TFM", [ranks, period, scaling](const ForecastRequest& req) {
                return forecast_tfm(fit_tfm(req.train, ranks, scaling), period, req.horizon).tensors;
            }};
}

Forecaster mfm_forecaster(MfmOptions options) {
    return {"MFM", [options](const ForecastRequest& req) {
                return per_provider(req, [&](const ProviderMatrixSeries& ms, std::size_t n) {
                    return mfm_forecast(ms, n, options);
                });
            }};
}

Forecaster vfm_forecaster(VfmOptions options, bool stacked) {
    if (stacked)
        return {"VFM", [options](const ForecastRequest& req) {
                    return vfm_forecast_stacked(req.train, req.horizon, options);
                }};
    return {"VFM", [options](const ForecastRequest& req) {
                return per_provider(req, [&](const ProviderMatrixSeries& ms, std::size_t n) {
                    return vfm_forecast(ms, n, options);
                });
            }};
}

Forecaster fpca_forecaster(FpcaOptions options) {
    return {"FTS", [options](const ForecastRequest& req) {
                return per_provider(req, [&](const ProviderMatrixSeries& ms, std::size_t n) {
                    return fpca_forecast(ms, n, options);
                });
            }};
}

void RollingPlan::validate(std::size_t series_length) const {
    if (train_length < 1) throw std::invalid_argument("training length must be positive");
    if (horizons.empty()) throw std::invalid_argument("at least one horizon is required");
    for (auto h : horizons)
        if (h < 1) throw std::invalid_argument("horizons must be at least 1");
    const auto max_h = *std::max_element(horizons.begin(), horizons.end());
    if (train_length + max_h > series_length)
        throw std::invalid_argument("training length " + std::to_string(train_length) + " plus horizon " +
                                    std::to_string(max_h) + " exceeds series length " +
                                    std::to_string(series_length));
}

const EvalCell* EvalReport::find(const std::string& model, std::size_t horizon, const std::string& provider) const {
    for (const auto& c : cells)
        if (c.model == model && c.horizon == horizon && c.provider == provider) return &c;
    return nullptr;
}

EvalReport rolling_evaluate(const std::vector<Forecaster>& models, const TensorSeries& ts, const RollingPlan& plan) {
    plan.validate(ts.length());
    const Dims dims = ts.dims();
    const std::size_t n_prov = dims[0];
    const std::size_t cells_per_provider = product(std::span<const std::size_t>(dims).subspan(1));
    const std::size_t test_length = ts.length() - plan.train_length;
    const std::size_t min_h = *std::min_element(plan.horizons.begin(), plan.horizons.end());
    const std::size_t windows = test_length > min_h ? test_length - min_h : 0;

    auto provider_sq_error = [&](const Tensor& y, const Tensor& yhat, std::size_t i) {
        double s = 0.0;
        for (std::size_t c = 0; c < cells_per_provider; ++c) {
            const double d = y[c * n_prov + i] - yhat[c * n_prov + i];
            s += d * d;
        }
        return s;
    };

    // errors[m][w][h][i]; failures[m][w]
    struct WindowResult {
        std::vector<std::vector<double>> sq_error;  // [horizon idx][provider]
        std::string failure;
    };
    std::vector<std::vector<WindowResult>> results(models.size(), std::vector<WindowResult>(windows));

    const std::size_t jobs = models.size() * windows;
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t job = next++; job < jobs; job = next++) {
            const std::size_t m = job / windows, w = job % windows;
            WindowResult& res = results[m][w];
            res.sq_error.assign(plan.horizons.size(), std::vector<double>(n_prov, 0.0));
            std::size_t steps = 0;
            for (auto h : plan.horizons)
                if (w + h < test_length) steps = std::max(steps, h);
            try {
                const TensorSeries train = ts.slice(w, plan.train_length);
                const auto fc = models[m].forecast(ForecastRequest{train, w, steps});
                if (fc.size() < steps) throw std::runtime_error("forecaster returned too few steps");
                for (std::size_t k = 0; k < plan.horizons.size(); ++k) {
                    const std::size_t h = plan.horizons[k];
                    if (w + h >= test_length) continue;
                    const Tensor& yhat = fc[h - 1];
                    if (yhat.dims() != dims) throw std::runtime_error("forecast has wrong dims");
                    if (!yhat.all_finite()) throw std::runtime_error("forecast is not finite");
                    const Tensor& y = ts.tensors[w + plan.train_length + h - 1];
                    for (std::size_t i = 0; i < n_prov; ++i) res.sq_error[k][i] = provider_sq_error(y, yhat, i);
                }
            } catch (const std::exception& e) {
                res.failure = "window " + std::to_string(w) + ": " + e.what();
            }
        }
    };
    std::size_t threads = plan.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : plan.threads;
    threads = std::min(threads, std::max<std::size_t>(jobs, 1));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    }

    EvalReport report;
    report.metadata["train_length"] = std::to_string(plan.train_length);
    report.metadata["series_length"] = std::to_string(ts.length());
    report.metadata["normalizer"] = plan.normalizer == Normalizer::Variance ? "variance" : "sd";
    if (!ts.period_starts.empty()) {
        report.metadata["span_first"] = format_datetime(ts.period_starts.front());
        report.metadata["span_last"] = format_datetime(ts.period_starts.back());
    }

    for (std::size_t m = 0; m < models.size(); ++m) {
        for (std::size_t k = 0; k < plan.horizons.size(); ++k) {
            const std::size_t h = plan.horizons[k];
            const std::size_t W = test_length > h ? test_length - h : 0;
            std::string failure;
            for (std::size_t w = 0; w < W && failure.empty(); ++w) failure = results[m][w].failure;
            if (W == 0) failure = "no evaluation windows";
            for (std::size_t i = 0; i < n_prov; ++i) {
                EvalCell cell;
                cell.model = models[m].name;
                cell.horizon = h;
                cell.provider = i < ts.provider_ids.size() ? ts.provider_ids[i] : "P" + std::to_string(i + 1);
                if (!failure.empty()) {
                    cell.failed = true;
                    cell.failure = failure;
                    report.cells.push_back(std::move(cell));
                    continue;
                }
                // Out-of-sample variance of the scored cells.
                std::vector<double> mean(cells_per_provider, 0.0);
                for (std::size_t w = 0; w < W; ++w) {
                    const Tensor& y = ts.tensors[w + plan.train_length + h - 1];
                    for (std::size_t c = 0; c < cells_per_provider; ++c) mean[c] += y[c * n_prov + i];
                }
                for (auto& v : mean) v /= static_cast<double>(W);
                double var = 0.0;
                for (std::size_t w = 0; w < W; ++w) {
                    const Tensor& y = ts.tensors[w + plan.train_length + h - 1];
                    for (std::size_t c = 0; c < cells_per_provider; ++c) {
                        const double d = y[c * n_prov + i] - mean[c];
                        var += d * d;
                    }
                }
                const double denom = static_cast<double>(W) * static_cast<double>(cells_per_provider);
                cell.normalizer = var / denom;

                double total = 0.0;
                cell.trace.reserve(W);
                for (std::size_t w = 0; w < W; ++w) {
                    const double e = results[m][w].sq_error[k][i];
                    total += e;
                    cell.trace.push_back(e / static_cast<double>(cells_per_provider));
                }
                cell.mse = total / denom;
                const double norm =
                    plan.normalizer == Normalizer::Variance ? cell.normalizer : std::sqrt(cell.normalizer);
                if (norm > 0.0) {
                    cell.relative_mse = cell.mse / norm;
                } else {
                    cell.failed = true;
                    cell.failure = "out-of-sample variance is zero";
                }
                report.cells.push_back(std::move(cell));
            }
        }
    }
    return report;
}

std::vector<double> autocorrelation(std::span<const double> x, std::size_t max_lag) {
    const std::size_t T = x.size();
    if (T < 2) throw std::invalid_argument("autocorrelation needs at least two points");
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(T);
    double c0 = 0.0;
    for (double v : x) c0 += (v - mean) * (v - mean);
    if (!(c0 > 0.0)) throw std::invalid_argument("autocorrelation of a constant series");
    std::vector<double> acf;
    for (std::size_t l = 0; l <= std::min(max_lag, T - 1); ++l) {
        double c = 0.0;
        for (std::size_t t = l; t < T; ++t) c += (x[t] - mean) * (x[t - l] - mean);
        acf.push_back(c / c0);
    }
    return acf;
}

std::size_t dominant_cycle_lag(std::span<const double> acf) {
    std::size_t l = 1;
    while (l < acf.size() && acf[l] > 0.0) ++l;  // initial decay
    while (l < acf.size() && acf[l] <= 0.0) ++l; // negative lobe
    std::size_t best = 0;
    double best_value = 0.0;
    for (; l < acf.size() && acf[l] > 0.0; ++l)
        if (acf[l] > best_value) {
            best_value = acf[l];
            best = l;
        }
    return best;
}

}  // namespace stf
