#pragma once

#include "stf/panel.hpp"
#include "stf/seasonal.hpp"
#include "stf/tensor.hpp"

#include <string>
#include <vector>

namespace stf {

// One provider's weekly day x hour matrices.
struct ProviderMatrixSeries {
    std::string provider;
    std::vector<Matrix> matrices;  // S1 x S2 each

    std::size_t length() const noexcept { return matrices.size(); }
};

ProviderMatrixSeries provider_matrices(const TensorSeries& ts, std::size_t provider);

// dims (1, S1, S2) view of the matrices, day index fastest.
TensorSeries as_tensor_series(const ProviderMatrixSeries& ms);

struct MfmOptions {
    std::size_t day_factors = 1;
    std::size_t hour_factors = 2;
    std::size_t period = 52;
};

// Matrix factor model per provider: the projected estimator with a single
// trivial cross-section (N = R = 1), factors forecast by the shared
// deseasonalize + AR(1) path.
std::vector<Matrix> mfm_forecast(const ProviderMatrixSeries& ms, std::size_t n, const MfmOptions& options = {});

// Principal components of standardized weekly vectors.
struct VfmModel {
    Standardization z;   // per-cell, dims of one observation
    Matrix loadings;     // d x r, orthonormal columns
    Matrix scores;       // r x T

    Vector reconstruct(const Vector& score) const;
};

// Observations are vectorized in canonical order (first index fastest).
VfmModel fit_vfm(const std::vector<Tensor>& obs, std::size_t r);

// Same pipeline with the loading space fixed. Columns must be mutually
// orthogonal; each is normalized to unit length.
VfmModel fit_vfm_with_loadings(const std::vector<Tensor>& obs, const Matrix& loadings);

std::vector<Tensor> vfm_fitted(const VfmModel& m);
std::vector<Tensor> vfm_forecast_model(const VfmModel& m, std::size_t n, std::size_t period);

struct VfmOptions {
    std::size_t factors = 2;
    std::size_t period = 52;
};

std::vector<Matrix> vfm_forecast(const ProviderMatrixSeries& ms, std::size_t n, const VfmOptions& options = {});

// One PCA over all providers' 168-vectors stacked together.
std::vector<Tensor> vfm_forecast_stacked(const TensorSeries& ts, std::size_t n, const VfmOptions& options = {});

struct FpcaOptions {
    std::size_t components = 0;       // 0 picks the count by explained variance
    double explained_variance = 0.95;
    std::size_t max_components = 6;
    std::size_t max_ar_order = 5;
    std::size_t period = 52;
};

// Discrete-grid functional PCA per day of week. Each day's 24-hour curves
// are decomposed into principal components, the scores forecast with an
// AIC-ordered autoregression after deseasonalization, and the seven day
// forecasts merged back into week matrices (row d = day d).
std::vector<Matrix> fpca_forecast(const ProviderMatrixSeries& ms, std::size_t n, const FpcaOptions& options = {});

// In-sample reconstruction through the same components, for diagnostics.
std::vector<Matrix> fpca_fitted(const ProviderMatrixSeries& ms, const FpcaOptions& options = {});

}  // namespace stf
