#pragma once

#include "stf/panel.hpp"
#include "stf/tensor.hpp"

#include <cstddef>
#include <vector>

namespace stf {

// Cross-sectional factor count R and one factor count per seasonal mode.
struct Ranks {
    std::size_t r = 1;
    std::vector<std::size_t> k;

    std::size_t seasonal_product() const;
    // Requires 1 <= R <= N and 1 <= K_j <= S_j for dims (N, S1, ..., SM).
    void validate(const Dims& dims) const;

    friend bool operator==(const Ranks&, const Ranks&) = default;
};

// Lambda is N x R with lambda' lambda = N I; b[j] is S_j x K_j with
// b[j]' b[j] = S_j I.
struct LoadingSet {
    Matrix lambda;
    std::vector<Matrix> b;

    // {lambda, b[0], ..., b[M-1]}, one matrix per tensor mode.
    std::vector<Matrix> per_mode() const;
    Ranks ranks() const;
};

struct FactorSeries {
    std::vector<Tensor> tensors;  // dims (R, K1, ..., KM)

    std::size_t length() const noexcept { return tensors.size(); }
    // Scalar series of one factor coordinate (flat index into the core).
    std::vector<double> coordinate(std::size_t flat) const;
};

struct InitialLoadings {
    Matrix b_hat;                    // S x prod(K), scaled by sqrt(S)
    std::vector<Matrix> gamma_hat;   // (N S_-j) x (R K_-j), scaled by sqrt(N S_-j)
};

// First pass of the projected estimator: leading eigenvectors of the
// column covariance of every unfolding.
InitialLoadings initial_loadings(const TensorSeries& xs, const Ranks& ranks);

// Second-pass covariances, one per tensor mode: the mode-0 unfoldings
// projected on span(b_hat) and each seasonal unfolding projected on
// span(gamma_hat[j]).
std::vector<Matrix> projected_covariances(const TensorSeries& xs, const InitialLoadings& init);

LoadingSet projected_loadings(const TensorSeries& xs, const InitialLoadings& init, const Ranks& ranks);

inline LoadingSet estimate_loadings(const TensorSeries& xs, const Ranks& ranks) {
    return projected_loadings(xs, initial_loadings(xs, ranks), ranks);
}

// F_t = X_t x_0 lambda' x_1 b[0]' ... / (N S)
FactorSeries extract_factors(const TensorSeries& xs, const LoadingSet& l);

// F x_0 lambda x_1 b[0] ... x_M b[M-1]
Tensor common_component(const Tensor& f, const LoadingSet& l);

// mu + sigma (.) common_component(f); shared by fitted values and forecasts.
Tensor reconstruct(const Tensor& f, const LoadingSet& l, const Standardization& z);

TensorSeries fitted_values(const FactorSeries& f, const LoadingSet& l, const Standardization& z);

struct RankSelection {
    Ranks ranks;
    std::vector<Vector> eigenvalues;  // per mode, descending
};

// Eigenvalue-ratio criterion on the projected covariances computed with the
// largest candidate ranks. Ties go to the smaller rank.
RankSelection select_ranks_detailed(const TensorSeries& xs, std::size_t r_max,
                                    const std::vector<std::size_t>& k_max);

inline Ranks select_ranks(const TensorSeries& xs, std::size_t r_max,
                          const std::vector<std::size_t>& k_max) {
    return select_ranks_detailed(xs, r_max, k_max).ranks;
}

double in_sample_mse(const TensorSeries& y, const TensorSeries& y_fit);

enum class Scaling { Estimate, Identity };

struct TfmFit {
    Ranks ranks;
    Standardization z;
    LoadingSet loadings;
    FactorSeries factors;
    // Set when the standardized data is identically zero: factors are zero
    // and loadings are scaled coordinate axes, so every reconstruction is mu.
    bool degenerate = false;
};

TfmFit fit_tfm(const TensorSeries& y, const Ranks& ranks, Scaling scaling = Scaling::Estimate);

TensorSeries fitted_values(const TfmFit& fit);

}  // namespace stf
