#include "stf/errors.hpp"
#include "stf/tfm.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace stf;
using stf::testing::random_matrix;
using stf::testing::random_tensor;
using stf::testing::relative_error;

namespace {

Matrix orthonormal(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
    Eigen::HouseholderQR<Matrix> qr(random_matrix(rows, cols, rng));
    return qr.householderQ() * Matrix::Identity(rows, cols);
}

struct Truth {
    TensorSeries xs;
    std::vector<Matrix> loadings;  // lambda, B1, ..., BM
    std::vector<Tensor> factors;
};

// X_t = F_t x0 L x1 B1 ... with orthonormal loadings and well separated factor scales.
Truth noiseless(const Dims& dims, const Ranks& ranks, std::size_t T, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    Truth tr;
    tr.loadings.push_back(orthonormal(dims[0], ranks.r, rng));
    for (std::size_t j = 0; j < ranks.k.size(); ++j) tr.loadings.push_back(orthonormal(dims[j + 1], ranks.k[j], rng));
    Dims core{ranks.r};
    core.insert(core.end(), ranks.k.begin(), ranks.k.end());
    for (std::size_t i = 0; i < dims[0]; ++i) tr.xs.provider_ids.push_back("P" + std::to_string(i));
    tr.xs.periods.assign(dims.begin() + 1, dims.end());
    for (std::size_t t = 0; t < T; ++t) {
        Tensor f = random_tensor(core, rng);
        for (std::size_t c = 0; c < f.size(); ++c) f[c] *= 10.0 / static_cast<double>(c + 1);
        tr.xs.tensors.push_back(multi_mode_product(f, tr.loadings));
        tr.xs.period_starts.push_back(static_cast<Hour>(t));
        tr.factors.push_back(std::move(f));
    }
    return tr;
}

Matrix kron_chain_reversed(const std::vector<Matrix>& mats, std::size_t skip) {
    Matrix out = Matrix::Ones(1, 1);
    for (std::size_t i = mats.size(); i-- > 0;) {
        if (i == skip) continue;
        out = kron(out, mats[i]);
    }
    return out;
}

TensorSeries series_of(std::vector<Tensor> tensors) {
    TensorSeries ts;
    const Dims d = tensors.front().dims();
    for (std::size_t i = 0; i < d[0]; ++i) ts.provider_ids.push_back("P" + std::to_string(i));
    ts.periods.assign(d.begin() + 1, d.end());
    for (std::size_t t = 0; t < tensors.size(); ++t) ts.period_starts.push_back(static_cast<Hour>(t));
    ts.tensors = std::move(tensors);
    return ts;
}

}  // namespace

TEST(InitialLoadings, RankOneSpansKroneckerOfSeasonalLoadings) {
    auto tr = noiseless({4, 3, 5}, Ranks{1, {1, 1}}, 20, 1);
    auto init = initial_loadings(tr.xs, Ranks{1, {1, 1}});
    ASSERT_EQ(init.b_hat.rows(), 15);
    ASSERT_EQ(init.b_hat.cols(), 1);
    EXPECT_LT(subspace_distance(init.b_hat, kron(tr.loadings[2], tr.loadings[1])), 1e-10);
    EXPECT_NEAR(init.b_hat.squaredNorm(), 15.0, 1e-9);
    // Gamma_1 spans B2 (x) Lambda, Gamma_2 spans B1 (x) Lambda
    EXPECT_LT(subspace_distance(init.gamma_hat[0], kron_chain_reversed(tr.loadings, 1)), 1e-10);
    EXPECT_LT(subspace_distance(init.gamma_hat[1], kron_chain_reversed(tr.loadings, 2)), 1e-10);
}

TEST(InitialLoadings, MatrixCaseGammaSpansLambda) {
    auto tr = noiseless({5, 6}, Ranks{1, {1}}, 15, 2);
    auto init = initial_loadings(tr.xs, Ranks{1, {1}});
    ASSERT_EQ(init.gamma_hat.size(), 1u);
    EXPECT_LT(subspace_distance(init.gamma_hat[0], tr.loadings[0]), 1e-10);
    EXPECT_LT(subspace_distance(init.b_hat, tr.loadings[1]), 1e-10);
}

TEST(InitialLoadings, ZeroDataIsDegenerate) {
    auto ts = series_of({Tensor(Dims{3, 2, 2}, 0.0)});
    EXPECT_THROW(initial_loadings(ts, Ranks{1, {1, 1}}), DegenerateError);
}

TEST(ProjectedLoadings, NoiselessRecoveryAndScale) {
    const Ranks ranks{1, {1, 2}};
    auto tr = noiseless({9, 7, 24}, ranks, 100, 3);
    auto l = estimate_loadings(tr.xs, ranks);
    EXPECT_LT(subspace_distance(l.lambda, tr.loadings[0]), 1e-8);
    EXPECT_LT(subspace_distance(l.b[0], tr.loadings[1]), 1e-8);
    EXPECT_LT(subspace_distance(l.b[1], tr.loadings[2]), 1e-8);
    EXPECT_LT((l.lambda.transpose() * l.lambda - 9.0 * Matrix::Identity(1, 1)).norm(), 1e-10);
    EXPECT_LT((l.b[1].transpose() * l.b[1] - 24.0 * Matrix::Identity(2, 2)).norm(), 1e-9);

    auto f = extract_factors(tr.xs, l);
    auto fit = fitted_values(f, l, Standardization::identity(tr.xs.dims()));
    for (std::size_t t = 0; t < tr.xs.length(); ++t) EXPECT_LT(relative_error(fit.tensors[t], tr.xs.tensors[t]), 1e-8);
}

TEST(ProjectedLoadings, RefitOnCommonComponentKeepsSpans) {
    const Ranks ranks{2, {2, 2}};
    std::mt19937_64 rng(4);
    auto tr = noiseless({5, 4, 6}, ranks, 40, 4);
    for (auto& x : tr.xs.tensors) x += 0.3 * random_tensor(x.dims(), rng);
    auto l = estimate_loadings(tr.xs, ranks);
    auto common = fitted_values(extract_factors(tr.xs, l), l, Standardization::identity(tr.xs.dims()));
    common.provider_ids = tr.xs.provider_ids;
    common.periods = tr.xs.periods;
    auto l2 = estimate_loadings(common, ranks);
    EXPECT_LT(subspace_distance(l2.lambda, l.lambda), 1e-8);
    for (std::size_t j = 0; j < 2; ++j) EXPECT_LT(subspace_distance(l2.b[j], l.b[j]), 1e-8);
}

TEST(ProjectedLoadings, FullCrossSectionRank) {
    std::mt19937_64 rng(5);
    std::vector<Tensor> xs;
    for (int t = 0; t < 30; ++t) xs.push_back(random_tensor({3, 4, 3}, rng));
    auto ts = series_of(xs);
    auto l = estimate_loadings(ts, Ranks{3, {1, 1}});
    EXPECT_LT((l.lambda.transpose() * l.lambda - 3.0 * Matrix::Identity(3, 3)).norm(), 1e-10);
}

TEST(ExtractFactors, ZeroDataGivesZeroFactors) {
    std::mt19937_64 rng(6);
    LoadingSet l{random_matrix(3, 1, rng), {random_matrix(2, 1, rng), random_matrix(4, 2, rng)}};
    auto f = extract_factors(series_of({Tensor(Dims{3, 2, 4}, 0.0), Tensor(Dims{3, 2, 4}, 0.0)}), l);
    for (const auto& x : f.tensors) EXPECT_EQ(x, Tensor(Dims{1, 1, 2}, 0.0));
}

TEST(ExtractFactors, CompleteBasisReconstructsExactly) {
    std::mt19937_64 rng(7);
    std::vector<Tensor> xs;
    for (int t = 0; t < 12; ++t) xs.push_back(random_tensor({3, 2, 4}, rng));
    auto ts = series_of(xs);
    auto l = estimate_loadings(ts, Ranks{3, {2, 4}});
    auto fit = fitted_values(extract_factors(ts, l), l, Standardization::identity(ts.dims()));
    for (std::size_t t = 0; t < xs.size(); ++t) EXPECT_LT(relative_error(fit.tensors[t], xs[t]), 1e-10);
}

TEST(FittedValues, ZeroFactorsGiveMu) {
    std::mt19937_64 rng(8);
    LoadingSet l{random_matrix(2, 1, rng), {random_matrix(3, 1, rng), random_matrix(2, 1, rng)}};
    Standardization z{random_tensor({2, 3, 2}, rng), Tensor(Dims{2, 3, 2}, 2.5), 0};
    FactorSeries f{{Tensor(Dims{1, 1, 1}, 0.0)}};
    EXPECT_EQ(fitted_values(f, l, z).tensors[0], z.mu);
}

TEST(FittedValues, SignFlipInvariance) {
    std::mt19937_64 rng(9);
    LoadingSet l{random_matrix(3, 2, rng), {random_matrix(4, 2, rng)}};
    Tensor f = random_tensor({2, 2}, rng);
    Tensor base = common_component(f, l);
    LoadingSet flipped = l;
    flipped.b[0].col(1) *= -1.0;
    Tensor g = f;
    for (std::size_t r = 0; r < 2; ++r) g({r, 1}) *= -1.0;
    EXPECT_LT(relative_error(common_component(g, flipped), base), 1e-15);
}

TEST(SelectRanks, NoiselessStrongFactors) {
    auto tr = noiseless({9, 7, 24}, Ranks{1, {1, 2}}, 100, 10);
    auto sel = select_ranks_detailed(tr.xs, 3, {3, 3});
    EXPECT_EQ(sel.ranks, (Ranks{1, {1, 2}}));
    ASSERT_EQ(sel.eigenvalues.size(), 3u);
    EXPECT_EQ(sel.eigenvalues[2].size(), 24);
}

// Without factor structure every candidate ratio is close to one, so the
// argmax carries no information; with a strong factor the winning ratio is large.
TEST(SelectRanks, WhiteNoiseRatiosAreFlat) {
    std::mt19937_64 rng(11);
    std::vector<Tensor> xs;
    for (int t = 0; t < 200; ++t) xs.push_back(random_tensor({9, 7, 24}, rng));
    auto sel = select_ranks_detailed(series_of(xs), 3, {3, 3});
    for (const auto& ev : sel.eigenvalues)
        for (Eigen::Index i = 0; i < 3; ++i) EXPECT_LT(ev(i) / ev(i + 1), 1.25);

    auto tr = noiseless({9, 7, 24}, Ranks{1, {1, 2}}, 100, 10);
    for (auto& x : tr.xs.tensors) x += 0.1 * random_tensor(x.dims(), rng);
    auto strong = select_ranks_detailed(tr.xs, 3, {3, 3});
    EXPECT_GT(strong.eigenvalues[0](0) / strong.eigenvalues[0](1), 10.0);
    EXPECT_EQ(strong.ranks, (Ranks{1, {1, 2}}));
}

TEST(SelectRanks, RejectsBounds) {
    auto tr = noiseless({4, 3, 5}, Ranks{1, {1, 1}}, 10, 12);
    EXPECT_THROW(select_ranks(tr.xs, 4, {1, 1}), std::invalid_argument);
    EXPECT_THROW(select_ranks(tr.xs, 1, {3, 1}), std::invalid_argument);
}

TEST(InSampleMse, ZeroOffsetAndNaiveLoop) {
    std::mt19937_64 rng(13);
    std::vector<Tensor> a, b;
    for (int t = 0; t < 4; ++t) {
        a.push_back(random_tensor({2, 3, 2}, rng));
        b.push_back(random_tensor({2, 3, 2}, rng));
    }
    auto ya = series_of(a), yb = series_of(b);
    EXPECT_EQ(in_sample_mse(ya, ya), 0.0);
    auto shifted = ya;
    for (auto& x : shifted.tensors)
        for (std::size_t c = 0; c < x.size(); ++c) x[c] += 1.5;
    EXPECT_NEAR(in_sample_mse(ya, shifted), 2.25, 1e-12);
    double s = 0.0;
    std::size_t n = 0;
    for (std::size_t t = 0; t < a.size(); ++t)
        for (std::size_t c = 0; c < a[t].size(); ++c, ++n) s += (a[t][c] - b[t][c]) * (a[t][c] - b[t][c]);
    EXPECT_NEAR(in_sample_mse(ya, yb), s / static_cast<double>(n), 1e-12);
}

TEST(FitTfm, RankOneSurvivesEstimatedScaling) {
    auto tr = noiseless({4, 3, 5}, Ranks{1, {1, 1}}, 30, 14);
    for (auto& x : tr.xs.tensors)
        for (std::size_t c = 0; c < x.size(); ++c) x[c] = 500.0 + 3.0 * x[c];
    auto fit = fit_tfm(tr.xs, Ranks{1, {1, 1}});
    EXPECT_FALSE(fit.degenerate);
    auto y = fitted_values(fit);
    for (std::size_t t = 0; t < tr.xs.length(); ++t) EXPECT_LT(relative_error(y.tensors[t], tr.xs.tensors[t]), 1e-10);
}

TEST(FitTfm, ConstantDataIsDegenerate) {
    std::vector<Tensor> xs(5, Tensor(Dims{2, 3, 2}, 7.0));
    auto fit = fit_tfm(series_of(xs), Ranks{1, {1, 1}});
    EXPECT_TRUE(fit.degenerate);
    for (const auto& y : fitted_values(fit).tensors) EXPECT_EQ(y, Tensor(Dims{2, 3, 2}, 7.0));
}
