#include "stf/benchmarks.hpp"

#include "stf/errors.hpp"
#include "stf/tfm.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace stf {

ProviderMatrixSeries provider_matrices(const TensorSeries& ts, std::size_t provider) {
    const Dims dims = ts.dims();
    if (dims.size() != 3) throw std::invalid_argument("provider matrices need dims (N, S1, S2)");
    if (provider >= dims[0]) throw std::out_of_range("provider index out of range");
    ProviderMatrixSeries ms{ts.provider_ids.at(provider), {}};
    ms.matrices.reserve(ts.length());
    for (const auto& x : ts.tensors) {
        Matrix m(dims[1], dims[2]);
        for (std::size_t d = 0; d < dims[1]; ++d)
            for (std::size_t h = 0; h < dims[2]; ++h) m(d, h) = x({provider, d, h});
        ms.matrices.push_back(std::move(m));
    }
    return ms;
}

TensorSeries as_tensor_series(const ProviderMatrixSeries& ms) {
    if (ms.matrices.empty()) throw std::invalid_argument("empty provider series");
    const auto rows = static_cast<std::size_t>(ms.matrices.front().rows());
    const auto cols = static_cast<std::size_t>(ms.matrices.front().cols());
    TensorSeries ts{{ms.provider}, {rows, cols}, {}, {}};
    for (const auto& m : ms.matrices) {
        if (static_cast<std::size_t>(m.rows()) != rows || static_cast<std::size_t>(m.cols()) != cols)
            throw std::invalid_argument("provider matrices have inconsistent dims");
        ts.tensors.emplace_back(Dims{1, rows, cols}, std::vector<double>(m.data(), m.data() + m.size()));
    }
    return ts;
}

namespace {

Matrix tensor_to_matrix(const Tensor& x) {
    const Dims& d = x.dims();
    return Eigen::Map<const Matrix>(x.data().data(), static_cast<Eigen::Index>(d[1]),
                                    static_cast<Eigen::Index>(d[2]));
}

std::vector<Matrix> to_matrices(const std::vector<Tensor>& xs) {
    std::vector<Matrix> out;
    out.reserve(xs.size());
    for (const auto& x : xs) out.push_back(tensor_to_matrix(x));
    return out;
}

TensorSeries wrap(const std::vector<Tensor>& obs) {
    if (obs.empty()) throw std::invalid_argument("empty observation series");
    TensorSeries ts;
    ts.tensors = obs;
    return ts;
}

Matrix standardized_columns(const std::vector<Tensor>& obs, const Standardization& z) {
    const std::size_t d = obs.front().size();
    Matrix x(d, obs.size());
    for (std::size_t t = 0; t < obs.size(); ++t)
        for (std::size_t c = 0; c < d; ++c) x(c, t) = (obs[t][c] - z.mu[c]) / z.sigma[c];
    return x;
}

}  // namespace

std::vector<Matrix> mfm_forecast(const ProviderMatrixSeries& ms, std::size_t n, const MfmOptions& options) {
    const TfmFit fit = fit_tfm(as_tensor_series(ms), Ranks{1, {options.day_factors, options.hour_factors}});
    return to_matrices(forecast_tfm(fit, options.period, n).tensors);
}

Vector VfmModel::reconstruct(const Vector& score) const {
    Vector x = loadings * score;
    for (Eigen::Index c = 0; c < x.size(); ++c)
        x(c) = z.mu[static_cast<std::size_t>(c)] + z.sigma[static_cast<std::size_t>(c)] * x(c);
    return x;
}

VfmModel fit_vfm(const std::vector<Tensor>& obs, std::size_t r) {
    const TensorSeries ts = wrap(obs);
    VfmModel m;
    m.z = estimate_standardization(ts);
    const Matrix x = standardized_columns(obs, m.z);
    if (r < 1 || r > static_cast<std::size_t>(x.rows()))
        throw std::invalid_argument("VFM factor count must lie in [1, " + std::to_string(x.rows()) + "]");
    const Matrix cov = (x * x.transpose()) / static_cast<double>(obs.size());
    if (!(cov.trace() > 0.0)) throw DegenerateError("PCA on data with zero variance");
    m.loadings = top_eigenvectors(cov, r).vectors;
    m.scores = m.loadings.transpose() * x;
    return m;
}

VfmModel fit_vfm_with_loadings(const std::vector<Tensor>& obs, const Matrix& loadings) {
    const TensorSeries ts = wrap(obs);
    VfmModel m;
    m.z = estimate_standardization(ts);
    const Matrix x = standardized_columns(obs, m.z);
    if (loadings.rows() != x.rows() || loadings.cols() < 1)
        throw std::invalid_argument("fixed loadings do not match observation size");
    m.loadings = loadings;
    for (Eigen::Index c = 0; c < m.loadings.cols(); ++c) {
        const double norm = m.loadings.col(c).norm();
        if (!(norm > 0.0)) throw std::invalid_argument("fixed loading column is zero");
        m.loadings.col(c) /= norm;
    }
    const Matrix gram = m.loadings.transpose() * m.loadings;
    if ((gram - Matrix::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff() > 1e-8)
        throw std::invalid_argument("fixed loading columns are not orthogonal");
    m.scores = m.loadings.transpose() * x;
    return m;
}

std::vector<Tensor> vfm_fitted(const VfmModel& m) {
    std::vector<Tensor> out;
    const Dims& dims = m.z.mu.dims();
    for (Eigen::Index t = 0; t < m.scores.cols(); ++t) {
        const Vector v = m.reconstruct(m.scores.col(t));
        out.emplace_back(dims, std::vector<double>(v.begin(), v.end()));
    }
    return out;
}

std::vector<Tensor> vfm_forecast_model(const VfmModel& m, std::size_t n, std::size_t period) {
    const ScoreForecastOptions opts{period, ScoreModel::AR1, 0};
    Matrix future(m.scores.rows(), static_cast<Eigen::Index>(n));
    for (Eigen::Index k = 0; k < m.scores.rows(); ++k) {
        const Vector row = m.scores.row(k).transpose();
        const auto path = forecast_scores(std::span<const double>(row.data(), static_cast<std::size_t>(row.size())),
                                          n, opts);
        for (std::size_t h = 0; h < n; ++h) future(k, static_cast<Eigen::Index>(h)) = path[h];
    }
    std::vector<Tensor> out;
    const Dims& dims = m.z.mu.dims();
    for (std::size_t h = 0; h < n; ++h) {
        const Vector v = m.reconstruct(future.col(static_cast<Eigen::Index>(h)));
        out.emplace_back(dims, std::vector<double>(v.begin(), v.end()));
    }
    return out;
}

std::vector<Matrix> vfm_forecast(const ProviderMatrixSeries& ms, std::size_t n, const VfmOptions& options) {
    const TensorSeries ts = as_tensor_series(ms);
    return to_matrices(vfm_forecast_model(fit_vfm(ts.tensors, options.factors), n, options.period));
}

std::vector<Tensor> vfm_forecast_stacked(const TensorSeries& ts, std::size_t n, const VfmOptions& options) {
    return vfm_forecast_model(fit_vfm(ts.tensors, options.factors), n, options.period);
}

namespace {

struct DayComponents {
    Vector mean;       // hours
    Matrix basis;      // hours x ncomp
    Matrix scores;     // ncomp x T
};

std::size_t choose_components(const Vector& eigenvalues, const FpcaOptions& o) {
    const double total = eigenvalues.cwiseMax(0.0).sum();
    double acc = 0.0;
    const std::size_t cap = std::min<std::size_t>(o.max_components, static_cast<std::size_t>(eigenvalues.size()));
    for (std::size_t k = 0; k < cap; ++k) {
        acc += std::max(eigenvalues(static_cast<Eigen::Index>(k)), 0.0);
        if (acc >= o.explained_variance * total) return k + 1;
    }
    return std::max<std::size_t>(cap, 1);
}

// curves: hours x T of standardized values for one day of week.
DayComponents day_components(const Matrix& curves, const FpcaOptions& o) {
    DayComponents dc;
    dc.mean = curves.rowwise().mean();
    const Matrix centered = curves.colwise() - dc.mean;
    const Matrix cov = centered * centered.transpose() / static_cast<double>(curves.cols());
    if (!(cov.trace() > 0.0)) throw DegenerateError("functional PCA on curves with zero variance");
    std::size_t k = o.components;
    if (k == 0) k = choose_components(symmetric_eigenvalues(cov), o);
    if (k > static_cast<std::size_t>(cov.rows()))
        throw std::invalid_argument("more functional components than grid points");
    dc.basis = top_eigenvectors(cov, k).vectors;
    dc.scores = dc.basis.transpose() * centered;
    return dc;
}

template <typename Emit>
std::vector<Matrix> fpca_run(const ProviderMatrixSeries& ms, const FpcaOptions& o, std::size_t steps, Emit emit) {
    const TensorSeries ts = as_tensor_series(ms);
    const Standardization z = estimate_standardization(ts);
    const TensorSeries xs = standardize(ts, z);
    const auto days = static_cast<std::size_t>(ms.matrices.front().rows());
    const auto hours = static_cast<std::size_t>(ms.matrices.front().cols());
    std::vector<Matrix> out(steps, Matrix(days, hours));
    for (std::size_t d = 0; d < days; ++d) {
        Matrix curves(hours, ms.length());
        for (std::size_t t = 0; t < ms.length(); ++t)
            for (std::size_t h = 0; h < hours; ++h)
                curves(static_cast<Eigen::Index>(h), static_cast<Eigen::Index>(t)) = xs.tensors[t]({0, d, h});
        const DayComponents dc = day_components(curves, o);
        const Matrix day_out = emit(dc);  // hours x steps, standardized
        for (std::size_t s = 0; s < steps; ++s)
            for (std::size_t h = 0; h < hours; ++h) {
                const std::size_t cell = d + days * h;
                out[s](static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(h)) =
                    z.mu[cell] + z.sigma[cell] * day_out(static_cast<Eigen::Index>(h), static_cast<Eigen::Index>(s));
            }
    }
    return out;
}

}  // namespace

std::vector<Matrix> fpca_forecast(const ProviderMatrixSeries& ms, std::size_t n, const FpcaOptions& options) {
    if (ms.matrices.empty()) throw std::invalid_argument("empty provider series");
    const ScoreForecastOptions opts{options.period, ScoreModel::AutoAR, options.max_ar_order};
    return fpca_run(ms, options, n, [&](const DayComponents& dc) {
        Matrix future(dc.scores.rows(), static_cast<Eigen::Index>(n));
        for (Eigen::Index k = 0; k < dc.scores.rows(); ++k) {
            const Vector row = dc.scores.row(k).transpose();
            const auto path = forecast_scores(
                std::span<const double>(row.data(), static_cast<std::size_t>(row.size())), n, opts);
            for (std::size_t h = 0; h < n; ++h) future(k, static_cast<Eigen::Index>(h)) = path[h];
        }
        return Matrix((dc.basis * future).colwise() + dc.mean);
    });
}

std::vector<Matrix> fpca_fitted(const ProviderMatrixSeries& ms, const FpcaOptions& options) {
    if (ms.matrices.empty()) throw std::invalid_argument("empty provider series");
    return fpca_run(ms, options, ms.length(), [](const DayComponents& dc) {
        return Matrix((dc.basis * dc.scores).colwise() + dc.mean);
    });
}

}  // namespace stf
