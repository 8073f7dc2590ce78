#include "stf/tfm.hpp"

#include "stf/errors.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace stf {

std::size_t Ranks::seasonal_product() const { return product(k); }

void Ranks::validate(const Dims& dims) const {
    if (dims.size() != k.size() + 1)
        throw std::invalid_argument("ranks list " + std::to_string(k.size()) +
                                    " seasonal factor counts for " + std::to_string(dims.size() - 1) +
                                    " seasonal modes");
    if (r < 1 || r > dims[0])
        throw std::invalid_argument("R must lie in [1, " + std::to_string(dims[0]) + "]");
    for (std::size_t j = 0; j < k.size(); ++j)
        if (k[j] < 1 || k[j] > dims[j + 1])
            throw std::invalid_argument("K" + std::to_string(j + 1) + " must lie in [1, " +
                                        std::to_string(dims[j + 1]) + "]");
}

std::vector<Matrix> LoadingSet::per_mode() const {
    std::vector<Matrix> out;
    out.reserve(b.size() + 1);
    out.push_back(lambda);
    out.insert(out.end(), b.begin(), b.end());
    return out;
}

Ranks LoadingSet::ranks() const {
    Ranks r{static_cast<std::size_t>(lambda.cols()), {}};
    for (const auto& m : b) r.k.push_back(static_cast<std::size_t>(m.cols()));
    return r;
}

std::vector<double> FactorSeries::coordinate(std::size_t flat) const {
    std::vector<double> out;
    out.reserve(tensors.size());
    for (const auto& f : tensors) out.push_back(f[flat]);
    return out;
}

namespace {

struct Shape {
    std::size_t n;
    std::vector<std::size_t> s;
    std::size_t s_all;
    std::size_t t;
};

Shape shape_of(const TensorSeries& xs) {
    if (xs.length() == 0) throw std::invalid_argument("empty tensor series");
    const Dims dims = xs.dims();
    if (dims.size() < 2) throw std::invalid_argument("tensor series needs at least one seasonal mode");
    for (const auto& x : xs.tensors)
        if (x.dims() != dims) throw std::invalid_argument("tensor series has inconsistent dims");
    Shape sh{dims[0], {dims.begin() + 1, dims.end()}, 0, xs.length()};
    sh.s_all = product(sh.s);
    return sh;
}

std::size_t product_except(const std::vector<std::size_t>& v, std::size_t skip) {
    std::size_t p = 1;
    for (std::size_t i = 0; i < v.size(); ++i)
        if (i != skip) p *= v[i];
    return p;
}

void require_nondegenerate(const Matrix& cov, const char* what) {
    if (!(cov.trace() > 0.0)) throw DegenerateError(std::string("degenerate (zero) covariance in ") + what);
}

EigenPairs scaled_top(const Matrix& cov, std::size_t count, double scale, const char* what) {
    require_nondegenerate(cov, what);
    EigenPairs e = top_eigenvectors(cov, count);
    e.vectors *= std::sqrt(scale);
    return e;
}

// Column space of x_t unfolded along `mode`, summed over t.
Matrix gram_columns(const TensorSeries& xs, std::size_t mode) {
    Matrix acc;
    for (const auto& x : xs.tensors) {
        const Matrix u = unfold(x, mode);
        if (acc.size() == 0) acc = Matrix::Zero(u.cols(), u.cols());
        acc.selfadjointView<Eigen::Lower>().rankUpdate(u.transpose());
    }
    return acc.selfadjointView<Eigen::Lower>();
}

}  // namespace

InitialLoadings initial_loadings(const TensorSeries& xs, const Ranks& ranks) {
    const Shape sh = shape_of(xs);
    ranks.validate(xs.dims());
    const double norm = 1.0 / (static_cast<double>(sh.t) * static_cast<double>(sh.n) *
                               static_cast<double>(sh.s_all));
    InitialLoadings init;
    init.b_hat = scaled_top(norm * gram_columns(xs, 0), ranks.seasonal_product(),
                            static_cast<double>(sh.s_all), "mode-1 column covariance")
                     .vectors;
    for (std::size_t j = 0; j < sh.s.size(); ++j) {
        const double rows = static_cast<double>(sh.n * product_except(sh.s, j));
        init.gamma_hat.push_back(scaled_top(norm * gram_columns(xs, j + 1),
                                            ranks.r * product_except(ranks.k, j), rows,
                                            "seasonal column covariance")
                                     .vectors);
    }
    return init;
}

std::vector<Matrix> projected_covariances(const TensorSeries& xs, const InitialLoadings& init) {
    const Shape sh = shape_of(xs);
    if (init.gamma_hat.size() != sh.s.size())
        throw std::invalid_argument("initial loadings do not match the number of seasonal modes");
    if (static_cast<std::size_t>(init.b_hat.rows()) != sh.s_all)
        throw std::invalid_argument("initial B has the wrong number of rows");
    const double norm = 1.0 / (static_cast<double>(sh.t) * static_cast<double>(sh.n) *
                               static_cast<double>(sh.s_all));

    std::vector<Matrix> covs;
    covs.push_back(Matrix::Zero(sh.n, sh.n));
    for (auto s : sh.s) covs.push_back(Matrix::Zero(s, s));

    // X (B B' / S) X' = (X B)(X B)' / S, likewise for Gamma with S_-j.
    for (const auto& x : xs.tensors) {
        const Matrix y0 = unfold(x, 0) * init.b_hat;
        covs[0].noalias() += y0 * y0.transpose();
        for (std::size_t j = 0; j < sh.s.size(); ++j) {
            const Matrix yj = unfold(x, j + 1) * init.gamma_hat[j];
            covs[j + 1].noalias() += yj * yj.transpose();
        }
    }
    covs[0] *= norm / static_cast<double>(sh.s_all);
    for (std::size_t j = 0; j < sh.s.size(); ++j)
        covs[j + 1] *= norm / static_cast<double>(product_except(sh.s, j));
    return covs;
}

LoadingSet projected_loadings(const TensorSeries& xs, const InitialLoadings& init, const Ranks& ranks) {
    ranks.validate(xs.dims());
    const Shape sh = shape_of(xs);
    if (static_cast<std::size_t>(init.b_hat.cols()) != ranks.seasonal_product())
        throw std::invalid_argument("initial B does not conform to ranks");
    for (std::size_t j = 0; j < sh.s.size(); ++j)
        if (static_cast<std::size_t>(init.gamma_hat[j].cols()) != ranks.r * product_except(ranks.k, j))
            throw std::invalid_argument("initial Gamma does not conform to ranks");

    const auto covs = projected_covariances(xs, init);
    LoadingSet l;
    l.lambda = scaled_top(covs[0], ranks.r, static_cast<double>(sh.n), "projected mode-1 covariance").vectors;
    for (std::size_t j = 0; j < sh.s.size(); ++j)
        l.b.push_back(scaled_top(covs[j + 1], ranks.k[j], static_cast<double>(sh.s[j]),
                                 "projected seasonal covariance")
                          .vectors);
    return l;
}

FactorSeries extract_factors(const TensorSeries& xs, const LoadingSet& l) {
    const Shape sh = shape_of(xs);
    if (static_cast<std::size_t>(l.lambda.rows()) != sh.n || l.b.size() != sh.s.size())
        throw std::invalid_argument("loadings do not match data dims");
    std::vector<Matrix> proj;
    proj.push_back(l.lambda.transpose());
    for (std::size_t j = 0; j < l.b.size(); ++j) {
        if (static_cast<std::size_t>(l.b[j].rows()) != sh.s[j])
            throw std::invalid_argument("seasonal loading does not match data dims");
        proj.push_back(l.b[j].transpose());
    }
    const double scale = 1.0 / (static_cast<double>(sh.n) * static_cast<double>(sh.s_all));
    FactorSeries f;
    f.tensors.reserve(sh.t);
    for (const auto& x : xs.tensors) f.tensors.push_back(scale * multi_mode_product(x, proj));
    return f;
}

Tensor common_component(const Tensor& f, const LoadingSet& l) {
    const auto mats = l.per_mode();
    if (f.order() != mats.size()) throw std::invalid_argument("factor tensor order does not match loadings");
    return multi_mode_product(f, mats);
}

Tensor reconstruct(const Tensor& f, const LoadingSet& l, const Standardization& z) {
    return destandardize(common_component(f, l), z);
}

TensorSeries fitted_values(const FactorSeries& f, const LoadingSet& l, const Standardization& z) {
    TensorSeries out;
    out.tensors.reserve(f.length());
    for (const auto& ft : f.tensors) out.tensors.push_back(reconstruct(ft, l, z));
    return out;
}

RankSelection select_ranks_detailed(const TensorSeries& xs, std::size_t r_max,
                                    const std::vector<std::size_t>& k_max) {
    const Shape sh = shape_of(xs);
    if (k_max.size() != sh.s.size()) throw std::invalid_argument("k_max must list one bound per seasonal mode");
    if (r_max < 1 || r_max >= sh.n) throw std::invalid_argument("r_max must lie in [1, N-1]");
    for (std::size_t j = 0; j < k_max.size(); ++j)
        if (k_max[j] < 1 || k_max[j] >= sh.s[j])
            throw std::invalid_argument("k_max[" + std::to_string(j) + "] must lie in [1, S_j-1]");

    const Ranks widest{r_max, k_max};
    const auto covs = projected_covariances(xs, initial_loadings(xs, widest));

    RankSelection sel;
    auto pick = [&](const Matrix& cov, std::size_t cap) {
        Vector ev = symmetric_eigenvalues(cov);
        sel.eigenvalues.push_back(ev);
        if (!(ev(0) > 0.0)) throw DegenerateError("eigenvalue ratios undefined: covariance is zero");
        const double floor = 1e-12 * ev(0);
        std::size_t best = 1;
        double best_ratio = -1.0;
        for (std::size_t i = 0; i < cap; ++i) {
            const double num = std::max(ev(static_cast<Eigen::Index>(i)), floor);
            const double den = std::max(ev(static_cast<Eigen::Index>(i + 1)), floor);
            const double ratio = num / den;
            if (ratio > best_ratio) {
                best_ratio = ratio;
                best = i + 1;
            }
        }
        return best;
    };
    sel.ranks.r = pick(covs[0], r_max);
    for (std::size_t j = 0; j < k_max.size(); ++j) sel.ranks.k.push_back(pick(covs[j + 1], k_max[j]));
    return sel;
}

double in_sample_mse(const TensorSeries& y, const TensorSeries& y_fit) {
    if (y.length() != y_fit.length()) throw std::invalid_argument("in_sample_mse: series lengths differ");
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t t = 0; t < y.length(); ++t) {
        if (y.tensors[t].dims() != y_fit.tensors[t].dims())
            throw std::invalid_argument("in_sample_mse: dims mismatch");
        sum += squared_norm(y.tensors[t] - y_fit.tensors[t]);
        count += y.tensors[t].size();
    }
    if (count == 0) throw std::invalid_argument("in_sample_mse: empty series");
    return sum / static_cast<double>(count);
}

TfmFit fit_tfm(const TensorSeries& y, const Ranks& ranks, Scaling scaling) {
    const Dims dims = y.dims();
    ranks.validate(dims);
    TfmFit fit;
    fit.ranks = ranks;
    fit.z = scaling == Scaling::Estimate ? estimate_standardization(y) : Standardization::identity(dims);
    const TensorSeries xs = standardize(y, fit.z);

    double energy = 0.0;
    for (const auto& x : xs.tensors) energy += squared_norm(x);
    if (energy == 0.0) {
        fit.degenerate = true;
        auto axes = [](std::size_t rows, std::size_t cols) {
            return Matrix(std::sqrt(static_cast<double>(rows)) * Matrix::Identity(rows, cols));
        };
        fit.loadings.lambda = axes(dims[0], ranks.r);
        for (std::size_t j = 0; j < ranks.k.size(); ++j) fit.loadings.b.push_back(axes(dims[j + 1], ranks.k[j]));
        Dims core{ranks.r};
        core.insert(core.end(), ranks.k.begin(), ranks.k.end());
        fit.factors.tensors.assign(y.length(), Tensor(core, 0.0));
        return fit;
    }
    fit.loadings = estimate_loadings(xs, ranks);
    fit.factors = extract_factors(xs, fit.loadings);
    return fit;
}

TensorSeries fitted_values(const TfmFit& fit) { return fitted_values(fit.factors, fit.loadings, fit.z); }

}  // namespace stf
