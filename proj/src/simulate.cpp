#include "stf/simulate.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

namespace stf {

namespace {

// 2012-01-02 00:00, a Monday.
constexpr Hour kSyntheticStart = 15341 * 24;

Matrix scaled_orthonormal(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
    std::normal_distribution<double> normal;
    Matrix g(rows, cols);
    for (Eigen::Index j = 0; j < g.cols(); ++j)
        for (Eigen::Index i = 0; i < g.rows(); ++i) g(i, j) = normal(rng);
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ() * Matrix::Identity(rows, cols);
    return std::sqrt(static_cast<double>(rows)) * q;
}

Tensor noise(const Dims& dims, double sd, std::mt19937_64& rng) {
    Tensor x(dims, 0.0);
    if (sd == 0.0) return x;
    std::normal_distribution<double> normal(0.0, sd);
    for (std::size_t c = 0; c < x.size(); ++c) x[c] = normal(rng);
    return x;
}

Dims layer_dims(const SimSpec& spec, std::size_t j) {
    Dims d{spec.ranks.r};
    for (std::size_t i = 0; i < spec.periods.size(); ++i) d.push_back(i <= j ? spec.periods[i] : spec.ranks.k[i]);
    return d;
}

struct Draws {
    LoadingSet loadings;
    Standardization truth;
    FactorSeries factors;
    SimShocks shocks;
    Dims dims;
};

Draws draw(const SimSpec& spec) {
    spec.validate();
    Draws d;
    d.dims = Dims{spec.providers};
    d.dims.insert(d.dims.end(), spec.periods.begin(), spec.periods.end());
    std::mt19937_64 rng(spec.seed);

    d.loadings = spec.loadings ? *spec.loadings : random_loadings(d.dims, spec.ranks, rng());

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    d.truth = Standardization::identity(d.dims);
    for (std::size_t c = 0; c < d.truth.mu.size(); ++c) {
        d.truth.mu[c] = spec.mean_level + spec.mean_spread * (2.0 * unit(rng) - 1.0);
        d.truth.sigma[c] = spec.scale_level * (1.0 + spec.scale_spread * unit(rng));
    }

    Dims core{spec.ranks.r};
    core.insert(core.end(), spec.ranks.k.begin(), spec.ranks.k.end());
    const std::size_t n_core = product(core);
    std::vector<double> phases(n_core * spec.cycle_periods.size());
    for (auto& p : phases) p = 2.0 * std::numbers::pi * unit(rng);

    std::normal_distribution<double> normal;
    const double phi = spec.ar_coefficient;
    std::vector<double> ar(n_core, 0.0);
    if (spec.ar_noise_sd > 0.0 && std::abs(phi) < 1.0)
        for (auto& a : ar) a = normal(rng) * spec.ar_noise_sd / std::sqrt(1.0 - phi * phi);

    const std::size_t M = spec.periods.size();
    d.shocks.layers.assign(M, {});
    for (std::size_t t = 0; t < spec.length; ++t) {
        Tensor f(core, 0.0);
        for (std::size_t c = 0; c < n_core; ++c) {
            if (t > 0) ar[c] = phi * ar[c] + (spec.ar_noise_sd > 0.0 ? spec.ar_noise_sd * normal(rng) : 0.0);
            double v = ar[c];
            for (std::size_t q = 0; q < spec.cycle_periods.size(); ++q)
                v += spec.cycle_amplitudes[q] *
                     std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / spec.cycle_periods[q] +
                              phases[c * spec.cycle_periods.size() + q]);
            f[c] = v;
        }
        d.factors.tensors.push_back(std::move(f));
        for (std::size_t j = 0; j < M; ++j)
            d.shocks.layers[j].push_back(noise(layer_dims(spec, j), spec.layer_sd.empty() ? 0.0 : spec.layer_sd[j], rng));
        d.shocks.idiosyncratic.push_back(noise(d.dims, spec.idiosyncratic_sd, rng));
    }
    return d;
}

Simulation assemble(Draws&& d, std::vector<Tensor>&& eps, const SimSpec& spec) {
    Simulation sim;
    sim.y.periods = spec.periods;
    for (std::size_t i = 0; i < spec.providers; ++i) sim.y.provider_ids.push_back("P" + std::to_string(i + 1));
    const auto cycle = static_cast<Hour>(product(spec.periods));
    for (std::size_t t = 0; t < eps.size(); ++t) {
        sim.y.tensors.push_back(destandardize(eps[t], d.truth));
        sim.y.period_starts.push_back(kSyntheticStart + static_cast<Hour>(t) * cycle);
    }
    sim.loadings = std::move(d.loadings);
    sim.factors = std::move(d.factors);
    sim.truth = std::move(d.truth);
    sim.shocks = std::move(d.shocks);
    return sim;
}

}  // namespace

void SimSpec::validate() const {
    if (providers < 1) throw std::invalid_argument("simulation needs at least one provider");
    if (periods.empty()) throw std::invalid_argument("simulation needs at least one seasonal period");
    if (length < 1) throw std::invalid_argument("simulation length must be positive");
    Dims dims{providers};
    dims.insert(dims.end(), periods.begin(), periods.end());
    ranks.validate(dims);
    if (cycle_periods.size() != cycle_amplitudes.size())
        throw std::invalid_argument("cycle periods and amplitudes differ in length");
    for (double p : cycle_periods)
        if (!(p > 0.0)) throw std::invalid_argument("cycle periods must be positive");
    if (!layer_sd.empty() && layer_sd.size() != periods.size())
        throw std::invalid_argument("layer noise needs one standard deviation per seasonal period");
    for (double s : layer_sd)
        if (s < 0.0) throw std::invalid_argument("noise standard deviations must be non-negative");
    if (idiosyncratic_sd < 0.0 || ar_noise_sd < 0.0)
        throw std::invalid_argument("noise standard deviations must be non-negative");
    if (scale_level <= 0.0 || scale_spread < 0.0) throw std::invalid_argument("scales must be positive");
    if (loadings) {
        const Ranks lr = loadings->ranks();
        if (lr != ranks || static_cast<std::size_t>(loadings->lambda.rows()) != providers)
            throw std::invalid_argument("given loadings do not match ranks and dims");
        for (std::size_t j = 0; j < periods.size(); ++j)
            if (static_cast<std::size_t>(loadings->b[j].rows()) != periods[j])
                throw std::invalid_argument("given seasonal loadings do not match periods");
    }
}

LoadingSet random_loadings(const Dims& dims, const Ranks& ranks, std::uint64_t seed) {
    ranks.validate(dims);
    std::mt19937_64 rng(seed);
    LoadingSet l;
    l.lambda = scaled_orthonormal(dims[0], ranks.r, rng);
    for (std::size_t j = 0; j < ranks.k.size(); ++j) l.b.push_back(scaled_orthonormal(dims[j + 1], ranks.k[j], rng));
    return l;
}

Simulation simulate(const SimSpec& spec) {
    Draws d = draw(spec);
    std::vector<Tensor> eps;
    eps.reserve(spec.length);
    for (std::size_t t = 0; t < spec.length; ++t) {
        Tensor g = d.factors.tensors[t];
        for (std::size_t j = 0; j < spec.periods.size(); ++j)
            g = mode_product(g, d.loadings.b[j], j + 1) + d.shocks.layers[j][t];
        eps.push_back(mode_product(g, d.loadings.lambda, 0) + d.shocks.idiosyncratic[t]);
    }
    return assemble(std::move(d), std::move(eps), spec);
}

Simulation simulate_compact(const SimSpec& spec) {
    Draws d = draw(spec);
    const std::size_t M = spec.periods.size();
    std::vector<Tensor> eps;
    eps.reserve(spec.length);
    for (std::size_t t = 0; t < spec.length; ++t) {
        Tensor composite(layer_dims(spec, M - 1), 0.0);
        for (std::size_t j = 0; j < M; ++j) {
            Tensor e = d.shocks.layers[j][t];
            for (std::size_t i = j + 1; i < M; ++i) e = mode_product(e, d.loadings.b[i], i + 1);
            composite += e;
        }
        Tensor x = common_component(d.factors.tensors[t], d.loadings);
        x += mode_product(composite, d.loadings.lambda, 0);
        x += d.shocks.idiosyncratic[t];
        eps.push_back(std::move(x));
    }
    return assemble(std::move(d), std::move(eps), spec);
}

}  // namespace stf
