#pragma once

#include "stf/panel.hpp"
#include "stf/tfm.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace stf {

// Synthetic multi-level factor data. Core factors are a sum of sinusoids
// (random phase per coordinate) plus an AR(1) component; each seasonal layer
// adds its own shock before the cross-sectional loadings and the
// idiosyncratic noise are applied, and the result is mapped through mu and
// sigma.
struct SimSpec {
    std::size_t providers = 9;
    std::vector<std::size_t> periods{7, 24};
    Ranks ranks{1, {1, 2}};
    std::size_t length = 100;

    double ar_coefficient = 0.5;
    double ar_noise_sd = 1.0;
    std::vector<double> cycle_periods{52.0, 26.0};  // in periods t
    std::vector<double> cycle_amplitudes{2.0, 1.0};

    double idiosyncratic_sd = 0.0;      // nu
    std::vector<double> layer_sd;       // eta^(1..M); empty = all zero

    double mean_level = 0.0;            // mu = level + spread * U(-1, 1)
    double mean_spread = 0.0;
    double scale_level = 1.0;           // sigma = level * (1 + spread * U(0, 1))
    double scale_spread = 0.0;

    std::optional<LoadingSet> loadings;  // drawn from the seed when absent
    std::uint64_t seed = 1;

    void validate() const;
};

struct SimShocks {
    std::vector<std::vector<Tensor>> layers;  // [j][t], dims (R, S1..Sj, K_{j+1}..K_M)
    std::vector<Tensor> idiosyncratic;        // [t], dims (N, S1, ..., SM)
};

struct Simulation {
    TensorSeries y;
    LoadingSet loadings;
    FactorSeries factors;
    Standardization truth;  // the mu and sigma applied
    SimShocks shocks;
};

// Builds the observations by the layer-by-layer recursion.
Simulation simulate(const SimSpec& spec);

// Same draws, assembled as common component plus composite error.
Simulation simulate_compact(const SimSpec& spec);

// Random loadings satisfying the scale conventions for `ranks` on `dims`.
LoadingSet random_loadings(const Dims& dims, const Ranks& ranks, std::uint64_t seed);

}  // namespace stf
