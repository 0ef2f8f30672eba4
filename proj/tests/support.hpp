#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "fband/func_core.hpp"

namespace fband::testing {

inline std::vector<double> random_values(std::mt19937_64& rng, std::size_t n, double sd = 1.0) {
    std::normal_distribution<double> normal(0.0, sd);
    std::vector<double> v(n);
    for (double& x : v) x = normal(rng);
    return v;
}

inline FunctionalSample random_sample(std::mt19937_64& rng, const std::vector<Grid>& grids, double sd = 1.0) {
    std::vector<std::vector<double>> comps;
    for (const auto& g : grids) comps.push_back(random_values(rng, g.size(), sd));
    return FunctionalSample(grids, std::move(comps));
}

inline bool close_rel(double a, double b, double tol) {
    return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace fband::testing
