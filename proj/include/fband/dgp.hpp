#pragma once

// Functional time series Y_t(q) = g(q)' ȳ_t with ȳ_t a trivariate VAR(2)
// driven by multivariate Student-t innovations.

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "fband/func_core.hpp"
#include "fband/predictors.hpp"

namespace fband {

using Rng = std::mt19937_64;

/// splitmix64 of (seed, index): independent streams per replication/day.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

Mat3 default_upsilon1();
Mat3 default_upsilon2();
Mat3 default_sigma();
/// Υ / (2 ||Υ||_F)
Mat3 half_frobenius_normalized(const Mat3& upsilon);

/// Largest modulus among the VAR(2) companion-matrix eigenvalues. The process
/// is stable (det(I - Ψ1 u - Ψ2 u²) != 0 for |u| <= 1) iff this is below 1.
double companion_spectral_radius(const Mat3& psi1, const Mat3& psi2);

struct DgpConfig {
    std::size_t T = 25;
    Mat3 psi1 = half_frobenius_normalized(default_upsilon1());
    Mat3 psi2 = half_frobenius_normalized(default_upsilon2());
    Mat3 sigma = default_sigma();
    std::optional<double> df = 4.0;   // nullopt: Gaussian innovations
    std::size_t burn_in = 100;
    std::uint64_t seed = 1;
    std::size_t grid_points = 100;

    Grid grid() const { return Grid(0.0, 1.0, grid_points); }
};

/// Draws Gaussian(0, Σ) * sqrt(df / χ²_df), or plain Gaussian without df.
class MvtSampler {
public:
    MvtSampler(const Mat3& sigma, std::optional<double> df);

    Vec3 operator()(Rng& rng);

private:
    Mat3 chol_;
    bool degenerate_ = false;
    std::optional<double> df_;
    std::normal_distribution<double> normal_;
    std::optional<std::chi_squared_distribution<double>> chi2_;
};

Vec3 sample_mvt(std::optional<double> df, const Mat3& sigma, Rng& rng);

struct SimulatedSeries {
    Observations obs;            // T + 1 curves: 0..T-1 observed, T the truth to cover
    std::vector<Vec3> latent;    // ȳ_t for the same indices
};

SimulatedSeries simulate_series(const DgpConfig& cfg);

}  // namespace fband
