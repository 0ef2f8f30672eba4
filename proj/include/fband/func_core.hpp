#pragma once

// Grid-sampled multivariate functional data and the prediction-band primitives
// built on it: weighted sup-norm scores, residual modulation, band size.

#include <cstddef>
#include <span>
#include <vector>

namespace fband {

/// Equispaced evaluation points lo + i*(hi-lo)/(n-1), endpoints included.
class Grid {
public:
    Grid(double lo, double hi, std::size_t n);

    double lo() const noexcept { return lo_; }
    double hi() const noexcept { return hi_; }
    std::size_t size() const noexcept { return n_; }
    double step() const noexcept { return (hi_ - lo_) / static_cast<double>(n_ - 1); }
    double point(std::size_t i) const noexcept;
    std::vector<double> points() const;

    bool operator==(const Grid&) const = default;

private:
    double lo_;
    double hi_;
    std::size_t n_;
};

/// A p-component curve, component j sampled on grids[j].
class FunctionalSample {
public:
    FunctionalSample() = default;
    FunctionalSample(std::vector<Grid> grids, std::vector<std::vector<double>> components);
    /// All components share one grid.
    FunctionalSample(const Grid& grid, std::vector<std::vector<double>> components);

    static FunctionalSample zeros(const std::vector<Grid>& grids);

    std::size_t p() const noexcept { return components_.size(); }
    const Grid& grid(std::size_t j) const { return grids_.at(j); }
    const std::vector<Grid>& grids() const noexcept { return grids_; }
    std::span<const double> component(std::size_t j) const { return components_.at(j); }
    const std::vector<std::vector<double>>& components() const noexcept { return components_; }

    double operator()(std::size_t j, std::size_t i) const { return components_[j][i]; }

    bool same_shape(const FunctionalSample& other) const noexcept;

private:
    std::vector<Grid> grids_;
    std::vector<std::vector<double>> components_;
};

FunctionalSample operator-(const FunctionalSample& a, const FunctionalSample& b);

/// Pointwise scale of the band. Strictly positive everywhere.
class ModulationFunction {
public:
    ModulationFunction() = default;
    ModulationFunction(std::vector<Grid> grids, std::vector<std::vector<double>> values);

    std::size_t p() const noexcept { return values_.size(); }
    const Grid& grid(std::size_t j) const { return grids_.at(j); }
    const std::vector<Grid>& grids() const noexcept { return grids_; }
    std::span<const double> component(std::size_t j) const { return values_.at(j); }
    double operator()(std::size_t j, std::size_t i) const { return values_[j][i]; }

    ModulationFunction scaled(double lambda) const;

private:
    std::vector<Grid> grids_;
    std::vector<std::vector<double>> values_;
};

/// Conformal half-width multiplier. `unbounded` marks the band that is the
/// whole function space (alpha below the smallest attainable p-value).
struct Multiplier {
    double k = 0.0;
    bool unbounded = false;

    static Multiplier entire_space() { return {0.0, true}; }
};

class PredictionBand {
public:
    PredictionBand(FunctionalSample center, ModulationFunction modulation, Multiplier k, double alpha);

    const FunctionalSample& center() const noexcept { return center_; }
    const ModulationFunction& modulation() const noexcept { return modulation_; }
    double k() const;   // throws ArgumentError on an unbounded band
    bool unbounded() const noexcept { return multiplier_.unbounded; }
    double alpha() const noexcept { return alpha_; }
    std::size_t p() const noexcept { return center_.p(); }

    double lower(std::size_t j, std::size_t i) const;
    double upper(std::size_t j, std::size_t i) const;
    std::vector<double> lower(std::size_t j) const;
    std::vector<double> upper(std::size_t j) const;

private:
    FunctionalSample center_;
    ModulationFunction modulation_;
    Multiplier multiplier_;
    double alpha_;
};

/// max_{j,q} |y_j(q) - center_j(q)| / s_j(q)
double weighted_sup_score(const FunctionalSample& y, const FunctionalSample& center,
                          const ModulationFunction& s);

/// Root-sum-of-squares of the residuals at each grid point (no 1/m), floored at
/// 1e-12 times the largest absolute residual (or 1e-12 when all are zero).
ModulationFunction modulation_from_residuals(std::span<const FunctionalSample> residuals);

constexpr double kModulationFloorFactor = 1e-12;

/// Trapezoidal integral of grid values over the whole grid.
double trapezoid(const Grid& grid, std::span<const double> values);

/// Integral over [a, b] ∩ [lo, hi] of the piecewise-linear interpolant.
double trapezoid(const Grid& grid, std::span<const double> values, double a, double b);

/// Linear interpolation of grid values at x (clamped to the grid range).
double interpolate(const Grid& grid, std::span<const double> values, double x);

/// Sum over components of the integral of 2 k s_j.
double band_size(const PredictionBand& band);

/// Integral of 2 k s_j over [a, b] for one component.
double band_size(const PredictionBand& band, std::size_t j, double a, double b);

bool band_contains(const PredictionBand& band, const FunctionalSample& y);

}  // namespace fband
