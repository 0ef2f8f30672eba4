#include "fband/func_core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fband/error.hpp"

namespace fband {

namespace {

void check_components(const std::vector<Grid>& grids, const std::vector<std::vector<double>>& comps,
                      const char* what) {
    if (comps.empty()) throw StructuralError(std::string(what) + ": at least one component required");
    if (grids.size() != comps.size())
        throw StructuralError(std::string(what) + ": " + std::to_string(grids.size()) + " grids for " +
                              std::to_string(comps.size()) + " components");
    for (std::size_t j = 0; j < comps.size(); ++j) {
        if (comps[j].size() != grids[j].size())
            throw StructuralError(std::string(what) + ": component " + std::to_string(j) + " has " +
                                  std::to_string(comps[j].size()) + " values on a grid of " +
                                  std::to_string(grids[j].size()));
    }
}

void check_same_shape(const FunctionalSample& y, const FunctionalSample& c, const ModulationFunction& s) {
    if (!y.same_shape(c) || s.grids() != c.grids())
        throw StructuralError("weighted_sup_score: sample, center and modulation shapes differ");
}

}  // namespace

Grid::Grid(double lo, double hi, std::size_t n) : lo_(lo), hi_(hi), n_(n) {
    if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi))
        throw ArgumentError("Grid: need finite lo < hi");
    if (n < 2) throw ArgumentError("Grid: need at least 2 points");
}

double Grid::point(std::size_t i) const noexcept {
    if (i + 1 == n_) return hi_;
    return lo_ + static_cast<double>(i) * (hi_ - lo_) / static_cast<double>(n_ - 1);
}

std::vector<double> Grid::points() const {
    std::vector<double> out(n_);
    for (std::size_t i = 0; i < n_; ++i) out[i] = point(i);
    return out;
}

FunctionalSample::FunctionalSample(std::vector<Grid> grids, std::vector<std::vector<double>> components)
    : grids_(std::move(grids)), components_(std::move(components)) {
    check_components(grids_, components_, "FunctionalSample");
    for (const auto& c : components_)
        for (double v : c)
            if (!std::isfinite(v)) throw ArgumentError("FunctionalSample: non-finite value");
}

FunctionalSample::FunctionalSample(const Grid& grid, std::vector<std::vector<double>> components)
    : grids_(components.size(), grid), components_(std::move(components)) {
    check_components(grids_, components_, "FunctionalSample");
    for (const auto& c : components_)
        for (double v : c)
            if (!std::isfinite(v)) throw ArgumentError("FunctionalSample: non-finite value");
}

FunctionalSample FunctionalSample::zeros(const std::vector<Grid>& grids) {
    std::vector<std::vector<double>> comps;
    comps.reserve(grids.size());
    for (const auto& g : grids) comps.emplace_back(g.size(), 0.0);
    return FunctionalSample(grids, std::move(comps));
}

bool FunctionalSample::same_shape(const FunctionalSample& other) const noexcept {
    return grids_ == other.grids_;
}

FunctionalSample operator-(const FunctionalSample& a, const FunctionalSample& b) {
    if (!a.same_shape(b)) throw StructuralError("FunctionalSample subtraction: shapes differ");
    auto out = a.components();
    for (std::size_t j = 0; j < out.size(); ++j)
        for (std::size_t i = 0; i < out[j].size(); ++i) out[j][i] -= b(j, i);
    return FunctionalSample(a.grids(), std::move(out));
}

ModulationFunction::ModulationFunction(std::vector<Grid> grids, std::vector<std::vector<double>> values)
    : grids_(std::move(grids)), values_(std::move(values)) {
    check_components(grids_, values_, "ModulationFunction");
    for (const auto& c : values_)
        for (double v : c)
            if (!(v > 0.0) || !std::isfinite(v))
                throw ArgumentError("ModulationFunction: values must be finite and strictly positive");
}

ModulationFunction ModulationFunction::scaled(double lambda) const {
    if (!(lambda > 0.0)) throw ArgumentError("ModulationFunction::scaled: lambda must be positive");
    auto v = values_;
    for (auto& c : v)
        for (double& x : c) x *= lambda;
    return ModulationFunction(grids_, std::move(v));
}

PredictionBand::PredictionBand(FunctionalSample center, ModulationFunction modulation, Multiplier k,
                               double alpha)
    : center_(std::move(center)), modulation_(std::move(modulation)), multiplier_(k), alpha_(alpha) {
    if (center_.grids() != modulation_.grids())
        throw StructuralError("PredictionBand: center and modulation shapes differ");
    if (!multiplier_.unbounded && (!(multiplier_.k >= 0.0) || !std::isfinite(multiplier_.k)))
        throw ArgumentError("PredictionBand: k must be finite and nonnegative");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ArgumentError("PredictionBand: alpha must lie in (0,1)");
}

double PredictionBand::k() const {
    if (multiplier_.unbounded)
        throw ArgumentError("PredictionBand: band is the entire function space, k is not finite");
    return multiplier_.k;
}

double PredictionBand::lower(std::size_t j, std::size_t i) const {
    if (multiplier_.unbounded) return -INFINITY;
    return center_(j, i) - multiplier_.k * modulation_(j, i);
}

double PredictionBand::upper(std::size_t j, std::size_t i) const {
    if (multiplier_.unbounded) return INFINITY;
    return center_(j, i) + multiplier_.k * modulation_(j, i);
}

std::vector<double> PredictionBand::lower(std::size_t j) const {
    std::vector<double> out(center_.grid(j).size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = lower(j, i);
    return out;
}

std::vector<double> PredictionBand::upper(std::size_t j) const {
    std::vector<double> out(center_.grid(j).size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = upper(j, i);
    return out;
}

double weighted_sup_score(const FunctionalSample& y, const FunctionalSample& center,
                          const ModulationFunction& s) {
    check_same_shape(y, center, s);
    double score = 0.0;
    for (std::size_t j = 0; j < y.p(); ++j) {
        const auto yj = y.component(j);
        const auto cj = center.component(j);
        const auto sj = s.component(j);
        for (std::size_t i = 0; i < yj.size(); ++i) score = std::max(score, std::abs(yj[i] - cj[i]) / sj[i]);
    }
    return score;
}

ModulationFunction modulation_from_residuals(std::span<const FunctionalSample> residuals) {
    if (residuals.empty()) throw ArgumentError("modulation_from_residuals: no residual samples");
    const auto& grids = residuals.front().grids();
    std::vector<std::vector<double>> sumsq;
    for (const auto& g : grids) sumsq.emplace_back(g.size(), 0.0);

    double max_abs = 0.0;
    for (const auto& r : residuals) {
        if (r.grids() != grids) throw StructuralError("modulation_from_residuals: residual shapes differ");
        for (std::size_t j = 0; j < r.p(); ++j) {
            const auto rj = r.component(j);
            for (std::size_t i = 0; i < rj.size(); ++i) {
                sumsq[j][i] += rj[i] * rj[i];
                max_abs = std::max(max_abs, std::abs(rj[i]));
            }
        }
    }
    const double floor = kModulationFloorFactor * (max_abs > 0.0 ? max_abs : 1.0);
    for (auto& c : sumsq)
        for (double& v : c) v = std::max(std::sqrt(v), floor);
    return ModulationFunction(grids, std::move(sumsq));
}

double trapezoid(const Grid& grid, std::span<const double> values) {
    if (values.size() != grid.size()) throw StructuralError("trapezoid: value count does not match grid");
    double acc = 0.5 * (values.front() + values.back());
    for (std::size_t i = 1; i + 1 < values.size(); ++i) acc += values[i];
    return acc * grid.step();
}

double interpolate(const Grid& grid, std::span<const double> values, double x) {
    if (values.size() != grid.size()) throw StructuralError("interpolate: value count does not match grid");
    if (x <= grid.lo()) return values.front();
    if (x >= grid.hi()) return values.back();
    const double pos = (x - grid.lo()) / grid.step();
    auto i = static_cast<std::size_t>(pos);
    if (i + 1 >= grid.size()) return values.back();
    const double w = pos - static_cast<double>(i);
    return values[i] + w * (values[i + 1] - values[i]);
}

double trapezoid(const Grid& grid, std::span<const double> values, double a, double b) {
    if (values.size() != grid.size()) throw StructuralError("trapezoid: value count does not match grid");
    a = std::max(a, grid.lo());
    b = std::min(b, grid.hi());
    if (!(a < b)) return 0.0;
    // Breakpoints: a, interior grid points strictly inside (a, b), b.
    double acc = 0.0;
    double x_prev = a;
    double v_prev = interpolate(grid, values, a);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double x = grid.point(i);
        if (x <= a) continue;
        if (x >= b) break;
        acc += 0.5 * (v_prev + values[i]) * (x - x_prev);
        x_prev = x;
        v_prev = values[i];
    }
    acc += 0.5 * (v_prev + interpolate(grid, values, b)) * (b - x_prev);
    return acc;
}

double band_size(const PredictionBand& band) {
    const double k = band.k();
    double total = 0.0;
    for (std::size_t j = 0; j < band.p(); ++j)
        total += 2.0 * k * trapezoid(band.modulation().grid(j), band.modulation().component(j));
    return total;
}

double band_size(const PredictionBand& band, std::size_t j, double a, double b) {
    const double k = band.k();
    return 2.0 * k * trapezoid(band.modulation().grid(j), band.modulation().component(j), a, b);
}

bool band_contains(const PredictionBand& band, const FunctionalSample& y) {
    const double score = weighted_sup_score(y, band.center(), band.modulation());
    if (band.unbounded()) return true;
    return score <= band.k();
}

}  // namespace fband
