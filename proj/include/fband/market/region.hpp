#pragma once

// Monotone tightening of band bounds and the (quantity, price) region where
// the offer and demand bands overlap.

#include <span>
#include <vector>

#include "fband/func_core.hpp"
#include "fband/predictors.hpp"

namespace fband::market {

struct TightenedBand {
    std::vector<double> lower;
    std::vector<double> upper;
    bool empty = false;   // lower > upper at some grid point
};

/// Increasing: lower' = running max of lower, upper' = reverse running min of
/// upper. Decreasing mirrors this. Keeps exactly the monotone curves of the
/// original band.
TightenedBand tighten_band(std::span<const double> lower, std::span<const double> upper, Direction direction);

struct RegionInterval {
    std::size_t index;
    double q;
    double lo;
    double hi;
};

class PredictionRegion {
public:
    /// `offer` increasing, `demand` decreasing, both on `grid`.
    PredictionRegion(Grid grid, TightenedBand offer, TightenedBand demand);

    const Grid& grid() const noexcept { return grid_; }
    /// Grid points where [max of lowers, min of uppers] is nonempty.
    const std::vector<RegionInterval>& intervals() const noexcept { return intervals_; }
    bool empty() const noexcept { return intervals_.empty(); }
    const TightenedBand& offer() const noexcept { return offer_; }
    const TightenedBand& demand() const noexcept { return demand_; }

    /// Whether (Q, P) lies in the overlap of the two bands read as sets of
    /// monotone curves: on a cell [q_i, q_{i+1}] containing Q, the admissible
    /// prices are [max(Lo_i, Ld_{i+1}), min(Uo_{i+1}, Ud_i)].
    bool contains(double quantity, double price) const;

private:
    Grid grid_;
    TightenedBand offer_;
    TightenedBand demand_;
    std::vector<RegionInterval> intervals_;
};

PredictionRegion intersection_region(const Grid& grid, const TightenedBand& offer, const TightenedBand& demand);

}  // namespace fband::market
