#include "fband/market/region.hpp"

#include <algorithm>
#include <cmath>

#include "fband/error.hpp"

namespace fband::market {

namespace {

// Slack for bounds that sit exactly on a value computed along another path.
double slack(double v) { return 1e-9 * std::max(1.0, std::abs(v)); }

}  // namespace

TightenedBand tighten_band(std::span<const double> lower, std::span<const double> upper, Direction direction) {
    if (lower.size() != upper.size() || lower.empty())
        throw StructuralError("tighten_band: lower and upper must have the same nonzero length");
    const std::size_t n = lower.size();
    TightenedBand out{std::vector<double>(lower.begin(), lower.end()),
                      std::vector<double>(upper.begin(), upper.end()), false};
    if (direction == Direction::increasing) {
        for (std::size_t i = 1; i < n; ++i) out.lower[i] = std::max(out.lower[i], out.lower[i - 1]);
        for (std::size_t i = n - 1; i-- > 0;) out.upper[i] = std::min(out.upper[i], out.upper[i + 1]);
    } else {
        for (std::size_t i = n - 1; i-- > 0;) out.lower[i] = std::max(out.lower[i], out.lower[i + 1]);
        for (std::size_t i = 1; i < n; ++i) out.upper[i] = std::min(out.upper[i], out.upper[i - 1]);
    }
    for (std::size_t i = 0; i < n; ++i)
        if (out.lower[i] > out.upper[i]) out.empty = true;
    return out;
}

PredictionRegion::PredictionRegion(Grid grid, TightenedBand offer, TightenedBand demand)
    : grid_(grid), offer_(std::move(offer)), demand_(std::move(demand)) {
    const std::size_t n = grid_.size();
    if (offer_.lower.size() != n || offer_.upper.size() != n || demand_.lower.size() != n ||
        demand_.upper.size() != n)
        throw StructuralError("PredictionRegion: band lengths must match the grid");
    for (std::size_t i = 0; i < n; ++i) {
        const double lo = std::max(offer_.lower[i], demand_.lower[i]);
        const double hi = std::min(offer_.upper[i], demand_.upper[i]);
        if (lo <= hi) intervals_.push_back({i, grid_.point(i), lo, hi});
    }
}

bool PredictionRegion::contains(double quantity, double price) const {
    const std::size_t n = grid_.size();
    if (quantity < grid_.lo() || quantity > grid_.hi()) return false;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (quantity < grid_.point(i) || quantity > grid_.point(i + 1)) continue;
        const double lo = std::max(offer_.lower[i], demand_.lower[i + 1]);
        const double hi = std::min(offer_.upper[i + 1], demand_.upper[i]);
        if (price >= lo - slack(lo) && price <= hi + slack(hi)) return true;
    }
    return false;
}

PredictionRegion intersection_region(const Grid& grid, const TightenedBand& offer, const TightenedBand& demand) {
    return PredictionRegion(grid, offer, demand);
}

}  // namespace fband::market
