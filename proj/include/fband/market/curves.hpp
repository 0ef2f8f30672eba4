#pragma once

// Offer and demand step curves, their crossing, and what-if order injection.
//
// A StepCurve holds segments [c_{k-1}, c_k) at price p_k with c_0 = 0; the
// last segment is closed at the total quantity. Past the total the offer is
// +inf and the demand -inf, unless a domain end is given, in which case the
// last price extends flat up to it.

#include <optional>
#include <span>
#include <vector>

#include "fband/func_core.hpp"
#include "fband/market/book.hpp"
#include "fband/predictors.hpp"

namespace fband::market {

class StepCurve {
public:
    StepCurve(Direction direction, std::vector<double> breakpoints, std::vector<double> prices);

    Direction direction() const noexcept { return direction_; }
    const std::vector<double>& breakpoints() const noexcept { return breakpoints_; }
    const std::vector<double>& prices() const noexcept { return prices_; }
    std::size_t segments() const noexcept { return prices_.size(); }
    double total() const noexcept { return breakpoints_.back(); }

    double at(double q, std::optional<double> domain_end = std::nullopt) const;
    /// Value on (q - ε, q); q must be positive.
    double left_limit(double q, std::optional<double> domain_end = std::nullopt) const;
    /// Value on (q, q + ε).
    double right_limit(double q, std::optional<double> domain_end = std::nullopt) const;
    /// Grid values with flat extension to the grid end.
    std::vector<double> on_grid(const Grid& grid) const;

    bool operator==(const StepCurve&) const = default;

private:
    double beyond() const;
    double extension(double q, std::optional<double> domain_end) const;

    Direction direction_;
    std::vector<double> breakpoints_;
    std::vector<double> prices_;
};

/// Orders of one side sorted by price (ascending for offers, descending for
/// bids) with equal prices merged into one segment.
StepCurve build_curve(std::span<const Order> orders, Side side);

struct CurvePair {
    StepCurve offer;
    StepCurve demand;
};

/// Throws ArgumentError if a side has no orders.
CurvePair build_curves(const AuctionBook& book);

enum class PriceRule {
    crossing_midpoint,   // midpoint of the prices both curves attain at Q
    gap_midpoint,        // (O(Q-) + D(Q-)) / 2
    marginal_offer,      // O(Q-)
};

PriceRule parse_price_rule(std::string_view name);
std::string_view price_rule_name(PriceRule rule);

struct Equilibrium {
    double quantity;
    double price;

    bool operator==(const Equilibrium&) const = default;
};

/// Q = sup{q : D(q) >= O(q)}. None when D(0) < O(0), or when a domain end is
/// given and the curves do not cross inside it.
std::optional<Equilibrium> equilibrium(const StepCurve& offer, const StepCurve& demand,
                                       PriceRule rule = PriceRule::crossing_midpoint,
                                       std::optional<double> domain_end = std::nullopt);

/// Adds the order at its price rank; equal to rebuilding the curve from the
/// book with the order appended.
StepCurve inject_order(const StepCurve& curve, double price, double quantity);
/// Inverse of inject_order. Throws if no segment at `price` holds `quantity`.
StepCurve remove_order(const StepCurve& curve, double price, double quantity);

/// Injection into a monotone curve sampled on a grid. The quantity is rounded
/// to whole grid steps k; with i_p the first point priced worse than `price`,
/// points before i_p are unchanged, the next k take `price` and the rest are
/// the original shifted right by k. Removal inverts this exactly on the first
/// n - k points.
std::vector<double> inject_order(const Grid& grid, std::span<const double> curve, Direction direction,
                                 double price, double quantity);
std::vector<double> remove_order(const Grid& grid, std::span<const double> curve, Direction direction,
                                 double price, double quantity);

/// First crossing of two grid curves read as linear interpolants.
std::optional<Equilibrium> grid_crossing(const Grid& grid, std::span<const double> offer,
                                         std::span<const double> demand);

}  // namespace fband::market
