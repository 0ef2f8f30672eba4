#include "fband/market/curves.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "fband/error.hpp"

namespace fband::market {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool better_or_equal(Direction d, double a, double b) {
    return d == Direction::increasing ? a <= b : a >= b;
}

}  // namespace

StepCurve::StepCurve(Direction direction, std::vector<double> breakpoints, std::vector<double> prices)
    : direction_(direction), breakpoints_(std::move(breakpoints)), prices_(std::move(prices)) {
    if (prices_.empty() || prices_.size() != breakpoints_.size())
        throw StructuralError("StepCurve: need one breakpoint per segment and at least one segment");
    double prev = 0.0;
    for (std::size_t k = 0; k < prices_.size(); ++k) {
        if (!(breakpoints_[k] > prev) || !std::isfinite(breakpoints_[k]))
            throw ArgumentError("StepCurve: cumulative quantities must be strictly increasing from 0");
        if (!std::isfinite(prices_[k])) throw ArgumentError("StepCurve: prices must be finite");
        if (k > 0 && !better_or_equal(direction_, prices_[k - 1], prices_[k]))
            throw ArgumentError(direction_ == Direction::increasing ? "StepCurve: offer prices must be nondecreasing"
                                                                    : "StepCurve: demand prices must be nonincreasing");
        prev = breakpoints_[k];
    }
}

double StepCurve::beyond() const { return direction_ == Direction::increasing ? kInf : -kInf; }

double StepCurve::extension(double q, std::optional<double> domain_end) const {
    if (domain_end && q <= *domain_end) return prices_.back();
    return beyond();
}

double StepCurve::at(double q, std::optional<double> domain_end) const {
    if (q > total()) return extension(q, domain_end);
    const auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), q);
    if (it == breakpoints_.end()) return prices_.back();   // q == total, closed end
    return prices_[static_cast<std::size_t>(it - breakpoints_.begin())];
}

double StepCurve::left_limit(double q, std::optional<double> domain_end) const {
    if (!(q > 0.0)) throw ArgumentError("StepCurve::left_limit needs q > 0");
    if (q > total()) return extension(q, domain_end);
    const auto it = std::lower_bound(breakpoints_.begin(), breakpoints_.end(), q);
    return prices_[static_cast<std::size_t>(it - breakpoints_.begin())];
}

double StepCurve::right_limit(double q, std::optional<double> domain_end) const {
    if (q >= total()) {
        if (domain_end && q < *domain_end) return prices_.back();
        return beyond();
    }
    return at(q);
}

std::vector<double> StepCurve::on_grid(const Grid& grid) const {
    std::vector<double> out(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) out[i] = at(grid.point(i), grid.hi());
    return out;
}

StepCurve build_curve(std::span<const Order> orders, Side side) {
    const Direction dir = side == Side::offer ? Direction::increasing : Direction::decreasing;
    std::map<double, double> by_price;
    for (const auto& o : orders) {
        if (o.side != side) continue;
        validate_order(o);
        by_price[o.price] += o.quantity;
    }
    if (by_price.empty())
        throw ArgumentError(std::string("build_curves: book has no ") + (side == Side::offer ? "offers" : "bids"));
    std::vector<std::pair<double, double>> levels(by_price.begin(), by_price.end());
    if (dir == Direction::decreasing) std::reverse(levels.begin(), levels.end());
    std::vector<double> bps, prices;
    double cum = 0.0;
    for (const auto& [p, q] : levels) {
        cum += q;
        bps.push_back(cum);
        prices.push_back(p);
    }
    return StepCurve(dir, std::move(bps), std::move(prices));
}

CurvePair build_curves(const AuctionBook& book) {
    return {build_curve(book.orders, Side::offer), build_curve(book.orders, Side::bid)};
}

PriceRule parse_price_rule(std::string_view name) {
    if (name == "crossing_midpoint") return PriceRule::crossing_midpoint;
    if (name == "gap_midpoint") return PriceRule::gap_midpoint;
    if (name == "marginal_offer") return PriceRule::marginal_offer;
    throw ArgumentError("unknown price rule '" + std::string(name) +
                        "' (expected crossing_midpoint, gap_midpoint or marginal_offer)");
}

std::string_view price_rule_name(PriceRule rule) {
    switch (rule) {
        case PriceRule::crossing_midpoint: return "crossing_midpoint";
        case PriceRule::gap_midpoint: return "gap_midpoint";
        case PriceRule::marginal_offer: return "marginal_offer";
    }
    return "?";
}

std::optional<Equilibrium> equilibrium(const StepCurve& offer, const StepCurve& demand, PriceRule rule,
                                       std::optional<double> domain_end) {
    if (offer.direction() != Direction::increasing || demand.direction() != Direction::decreasing)
        throw ArgumentError("equilibrium: expects an increasing offer and a decreasing demand curve");

    std::vector<double> xs{0.0};
    for (double c : offer.breakpoints()) xs.push_back(c);
    for (double c : demand.breakpoints()) xs.push_back(c);
    if (domain_end) {
        xs.push_back(*domain_end);
        std::erase_if(xs, [&](double x) { return x > *domain_end; });
    }
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());

    auto holds = [&](double q) { return demand.at(q, domain_end) >= offer.at(q, domain_end); };
    double Q = -1.0;
    bool at_point = false;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (holds(xs[i])) {
            Q = xs[i];
            at_point = true;
        }
        if (i + 1 < xs.size() && holds(0.5 * (xs[i] + xs[i + 1]))) {
            Q = xs[i + 1];
            at_point = false;
        }
    }
    if (Q <= 0.0) return std::nullopt;
    if (domain_end && Q == *domain_end && at_point) return std::nullopt;

    const double o_left = offer.left_limit(Q, domain_end);
    const double d_left = demand.left_limit(Q, domain_end);
    double price = 0.0;
    switch (rule) {
        case PriceRule::crossing_midpoint: {
            const double lo = std::max(o_left, demand.right_limit(Q, domain_end));
            const double hi = std::min(offer.right_limit(Q, domain_end), d_left);
            price = 0.5 * (lo + hi);
            break;
        }
        case PriceRule::gap_midpoint: price = 0.5 * (o_left + d_left); break;
        case PriceRule::marginal_offer: price = o_left; break;
    }
    return Equilibrium{Q, price};
}

StepCurve inject_order(const StepCurve& curve, double price, double quantity) {
    if (!std::isfinite(price) || price < 0.0) throw ArgumentError("inject_order: price must be finite and >= 0");
    if (!std::isfinite(quantity) || quantity < 0.0) throw ArgumentError("inject_order: quantity must be >= 0");
    if (quantity == 0.0) return curve;
    std::vector<double> widths, prices;
    double prev = 0.0;
    bool placed = false;
    for (std::size_t k = 0; k < curve.segments(); ++k) {
        const double p = curve.prices()[k];
        double w = curve.breakpoints()[k] - prev;
        prev = curve.breakpoints()[k];
        if (!placed && p == price) {
            w += quantity;
            placed = true;
        } else if (!placed && !better_or_equal(curve.direction(), p, price)) {
            widths.push_back(quantity);
            prices.push_back(price);
            placed = true;
        }
        widths.push_back(w);
        prices.push_back(p);
    }
    if (!placed) {
        widths.push_back(quantity);
        prices.push_back(price);
    }
    std::vector<double> bps(widths.size());
    double cum = 0.0;
    for (std::size_t k = 0; k < widths.size(); ++k) bps[k] = cum += widths[k];
    return StepCurve(curve.direction(), std::move(bps), std::move(prices));
}

StepCurve remove_order(const StepCurve& curve, double price, double quantity) {
    if (!std::isfinite(quantity) || quantity < 0.0) throw ArgumentError("remove_order: quantity must be >= 0");
    if (quantity == 0.0) return curve;
    std::vector<double> widths, prices;
    double prev = 0.0;
    bool removed = false;
    for (std::size_t k = 0; k < curve.segments(); ++k) {
        double w = curve.breakpoints()[k] - prev;
        prev = curve.breakpoints()[k];
        if (curve.prices()[k] == price) {
            const double tol = 1e-9 * std::max(1.0, w);
            if (w + tol < quantity) throw ArgumentError("remove_order: segment at that price is too small");
            w -= quantity;
            removed = true;
            if (w <= tol) continue;
        }
        widths.push_back(w);
        prices.push_back(curve.prices()[k]);
    }
    if (!removed) throw ArgumentError("remove_order: no segment at that price");
    if (widths.empty()) throw ArgumentError("remove_order: curve would become empty");
    std::vector<double> bps(widths.size());
    double cum = 0.0;
    for (std::size_t k = 0; k < widths.size(); ++k) bps[k] = cum += widths[k];
    return StepCurve(curve.direction(), std::move(bps), std::move(prices));
}

namespace {

// Demand-oriented helpers; offers are handled by negating values and price.
// sup{q : f(q) >= p} for a nonincreasing linear interpolant, lo if f(lo) < p.
// First index priced worse than p; size() if none is.
std::size_t first_below(std::span<const double> f, double p) {
    std::size_t i = 0;
    while (i < f.size() && f[i] >= p) ++i;
    return i;
}

std::size_t whole_steps(const Grid& grid, double quantity) {
    return static_cast<std::size_t>(std::llround(quantity / grid.step()));
}

std::vector<double> signed_values(std::span<const double> v, double sign) {
    std::vector<double> out(v.begin(), v.end());
    for (double& x : out) x *= sign;
    return out;
}

void check_grid_curve(const Grid& grid, std::span<const double> curve, double quantity) {
    if (curve.size() != grid.size()) throw StructuralError("inject_order: curve length does not match the grid");
    if (!std::isfinite(quantity) || quantity < 0.0) throw ArgumentError("inject_order: quantity must be >= 0");
}

}  // namespace

std::vector<double> inject_order(const Grid& grid, std::span<const double> curve, Direction direction,
                                 double price, double quantity) {
    check_grid_curve(grid, curve, quantity);
    const double sign = direction == Direction::decreasing ? 1.0 : -1.0;
    const auto f = signed_values(curve, sign);
    const std::size_t n = f.size(), k = whole_steps(grid, quantity);
    const std::size_t ip = first_below(f, sign * price);
    std::vector<double> out = f;
    for (std::size_t i = ip; i < n; ++i) out[i] = i < ip + k ? sign * price : f[i - k];
    for (double& x : out) x *= sign;
    return out;
}

std::vector<double> remove_order(const Grid& grid, std::span<const double> curve, Direction direction,
                                 double price, double quantity) {
    check_grid_curve(grid, curve, quantity);
    const double sign = direction == Direction::decreasing ? 1.0 : -1.0;
    const auto f = signed_values(curve, sign);
    const std::size_t n = f.size(), k = whole_steps(grid, quantity);
    const std::size_t jp = first_below(f, sign * price);
    const std::size_t start = jp > k ? jp - k : 0;
    std::vector<double> out = f;
    for (std::size_t i = start; i < n; ++i) out[i] = f[std::min(i + k, n - 1)];
    for (double& x : out) x *= sign;
    return out;
}

std::optional<Equilibrium> grid_crossing(const Grid& grid, std::span<const double> offer,
                                         std::span<const double> demand) {
    if (offer.size() != grid.size() || demand.size() != grid.size())
        throw StructuralError("grid_crossing: curve length does not match the grid");
    if (demand[0] < offer[0]) return std::nullopt;
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
        const double g0 = demand[i] - offer[i];
        const double g1 = demand[i + 1] - offer[i + 1];
        if (g0 >= 0.0 && g1 < 0.0) {
            const double frac = g0 / (g0 - g1);
            const double q = grid.point(i) + frac * grid.step();
            return Equilibrium{q, offer[i] + frac * (offer[i + 1] - offer[i])};
        }
    }
    return std::nullopt;
}

}  // namespace fband::market
