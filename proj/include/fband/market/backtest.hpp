#pragma once

// Rolling-window conformal bands for daily (offer, demand) curve pairs.
//
// For a target day the previous `window` days form the series: the market
// concurrent model is fit on the training part, forecasts are made monotone,
// and the two curves are scored jointly as one p = 2 observation.

#include <iosfwd>
#include <optional>
#include <utility>
#include <vector>

#include "fband/func_core.hpp"
#include "fband/market/book.hpp"
#include "fband/market/curves.hpp"
#include "fband/market/region.hpp"
#include "fband/predictors.hpp"

namespace fband::market {

struct MarketConfig {
    Grid grid{0.0, 2e5, 500};
    std::size_t window = 90;   // T
    std::size_t l = 39;
    std::size_t b = 1;
    PriceRule rule = PriceRule::crossing_midpoint;
    /// Quantity ranges over which band sizes are reported separately.
    std::vector<std::pair<double, double>> size_ranges{{0.0, 25000.0}};
    ConcurrentSpec spec = ConcurrentSpec::market();

    std::size_t m() const;
    void validate() const;
};

struct MarketDay {
    Date day;
    FunctionalSample curves;   // component 0 offer, 1 demand, on the config grid
    std::optional<Equilibrium> equilibrium;
};

/// Throws ArgumentError listing every missing date if the books are not
/// consecutive days.
void check_consecutive(const std::vector<AuctionBook>& books);

std::vector<MarketDay> prepare_days(const std::vector<AuctionBook>& books, const MarketConfig& cfg);

/// Everything about a target day that does not depend on α.
struct DayArtifact {
    Date day;
    Grid grid{0.0, 1.0, 2};
    std::size_t window = 0;
    std::size_t l = 0;
    std::size_t b = 1;
    std::size_t m = 0;
    FunctionalSample center;            // monotone forecast (offer, demand)
    ModulationFunction modulation;
    std::vector<double> scores;         // calibration scores
    std::optional<FunctionalSample> observed;
    std::optional<Equilibrium> observed_equilibrium;
};

/// Artifact for days[target] using days[target - window .. target - 1].
/// target == days.size() gives the forecast for the day after the last book.
DayArtifact compute_artifact(const std::vector<MarketDay>& days, std::size_t target, const MarketConfig& cfg);

/// Artifacts for every target from cfg.window to days.size() (inclusive).
std::vector<DayArtifact> compute_artifacts(const std::vector<MarketDay>& days, const MarketConfig& cfg,
                                           int threads = 0);

struct DayBands {
    PredictionBand band;
    TightenedBand offer;
    TightenedBand demand;
    PredictionRegion region;
};

DayBands evaluate_artifact(const DayArtifact& artifact, double alpha);

struct BacktestRow {
    Date day;
    double k = 0.0;
    double size_offer = 0.0;
    double size_demand = 0.0;
    std::vector<double> range_sizes;    // offer, demand per configured range
    bool contained_band = false;
    bool contained_region = false;
    bool band_empty = false;
    std::optional<Equilibrium> equilibrium;

    bool operator==(const BacktestRow&) const = default;
};

struct BacktestReport {
    double alpha = 0.0;
    std::vector<BacktestRow> rows;

    double band_rate() const;
    double region_rate() const;
    /// Days where both curves are in the band and cross but (Q, P) is outside the region.
    std::size_t violations() const;
};

BacktestRow backtest_row(const DayArtifact& artifact, double alpha, const MarketConfig& cfg);

BacktestReport rolling_backtest(const std::vector<AuctionBook>& books, const MarketConfig& cfg, double alpha,
                                int threads = 0);
/// Reference implementation: one day after another, no threads.
BacktestReport rolling_backtest_serial(const std::vector<AuctionBook>& books, const MarketConfig& cfg,
                                       double alpha);

void write_backtest_csv(std::ostream& out, const BacktestReport& report, const MarketConfig& cfg);

}  // namespace fband::market
