#include "fband/market/backtest.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <string>

#include "fband/columnar.hpp"
#include "fband/conformal.hpp"
#include "fband/error.hpp"
#include "fband/parallel.hpp"

namespace fband::market {

std::size_t MarketConfig::m() const { return window - l - spec.max_lag(); }

void MarketConfig::validate() const {
    BlockScheme(l, b);
    if (window < l + spec.max_lag() + spec.regressors())
        throw ArgumentError("market: window " + std::to_string(window) + " leaves fewer training days than " +
                            "regressors (l=" + std::to_string(l) + ", max lag " + std::to_string(spec.max_lag()) +
                            ")");
    for (const auto& [a, z] : size_ranges)
        if (!(a < z)) throw ArgumentError("market: size range [" + format_double(a) + ", " + format_double(z) +
                                          "] is empty");
}

void check_consecutive(const std::vector<AuctionBook>& books) {
    std::string gaps;
    std::size_t missing = 0;
    for (std::size_t i = 1; i < books.size(); ++i) {
        if (books[i].day <= books[i - 1].day)
            throw ArgumentError("books out of order or duplicated at " + books[i].day.str());
        for (Date d = books[i - 1].day.next(); d < books[i].day; d = d.next()) {
            if (missing++ < 50) gaps += (gaps.empty() ? "" : ", ") + d.str();
        }
    }
    if (missing > 0)
        throw ArgumentError("missing " + std::to_string(missing) + " day(s): " + gaps + (missing > 50 ? ", ..." : ""));
}

std::vector<MarketDay> prepare_days(const std::vector<AuctionBook>& books, const MarketConfig& cfg) {
    check_consecutive(books);
    std::vector<MarketDay> out;
    out.reserve(books.size());
    for (const auto& book : books) {
        const CurvePair c = build_curves(book);
        out.push_back(MarketDay{book.day, FunctionalSample(cfg.grid, {c.offer.on_grid(cfg.grid), c.demand.on_grid(cfg.grid)}),
                                equilibrium(c.offer, c.demand, cfg.rule, cfg.grid.hi())});
    }
    return out;
}

DayArtifact compute_artifact(const std::vector<MarketDay>& days, std::size_t target, const MarketConfig& cfg) {
    if (target < cfg.window || target > days.size())
        throw ArgumentError("compute_artifact: target " + std::to_string(target) + " needs " +
                            std::to_string(cfg.window) + " preceding days");
    Observations obs;
    for (std::size_t t = target - cfg.window; t < target; ++t) {
        const auto& d = days[t];
        obs.curves.push_back(d.curves);
        if (cfg.spec.scalar_lag) {
            if (!d.equilibrium) throw ArgumentError("no clearing price on " + d.day.str());
            obs.scalars.push_back(d.equilibrium->price);
        }
    }
    const SplitPlan plan = split_indices(cfg.window, cfg.l, cfg.spec.max_lag());
    const BlockScheme scheme(cfg.l, cfg.b);
    const Fitter fitter = [&](const Observations& o, std::span<const std::size_t> rows) {
        return std::make_unique<ConcurrentPredictor>(
            fit_concurrent(o, rows, cfg.spec), std::vector<Direction>{Direction::increasing, Direction::decreasing});
    };
    ConformalFit fit = fit_conformal(obs, plan, scheme, fitter);

    DayArtifact a;
    a.day = target < days.size() ? days[target].day : days.back().day.next();
    a.grid = cfg.grid;
    a.window = cfg.window;
    a.l = cfg.l;
    a.b = cfg.b;
    a.m = plan.m();
    a.center = fit.predictor->predict(obs, plan.target);
    a.modulation = fit.modulation;
    a.scores = fit.scores.values();
    if (target < days.size()) {
        a.observed = days[target].curves;
        a.observed_equilibrium = days[target].equilibrium;
    }
    return a;
}

std::vector<DayArtifact> compute_artifacts(const std::vector<MarketDay>& days, const MarketConfig& cfg,
                                           int threads) {
    cfg.validate();
    if (days.size() < cfg.window) throw ArgumentError("need at least " + std::to_string(cfg.window) + " days");
    std::vector<DayArtifact> out(days.size() - cfg.window + 1);
    parallel_for(out.size(), threads, "day", [&](std::size_t i) { out[i] = compute_artifact(days, cfg.window + i, cfg); });
    return out;
}

DayBands evaluate_artifact(const DayArtifact& a, double alpha) {
    const Multiplier k = conformal_k(a.scores, alpha, a.l, a.b);
    PredictionBand band(a.center, a.modulation, k, alpha);
    TightenedBand offer = tighten_band(band.lower(0), band.upper(0), Direction::increasing);
    TightenedBand demand = tighten_band(band.lower(1), band.upper(1), Direction::decreasing);
    PredictionRegion region(a.grid, offer, demand);
    return DayBands{std::move(band), std::move(offer), std::move(demand), std::move(region)};
}

BacktestRow backtest_row(const DayArtifact& a, double alpha, const MarketConfig& cfg) {
    if (!a.observed) throw ArgumentError("backtest_row: day " + a.day.str() + " has no observed curves");
    const DayBands bands = evaluate_artifact(a, alpha);
    BacktestRow row;
    row.day = a.day;
    const double inf = std::numeric_limits<double>::infinity();
    row.k = bands.band.unbounded() ? inf : bands.band.k();
    const double lo = a.grid.lo(), hi = a.grid.hi();
    row.size_offer = bands.band.unbounded() ? inf : band_size(bands.band, 0, lo, hi);
    row.size_demand = bands.band.unbounded() ? inf : band_size(bands.band, 1, lo, hi);
    for (const auto& [r0, r1] : cfg.size_ranges)
        for (std::size_t j = 0; j < 2; ++j)
            row.range_sizes.push_back(bands.band.unbounded() ? inf : band_size(bands.band, j, r0, r1));
    row.contained_band = band_contains(bands.band, *a.observed);
    row.band_empty = bands.offer.empty || bands.demand.empty;
    row.equilibrium = a.observed_equilibrium;
    row.contained_region = row.equilibrium && bands.region.contains(row.equilibrium->quantity, row.equilibrium->price);
    return row;
}

double BacktestReport::band_rate() const {
    if (rows.empty()) return 0.0;
    std::size_t c = 0;
    for (const auto& r : rows) c += r.contained_band;
    return static_cast<double>(c) / static_cast<double>(rows.size());
}

double BacktestReport::region_rate() const {
    if (rows.empty()) return 0.0;
    std::size_t c = 0;
    for (const auto& r : rows) c += r.contained_region;
    return static_cast<double>(c) / static_cast<double>(rows.size());
}

std::size_t BacktestReport::violations() const {
    std::size_t v = 0;
    for (const auto& r : rows) v += r.contained_band && r.equilibrium && !r.contained_region;
    return v;
}

namespace {

void check_backtest_input(const std::vector<AuctionBook>& books, const MarketConfig& cfg, double alpha) {
    cfg.validate();
    if (!(alpha > 0.0 && alpha < 1.0)) throw ArgumentError("alpha must be in (0, 1)");
    if (books.size() < cfg.window + 1)
        throw ArgumentError("rolling_backtest: need at least " + std::to_string(cfg.window + 1) +
                            " consecutive days, got " + std::to_string(books.size()));
}

}  // namespace

BacktestReport rolling_backtest(const std::vector<AuctionBook>& books, const MarketConfig& cfg, double alpha,
                                int threads) {
    check_backtest_input(books, cfg, alpha);
    const auto days = prepare_days(books, cfg);
    BacktestReport report{alpha, std::vector<BacktestRow>(days.size() - cfg.window)};
    parallel_for(report.rows.size(), threads, "day", [&](std::size_t i) {
        report.rows[i] = backtest_row(compute_artifact(days, cfg.window + i, cfg), alpha, cfg);
    });
    return report;
}

BacktestReport rolling_backtest_serial(const std::vector<AuctionBook>& books, const MarketConfig& cfg,
                                       double alpha) {
    check_backtest_input(books, cfg, alpha);
    const auto days = prepare_days(books, cfg);
    BacktestReport report{alpha, {}};
    for (std::size_t t = cfg.window; t < days.size(); ++t)
        report.rows.push_back(backtest_row(compute_artifact(days, t, cfg), alpha, cfg));
    return report;
}

void write_backtest_csv(std::ostream& out, const BacktestReport& report, const MarketConfig& cfg) {
    out << "day,k,band_size_offer,band_size_demand,contained_band,contained_region,Q,P";
    for (const auto& [a, z] : cfg.size_ranges) {
        const std::string tag = format_double(a) + "_" + format_double(z);
        out << ",size_offer_" << tag << ",size_demand_" << tag;
    }
    out << '\n';
    for (const auto& r : report.rows) {
        out << r.day.str() << ',' << format_double(r.k) << ',' << format_double(r.size_offer) << ','
            << format_double(r.size_demand) << ',' << r.contained_band << ',' << r.contained_region << ',';
        if (r.equilibrium) out << format_double(r.equilibrium->quantity) << ',' << format_double(r.equilibrium->price);
        else out << ',';
        for (double s : r.range_sizes) out << ',' << format_double(s);
        out << '\n';
    }
    out << "# summary\n";
    out << "# days," << report.rows.size() << '\n';
    out << "# alpha," << format_double(report.alpha) << '\n';
    out << "# window," << cfg.window << "\n# l," << cfg.l << "\n# b," << cfg.b << "\n# m," << cfg.m() << '\n';
    out << "# price_rule," << price_rule_name(cfg.rule) << '\n';
    out << "# band_containment," << format_double(report.band_rate()) << '\n';
    out << "# region_containment," << format_double(report.region_rate()) << '\n';
    out << "# region_violations," << report.violations() << '\n';
    for (std::size_t r = 0; r < cfg.size_ranges.size(); ++r) {
        for (std::size_t j = 0; j < 2; ++j) {
            double sum = 0.0;
            for (const auto& row : report.rows) sum += row.range_sizes[2 * r + j];
            const double mean = report.rows.empty() ? 0.0 : sum / static_cast<double>(report.rows.size());
            out << "# mean_size_" << (j == 0 ? "offer_" : "demand_") << format_double(cfg.size_ranges[r].first)
                << '_' << format_double(cfg.size_ranges[r].second) << ',' << format_double(mean) << '\n';
        }
    }
}

}  // namespace fband::market
