#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "fband/error.hpp"
#include "fband/market/artifact.hpp"
#include "fband/market/backtest.hpp"
#include "fband/market/book.hpp"
#include "fband/market/curves.hpp"
#include "fband/market/region.hpp"
#include "fband/market/synth.hpp"

using namespace fband;
using namespace fband::market;

namespace {

const Date kDay = Date::from_ymd(2018, 3, 14);

Order order(Side side, double price, double qty) { return Order{side, price, qty, kDay, std::nullopt}; }

AuctionBook example_book() {
    return AuctionBook{kDay,
                       {order(Side::offer, 5, 10), order(Side::offer, 10, 10), order(Side::bid, 12, 15),
                        order(Side::bid, 4, 10)}};
}

AuctionBook random_book(std::mt19937_64& rng, std::size_t n_per_side, int price_levels) {
    std::uniform_int_distribution<int> level(0, price_levels - 1);
    std::uniform_real_distribution<double> qty(1.0, 50.0);
    AuctionBook book{kDay, {}};
    for (std::size_t i = 0; i < n_per_side; ++i) {
        book.orders.push_back(order(Side::offer, 2.0 * level(rng), std::round(qty(rng))));
        book.orders.push_back(order(Side::bid, 2.0 * level(rng) + 1.0, std::round(qty(rng))));
    }
    return book;
}

// Per-order construction without merging: the price of the first order whose
// cumulative quantity passes q.
double naive_at(std::vector<Order> orders, Side side, double q) {
    std::stable_sort(orders.begin(), orders.end(), [&](const Order& a, const Order& b) {
        return side == Side::offer ? a.price < b.price : a.price > b.price;
    });
    double cum = 0.0;
    for (const auto& o : orders) {
        if (o.side != side) continue;
        cum += o.quantity;
        if (q < cum) return o.price;
    }
    return std::numeric_limits<double>::quiet_NaN();
}

bool monotone(std::span<const double> v, Direction d) {
    for (std::size_t i = 1; i < v.size(); ++i)
        if (d == Direction::increasing ? v[i] < v[i - 1] : v[i] > v[i - 1]) return false;
    return true;
}

std::filesystem::path data_dir() { return std::filesystem::path(FBAND_TEST_DATA); }

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("dates") {
    CHECK(Date::parse("2018-03-14") == kDay);
    CHECK(kDay.next().str() == "2018-03-15");
    CHECK(Date::parse("2016-02-28").next().str() == "2016-02-29");
    CHECK_THROWS_AS(Date::parse("2018-3-14"), ArgumentError);
    CHECK_THROWS_AS(Date::parse("2018-02-30"), ArgumentError);
}

TEST_CASE("parse a hand-written XML book") {
    const std::string xml = R"(<?xml version="1.0"?>
<auction day="2018-03-14" version="1">
  <order side="offer" price="5" qty="10" op="A"/>
  <order side="offer" price="10" qty="10"/>
  <order side="bid" price="12" qty="15"/>
  <order side="bid" price="4" qty="10" op="B"/>
</auction>)";
    const auto book = parse_book(xml, BookFormat::xml);
    CHECK(book.day == kDay);
    REQUIRE(book.orders.size() == 4);
    CHECK(book.count(Side::offer) == 2);
    CHECK(book.count(Side::bid) == 2);
    CHECK(book.orders[0].op == "A");
    CHECK_FALSE(book.orders[1].op.has_value());
    CHECK(book.orders[2].price == 12.0);
    CHECK(book.orders[3].quantity == 10.0);
    CHECK(parse_book(serialize_book(book, BookFormat::xml), BookFormat::xml) == book);
    CHECK(parse_book(serialize_book(book, BookFormat::csv), BookFormat::csv) == book);
}

TEST_CASE("parse errors carry a location") {
    CHECK_THROWS_WITH_AS(parse_book(R"(<auction day="2018-03-14"></auction>)", BookFormat::xml),
                         doctest::Contains("no orders"), ParseError);
    CHECK_THROWS_WITH_AS(parse_book("", BookFormat::xml), doctest::Contains("no orders"), ParseError);
    CHECK_THROWS_WITH_AS(parse_book("<auction day=\"2018-03-14\">\n<order side=\"bid\" price=\"1\" qty=\"2\">\n",
                                    BookFormat::xml),
                         doctest::Contains("line"), ParseError);
    CHECK_THROWS_WITH_AS(
        parse_book(R"(<auction day="2018-03-14"><order side="bid" qty="2"/></auction>)", BookFormat::xml),
        doctest::Contains("'price' at auction/order[0]"), ParseError);
    CHECK_THROWS_WITH_AS(parse_book(R"(<auction day="2018-03-14"><order side="bid" price="1" qty="2"/>)"
                                    R"(<order side="offer" price="abc" qty="2"/></auction>)",
                                    BookFormat::xml),
                         doctest::Contains("auction/order[1]@price"), ParseError);
    CHECK_THROWS_WITH_AS(parse_book(R"(<auction day="2018-03-14"><order side="ask" price="1" qty="2"/></auction>)",
                                    BookFormat::xml),
                         doctest::Contains("@side"), ParseError);
    CHECK_THROWS_WITH_AS(parse_book(R"(<auction day="2018-03-14"><order side="bid" price="1" qty="-2"/></auction>)",
                                    BookFormat::xml),
                         doctest::Contains("quantity must be finite and positive at auction/order[0]"), ParseError);
    CHECK_THROWS_AS(parse_book(R"(<auction><order side="bid" price="1" qty="2"/></auction>)", BookFormat::xml),
                    ParseError);
    CHECK_THROWS_WITH_AS(parse_book("day,side,price,qty,op\n2018-03-14,bid,x,3,\n", BookFormat::csv),
                         doctest::Contains("line 2"), ParseError);
}

TEST_CASE("multi-day CSV") {
    const std::string csv =
        "day,side,price,qty,op\n2018-03-15,bid,3,4,\n2018-03-14,offer,1,2,X\n2018-03-14,bid,3,4,\n"
        "2018-03-15,offer,1,2,\n";
    const auto books = parse_books_csv(csv);
    REQUIRE(books.size() == 2);
    CHECK(books[0].day == kDay);
    CHECK(books[1].orders.size() == 2);
}

TEST_CASE("golden book of 1000 synthetic orders round-trips") {
    const auto path = data_dir() / "golden_1000.xml";
    const std::string text = read_file(path);
    const auto book = parse_book(text, BookFormat::xml);
    CHECK(book.orders.size() == 1000);
    CHECK(serialize_book(book, BookFormat::xml) == text);
    const auto again = parse_book(serialize_book(book, BookFormat::csv), BookFormat::csv);
    REQUIRE(again.orders.size() == book.orders.size());
    for (std::size_t i = 0; i < book.orders.size(); ++i) REQUIRE(again.orders[i] == book.orders[i]);
    CHECK(read_book_file(path) == book);
}

TEST_CASE("fuzzed documents either parse or raise a parse error") {
    const std::string base = serialize_book(example_book(), BookFormat::xml);
    std::mt19937_64 rng(123);
    const std::string alphabet = "<>/=\"' abcdefqy0123456789.-eE\n&;";
    std::size_t parsed = 0, rejected = 0;
    for (int i = 0; i < 2000; ++i) {
        std::string doc = base;
        const int edits = 1 + static_cast<int>(rng() % 4);
        for (int e = 0; e < edits && !doc.empty(); ++e) {
            const std::size_t pos = rng() % doc.size();
            switch (rng() % 3) {
                case 0: doc.erase(pos, 1 + rng() % 3); break;
                case 1: doc.insert(pos, 1, alphabet[rng() % alphabet.size()]); break;
                default: doc[pos] = alphabet[rng() % alphabet.size()]; break;
            }
        }
        try {
            const auto book = parse_book(doc, BookFormat::xml);
            for (const auto& o : book.orders) CHECK_NOTHROW(validate_order(o));
            ++parsed;
        } catch (const ParseError&) {
            ++rejected;
        }
    }
    CHECK(parsed + rejected == 2000);
    CHECK(rejected > 0);
}

TEST_CASE("step curves from the example book") {
    const auto curves = build_curves(example_book());
    CHECK(curves.offer.at(0) == 5);
    CHECK(curves.offer.at(9.99) == 5);
    CHECK(curves.offer.at(10) == 10);
    CHECK(curves.offer.at(20) == 10);
    CHECK(curves.offer.total() == 20);
    CHECK(std::isinf(curves.offer.at(20.5)));
    CHECK(curves.offer.at(20.5, 30.0) == 10);
    CHECK(curves.demand.at(14.9) == 12);
    CHECK(curves.demand.at(15) == 4);
    CHECK(curves.demand.at(25) == 4);
    CHECK(curves.demand.at(26) == -std::numeric_limits<double>::infinity());
    CHECK(curves.offer.left_limit(10) == 5);
    CHECK(curves.offer.right_limit(10) == 10);
    CHECK_THROWS_AS(StepCurve(Direction::increasing, {5, 10}, {3, 2}), ArgumentError);
    CHECK_THROWS_AS(build_curves(AuctionBook{kDay, {order(Side::offer, 1, 1)}}), ArgumentError);
}

TEST_CASE("equal-price orders merge and match per-order construction") {
    std::mt19937_64 rng(31);
    for (int rep = 0; rep < 300; ++rep) {
        const auto book = random_book(rng, 1 + rep % 25, 6);
        const auto curves = build_curves(book);
        REQUIRE(monotone(curves.offer.prices(), Direction::increasing));
        REQUIRE(monotone(curves.demand.prices(), Direction::decreasing));
        for (std::size_t k = 1; k < curves.offer.prices().size(); ++k)
            REQUIRE(curves.offer.prices()[k] > curves.offer.prices()[k - 1]);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int j = 0; j < 40; ++j) {
            const double qo = u(rng) * curves.offer.total() * 0.999999;
            const double qd = u(rng) * curves.demand.total() * 0.999999;
            REQUIRE(curves.offer.at(qo) == naive_at(book.orders, Side::offer, qo));
            REQUIRE(curves.demand.at(qd) == naive_at(book.orders, Side::bid, qd));
        }
    }
}

TEST_CASE("equilibrium examples") {
    const auto c = build_curves(example_book());
    const auto mid = equilibrium(c.offer, c.demand);
    REQUIRE(mid);
    CHECK(mid->quantity == 15);
    CHECK(mid->price == 10);
    const auto gap = equilibrium(c.offer, c.demand, PriceRule::gap_midpoint);
    REQUIRE(gap);
    CHECK(gap->quantity == 15);
    CHECK(gap->price == 11);
    CHECK(equilibrium(c.offer, c.demand, PriceRule::marginal_offer)->price == 10);

    const StepCurve high(Direction::increasing, {10}, {50});
    const StepCurve low(Direction::decreasing, {10}, {20});
    CHECK_FALSE(equilibrium(high, low).has_value());

    const StepCurve o(Direction::increasing, {10}, {7});
    const StepCurve d(Direction::decreasing, {10}, {7});
    for (PriceRule rule : {PriceRule::crossing_midpoint, PriceRule::gap_midpoint, PriceRule::marginal_offer})
        CHECK(equilibrium(o, d, rule)->price == 7);

    // The curves never cross inside the domain.
    const StepCurve dem(Direction::decreasing, {10}, {60});
    CHECK(equilibrium(o, dem).has_value());
    CHECK_FALSE(equilibrium(o, dem, PriceRule::crossing_midpoint, 100.0).has_value());
    CHECK(parse_price_rule("gap_midpoint") == PriceRule::gap_midpoint);
    CHECK_THROWS_AS(parse_price_rule("vwap"), ArgumentError);
}

TEST_CASE("equilibrium separates the grid") {
    std::mt19937_64 rng(8);
    const Grid g(0.0, 2000.0, 401);
    int found = 0;
    for (int rep = 0; rep < 300; ++rep) {
        const auto c = build_curves(random_book(rng, 20, 12));
        const auto eq = equilibrium(c.offer, c.demand, PriceRule::crossing_midpoint, g.hi());
        if (!eq) continue;
        ++found;
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double q = g.point(i);
            const double o = c.offer.at(q, g.hi()), dq = c.demand.at(q, g.hi());
            if (q < eq->quantity) REQUIRE(dq >= o);
            if (q > eq->quantity) REQUIRE(dq < o);
        }
        REQUIRE(eq->price >= c.offer.left_limit(eq->quantity, g.hi()));
        REQUIRE(eq->price <= c.demand.left_limit(eq->quantity, g.hi()));
    }
    CHECK(found > 100);
}

TEST_CASE("tightening examples") {
    const std::vector<double> lo{0, 1, 0.5}, hi{2, 3, 4};
    auto t = tighten_band(lo, hi, Direction::increasing);
    CHECK(t.lower == std::vector<double>{0, 1, 1});
    CHECK(t.upper == hi);
    CHECK_FALSE(t.empty);
    const std::vector<double> mlo{0, 1, 2}, mhi{1, 2, 3};
    t = tighten_band(mlo, mhi, Direction::increasing);
    CHECK(t.lower == mlo);
    CHECK(t.upper == mhi);
    t = tighten_band(std::vector<double>{5, 0, 0}, std::vector<double>{6, 1, 1}, Direction::increasing);
    CHECK(t.empty);
    t = tighten_band(std::vector<double>{0.5, 1, 0}, std::vector<double>{4, 3, 2}, Direction::decreasing);
    CHECK(t.lower == std::vector<double>{1, 1, 0});
}

TEST_CASE("tightening keeps exactly the monotone curves") {
    std::mt19937_64 rng(19);
    std::normal_distribution<double> normal;
    std::size_t inside_count = 0;
    for (int rep = 0; rep < 10000; ++rep) {
        const std::size_t n = 2 + rep % 12;
        const Direction dir = rep % 2 ? Direction::increasing : Direction::decreasing;
        const double sgn = dir == Direction::increasing ? 1.0 : -1.0;
        std::vector<double> center(n), lo(n), hi(n), curve(n);
        double level = 0.0, cl = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            level += sgn * std::abs(normal(rng));
            center[i] = level + 0.3 * normal(rng);
            const double w = 0.5 + std::abs(normal(rng));
            lo[i] = center[i] - w;
            hi[i] = center[i] + w;
            cl += sgn * std::abs(normal(rng));
            curve[i] = cl;
        }
        const double shift = center[0] - curve[0] + 0.5 * normal(rng);
        for (double& v : curve) v += shift;
        const auto t = tighten_band(lo, hi, dir);
        bool in_orig = true, in_tight = true;
        for (std::size_t i = 0; i < n; ++i) {
            REQUIRE(t.lower[i] >= lo[i]);
            REQUIRE(t.upper[i] <= hi[i]);
            in_orig = in_orig && lo[i] <= curve[i] && curve[i] <= hi[i];
            in_tight = in_tight && t.lower[i] <= curve[i] && curve[i] <= t.upper[i];
        }
        REQUIRE(in_orig == in_tight);
        inside_count += in_orig;
        REQUIRE(monotone(t.lower, dir));
        REQUIRE(monotone(t.upper, dir));
    }
    CHECK(inside_count > 500);
}

TEST_CASE("region of identical and disjoint bands") {
    const Grid g(0.0, 10.0, 6);
    TightenedBand offer{{1, 2, 3, 4, 5, 6}, {2, 3, 4, 5, 6, 7}, false};
    TightenedBand demand{{6, 5, 4, 3, 2, 1}, {7, 6, 5, 4, 3, 2}, false};
    const auto same = intersection_region(g, offer, offer);
    REQUIRE(same.intervals().size() == 6);
    for (const auto& iv : same.intervals()) {
        CHECK(iv.lo == offer.lower[iv.index]);
        CHECK(iv.hi == offer.upper[iv.index]);
    }
    const auto cross = intersection_region(g, offer, demand);
    CHECK_FALSE(cross.empty());
    CHECK(cross.contains(5.0, 4.0));
    CHECK_FALSE(cross.contains(5.0, 9.0));
    TightenedBand high{{20, 21, 22, 23, 24, 25}, {30, 31, 32, 33, 34, 35}, false};
    const auto none = intersection_region(g, high, demand);
    CHECK(none.empty());
    CHECK_FALSE(none.contains(5.0, 4.0));
}

TEST_CASE("crossing of band-contained curves lies in the region") {
    std::mt19937_64 rng(2718);
    std::normal_distribution<double> normal;
    const Grid g(0.0, 1000.0, 51);
    std::size_t checked = 0;
    for (int rep = 0; rep < 3000; ++rep) {
        const auto c = build_curves(random_book(rng, 12, 10));
        const auto eq = equilibrium(c.offer, c.demand, PriceRule::crossing_midpoint, g.hi());
        if (!eq) continue;
        const auto o = c.offer.on_grid(g), d = c.demand.on_grid(g);
        std::vector<double> olo(g.size()), ohi(g.size()), dlo(g.size()), dhi(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) {
            olo[i] = o[i] - std::abs(normal(rng));
            ohi[i] = o[i] + std::abs(normal(rng));
            dlo[i] = d[i] - std::abs(normal(rng));
            dhi[i] = d[i] + std::abs(normal(rng));
        }
        const auto region = intersection_region(g, tighten_band(olo, ohi, Direction::increasing),
                                                tighten_band(dlo, dhi, Direction::decreasing));
        REQUIRE(region.contains(eq->quantity, eq->price));
        ++checked;
    }
    CHECK(checked > 1000);
}

TEST_CASE("exact order injection") {
    const auto book = example_book();
    const auto c = build_curves(book);
    const auto d2 = inject_order(c.demand, 12, 20000);
    CHECK(d2.total() == c.demand.total() + 20000);
    auto extended = book;
    extended.orders.push_back(order(Side::bid, 12, 20000));
    CHECK(d2 == build_curves(extended).demand);
    CHECK(remove_order(d2, 12, 20000) == c.demand);
    CHECK_THROWS_AS(remove_order(c.demand, 12, 20000), ArgumentError);

    std::mt19937_64 rng(5);
    for (int rep = 0; rep < 500; ++rep) {
        auto b = random_book(rng, 1 + rep % 15, 8);
        const auto base = build_curves(b);
        const Side side = rep % 2 ? Side::offer : Side::bid;
        const double price = static_cast<double>(rng() % 18);
        const double qty = 1.0 + static_cast<double>(rng() % 40);
        const auto& curve = side == Side::offer ? base.offer : base.demand;
        const auto injected = inject_order(curve, price, qty);
        b.orders.push_back(order(side, price, qty));
        const auto rebuilt = build_curves(b);
        REQUIRE(injected == (side == Side::offer ? rebuilt.offer : rebuilt.demand));
        REQUIRE(injected.total() == curve.total() + qty);
        REQUIRE(remove_order(injected, price, qty) == curve);
    }
}

TEST_CASE("grid order injection") {
    const Grid g(0.0, 200.0, 201);
    const auto c = build_curves(example_book());
    const auto demand = c.demand.on_grid(g);
    const auto offer = c.offer.on_grid(g);
    CHECK(inject_order(g, demand, Direction::decreasing, 12, 0.0) == demand);
    CHECK(inject_order(g, demand, Direction::decreasing, 12, 0.4) == demand);
    CHECK(inject_order(g, demand, Direction::decreasing, 12, 3.4) == inject_order(g, demand, Direction::decreasing, 12, 3.0));

    std::mt19937_64 rng(77);
    for (int rep = 0; rep < 400; ++rep) {
        const Direction dir = rep % 2 ? Direction::increasing : Direction::decreasing;
        const auto& base = dir == Direction::increasing ? offer : demand;
        const double price = static_cast<double>(rng() % 16);
        const double qty = static_cast<double>(1 + rng() % 30);   // whole grid steps
        const auto out = inject_order(g, base, dir, price, qty);
        REQUIRE(monotone(out, dir));
        // More quantity at every price at-or-better than the order's.
        for (std::size_t i = 0; i < g.size(); ++i)
            REQUIRE((dir == Direction::decreasing ? out[i] >= base[i] : out[i] <= base[i]));
        const auto back = remove_order(g, out, dir, price, qty);
        for (std::size_t i = 0; g.point(i) <= g.hi() - qty; ++i) REQUIRE(back[i] == base[i]);
    }
    // The demand never drops below 1 inside the domain: the order lands past it.
    CHECK(inject_order(g, demand, Direction::decreasing, 1.0, 30.0) == demand);
    const auto big = inject_order(g, demand, Direction::decreasing, 1e6, 50.0);
    CHECK(big[0] == 1e6);
    CHECK(big[60] == demand[10]);
}

TEST_CASE("synthetic books") {
    SynthConfig cfg;
    cfg.days = 5;
    const auto books = generate_books(cfg);
    REQUIRE(books.size() == 5);
    CHECK(books[0].day == cfg.start);
    CHECK(books[4].day == Date::from_ymd(2017, 1, 5));
    for (const auto& b : books) {
        CHECK(b.count(Side::offer) > 0);
        CHECK(b.count(Side::bid) > 0);
        for (const auto& o : b.orders) {
            CHECK_NOTHROW(validate_order(o));
            CHECK(o.quantity == std::round(o.quantity));
        }
    }
    CHECK(generate_books(cfg) == books);
    cfg.participation = 1.5;
    CHECK_THROWS_AS(cfg.validate(), ArgumentError);
}

TEST_CASE("backtest structure") {
    MarketConfig cfg;
    CHECK(cfg.m() == 43);
    cfg.grid = Grid(0.0, 2e5, 80);
    SynthConfig sc;
    sc.days = 100;
    auto books = generate_books(sc);

    SUBCASE("gaps are listed") {
        auto gappy = books;
        gappy.erase(gappy.begin() + 10);
        gappy.erase(gappy.begin() + 20);
        try {
            check_consecutive(gappy);
            FAIL("expected gap error");
        } catch (const ArgumentError& e) {
            const std::string msg = e.what();
            CHECK(msg.find(books[10].day.str()) != std::string::npos);
            CHECK(msg.find(books[21].day.str()) != std::string::npos);
        }
        CHECK_THROWS_AS(rolling_backtest(gappy, cfg, 0.25), ArgumentError);
    }

    SUBCASE("too few days") {
        books.resize(90);
        CHECK_THROWS_AS(rolling_backtest(books, cfg, 0.25), ArgumentError);
    }

    SUBCASE("parallel equals serial") {
        const auto serial = rolling_backtest_serial(books, cfg, 0.25);
        const auto parallel = rolling_backtest(books, cfg, 0.25, 2);
        REQUIRE(serial.rows.size() == 10);
        CHECK(parallel.rows == serial.rows);
        CHECK(serial.region_rate() >= serial.band_rate());
        CHECK(serial.violations() == 0);
        std::ostringstream csv;
        write_backtest_csv(csv, serial, cfg);
        CHECK(csv.str().rfind("day,k,band_size_offer,band_size_demand,contained_band,contained_region,Q,P", 0) == 0);
        CHECK(csv.str().find("# summary") != std::string::npos);
    }

    SUBCASE("artifacts") {
        const auto days = prepare_days(books, cfg);
        const auto a = compute_artifact(days, 95, cfg);
        CHECK(a.m == 43);
        CHECK(a.scores.size() == 39);
        CHECK(a.day == books[95].day);
        CHECK(a.observed.has_value());
        const auto next = compute_artifact(days, days.size(), cfg);
        CHECK(next.day == books.back().day.next());
        CHECK_FALSE(next.observed.has_value());

        const auto back = artifact_from_json(artifact_to_json(a));
        CHECK(back.scores == a.scores);
        CHECK(back.day == a.day);
        CHECK(back.m == a.m);
        for (std::size_t j = 0; j < 2; ++j)
            for (std::size_t i = 0; i < cfg.grid.size(); ++i) {
                CHECK(back.center(j, i) == a.center(j, i));
                CHECK(back.modulation(j, i) == a.modulation(j, i));
            }
        auto j = artifact_to_json(a);
        j.erase("scores");
        CHECK_THROWS_WITH_AS(artifact_from_json(j), doctest::Contains("scores"), ParseError);

        const auto bands = evaluate_artifact(a, 0.25);
        const auto again = evaluate_artifact(back, 0.25);
        CHECK(bands.band.k() == again.band.k());
        CHECK(evaluate_artifact(a, 0.01).band.unbounded());
    }
}
