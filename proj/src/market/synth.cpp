#include "fband/market/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "fband/dgp.hpp"
#include "fband/error.hpp"

namespace fband::market {

void SynthConfig::validate() const {
    if (days == 0) throw ArgumentError("synth: days must be positive");
    if (sellers == 0 || buyers == 0) throw ArgumentError("synth: need at least one seller and one buyer");
    if (!(participation > 0.0 && participation <= 1.0)) throw ArgumentError("synth: participation must be in (0, 1]");
    if (!(std::abs(level_ar) < 1.0)) throw ArgumentError("synth: level_ar must be in (-1, 1)");
    if (!(min_qty >= 1.0 && max_qty >= min_qty)) throw ArgumentError("synth: need 1 <= min_qty <= max_qty");
    if (!(agent_min_qty >= 1.0 && agent_max_qty >= agent_min_qty))
        throw ArgumentError("synth: need 1 <= agent_min_qty <= agent_max_qty");
    if (level_sd < 0.0 || price_noise_sd < 0.0 || markup_halfwidth < 0.0)
        throw ArgumentError("synth: spreads must be non-negative");
}

std::vector<AuctionBook> generate_books(const SynthConfig& cfg) {
    cfg.validate();
    Rng rng(derive_seed(cfg.seed, 0xB00C));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto uniform = [&](double a, double b) { return a + (b - a) * unit(rng); };
    auto round_price = [](double p) { return std::max(0.001, std::round(p * 1000.0) / 1000.0); };
    auto round_qty = [](double q) { return std::max(1.0, std::round(q)); };

    std::vector<double> sell_markup(cfg.sellers), buy_markup(cfg.buyers);
    for (double& u : sell_markup) u = uniform(-cfg.markup_halfwidth, cfg.markup_halfwidth);
    for (double& v : buy_markup) v = uniform(-cfg.markup_halfwidth, cfg.markup_halfwidth);

    const double stationary_sd = cfg.level_sd / std::sqrt(1.0 - cfg.level_ar * cfg.level_ar);
    double level = stationary_sd * normal(rng);

    std::vector<AuctionBook> books;
    books.reserve(cfg.days);
    Date day = cfg.start;
    for (std::size_t d = 0; d < cfg.days; ++d, day = day.next()) {
        if (d > 0) level = cfg.level_ar * level + cfg.level_sd * normal(rng);
        const double mid = cfg.base_price + level;
        AuctionBook book;
        book.day = day;
        auto post = [&](Side side, double price, double qty, std::string op) {
            book.orders.push_back(Order{side, round_price(price), round_qty(qty), day, std::move(op)});
        };
        for (std::size_t i = 0; i < cfg.sellers; ++i) {
            const bool active = unit(rng) < cfg.participation;
            const double price = mid + sell_markup[i] + cfg.price_noise_sd * normal(rng);
            const double qty = uniform(cfg.min_qty, cfg.max_qty);
            if (active) post(Side::offer, price, qty, "S" + std::to_string(i));
        }
        for (std::size_t i = 0; i < cfg.buyers; ++i) {
            const bool active = unit(rng) < cfg.participation;
            const double price = mid + buy_markup[i] + cfg.price_noise_sd * normal(rng);
            const double qty = uniform(cfg.min_qty, cfg.max_qty);
            if (active) post(Side::bid, price, qty, "B" + std::to_string(i));
        }
        if (cfg.pipeline_agent) {
            // The agent balances the network: cheap offers to sell surplus,
            // expensive bids to buy shortfall.
            const double u_offer = unit(rng), u_bid = unit(rng);
            const double q_offer = uniform(cfg.agent_min_qty, cfg.agent_max_qty);
            const double q_bid = uniform(cfg.agent_min_qty, cfg.agent_max_qty);
            const double p_offer = uniform(0.1, 1.0), p_bid = uniform(1.5, 2.0) * cfg.base_price;
            if (u_offer < cfg.agent_activity) post(Side::offer, p_offer, q_offer, "PIPE");
            if (u_bid < cfg.agent_activity) post(Side::bid, p_bid, q_bid, "PIPE");
        }
        // Both sides must be present for a curve.
        if (book.count(Side::offer) == 0) post(Side::offer, mid, cfg.max_qty, "S0");
        if (book.count(Side::bid) == 0) post(Side::bid, mid, cfg.max_qty, "B0");
        books.push_back(std::move(book));
    }
    return books;
}

}  // namespace fband::market
