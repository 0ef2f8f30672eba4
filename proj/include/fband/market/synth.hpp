#pragma once

// Synthetic daily auction books: a persistent AR(1) price level, a fixed pool
// of traders with their own markups, and an optional pipeline-manager-like
// agent that posts large orders at extreme prices.

#include <cstdint>
#include <vector>

#include "fband/market/book.hpp"

namespace fband::market {

struct SynthConfig {
    Date start = Date::from_ymd(2017, 1, 1);
    std::size_t days = 420;
    std::uint64_t seed = 1;

    std::size_t sellers = 40;
    std::size_t buyers = 40;
    double participation = 0.9;     // chance a trader posts on a given day
    double base_price = 20.0;       // Euro/MWh
    double level_ar = 0.6;
    double level_sd = 1.5;          // innovation sd of the AR(1) level
    double markup_halfwidth = 8.0;  // trader markups ~ U(-h, h)
    double price_noise_sd = 1.5;
    double min_qty = 4000.0;        // MWh
    double max_qty = 9000.0;

    bool pipeline_agent = true;
    double agent_activity = 0.7;
    double agent_min_qty = 5000.0;
    double agent_max_qty = 25000.0;

    void validate() const;
};

/// One book per consecutive day starting at cfg.start. Prices are rounded to
/// 0.001 Euro/MWh, quantities to whole MWh.
std::vector<AuctionBook> generate_books(const SynthConfig& cfg);

}  // namespace fband::market
