#pragma once

// Daily auction books and their on-disk formats.
//
// XML, version 1:
//   <auction day="YYYY-MM-DD" version="1">
//     <order side="offer|bid" price="…" qty="…" op="…"/>
//   </auction>
// `version` and `op` are optional. CSV: header `day,side,price,qty,op`, one
// order per row, op may be empty.

#include <chrono>
#include <compare>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace fband::market {

struct Date {
    std::chrono::sys_days days{};

    static Date parse(std::string_view text);   // strict YYYY-MM-DD
    static Date from_ymd(int y, unsigned m, unsigned d);
    std::string str() const;
    Date next() const { return Date{days + std::chrono::days{1}}; }
    long serial() const { return static_cast<long>(days.time_since_epoch().count()); }

    auto operator<=>(const Date&) const = default;
};

enum class Side { offer, bid };

std::string_view side_name(Side side);

struct Order {
    Side side = Side::offer;
    double price = 0.0;      // Euro/MWh
    double quantity = 0.0;   // MWh
    Date day;
    std::optional<std::string> op;

    bool operator==(const Order&) const = default;
};

struct AuctionBook {
    Date day;
    std::vector<Order> orders;

    std::size_t count(Side side) const;
    bool operator==(const AuctionBook&) const = default;
};

enum class BookFormat { xml, csv };

/// Throws ParseError with an element path (and line where known) on any
/// malformed input, including a book without orders.
AuctionBook parse_book(std::string_view text, BookFormat format);
/// CSV holding several days, one book per day in date order.
std::vector<AuctionBook> parse_books_csv(std::string_view text);

std::string serialize_book(const AuctionBook& book, BookFormat format);

/// Format chosen by extension (.xml or .csv).
AuctionBook read_book_file(const std::filesystem::path& path);
void write_book_file(const std::filesystem::path& path, const AuctionBook& book);
/// Every .xml/.csv book in a directory, sorted by day. Duplicate days are an error.
std::vector<AuctionBook> read_book_dir(const std::filesystem::path& dir);

/// Checks an order against the domain rules (finite price >= 0, quantity > 0).
void validate_order(const Order& order);

}  // namespace fband::market
