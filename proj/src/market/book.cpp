#include "fband/market/book.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "fband/columnar.hpp"
#include "fband/error.hpp"

namespace fband::market {

namespace pt = boost::property_tree;

Date Date::from_ymd(int y, unsigned m, unsigned d) {
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
    if (!ymd.ok()) throw ArgumentError("invalid calendar date");
    return Date{std::chrono::sys_days{ymd}};
}

Date Date::parse(std::string_view text) {
    auto bad = [&] { return ArgumentError("invalid date '" + std::string(text) + "', expected YYYY-MM-DD"); };
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') throw bad();
    auto field = [&](std::size_t pos, std::size_t len) {
        unsigned v = 0;
        const char* b = text.data() + pos;
        auto [ptr, ec] = std::from_chars(b, b + len, v);
        if (ec != std::errc() || ptr != b + len) throw bad();
        return v;
    };
    const unsigned y = field(0, 4), m = field(5, 2), d = field(8, 2);
    const std::chrono::year_month_day ymd{std::chrono::year{static_cast<int>(y)}, std::chrono::month{m},
                                          std::chrono::day{d}};
    if (!ymd.ok()) throw bad();
    return Date{std::chrono::sys_days{ymd}};
}

std::string Date::str() const {
    const std::chrono::year_month_day ymd{days};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

std::string_view side_name(Side side) { return side == Side::offer ? "offer" : "bid"; }

std::size_t AuctionBook::count(Side side) const {
    return static_cast<std::size_t>(
        std::count_if(orders.begin(), orders.end(), [&](const Order& o) { return o.side == side; }));
}

void validate_order(const Order& order) {
    if (!std::isfinite(order.price) || order.price < 0.0)
        throw ArgumentError("order price must be finite and non-negative");
    if (!std::isfinite(order.quantity) || !(order.quantity > 0.0))
        throw ArgumentError("order quantity must be finite and positive");
}

namespace {

double parse_real(const std::string& raw, const std::string& path, long line) {
    const auto first = raw.find_first_not_of(" \t");
    const auto last = raw.find_last_not_of(" \t");
    if (first == std::string::npos) throw ParseError(path, line, "empty numeric value");
    const char* b = raw.data() + first;
    const char* e = raw.data() + last + 1;
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || ptr != e || !std::isfinite(v))
        throw ParseError(path, line, "non-numeric value '" + raw + "'");
    return v;
}

Side parse_side(const std::string& raw, const std::string& path, long line) {
    if (raw == "offer") return Side::offer;
    if (raw == "bid") return Side::bid;
    throw ParseError(path, line, "side must be 'offer' or 'bid', got '" + raw + "'");
}

Order checked(Order o, const std::string& path, long line) {
    try {
        validate_order(o);
    } catch (const ArgumentError& e) {
        throw ParseError(path, line, e.what());
    }
    return o;
}

AuctionBook parse_xml(std::string_view text) {
    pt::ptree tree;
    try {
        std::istringstream in{std::string(text)};
        pt::read_xml(in, tree, pt::xml_parser::trim_whitespace);
    } catch (const pt::xml_parser_error& e) {
        throw ParseError("document", static_cast<long>(e.line()), "malformed markup: " + e.message());
    }
    std::size_t roots = 0;
    for (const auto& [key, _] : tree)
        if (key != "<xmlcomment>") ++roots;
    if (roots != 1 || tree.count("auction") != 1)
        throw ParseError("document", 0, "expected a single <auction> root element");

    const pt::ptree& root = tree.get_child("auction");
    AuctionBook book;
    const auto day_attr = root.get_optional<std::string>("<xmlattr>.day");
    if (!day_attr) throw ParseError("auction", 0, "missing mandatory attribute 'day'");
    try {
        book.day = Date::parse(*day_attr);
    } catch (const ArgumentError& e) {
        throw ParseError("auction@day", 0, e.what());
    }
    if (const auto ver = root.get_optional<std::string>("<xmlattr>.version"); ver && *ver != "1")
        throw ParseError("auction@version", 0, "unsupported schema version '" + *ver + "'");
    if (!root.data().empty()) throw ParseError("auction", 0, "unexpected text content");

    std::size_t index = 0;
    for (const auto& [key, child] : root) {
        if (key == "<xmlattr>" || key == "<xmlcomment>") continue;
        const std::string path = "auction/" + key + "[" + std::to_string(index) + "]";
        if (key != "order") throw ParseError(path, 0, "unexpected element <" + key + ">");
        ++index;
        if (!child.data().empty()) throw ParseError(path, 0, "unexpected text content");
        for (const auto& [ck, _] : child)
            if (ck != "<xmlattr>" && ck != "<xmlcomment>") throw ParseError(path, 0, "unexpected child <" + ck + ">");
        auto attr = [&](const char* name) -> std::string {
            const auto v = child.get_optional<std::string>(std::string("<xmlattr>.") + name);
            if (!v) throw ParseError(path, 0, std::string("missing mandatory attribute '") + name + "'");
            return *v;
        };
        Order o;
        o.day = book.day;
        o.side = parse_side(attr("side"), path + "@side", 0);
        o.price = parse_real(attr("price"), path + "@price", 0);
        o.quantity = parse_real(attr("qty"), path + "@qty", 0);
        if (const auto op = child.get_optional<std::string>("<xmlattr>.op"); op && !op->empty()) o.op = *op;
        book.orders.push_back(checked(std::move(o), path, 0));
    }
    if (book.orders.empty()) throw ParseError("auction", 0, "no orders");
    return book;
}

std::vector<std::string> split_csv_row(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

std::vector<Order> parse_csv_orders(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line;
    long lineno = 0;
    bool header = false;
    std::vector<Order> orders;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (!header) {
            if (line != "day,side,price,qty,op")
                throw ParseError("header", lineno, "expected header 'day,side,price,qty,op'");
            header = true;
            continue;
        }
        const auto fields = split_csv_row(line);
        const std::string path = "row " + std::to_string(orders.size());
        if (fields.size() != 5) throw ParseError(path, lineno, "expected 5 fields, got " + std::to_string(fields.size()));
        Order o;
        try {
            o.day = Date::parse(fields[0]);
        } catch (const ArgumentError& e) {
            throw ParseError(path + "/day", lineno, e.what());
        }
        o.side = parse_side(fields[1], path + "/side", lineno);
        o.price = parse_real(fields[2], path + "/price", lineno);
        o.quantity = parse_real(fields[3], path + "/qty", lineno);
        if (!fields[4].empty()) o.op = fields[4];
        orders.push_back(checked(std::move(o), path, lineno));
    }
    if (!header) throw ParseError("header", 0, "missing header");
    if (orders.empty()) throw ParseError("document", 0, "no orders");
    return orders;
}

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&apos;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

std::vector<AuctionBook> parse_books_csv(std::string_view text) {
    std::map<Date, AuctionBook> by_day;
    for (auto& o : parse_csv_orders(text)) {
        auto& book = by_day[o.day];
        book.day = o.day;
        book.orders.push_back(std::move(o));
    }
    std::vector<AuctionBook> out;
    for (auto& [_, b] : by_day) out.push_back(std::move(b));
    return out;
}

AuctionBook parse_book(std::string_view text, BookFormat format) {
    if (text.find_first_not_of(" \t\r\n") == std::string_view::npos)
        throw ParseError("document", 0, "no orders");
    if (format == BookFormat::xml) {
        try {
            return parse_xml(text);
        } catch (const ParseError&) {
            throw;
        } catch (const std::exception& e) {
            throw ParseError("document", 0, std::string("malformed book: ") + e.what());
        }
    }
    auto books = parse_books_csv(text);
    if (books.size() != 1)
        throw ParseError("document", 0, "expected one day per book, found " + std::to_string(books.size()));
    return std::move(books.front());
}

std::string serialize_book(const AuctionBook& book, BookFormat format) {
    std::string out;
    if (format == BookFormat::xml) {
        out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
        out += "<auction day=\"" + book.day.str() + "\" version=\"1\">\n";
        for (const auto& o : book.orders) {
            out += "  <order side=\"" + std::string(side_name(o.side)) + "\" price=\"" + format_double(o.price) +
                   "\" qty=\"" + format_double(o.quantity) + "\"";
            if (o.op) out += " op=\"" + xml_escape(*o.op) + "\"";
            out += "/>\n";
        }
        out += "</auction>\n";
    } else {
        out += "day,side,price,qty,op\n";
        for (const auto& o : book.orders) {
            if (o.op && o.op->find_first_of(",\n\r") != std::string::npos)
                throw ArgumentError("operator names written to CSV cannot contain commas or newlines");
            out += o.day.str() + "," + std::string(side_name(o.side)) + "," + format_double(o.price) + "," +
                   format_double(o.quantity) + "," + o.op.value_or("") + "\n";
        }
    }
    return out;
}

AuctionBook read_book_file(const std::filesystem::path& path) {
    const auto ext = path.extension().string();
    BookFormat fmt;
    if (ext == ".xml") fmt = BookFormat::xml;
    else if (ext == ".csv") fmt = BookFormat::csv;
    else throw ParseError(path.string(), 0, "unknown book format (expected .xml or .csv)");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(path.string(), 0, "cannot open book file");
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
        return parse_book(ss.str(), fmt);
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ":" + e.path(), e.line(), e.message());
    }
}

void write_book_file(const std::filesystem::path& path, const AuctionBook& book) {
    const auto ext = path.extension().string();
    const BookFormat fmt = ext == ".csv" ? BookFormat::csv : BookFormat::xml;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ArgumentError("cannot write " + path.string());
    out << serialize_book(book, fmt);
}

std::vector<AuctionBook> read_book_dir(const std::filesystem::path& dir) {
    std::vector<AuctionBook> books;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        const auto ext = entry.path().extension().string();
        if (entry.is_regular_file() && (ext == ".xml" || ext == ".csv")) books.push_back(read_book_file(entry.path()));
    }
    std::sort(books.begin(), books.end(), [](const auto& a, const auto& b) { return a.day < b.day; });
    for (std::size_t i = 1; i < books.size(); ++i)
        if (books[i].day == books[i - 1].day) throw ArgumentError("duplicate book for day " + books[i].day.str());
    return books;
}

}  // namespace fband::market
