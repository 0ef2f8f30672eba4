#include "fband/server.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <optional>

#include <httplib.h>
#include <json.hpp>

#include "fband/columnar.hpp"
#include "fband/conformal.hpp"
#include "fband/error.hpp"
#include "fband/market/curves.hpp"
#include "fband/market/region.hpp"

namespace fband {

using nlohmann::json;
using namespace fband::market;

double payload_round(double v) {
    if (!std::isfinite(v) || v == 0.0) return v;
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 9);
    double out = 0.0;
    std::from_chars(buf, res.ptr, out);
    return out;
}

namespace {

json number(double v) {
    if (!std::isfinite(v)) return nullptr;
    return payload_round(v);
}

json numbers(const std::vector<double>& v) {
    json out = json::array();
    for (double x : v) out.push_back(number(x));
    return out;
}

json numbers(std::span<const double> v) { return numbers(std::vector<double>(v.begin(), v.end())); }

HttpResponse error_response(int status, const std::string& message) {
    return {status, json{{"error", message}, {"status", status}}.dump()};
}

json equilibrium_json(const std::optional<Equilibrium>& eq) {
    if (!eq) return nullptr;
    return json{{"Q", number(eq->quantity)}, {"P", number(eq->price)}};
}

json region_json(const PredictionRegion& region, const std::optional<Equilibrium>& observed) {
    json q = json::array(), lo = json::array(), hi = json::array();
    double pmin = INFINITY, pmax = -INFINITY;
    for (const auto& iv : region.intervals()) {
        q.push_back(number(iv.q));
        lo.push_back(number(iv.lo));
        hi.push_back(number(iv.hi));
        pmin = std::min(pmin, iv.lo);
        pmax = std::max(pmax, iv.hi);
    }
    json out{{"q", q}, {"lower", lo}, {"upper", hi}, {"empty", region.empty()}};
    if (!region.empty()) {
        out["bbox"] = {{"q", {number(region.intervals().front().q), number(region.intervals().back().q)}},
                       {"price", {number(pmin), number(pmax)}}};
    } else {
        out["bbox"] = nullptr;
    }
    out["observed"] = equilibrium_json(observed);
    out["contains_observed"] = observed ? json(region.contains(observed->quantity, observed->price)) : json(nullptr);
    return out;
}

std::optional<double> parse_double(const std::string& s) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

}  // namespace

struct BandService::Lookup {
    const DayArtifact* artifact = nullptr;
    double alpha = 0.0;
    std::optional<HttpResponse> error;
};

BandService::BandService(std::vector<DayArtifact> artifacts) {
    for (auto& a : artifacts) {
        const Date d = a.day;
        if (!artifacts_.emplace(d, std::move(a)).second) throw ArgumentError("duplicate artifact for " + d.str());
    }
}

BandService::Lookup BandService::lookup(const std::string& day, const std::string& alpha) const {
    Lookup out;
    if (day.empty()) {
        out.error = error_response(400, "missing parameter 'day'");
        return out;
    }
    Date d;
    try {
        d = Date::parse(day);
    } catch (const std::exception& e) {
        out.error = error_response(400, e.what());
        return out;
    }
    const auto it = artifacts_.find(d);
    if (it == artifacts_.end()) {
        out.error = error_response(404, "no artifact for day " + day);
        return out;
    }
    out.artifact = &it->second;
    const auto a = parse_double(alpha);
    const double bound = min_alpha(out.artifact->l, out.artifact->b);
    if (!a || !(*a > 0.0 && *a < 1.0)) {
        out.error = error_response(422, "alpha must be a number in (0, 1)");
    } else if (*a < bound * (1.0 - 1e-9)) {
        out.error = error_response(422, "alpha must be at least b/(l+1) = " + format_double(payload_round(bound)) +
                                            " (l=" + std::to_string(out.artifact->l) +
                                            ", b=" + std::to_string(out.artifact->b) + ")");
    }
    out.alpha = a.value_or(0.0);
    return out;
}

HttpResponse BandService::cached(const std::string& key, const std::function<HttpResponse()>& make) const {
    {
        std::lock_guard lock(cache_mutex_);
        if (auto it = cache_.find(key); it != cache_.end()) return {200, it->second};
    }
    HttpResponse r = make();
    if (r.status == 200) {
        std::lock_guard lock(cache_mutex_);
        cache_.emplace(key, r.body);   // first insertion wins; entries never change
        return {200, cache_.at(key)};
    }
    return r;
}

HttpResponse BandService::bands(const std::string& day, const std::string& alpha) const {
    const Lookup lk = lookup(day, alpha);
    if (lk.error) return *lk.error;
    return cached("bands|" + day + "|" + format_double(lk.alpha), [&] {
        const DayArtifact& a = *lk.artifact;
        const DayBands b = evaluate_artifact(a, lk.alpha);
        auto side = [&](std::size_t j, const TightenedBand& t) {
            return json{{"center", numbers(a.center.component(j))},
                        {"lower", numbers(t.lower)},
                        {"upper", numbers(t.upper)},
                        {"empty", t.empty}};
        };
        json body{{"day", a.day.str()},
                  {"alpha", lk.alpha},
                  {"l", a.l},
                  {"b", a.b},
                  {"k", number(b.band.k())},
                  {"grid", numbers(a.grid.points())},
                  {"offer", side(0, b.offer)},
                  {"demand", side(1, b.demand)}};
        if (a.observed) {
            auto inside = [&](std::size_t j, const TightenedBand& t) {
                const auto y = a.observed->component(j);
                for (std::size_t i = 0; i < y.size(); ++i)
                    if (y[i] < t.lower[i] || y[i] > t.upper[i]) return false;
                return true;
            };
            body["observed"] = {{"offer", numbers(a.observed->component(0))},
                                {"demand", numbers(a.observed->component(1))}};
            body["contained"] = {{"band", band_contains(b.band, *a.observed)},
                                 {"offer", inside(0, b.offer)},
                                 {"demand", inside(1, b.demand)}};
        } else {
            body["observed"] = nullptr;
            body["contained"] = nullptr;
        }
        return HttpResponse{200, body.dump()};
    });
}

HttpResponse BandService::region(const std::string& day, const std::string& alpha) const {
    const Lookup lk = lookup(day, alpha);
    if (lk.error) return *lk.error;
    return cached("region|" + day + "|" + format_double(lk.alpha), [&] {
        const DayArtifact& a = *lk.artifact;
        const DayBands b = evaluate_artifact(a, lk.alpha);
        json body = region_json(b.region, a.observed_equilibrium);
        body["day"] = a.day.str();
        body["alpha"] = lk.alpha;
        body["predicted"] = equilibrium_json(grid_crossing(a.grid, a.center.component(0), a.center.component(1)));
        return HttpResponse{200, body.dump()};
    });
}

HttpResponse BandService::whatif(const std::string& raw) const {
    json req;
    try {
        req = json::parse(raw);
    } catch (const std::exception&) {
        return error_response(400, "request body is not valid JSON");
    }
    if (!req.is_object()) return error_response(400, "request body must be a JSON object");
    for (const char* f : {"day", "alpha", "side", "price", "qty"})
        if (!req.contains(f)) return error_response(400, std::string("missing field '") + f + "'");
    if (!req["day"].is_string() || !req["side"].is_string())
        return error_response(400, "fields 'day' and 'side' must be strings");
    if (!req["alpha"].is_number() || !req["price"].is_number() || !req["qty"].is_number())
        return error_response(422, "fields 'alpha', 'price' and 'qty' must be numbers");
    const std::string side = req["side"].get<std::string>();
    if (side != "offer" && side != "bid") return error_response(422, "side must be 'offer' or 'bid'");
    const double price = req["price"].get<double>();
    const double qty = req["qty"].get<double>();
    if (!(qty > 0.0) || !std::isfinite(qty)) return error_response(422, "qty must be positive");
    if (!(price >= 0.0) || !std::isfinite(price)) return error_response(422, "price must be finite and non-negative");

    const Lookup lk = lookup(req["day"].get<std::string>(), format_double(req["alpha"].get<double>()));
    if (lk.error) return *lk.error;
    const DayArtifact& a = *lk.artifact;
    const DayBands b = evaluate_artifact(a, lk.alpha);

    const bool offer = side == "offer";
    const std::size_t j = offer ? 0 : 1;
    const Direction dir = offer ? Direction::increasing : Direction::decreasing;
    const TightenedBand& base = offer ? b.offer : b.demand;
    TightenedBand moved{inject_order(a.grid, base.lower, dir, price, qty),
                        inject_order(a.grid, base.upper, dir, price, qty), false};
    for (std::size_t i = 0; i < moved.lower.size(); ++i)
        if (moved.lower[i] > moved.upper[i]) moved.empty = true;
    const PredictionRegion modified =
        offer ? PredictionRegion(a.grid, moved, b.demand) : PredictionRegion(a.grid, b.offer, moved);
    auto center = a.center.components();
    center[j] = inject_order(a.grid, center[j], dir, price, qty);

    json body{{"day", a.day.str()},
              {"alpha", lk.alpha},
              {"order", {{"side", side}, {"price", number(price)}, {"qty", number(qty)}}},
              {"base", region_json(b.region, a.observed_equilibrium)},
              {"modified", region_json(modified, std::nullopt)}};
    body["base"]["predicted"] =
        equilibrium_json(grid_crossing(a.grid, a.center.component(0), a.center.component(1)));
    body["modified"]["predicted"] = equilibrium_json(grid_crossing(a.grid, center[0], center[1]));
    body["modified"]["curve"] = {{"center", numbers(center[j])},
                                 {"lower", numbers(moved.lower)},
                                 {"upper", numbers(moved.upper)}};
    return {200, body.dump()};
}

HttpResponse BandService::days() const {
    json list = json::array();
    for (const auto& [d, a] : artifacts_) list.push_back({{"day", d.str()}, {"observed", a.observed.has_value()}});
    std::size_t l = 0, b = 1;
    if (!artifacts_.empty()) {
        l = artifacts_.begin()->second.l;
        b = artifacts_.begin()->second.b;
    }
    json body{{"days", list}, {"alphas", {0.25, 0.5}}};
    body["min_alpha"] = artifacts_.empty() ? json(nullptr) : json(number(min_alpha(l, b)));
    return {200, body.dump()};
}

HttpResponse BandService::health() const {
    return {200, json{{"status", "ok"}, {"days", artifacts_.size()}}.dump()};
}

struct HttpServer::Impl {
    httplib::Server server;
};

HttpServer::HttpServer(const BandService& service, std::string static_dir) : impl_(std::make_unique<Impl>()) {
    auto& srv = impl_->server;
    auto reply = [](httplib::Response& res, const HttpResponse& r) {
        res.status = r.status;
        res.set_header("Access-Control-Allow-Origin", "*");
        res.set_content(r.body, "application/json");
    };
    auto param = [](const httplib::Request& req, const char* name) {
        return req.has_param(name) ? req.get_param_value(name) : std::string();
    };
    srv.Get("/bands", [&service, reply, param](const httplib::Request& req, httplib::Response& res) {
        reply(res, service.bands(param(req, "day"), param(req, "alpha")));
    });
    srv.Get("/region", [&service, reply, param](const httplib::Request& req, httplib::Response& res) {
        reply(res, service.region(param(req, "day"), param(req, "alpha")));
    });
    srv.Post("/whatif", [&service, reply](const httplib::Request& req, httplib::Response& res) {
        reply(res, service.whatif(req.body));
    });
    srv.Options("/whatif", [](const httplib::Request&, httplib::Response& res) {
        res.set_header("Access-Control-Allow-Origin", "*");
        res.set_header("Access-Control-Allow-Methods", "POST, OPTIONS");
        res.set_header("Access-Control-Allow-Headers", "Content-Type");
        res.status = 204;
    });
    srv.Get("/days", [&service, reply](const httplib::Request&, httplib::Response& res) { reply(res, service.days()); });
    srv.Get("/health", [&service, reply](const httplib::Request&, httplib::Response& res) {
        reply(res, service.health());
    });
    srv.set_exception_handler([reply](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        std::string what = "internal error";
        try {
            std::rethrow_exception(ep);
        } catch (const std::exception& e) {
            what = e.what();
        } catch (...) {
        }
        reply(res, error_response(500, what));
    });
    if (!static_dir.empty()) srv.set_mount_point("/", static_dir);
}

HttpServer::~HttpServer() = default;

bool HttpServer::listen(const std::string& host, int port) { return impl_->server.listen(host, port); }
int HttpServer::bind_any_port(const std::string& host) { return impl_->server.bind_to_any_port(host); }
bool HttpServer::listen_after_bind() { return impl_->server.listen_after_bind(); }
void HttpServer::stop() { impl_->server.stop(); }
void HttpServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace fband
