#pragma once

// HTTP service over precomputed day artifacts: bands, the (Q, P) region and
// what-if order injection. Requests never modify the loaded artifacts.

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "fband/market/backtest.hpp"

namespace fband {

struct HttpResponse {
    int status = 200;
    std::string body;
};

class BandService {
public:
    explicit BandService(std::vector<market::DayArtifact> artifacts);

    HttpResponse bands(const std::string& day, const std::string& alpha) const;
    HttpResponse region(const std::string& day, const std::string& alpha) const;
    /// JSON body {day, alpha, side: "offer"|"bid", price, qty}.
    HttpResponse whatif(const std::string& body) const;
    HttpResponse days() const;
    HttpResponse health() const;

private:
    struct Lookup;
    Lookup lookup(const std::string& day, const std::string& alpha) const;
    HttpResponse cached(const std::string& key, const std::function<HttpResponse()>& make) const;

    std::map<market::Date, market::DayArtifact> artifacts_;
    mutable std::mutex cache_mutex_;
    mutable std::map<std::string, std::string> cache_;
};

/// Rounds to 9 significant digits, the precision of every payload number.
double payload_round(double v);

class HttpServer {
public:
    explicit HttpServer(const BandService& service, std::string static_dir = "");
    ~HttpServer();

    /// Binds and serves until stop(); returns false if the bind failed.
    bool listen(const std::string& host, int port);
    /// Binds to a free port and returns it; serve with listen_after_bind().
    int bind_any_port(const std::string& host);
    bool listen_after_bind();
    void stop();
    void wait_until_ready() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace fband
