// Command-line entry point: simulate, study, ingest, precompute, backtest, serve.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "fband/columnar.hpp"
#include "fband/config.hpp"
#include "fband/diagnostics.hpp"
#include "fband/error.hpp"
#include "fband/market/artifact.hpp"
#include "fband/market/backtest.hpp"
#include "fband/market/synth.hpp"
#include "fband/server.hpp"
#include "fband/study.hpp"

namespace fs = std::filesystem;
using fband::KeyValueConfig;
using nlohmann::json;

namespace {

constexpr const char* kSeedEnv = "FBAND_SEED";

struct Common {
    std::string config;
    std::string out = ".";
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
};

// Unknown keys are rejected so that typos fail before any work starts.
void check_keys(const KeyValueConfig& cfg, const std::set<std::string>& allowed, const std::string& verb) {
    for (const auto& [k, _] : cfg.entries())
        if (!allowed.count(k)) throw fband::ParseError("config:" + k, 0, "unknown key for '" + verb + "'");
}

KeyValueConfig load_config(const Common& c, const std::set<std::string>& allowed, const std::string& verb) {
    KeyValueConfig cfg = c.config.empty() ? KeyValueConfig{} : KeyValueConfig::load(c.config);
    check_keys(cfg, allowed, verb);
    if (const char* env = std::getenv(kSeedEnv); env && *env) cfg.set("seed", env);
    if (c.seed) cfg.set("seed", std::to_string(*c.seed));
    if (c.threads) cfg.set("threads", std::to_string(*c.threads));
    cfg.get_u64("seed", 1);   // validate early
    cfg.get_int("threads", 0);
    return cfg;
}

// Hash embedded in outputs. The thread count is left out because results do
// not depend on it.
std::string output_hash(const KeyValueConfig& cfg) {
    KeyValueConfig copy;
    for (const auto& [k, v] : cfg.entries())
        if (k != "threads") copy.set(k, v);
    return copy.hash();
}

std::set<std::string> keys(std::initializer_list<const char*> extra) {
    std::set<std::string> out{"seed", "threads"};
    for (const char* k : extra) out.insert(k);
    return out;
}

fband::Mat3 parse_matrix(const KeyValueConfig& cfg, const std::string& key) {
    const auto items = cfg.get_list(key);
    if (items.size() != 9) throw fband::ParseError("config:" + key, 0, "expected 9 comma-separated numbers");
    fband::Mat3 m;
    for (int i = 0; i < 9; ++i) {
        KeyValueConfig one;
        one.set("v", items[static_cast<std::size_t>(i)]);
        m(i / 3, i % 3) = one.get_double("v");
    }
    return m;
}

const std::set<std::string> kDgpKeys{"df", "burn_in", "grid_points", "upsilon1", "upsilon2", "psi1", "psi2", "sigma"};

fband::DgpConfig dgp_from(const KeyValueConfig& cfg) {
    fband::DgpConfig d;
    const std::string df = cfg.get_string("df", "4");
    if (df == "inf" || df == "gaussian") d.df = std::nullopt;
    else d.df = cfg.get_double("df", 4.0);
    d.burn_in = static_cast<std::size_t>(cfg.get_int("burn_in", 100));
    d.grid_points = static_cast<std::size_t>(cfg.get_int("grid_points", 100));
    if (cfg.has("upsilon1")) d.psi1 = fband::half_frobenius_normalized(parse_matrix(cfg, "upsilon1"));
    if (cfg.has("upsilon2")) d.psi2 = fband::half_frobenius_normalized(parse_matrix(cfg, "upsilon2"));
    if (cfg.has("psi1")) d.psi1 = parse_matrix(cfg, "psi1");
    if (cfg.has("psi2")) d.psi2 = parse_matrix(cfg, "psi2");
    if (cfg.has("sigma")) d.sigma = parse_matrix(cfg, "sigma");
    d.seed = cfg.get_u64("seed", 1);
    return d;
}

std::set<std::string> with_dgp(std::set<std::string> k) {
    k.insert(kDgpKeys.begin(), kDgpKeys.end());
    return k;
}

std::vector<std::size_t> size_list(const KeyValueConfig& cfg, const std::string& key,
                                   const std::vector<std::string>& fallback) {
    std::vector<std::size_t> out;
    for (const auto& item : cfg.get_list(key, fallback)) {
        KeyValueConfig one;
        one.set(key, item);
        const auto v = one.get_int(key);
        if (v < 0) throw fband::ParseError("config:" + key, 0, "values must be non-negative");
        out.push_back(static_cast<std::size_t>(v));
    }
    return out;
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw fband::ArgumentError("cannot write " + path.string());
    return out;
}

// ---------------------------------------------------------------- simulate

int cmd_simulate(const Common& c) {
    const auto cfg = load_config(c, with_dgp(keys({"T", "series"})), "simulate");
    fband::DgpConfig dgp = dgp_from(cfg);
    dgp.T = static_cast<std::size_t>(cfg.get_int("T", 25));
    const auto count = static_cast<std::size_t>(cfg.get_int("series", 1));
    const std::uint64_t seed = dgp.seed;
    fs::create_directories(c.out);
    auto out = open_out(fs::path(c.out) / "series.txt");
    out << "# config_hash=" << output_hash(cfg) << "\n";
    for (std::size_t s = 0; s < count; ++s) {
        dgp.seed = count == 1 ? seed : fband::derive_seed(seed, s);
        const auto sim = fband::simulate_series(dgp);
        out << "# series " << s << ", " << sim.obs.size() << " curves, the last is the target\n";
        fband::write_columnar(out, sim.obs.curves);
    }
    std::cout << json{{"command", "simulate"}, {"config_hash", output_hash(cfg)}, {"series", count}}.dump() << '\n';
    return 0;
}

// ---------------------------------------------------------------- study

int cmd_study(const Common& c) {
    const auto cfg = load_config(
        c, with_dgp(keys({"models", "T", "l", "b", "alpha", "N", "split", "replications", "diagnostics", "diag_m",
                          "diag_l", "diag_N", "diag_model", "oracle_draws"})),
        "study");
    const auto dgp = dgp_from(cfg);
    const int threads = static_cast<int>(cfg.get_int("threads", 0));
    const std::uint64_t seed = cfg.get_u64("seed", 1);
    const double alpha = cfg.get_double("alpha", 0.25);
    const auto N = static_cast<std::size_t>(cfg.get_int("N", 1000));
    const std::string split = cfg.get_string("split", "contiguous");
    if (split != "contiguous" && split != "random")
        throw fband::ParseError("config:split", 0, "expected 'contiguous' or 'random'");
    const auto Ts = size_list(cfg, "T", {"25", "50", "100"});
    const auto bs = size_list(cfg, "b", {"1"});
    std::vector<std::size_t> ls;
    if (cfg.has("l")) {
        ls = size_list(cfg, "l", {});
        if (ls.size() != Ts.size()) throw fband::ParseError("config:l", 0, "needs one entry per T");
    } else {
        for (auto T : Ts) {
            const auto l = fband::standard_l(T);
            if (!l) throw fband::ParseError("config:l", 0, "no standard l for T=" + std::to_string(T) + "; set l");
            ls.push_back(*l);
        }
    }
    std::vector<fband::Model> models;
    for (const auto& name : cfg.get_list("models", {"oracle", "var1", "var2", "var3", "far1", "far2", "far3"}))
        models.push_back(fband::parse_model(name));

    // Validate every cell up front; cells the block scheme cannot host are
    // skipped, as in the standard grid.
    std::vector<fband::StudyCell> cells;
    json skipped = json::array();
    for (auto b : bs) {
        for (std::size_t i = 0; i < Ts.size(); ++i) {
            for (auto model : models) {
                fband::StudyConfig sc;
                sc.model = model;
                sc.T = Ts[i];
                sc.l = ls[i];
                sc.b = b;
                sc.alpha = alpha;
                sc.N = N;
                sc.seed = seed;
                sc.split = split == "random" ? fband::SplitMode::random : fband::SplitMode::contiguous;
                sc.dgp = dgp;
                try {
                    sc.validate();
                } catch (const std::exception& e) {
                    skipped.push_back({{"model", fband::model_name(model)}, {"b", b}, {"T", sc.T}, {"reason", e.what()}});
                    continue;
                }
                cells.push_back({sc, {}});
            }
        }
    }
    for (auto& cell : cells) cell.result = fband::run_study(cell.cfg, threads);

    fs::create_directories(c.out);
    const fs::path out(c.out);
    {
        auto f = open_out(out / "coverage.csv");
        fband::write_coverage_table(f, cells);
    }
    {
        auto f = open_out(out / "size.csv");
        fband::write_size_table(f, cells);
    }
    if (cfg.get_bool("replications", false)) {
        fs::create_directories(out / "replications");
        for (const auto& cell : cells) {
            auto f = open_out(out / "replications" /
                              (std::string(fband::model_name(cell.cfg.model)) + "_b" + std::to_string(cell.cfg.b) +
                               "_T" + std::to_string(cell.cfg.T) + ".csv"));
            fband::write_replications(f, cell);
        }
    }
    json summary{{"command", "study"}, {"config_hash", output_hash(cfg)}, {"alpha", alpha}, {"N", N}, {"skipped", skipped}};
    json rows = json::array();
    for (const auto& cell : cells) {
        const auto& r = cell.result;
        rows.push_back({{"model", fband::model_name(cell.cfg.model)},
                        {"b", cell.cfg.b},
                        {"T", cell.cfg.T},
                        {"l", cell.cfg.l},
                        {"coverage", r.coverage},
                        {"ci99", {r.ci_lo, r.ci_hi}},
                        {"size_quartiles", {r.size_q1, r.size_median, r.size_q3}},
                        {"exact_iid_coverage", fband::exact_iid_coverage(cell.cfg.l, cell.cfg.b, alpha)}});
    }
    summary["cells"] = rows;

    if (cfg.get_bool("diagnostics", false)) {
        auto f = open_out(out / "diagnostics.csv");
        f << "model,m,l,N,mean_sup_gap,median_sup_gap,mean_rms_gap,median_rms_gap,mean_target_gap,median_target_gap\n";
        json diag = json::array();
        for (auto m : size_list(cfg, "diag_m", {"15", "90", "950"})) {
            fband::DiagnosticsConfig dc;
            dc.model = fband::parse_model(cfg.get_string("diag_model", "var2"));
            dc.m = m;
            dc.l = static_cast<std::size_t>(cfg.get_int("diag_l", 39));
            dc.N = static_cast<std::size_t>(cfg.get_int("diag_N", 200));
            dc.seed = seed;
            dc.oracle_draws = static_cast<std::size_t>(cfg.get_int("oracle_draws", 100000));
            dc.threads = threads;
            dc.dgp = dgp;
            const auto r = fband::theorem_diagnostics(dc);
            f << fband::model_name(dc.model) << ',' << m << ',' << dc.l << ',' << dc.N << ','
              << fband::format_double(r.mean.sup_gap) << ',' << fband::format_double(r.median.sup_gap) << ','
              << fband::format_double(r.mean.rms_gap) << ',' << fband::format_double(r.median.rms_gap) << ','
              << fband::format_double(r.mean.target_gap) << ',' << fband::format_double(r.median.target_gap) << '\n';
            diag.push_back({{"m", m}, {"median_rms_gap", r.median.rms_gap}, {"median_sup_gap", r.median.sup_gap}});
        }
        summary["diagnostics"] = diag;
    }
    auto f = open_out(out / "summary.json");
    f << summary.dump(2) << '\n';
    std::cout << json{{"command", "study"}, {"config_hash", output_hash(cfg)}, {"cells", cells.size()}}.dump() << '\n';
    return 0;
}

// ---------------------------------------------------------------- market plumbing

const std::set<std::string> kSynthKeys{"start", "days", "sellers", "buyers", "pipeline_agent", "base_price",
                                       "level_ar", "level_sd", "price_noise_sd"};

fband::market::SynthConfig synth_from(const KeyValueConfig& cfg) {
    fband::market::SynthConfig s;
    if (cfg.has("start")) s.start = fband::market::Date::parse(cfg.get_string("start"));
    s.days = static_cast<std::size_t>(cfg.get_int("days", static_cast<std::int64_t>(s.days)));
    s.seed = cfg.get_u64("seed", 1);
    s.sellers = static_cast<std::size_t>(cfg.get_int("sellers", static_cast<std::int64_t>(s.sellers)));
    s.buyers = static_cast<std::size_t>(cfg.get_int("buyers", static_cast<std::int64_t>(s.buyers)));
    s.pipeline_agent = cfg.get_bool("pipeline_agent", s.pipeline_agent);
    s.base_price = cfg.get_double("base_price", s.base_price);
    s.level_ar = cfg.get_double("level_ar", s.level_ar);
    s.level_sd = cfg.get_double("level_sd", s.level_sd);
    s.price_noise_sd = cfg.get_double("price_noise_sd", s.price_noise_sd);
    s.validate();
    return s;
}

const std::set<std::string> kMarketKeys{"grid_lo", "grid_hi", "grid_n", "window", "l", "b", "price_rule",
                                        "size_ranges", "books", "source"};

fband::market::MarketConfig market_from(const KeyValueConfig& cfg) {
    fband::market::MarketConfig m;
    m.grid = fband::Grid(cfg.get_double("grid_lo", 0.0), cfg.get_double("grid_hi", 2e5),
                         static_cast<std::size_t>(cfg.get_int("grid_n", 500)));
    m.window = static_cast<std::size_t>(cfg.get_int("window", 90));
    m.l = static_cast<std::size_t>(cfg.get_int("l", 39));
    m.b = static_cast<std::size_t>(cfg.get_int("b", 1));
    m.rule = fband::market::parse_price_rule(cfg.get_string("price_rule", "crossing_midpoint"));
    if (cfg.has("size_ranges")) {
        m.size_ranges.clear();
        for (const auto& item : cfg.get_list("size_ranges")) {
            const auto colon = item.find(':');
            if (colon == std::string::npos)
                throw fband::ParseError("config:size_ranges", 0, "expected entries 'lo:hi'");
            KeyValueConfig one;
            one.set("lo", item.substr(0, colon));
            one.set("hi", item.substr(colon + 1));
            m.size_ranges.emplace_back(one.get_double("lo"), one.get_double("hi"));
        }
    }
    m.validate();
    return m;
}

// Books from `books` (a directory, or a CSV holding several days) or the
// synthetic generator when source = synthetic.
std::vector<fband::market::AuctionBook> load_books(const KeyValueConfig& cfg) {
    const std::string source = cfg.get_string("source", cfg.has("books") ? "files" : "synthetic");
    if (source == "synthetic") return fband::market::generate_books(synth_from(cfg));
    if (source != "files") throw fband::ParseError("config:source", 0, "expected 'files' or 'synthetic'");
    const fs::path p = cfg.get_string("books");
    if (fs::is_directory(p)) return fband::market::read_book_dir(p);
    if (p.extension() == ".csv") {
        std::ifstream in(p);
        if (!in) throw fband::ParseError(p.string(), 0, "cannot open book file");
        std::ostringstream ss;
        ss << in.rdbuf();
        return fband::market::parse_books_csv(ss.str());
    }
    return {fband::market::read_book_file(p)};
}

std::set<std::string> market_keys(std::initializer_list<const char*> extra) {
    auto k = keys(extra);
    k.insert(kSynthKeys.begin(), kSynthKeys.end());
    k.insert(kMarketKeys.begin(), kMarketKeys.end());
    return k;
}

// ---------------------------------------------------------------- ingest

int cmd_ingest(const Common& c) {
    const auto cfg = load_config(c, market_keys({"format"}), "ingest");
    const std::string format = cfg.get_string("format", "xml");
    if (format != "xml" && format != "csv") throw fband::ParseError("config:format", 0, "expected 'xml' or 'csv'");
    const auto books = load_books(cfg);
    fs::create_directories(c.out);
    std::size_t orders = 0;
    for (const auto& book : books) {
        fband::market::write_book_file(fs::path(c.out) / (book.day.str() + "." + format), book);
        orders += book.orders.size();
    }
    std::cout << json{{"command", "ingest"}, {"config_hash", output_hash(cfg)}, {"books", books.size()}, {"orders", orders}}
                     .dump()
              << '\n';
    return 0;
}

// ---------------------------------------------------------------- precompute

int cmd_precompute(const Common& c) {
    const auto cfg = load_config(c, market_keys({"alphas", "from", "to"}), "precompute");
    const auto market = market_from(cfg);
    std::vector<double> alphas;
    for (const auto& a : cfg.get_list("alphas", {"0.25", "0.5"})) {
        KeyValueConfig one;
        one.set("alpha", a);
        const double v = one.get_double("alpha");
        if (!(v >= fband::min_alpha(market.l, market.b) && v < 1.0))
            throw fband::ParseError("config:alphas", 0, "alpha " + a + " outside [b/(l+1), 1)");
        alphas.push_back(v);
    }
    const auto books = load_books(cfg);
    const auto days = fband::market::prepare_days(books, market);
    auto artifacts = fband::market::compute_artifacts(days, market, static_cast<int>(cfg.get_int("threads", 0)));
    if (cfg.has("from")) {
        const auto from = fband::market::Date::parse(cfg.get_string("from"));
        std::erase_if(artifacts, [&](const auto& a) { return a.day < from; });
    }
    if (cfg.has("to")) {
        const auto to = fband::market::Date::parse(cfg.get_string("to"));
        std::erase_if(artifacts, [&](const auto& a) { return to < a.day; });
    }
    fband::market::write_artifacts(c.out, artifacts, output_hash(cfg));
    json index{{"config_hash", output_hash(cfg)}, {"alphas", alphas}, {"days", json::array()}};
    for (const auto& a : artifacts) index["days"].push_back(a.day.str());
    auto f = open_out(fs::path(c.out) / "index.json");
    f << index.dump(2) << '\n';
    std::cout << json{{"command", "precompute"}, {"config_hash", output_hash(cfg)}, {"days", artifacts.size()}}.dump()
              << '\n';
    return 0;
}

// ---------------------------------------------------------------- backtest

int cmd_backtest(const Common& c) {
    const auto cfg = load_config(c, market_keys({"alpha"}), "backtest");
    const auto market = market_from(cfg);
    const double alpha = cfg.get_double("alpha", 0.25);
    const auto books = load_books(cfg);
    const auto report =
        fband::market::rolling_backtest(books, market, alpha, static_cast<int>(cfg.get_int("threads", 0)));
    fs::create_directories(c.out);
    auto f = open_out(fs::path(c.out) / "backtest.csv");
    fband::market::write_backtest_csv(f, report, market);
    f << "# config_hash," << output_hash(cfg) << '\n';
    std::cout << json{{"command", "backtest"},
                      {"config_hash", output_hash(cfg)},
                      {"days", report.rows.size()},
                      {"band_containment", report.band_rate()},
                      {"region_containment", report.region_rate()},
                      {"region_violations", report.violations()}}
                     .dump()
              << '\n';
    return 0;
}

// ---------------------------------------------------------------- serve

int cmd_serve(const Common& c, const std::string& bind) {
    const auto cfg = load_config(c, keys({"artifacts", "static"}), "serve");
    const auto colon = bind.rfind(':');
    if (colon == std::string::npos) throw fband::ArgumentError("--bind expects host:port");
    const std::string host = bind.substr(0, colon);
    const int port = std::stoi(bind.substr(colon + 1));
    auto artifacts = fband::market::read_artifact_dir(cfg.get_string("artifacts", c.out));
    const std::size_t n = artifacts.size();
    const fband::BandService service(std::move(artifacts));
    fband::HttpServer server(service, cfg.get_string("static", ""));
    std::cerr << json{{"command", "serve"}, {"bind", bind}, {"days", n}, {"config_hash", output_hash(cfg)}}.dump() << '\n';
    if (!server.listen(host, port)) throw fband::ArgumentError("cannot bind " + bind);
    return 0;
}

json error_json(const std::exception& e) {
    json j{{"error", e.what()}};
    if (const auto* p = dynamic_cast<const fband::ParseError*>(&e)) {
        j["kind"] = "parse_error";
        j["path"] = p->path();
        if (p->line() > 0) j["line"] = p->line();
    } else if (dynamic_cast<const fband::ArgumentError*>(&e)) {
        j["kind"] = "argument_error";
    } else if (dynamic_cast<const fband::StructuralError*>(&e)) {
        j["kind"] = "structural_error";
    } else {
        j["kind"] = "runtime_error";
    }
    return j;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Conformal prediction bands for functional time series"};
    app.require_subcommand(1);
    Common common;
    std::string bind = "127.0.0.1:8080";

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", common.config, "flat key = value config file");
        sub->add_option("--out", common.out, "output directory");
        sub->add_option("--seed", common.seed, std::string("seed override (also ") + kSeedEnv + ")");
        sub->add_option("--threads", common.threads, "worker threads, 0 = OpenMP default");
        return sub;
    };
    auto* simulate = add_common(app.add_subcommand("simulate", "draw series from the VAR(2) Fourier process"));
    auto* study = add_common(app.add_subcommand("study", "coverage and size study"));
    auto* ingest = add_common(app.add_subcommand("ingest", "validate and normalize auction books"));
    auto* precompute = add_common(app.add_subcommand("precompute", "write per-day band artifacts"));
    auto* backtest = add_common(app.add_subcommand("backtest", "rolling-window market backtest"));
    auto* serve = add_common(app.add_subcommand("serve", "HTTP service over precomputed artifacts"));
    serve->add_option("--bind", bind, "host:port");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*simulate) return cmd_simulate(common);
        if (*study) return cmd_study(common);
        if (*ingest) return cmd_ingest(common);
        if (*precompute) return cmd_precompute(common);
        if (*backtest) return cmd_backtest(common);
        if (*serve) return cmd_serve(common, bind);
    } catch (const std::exception& e) {
        std::cerr << error_json(e).dump() << '\n';
        return 1;
    }
    return 1;
}
