#include "fband/study.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string>

#include "fband/error.hpp"
#include "fband/parallel.hpp"

namespace fband {

namespace {

struct ModelInfo {
    Model model;
    std::string_view name;
    std::size_t lag;
};

constexpr ModelInfo kModels[] = {
    {Model::oracle, "oracle", 2}, {Model::var1, "var1", 1}, {Model::var2, "var2", 2}, {Model::var3, "var3", 3},
    {Model::far1, "far1", 1},     {Model::far2, "far2", 2}, {Model::far3, "far3", 3},
};

const ModelInfo& info(Model m) {
    for (const auto& i : kModels)
        if (i.model == m) return i;
    throw ArgumentError("unknown model");
}

std::string cell(double center, double lo, double hi) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%.3f[%.3f,%.3f]", center, lo, hi);
    return buf;
}

template <class CellFn>
void write_table(std::ostream& out, std::span<const StudyCell> cells, CellFn fn) {
    std::vector<Model> models;
    std::map<std::pair<std::size_t, std::size_t>, std::map<Model, std::string>> rows;
    for (const auto& c : cells) {
        if (std::find(models.begin(), models.end(), c.cfg.model) == models.end()) models.push_back(c.cfg.model);
        rows[{c.cfg.b, c.cfg.T}][c.cfg.model] = fn(c.result);
    }
    out << "b,T";
    for (auto m : models) out << ',' << model_name(m);
    out << '\n';
    for (const auto& [key, by_model] : rows) {
        out << key.first << ',' << key.second;
        for (auto m : models) {
            auto it = by_model.find(m);
            out << ',' << (it == by_model.end() ? std::string() : it->second);
        }
        out << '\n';
    }
}

}  // namespace

std::string_view model_name(Model m) { return info(m).name; }

Model parse_model(std::string_view name) {
    for (const auto& i : kModels)
        if (i.name == name) return i.model;
    throw ArgumentError("unknown model '" + std::string(name) + "'");
}

std::size_t model_lag(Model m) { return info(m).lag; }

const std::vector<Model>& all_models() {
    static const std::vector<Model> models{Model::oracle, Model::var1, Model::var2, Model::var3,
                                           Model::far1,   Model::far2, Model::far3};
    return models;
}

std::unique_ptr<PointPredictor> fit_model(Model model, const Observations& obs, std::span<const std::size_t> rows,
                                          const DgpConfig& dgp) {
    const Grid grid = obs.curves.front().grid(0);
    switch (model) {
        case Model::oracle:
            return oracle_predictor(dgp.psi1, dgp.psi2, grid);
        case Model::var1:
        case Model::var2:
        case Model::var3: {
            const std::size_t r = model_lag(model);
            std::vector<Vec3> coeffs;
            coeffs.reserve(obs.size());
            for (const auto& c : obs.curves) coeffs.push_back(FourierBasis::project(c.component(0), c.grid(0)));
            return std::make_unique<VarPredictor>(fit_var(coeffs, rows, r), grid);
        }
        case Model::far1:
        case Model::far2:
        case Model::far3: {
            const std::size_t r = model_lag(model);
            return std::make_unique<ConcurrentPredictor>(fit_concurrent(obs, rows, ConcurrentSpec::far(r)));
        }
    }
    throw ArgumentError("fit_model: unknown model");
}

std::optional<std::size_t> standard_l(std::size_t T) {
    switch (T) {
        case 25: return 7;
        case 50: return 23;
        case 100: return 47;
        case 1000: return 479;
        default: return std::nullopt;
    }
}

void StudyConfig::validate() const {
    const BlockScheme scheme(l, b);
    if (!(alpha < 1.0)) throw ArgumentError("study: alpha must be below 1");
    if (alpha < min_alpha(l, b) * (1.0 - 1e-9))
        throw ArgumentError("study: alpha below b/(l+1) gives the whole space as band");
    const double n = static_cast<double>(scheme.n_perms());
    if (std::abs(std::floor(alpha * n + 1e-9) / n - alpha) > 1e-9)
        throw ArgumentError("study: floor(alpha (l+1)/b) b/(l+1) must equal alpha");
    if (T < l + model_lag(model) + 1) throw ArgumentError("study: T - l - r must be at least 1");
    if (N == 0) throw ArgumentError("study: N must be positive");
}

ReplicationRecord run_replication(const StudyConfig& cfg, std::size_t rep) {
    DgpConfig dgp = cfg.dgp;
    dgp.T = cfg.T;
    dgp.seed = derive_seed(cfg.seed, rep);
    const SimulatedSeries sim = simulate_series(dgp);

    const SplitPlan plan = split_indices(cfg.T, cfg.l, model_lag(cfg.model), cfg.split,
                                         derive_seed(dgp.seed, 0x5EED));
    const BlockScheme scheme(cfg.l, cfg.b);
    const Fitter fitter = [&](const Observations& obs, std::span<const std::size_t> rows) {
        return fit_model(cfg.model, obs, rows, dgp);
    };
    const ConformalFit fit = fit_conformal(sim.obs, plan, scheme, fitter);
    const PredictionBand band = conformal_band(fit, sim.obs, plan, scheme, cfg.alpha);
    return {band_contains(band, sim.obs.curves[cfg.T]), band_size(band), band.k()};
}

double quantile(std::vector<double> values, double p) {
    if (values.empty()) throw ArgumentError("quantile: empty sample");
    std::sort(values.begin(), values.end());
    const double h = (static_cast<double>(values.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

StudyResult summarize(std::vector<ReplicationRecord> records) {
    StudyResult out;
    const double n = static_cast<double>(records.size());
    std::size_t covered = 0;
    std::vector<double> sizes;
    sizes.reserve(records.size());
    for (const auto& r : records) {
        covered += r.covered ? 1 : 0;
        sizes.push_back(r.size);
    }
    out.coverage = static_cast<double>(covered) / n;
    const double half = kZ99 * std::sqrt(out.coverage * (1.0 - out.coverage) / n);
    out.ci_lo = std::max(0.0, out.coverage - half);
    out.ci_hi = std::min(1.0, out.coverage + half);
    out.size_q1 = quantile(sizes, 0.25);
    out.size_median = quantile(sizes, 0.5);
    out.size_q3 = quantile(sizes, 0.75);
    out.records = std::move(records);
    return out;
}

StudyResult run_study_serial(const StudyConfig& cfg) {
    cfg.validate();
    std::vector<ReplicationRecord> records(cfg.N);
    for (std::size_t rep = 0; rep < cfg.N; ++rep) {
        try {
            records[rep] = run_replication(cfg, rep);
        } catch (const std::exception& e) {
            throw std::runtime_error("replication " + std::to_string(rep) + ": " + e.what());
        }
    }
    return summarize(std::move(records));
}

StudyResult run_study(const StudyConfig& cfg, int threads) {
    cfg.validate();
    std::vector<ReplicationRecord> records(cfg.N);
    parallel_for(cfg.N, threads, "replication", [&](std::size_t rep) { records[rep] = run_replication(cfg, rep); });
    return summarize(std::move(records));
}

void write_coverage_table(std::ostream& out, std::span<const StudyCell> cells) {
    write_table(out, cells, [](const StudyResult& r) { return cell(r.coverage, r.ci_lo, r.ci_hi); });
}

void write_size_table(std::ostream& out, std::span<const StudyCell> cells) {
    write_table(out, cells, [](const StudyResult& r) { return cell(r.size_median, r.size_q1, r.size_q3); });
}

void write_replications(std::ostream& out, const StudyCell& c) {
    out << "model,b,T,l,replication,covered,k,size\n";
    for (std::size_t i = 0; i < c.result.records.size(); ++i) {
        const auto& r = c.result.records[i];
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.17g,%.17g", r.k, r.size);
        out << model_name(c.cfg.model) << ',' << c.cfg.b << ',' << c.cfg.T << ',' << c.cfg.l << ',' << i << ','
            << (r.covered ? 1 : 0) << ',' << buf << '\n';
    }
}

}  // namespace fband
