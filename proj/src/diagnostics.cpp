#include "fband/diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include "fband/error.hpp"
#include "fband/parallel.hpp"

namespace fband {

namespace {

constexpr std::size_t kTargetsPerTrainingSet = 100;

std::vector<double> to_curve(const Vec3& coef, const Grid& grid) { return FourierBasis::evaluate(coef, grid); }

}  // namespace

std::vector<double> oracle_score_sample(const DgpConfig& dgp, std::size_t m, std::size_t draws,
                                        std::uint64_t seed) {
    if (m == 0 || draws == 0) throw ArgumentError("oracle_score_sample: m and draws must be positive");
    const Grid grid = dgp.grid();
    Rng rng(seed);
    MvtSampler eps(dgp.sigma, dgp.df);
    std::vector<double> out;
    out.reserve(draws);
    const double root_m = std::sqrt(static_cast<double>(m));
    while (out.size() < draws) {
        std::vector<FunctionalSample> residuals;
        residuals.reserve(m);
        for (std::size_t h = 0; h < m; ++h) residuals.emplace_back(grid, std::vector<std::vector<double>>{to_curve(eps(rng), grid)});
        const ModulationFunction s = modulation_from_residuals(residuals).scaled(1.0 / root_m);
        const FunctionalSample zero = FunctionalSample::zeros({grid});
        for (std::size_t i = 0; i < kTargetsPerTrainingSet && out.size() < draws; ++i) {
            const FunctionalSample e(grid, {to_curve(eps(rng), grid)});
            out.push_back(weighted_sup_score(e, zero, s));
        }
    }
    return out;
}

double sup_cdf_gap(std::vector<double> x, std::vector<double> y) {
    if (x.empty() || y.empty()) throw ArgumentError("sup_cdf_gap: empty sample");
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    const double nx = static_cast<double>(x.size());
    const double ny = static_cast<double>(y.size());
    double gap = 0.0;
    auto probe = [&](double a) {
        const double fx_lt = static_cast<double>(std::lower_bound(x.begin(), x.end(), a) - x.begin()) / nx;
        const double fy_lt = static_cast<double>(std::lower_bound(y.begin(), y.end(), a) - y.begin()) / ny;
        const double fx_le = static_cast<double>(std::upper_bound(x.begin(), x.end(), a) - x.begin()) / nx;
        const double fy_le = static_cast<double>(std::upper_bound(y.begin(), y.end(), a) - y.begin()) / ny;
        gap = std::max({gap, std::abs(fx_lt - fy_lt), std::abs(fx_le - fy_le)});
    };
    for (double a : x) probe(a);
    for (double a : y) probe(a);
    return gap;
}

DiagnosticsResult theorem_diagnostics(const DiagnosticsConfig& cfg) {
    if (cfg.N == 0) throw ArgumentError("theorem_diagnostics: N must be positive");
    const std::size_t lag = std::max<std::size_t>(model_lag(cfg.model), 2);
    const std::size_t T = cfg.m + cfg.l + lag;
    const BlockScheme scheme(cfg.l, cfg.b);
    const auto reference = oracle_score_sample(cfg.dgp, cfg.m, cfg.oracle_draws, derive_seed(cfg.seed, ~0ULL));
    const double root_m = std::sqrt(static_cast<double>(cfg.m));

    DiagnosticsResult out;
    out.records.resize(cfg.N);
    parallel_for(cfg.N, cfg.threads, "replication", [&](std::size_t rep) {
        DgpConfig dgp = cfg.dgp;
        dgp.T = T;
        dgp.seed = derive_seed(cfg.seed, rep);
        const SimulatedSeries sim = simulate_series(dgp);
        const SplitPlan plan = split_indices(T, cfg.l, lag);

        const auto fitted = fit_model(cfg.model, sim.obs, plan.train_idx, dgp);
        const auto oracle = oracle_predictor(dgp.psi1, dgp.psi2, dgp.grid());
        const ModulationFunction s_fit =
            training_modulation(*fitted, sim.obs, plan.train_idx).scaled(1.0 / root_m);
        const ModulationFunction s_orc =
            training_modulation(*oracle, sim.obs, plan.train_idx).scaled(1.0 / root_m);

        std::vector<double> oracle_scores;
        double sq = 0.0;
        DiagnosticsRecord rec;
        for (std::size_t d : scheme.d_set()) {
            const std::size_t t = d == cfg.l + 1 ? plan.target : plan.calib_idx[d - 1];
            const auto& y = sim.obs.curves[t];
            const double r = weighted_sup_score(y, fitted->predict(sim.obs, t), s_fit);
            const double r_star = weighted_sup_score(y, oracle->predict(sim.obs, t), s_orc);
            oracle_scores.push_back(r_star);
            sq += (r - r_star) * (r - r_star);
            if (t == plan.target) rec.target_gap = std::abs(r - r_star);
        }
        rec.rms_gap = std::sqrt(sq / static_cast<double>(scheme.n_perms()));
        rec.sup_gap = sup_cdf_gap(oracle_scores, reference);
        out.records[rep] = rec;
    });

    std::vector<double> sup, rms, tgt;
    for (const auto& r : out.records) {
        sup.push_back(r.sup_gap);
        rms.push_back(r.rms_gap);
        tgt.push_back(r.target_gap);
        out.mean.sup_gap += r.sup_gap / static_cast<double>(cfg.N);
        out.mean.rms_gap += r.rms_gap / static_cast<double>(cfg.N);
        out.mean.target_gap += r.target_gap / static_cast<double>(cfg.N);
    }
    out.median = {quantile(sup, 0.5), quantile(rms, 0.5), quantile(tgt, 0.5)};
    return out;
}

}  // namespace fband
