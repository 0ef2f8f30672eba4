#include "fband/conformal.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "fband/error.hpp"

namespace fband {

namespace {

constexpr double kIndexTolerance = 1e-9;

void validate_alpha(double alpha) {
    if (!(alpha > 0.0)) throw ArgumentError("alpha must be positive");
    if (!(alpha < 1.0)) throw ArgumentError("alpha must be below 1");
}

bool below_min_alpha(double alpha, std::size_t l, std::size_t b) {
    return alpha < min_alpha(l, b) * (1.0 - kIndexTolerance);
}

}  // namespace

BlockScheme::BlockScheme(std::size_t l, std::size_t b) : l_(l), b_(b) {
    if (l == 0 || b == 0) throw ArgumentError("BlockScheme: l and b must be positive");
    if (b > l + 1 || (l + 1) % b != 0)
        throw ArgumentError("BlockScheme: (l+1)/b must be an integer, got l=" + std::to_string(l) +
                            ", b=" + std::to_string(b));
    for (std::size_t i = 1; i <= n_perms(); ++i) d_set_.push_back(permute(i, l_ + 1));
}

std::size_t BlockScheme::permute(std::size_t i, std::size_t t) const {
    if (i < 1 || i > n_perms() || t < 1 || t > l_ + 1)
        throw ArgumentError("BlockScheme::permute: index out of range");
    const std::size_t shift = (i - 1) * b_;
    if (t + shift <= l_ + 1) return t + shift;
    return t + shift - l_ - 1;
}

BlockScheme build_block_scheme(std::size_t l, std::size_t b) { return BlockScheme(l, b); }

SplitPlan split_indices(std::size_t T, std::size_t l, std::size_t r, SplitMode mode, std::uint64_t seed) {
    if (l == 0) throw ArgumentError("split_indices: calibration size must be positive");
    if (T < l + r + 1)
        throw ArgumentError("split_indices: T=" + std::to_string(T) + ", l=" + std::to_string(l) +
                            ", r=" + std::to_string(r) + " leaves no training observation");
    SplitPlan plan;
    plan.lag = r;
    plan.target = T;
    if (mode == SplitMode::contiguous) {
        for (std::size_t t = r; t < T - l; ++t) plan.train_idx.push_back(t);
        for (std::size_t t = T - l; t < T; ++t) plan.calib_idx.push_back(t);
        return plan;
    }
    std::vector<std::size_t> pool(T - r);
    std::iota(pool.begin(), pool.end(), r);
    std::mt19937_64 rng(seed);
    std::shuffle(pool.begin(), pool.end(), rng);
    plan.calib_idx.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(l));
    plan.train_idx.assign(pool.begin() + static_cast<std::ptrdiff_t>(l), pool.end());
    std::sort(plan.calib_idx.begin(), plan.calib_idx.end());
    std::sort(plan.train_idx.begin(), plan.train_idx.end());
    return plan;
}

std::vector<double> ScoreSet::values() const {
    std::vector<double> v;
    v.reserve(entries.size());
    for (const auto& e : entries) v.push_back(e.value);
    return v;
}

ModulationFunction training_modulation(const PointPredictor& fit, const Observations& obs,
                                       std::span<const std::size_t> rows) {
    std::vector<FunctionalSample> residuals;
    residuals.reserve(rows.size());
    for (auto t : rows) residuals.push_back(obs.curves[t] - fit.predict(obs, t));
    return modulation_from_residuals(residuals);
}

ScoreSet calibration_scores(const PointPredictor& fit, const Observations& obs, const SplitPlan& plan,
                            const BlockScheme& scheme, const ModulationFunction& s) {
    if (scheme.l() != plan.l())
        throw ArgumentError("calibration_scores: scheme built for l=" + std::to_string(scheme.l()) +
                            " but the plan has " + std::to_string(plan.l()) + " calibration points");
    ScoreSet out;
    for (std::size_t d : scheme.d_set()) {
        if (d == scheme.l() + 1) continue;
        const std::size_t t = plan.calib_idx[d - 1];
        if (t < fit.max_lag())
            throw ContractViolation("calibration_scores: no prediction available at time " + std::to_string(t));
        out.entries.push_back({t, weighted_sup_score(obs.curves[t], fit.predict(obs, t), s)});
    }
    return out;
}

std::size_t conformal_rank(double alpha, std::size_t l, std::size_t b) {
    const double x = static_cast<double>(l + 1) * (1.0 - alpha) / static_cast<double>(b);
    const double nearest = std::round(x);
    if (std::abs(x - nearest) <= kIndexTolerance * std::max(1.0, x)) return static_cast<std::size_t>(nearest);
    return static_cast<std::size_t>(std::ceil(x));
}

Multiplier conformal_k(std::span<const double> scores, double alpha, std::size_t l, std::size_t b) {
    validate_alpha(alpha);
    const BlockScheme scheme(l, b);
    if (scores.size() != scheme.n_perms() - 1)
        throw ArgumentError("conformal_k: expected " + std::to_string(scheme.n_perms() - 1) + " scores, got " +
                            std::to_string(scores.size()));
    if (below_min_alpha(alpha, l, b)) return Multiplier::entire_space();
    const std::size_t rank = conformal_rank(alpha, l, b);
    if (rank == 0) return Multiplier{0.0, false};
    std::vector<double> sorted(scores.begin(), scores.end());
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(rank - 1), sorted.end());
    return Multiplier{sorted[rank - 1], false};
}

Multiplier conformal_k(const ScoreSet& scores, double alpha, std::size_t l, std::size_t b) {
    const auto v = scores.values();
    return conformal_k(std::span<const double>(v), alpha, l, b);
}

PredictionBand predict_band(const PointPredictor& fit, const Observations& obs, std::size_t target,
                            const ModulationFunction& s, Multiplier k, double alpha) {
    if (target < fit.max_lag())
        throw ContractViolation("predict_band: target lacks the predictor's lags");
    return PredictionBand(fit.predict(obs, target), s, k, alpha);
}

double p_value_oracle(const FunctionalSample& candidate, const PointPredictor& fit, const Observations& obs,
                      const SplitPlan& plan, const BlockScheme& scheme, const ModulationFunction& s) {
    const std::size_t n = scheme.n_perms();
    const std::size_t l = plan.l();
    const double target_score = weighted_sup_score(candidate, fit.predict(obs, plan.target), s);
    std::size_t at_least = 0;
    for (std::size_t i = 1; i <= n; ++i) {
        const std::size_t d = scheme.permute(i, l + 1);
        double score = target_score;
        if (d <= l) {
            const std::size_t t = plan.calib_idx[d - 1];
            score = weighted_sup_score(obs.curves[t], fit.predict(obs, t), s);
        }
        if (score >= target_score) ++at_least;
    }
    return static_cast<double>(at_least) / static_cast<double>(n);
}

double exact_iid_coverage(std::size_t l, std::size_t b, double alpha) {
    const BlockScheme scheme(l, b);
    const double n = static_cast<double>(scheme.n_perms());
    const double x = alpha * n;
    const double nearest = std::round(x);
    const double fl = std::abs(x - nearest) <= kIndexTolerance * std::max(1.0, x) ? nearest : std::floor(x);
    return 1.0 - fl / n;
}

ConformalFit fit_conformal(const Observations& obs, const SplitPlan& plan, const BlockScheme& scheme,
                           const Fitter& fitter) {
    ConformalFit out;
    out.predictor = fitter(obs, plan.train_idx);
    out.modulation = training_modulation(*out.predictor, obs, plan.train_idx);
    out.scores = calibration_scores(*out.predictor, obs, plan, scheme, out.modulation);
    return out;
}

PredictionBand conformal_band(const ConformalFit& fit, const Observations& obs, const SplitPlan& plan,
                              const BlockScheme& scheme, double alpha) {
    const Multiplier k = conformal_k(fit.scores, alpha, scheme.l(), scheme.b());
    return predict_band(*fit.predictor, obs, plan.target, fit.modulation, k, alpha);
}

}  // namespace fband
