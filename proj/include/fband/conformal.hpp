#pragma once

// Split conformal prediction bands with non-overlapping block permutations.
//
// Time indices are zero-based: observations occupy 0..T-1 and the target is T.
// Positions inside the block scheme are one-based, 1..l+1, with l+1 standing
// for the target.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "fband/func_core.hpp"
#include "fband/predictors.hpp"

namespace fband {

class BlockScheme {
public:
    BlockScheme(std::size_t l, std::size_t b);

    std::size_t l() const noexcept { return l_; }
    std::size_t b() const noexcept { return b_; }
    std::size_t n_perms() const noexcept { return (l_ + 1) / b_; }
    /// {π_i(l+1) : i = 1..n_perms}, listed in order of i (so front() == l+1).
    const std::vector<std::size_t>& d_set() const noexcept { return d_set_; }

    /// π_i(t) for 1 <= i <= n_perms, 1 <= t <= l+1.
    std::size_t permute(std::size_t i, std::size_t t) const;

private:
    std::size_t l_;
    std::size_t b_;
    std::vector<std::size_t> d_set_;
};

BlockScheme build_block_scheme(std::size_t l, std::size_t b);

enum class SplitMode { contiguous, random };

struct SplitPlan {
    std::vector<std::size_t> train_idx;   // I1
    std::vector<std::size_t> calib_idx;   // I2, ascending
    std::size_t lag = 0;                  // 0..lag-1 are covariates only
    std::size_t target = 0;               // T

    std::size_t m() const noexcept { return train_idx.size(); }
    std::size_t l() const noexcept { return calib_idx.size(); }
};

/// Contiguous mode puts the last l observations in the calibration set.
/// Random mode draws the calibration set uniformly from {r..T-1}.
SplitPlan split_indices(std::size_t T, std::size_t l, std::size_t r, SplitMode mode = SplitMode::contiguous,
                        std::uint64_t seed = 0);

struct CalibrationScore {
    std::size_t time;
    double value;
};

struct ScoreSet {
    std::vector<CalibrationScore> entries;

    std::vector<double> values() const;
    std::size_t size() const noexcept { return entries.size(); }
};

/// Modulation from the fit's residuals over the training rows.
ModulationFunction training_modulation(const PointPredictor& fit, const Observations& obs,
                                       std::span<const std::size_t> rows);

/// Scores at ω_d for d in D_Π \ {l+1}.
ScoreSet calibration_scores(const PointPredictor& fit, const Observations& obs, const SplitPlan& plan,
                            const BlockScheme& scheme, const ModulationFunction& s);

/// ⌈(l+1)(1-α)/b⌉, evaluated with a tolerance so that decimal α that hit an
/// integer exactly are not pushed up by rounding.
std::size_t conformal_rank(double alpha, std::size_t l, std::size_t b);

/// The conformal_rank-th smallest score, or the entire-space marker when
/// α < b/(l+1).
Multiplier conformal_k(std::span<const double> scores, double alpha, std::size_t l, std::size_t b);
Multiplier conformal_k(const ScoreSet& scores, double alpha, std::size_t l, std::size_t b);

PredictionBand predict_band(const PointPredictor& fit, const Observations& obs, std::size_t target,
                            const ModulationFunction& s, Multiplier k, double alpha);

/// δ_y computed by brute force over the permutation family. Used as the
/// reference for band membership: y is in the band iff δ_y > α.
double p_value_oracle(const FunctionalSample& candidate, const PointPredictor& fit, const Observations& obs,
                      const SplitPlan& plan, const BlockScheme& scheme, const ModulationFunction& s);

/// 1 - ⌊α(l+1)/b⌋ / ((l+1)/b): coverage under exchangeability with continuous scores.
double exact_iid_coverage(std::size_t l, std::size_t b, double alpha);

/// Smallest admissible α, b/(l+1).
inline double min_alpha(std::size_t l, std::size_t b) {
    return static_cast<double>(b) / static_cast<double>(l + 1);
}

using Fitter = std::function<std::unique_ptr<PointPredictor>(const Observations&, std::span<const std::size_t>)>;

/// Everything the band needs that does not depend on α.
struct ConformalFit {
    std::unique_ptr<PointPredictor> predictor;
    ModulationFunction modulation;
    ScoreSet scores;
};

ConformalFit fit_conformal(const Observations& obs, const SplitPlan& plan, const BlockScheme& scheme,
                           const Fitter& fitter);

PredictionBand conformal_band(const ConformalFit& fit, const Observations& obs, const SplitPlan& plan,
                              const BlockScheme& scheme, double alpha);

}  // namespace fband
