#pragma once

// Empirical checks of the premises behind the coverage bound for dependent
// data: how far calibration oracle scores R* are from their population law,
// and how far fitted scores R are from R*.
//
// Both R and R* are reported on the root-mean-square modulation scale
// (s / sqrt(m)); the band itself is invariant to that rescaling, but the
// comparison across training sizes is not.

#include <cstdint>
#include <vector>

#include "fband/study.hpp"

namespace fband {

struct DiagnosticsConfig {
    Model model = Model::var2;
    std::size_t m = 15;
    std::size_t l = 39;
    std::size_t b = 1;
    std::size_t N = 200;
    std::uint64_t seed = 1;
    /// Size of the independent oracle-score sample estimating F.
    std::size_t oracle_draws = 100000;
    int threads = 0;
    DgpConfig dgp;
};

struct DiagnosticsRecord {
    double sup_gap = 0.0;      // sup_a |F̃(a) - F̂(a)|
    double rms_gap = 0.0;      // sqrt(mean_{d in D_Π} (R - R*)²)
    double target_gap = 0.0;   // |R_{T+1} - R*_{T+1}|
};

struct DiagnosticsResult {
    std::vector<DiagnosticsRecord> records;
    DiagnosticsRecord mean;
    DiagnosticsRecord median;
};

/// Independent draws of R*_{T+1}: each training set's oracle residuals are the
/// curves g'ε_h, so no VAR recursion is needed.
std::vector<double> oracle_score_sample(const DgpConfig& dgp, std::size_t m, std::size_t draws,
                                        std::uint64_t seed);

/// sup over a of |#{x < a}/|x| - #{y < a}/|y||, also checking right limits.
double sup_cdf_gap(std::vector<double> x, std::vector<double> y);

DiagnosticsResult theorem_diagnostics(const DiagnosticsConfig& cfg);

}  // namespace fband
