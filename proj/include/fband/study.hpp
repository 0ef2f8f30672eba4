#pragma once

// Monte Carlo coverage and band-size study over the VAR(2)-Fourier process.
// run_study distributes replications over OpenMP threads; run_study_serial is
// the single-threaded reference. Both produce identical results because every
// replication draws from its own derived seed.

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fband/conformal.hpp"
#include "fband/dgp.hpp"

namespace fband {

enum class Model { oracle, var1, var2, var3, far1, far2, far3 };

std::string_view model_name(Model m);
Model parse_model(std::string_view name);
/// Leading observations used only as covariates.
std::size_t model_lag(Model m);
const std::vector<Model>& all_models();
/// Calibration size paired with T in the standard study grid
/// (25→7, 50→23, 100→47, 1000→479), nullopt for other T.
std::optional<std::size_t> standard_l(std::size_t T);

std::unique_ptr<PointPredictor> fit_model(Model model, const Observations& obs, std::span<const std::size_t> rows,
                                          const DgpConfig& dgp);

struct StudyConfig {
    Model model = Model::oracle;
    std::size_t T = 25;
    std::size_t l = 7;
    std::size_t b = 1;
    double alpha = 0.25;
    std::size_t N = 1000;
    std::uint64_t seed = 1;
    SplitMode split = SplitMode::contiguous;
    DgpConfig dgp;   // T and seed are overridden per replication

    /// Throws ArgumentError when (l+1)/b is fractional, α is outside
    /// [b/(l+1), 1), ⌊α(l+1)/b⌋ b/(l+1) != α, or the training set is empty.
    void validate() const;
};

struct ReplicationRecord {
    bool covered = false;
    double size = 0.0;
    double k = 0.0;

    bool operator==(const ReplicationRecord&) const = default;
};

struct StudyResult {
    double coverage = 0.0;
    double ci_lo = 0.0;   // 99% normal-approximation binomial interval
    double ci_hi = 0.0;
    double size_q1 = 0.0;
    double size_median = 0.0;
    double size_q3 = 0.0;
    std::vector<ReplicationRecord> records;

    bool operator==(const StudyResult&) const = default;
};

ReplicationRecord run_replication(const StudyConfig& cfg, std::size_t rep);
StudyResult run_study_serial(const StudyConfig& cfg);
/// threads <= 0 keeps the OpenMP default.
StudyResult run_study(const StudyConfig& cfg, int threads = 0);
StudyResult summarize(std::vector<ReplicationRecord> records);

/// Sample quantile with linear interpolation between order statistics
/// (Hyndman-Fan type 7).
double quantile(std::vector<double> values, double p);

/// z_{0.995}
constexpr double kZ99 = 2.5758293035489004;

struct StudyCell {
    StudyConfig cfg;
    StudyResult result;
};

/// Rows (b, T); one column per model, cells "cov[lo,hi]".
void write_coverage_table(std::ostream& out, std::span<const StudyCell> cells);
/// Rows (b, T); one column per model, cells "median[q1,q3]".
void write_size_table(std::ostream& out, std::span<const StudyCell> cells);
/// One row per replication.
void write_replications(std::ostream& out, const StudyCell& cell);

}  // namespace fband
