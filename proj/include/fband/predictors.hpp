#pragma once

// Point predictors wrapped by the conformal procedure: the known-parameter
// oracle, VAR(r) on Fourier coefficients, concurrent functional autoregression
// (optionally with a lagged scalar covariate) and the monotone rectification
// applied to market curve forecasts.

#include <Eigen/Dense>

#include <cstddef>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "fband/func_core.hpp"

namespace fband {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

enum class Direction { increasing, decreasing };

/// A functional time series with an optional scalar series aligned to it.
/// Index t is a zero-based time position.
struct Observations {
    std::vector<FunctionalSample> curves;
    std::vector<double> scalars;

    std::size_t size() const noexcept { return curves.size(); }
};

enum class PredictorKind { oracle, var, far, market };

class PointPredictor {
public:
    virtual ~PointPredictor() = default;

    virtual PredictorKind kind() const = 0;
    /// Earliest time index for which predict() has all of its lags.
    virtual std::size_t max_lag() const = 0;
    /// Prediction of the curve at time t from data strictly before t.
    virtual FunctionalSample predict(const Observations& obs, std::size_t t) const = 0;
};

/// g(q) = (1, sin(2πq)/√(1/2), cos(2πq)/√(1/2)), orthonormal on [0, 1].
class FourierBasis {
public:
    static constexpr std::size_t dim = 3;

    static Vec3 at(double q);
    static std::vector<double> evaluate(const Vec3& coef, const Grid& grid);
    /// Trapezoidal inner products <curve, g_i>.
    static Vec3 project(std::span<const double> curve, const Grid& grid);
};

// ---------------------------------------------------------------- VAR

struct VarCoefficients {
    std::vector<Mat3> psi;            // psi[i] multiplies the lag-(i+1) vector
    Vec3 intercept = Vec3::Zero();

    std::size_t order() const noexcept { return psi.size(); }
};

/// Least squares fit of y_t = Σ_i Ψ_i y_{t-i} (+ c) over the given target rows.
/// Every row needs t >= r.
VarCoefficients fit_var(std::span<const Vec3> series, std::span<const std::size_t> rows, std::size_t r,
                        bool intercept = false);
/// Uses every row with a full set of lags.
VarCoefficients fit_var(std::span<const Vec3> series, std::size_t r, bool intercept = false);

/// lags[0] is the lag-1 vector.
Vec3 var_forecast(const VarCoefficients& coef, std::span<const Vec3> lags);
FunctionalSample predict_var(const VarCoefficients& coef, std::span<const Vec3> lags, const Grid& grid);

class VarPredictor final : public PointPredictor {
public:
    VarPredictor(VarCoefficients coef, Grid grid);

    PredictorKind kind() const override { return PredictorKind::var; }
    std::size_t max_lag() const override { return coef_.order(); }
    FunctionalSample predict(const Observations& obs, std::size_t t) const override;
    const VarCoefficients& coefficients() const noexcept { return coef_; }

private:
    VarCoefficients coef_;
    Grid grid_;
};

/// Known basis and known VAR(2) matrices.
class OraclePredictor final : public PointPredictor {
public:
    OraclePredictor(Mat3 psi1, Mat3 psi2, Grid grid);

    PredictorKind kind() const override { return PredictorKind::oracle; }
    std::size_t max_lag() const override { return 2; }
    FunctionalSample predict(const Observations& obs, std::size_t t) const override;

private:
    VarCoefficients coef_;
    Grid grid_;
};

std::unique_ptr<PointPredictor> oracle_predictor(const Mat3& psi1, const Mat3& psi2, const Grid& grid);

// ---------------------------------------------------------------- concurrent

/// Regressors at grid point q: y_{t-lag}(q) for each curve lag, then the
/// scalar s_{t-scalar_lag} if present, then 1 if intercept.
struct ConcurrentSpec {
    std::vector<std::size_t> curve_lags;
    std::optional<std::size_t> scalar_lag;
    bool intercept = false;

    static ConcurrentSpec far(std::size_t r);
    /// y_t(q) = β1(q) y_{t-8}(q) + β2(q) P_{t-2}
    static ConcurrentSpec market();

    std::size_t regressors() const noexcept;
    std::size_t max_lag() const noexcept;
};

struct ConcurrentCoefficients {
    ConcurrentSpec spec;
    std::vector<Grid> grids;
    /// beta[j][i * regressors + c]: coefficient c at grid point i of component j.
    std::vector<std::vector<double>> beta;

    double at(std::size_t j, std::size_t i, std::size_t c) const {
        return beta[j][i * spec.regressors() + c];
    }
};

/// Independent OLS at every grid point of every component.
ConcurrentCoefficients fit_concurrent(const Observations& obs, std::span<const std::size_t> rows,
                                      const ConcurrentSpec& spec);

class ConcurrentPredictor final : public PointPredictor {
public:
    /// With `monotone` set, component j of each prediction is rectified in
    /// direction monotone[j].
    explicit ConcurrentPredictor(ConcurrentCoefficients coef,
                                 std::optional<std::vector<Direction>> monotone = std::nullopt);

    PredictorKind kind() const override;
    std::size_t max_lag() const override { return coef_.spec.max_lag(); }
    FunctionalSample predict(const Observations& obs, std::size_t t) const override;
    /// The raw linear forecast, before any monotone rectification.
    FunctionalSample predict_raw(const Observations& obs, std::size_t t) const;
    const ConcurrentCoefficients& coefficients() const noexcept { return coef_; }

private:
    ConcurrentCoefficients coef_;
    std::optional<std::vector<Direction>> monotone_;
};

// ---------------------------------------------------------------- rectification

/// Keeps values that equal the running extremum (max for increasing, min for
/// decreasing); between such points interpolates linearly from the last
/// extremum position q' to the first later point q'' that reaches it again.
/// When q'' does not exist the curve stays flat at the running extremum.
std::vector<double> monotone_correct(std::span<const double> values, Direction direction);

// ---------------------------------------------------------------- serialization

void write_coefficients(std::ostream& out, const VarCoefficients& coef);
void write_coefficients(std::ostream& out, const ConcurrentCoefficients& coef);
VarCoefficients read_var_coefficients(std::istream& in);
ConcurrentCoefficients read_concurrent_coefficients(std::istream& in);

}  // namespace fband
