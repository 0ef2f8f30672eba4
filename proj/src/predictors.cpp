#include "fband/predictors.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>

#include "fband/columnar.hpp"
#include "fband/error.hpp"

namespace fband {

namespace {

constexpr double kRankThreshold = 1e-10;

void require_lags(const Observations& obs, std::size_t t, std::size_t lag, const char* who) {
    if (t < lag || t > obs.size())
        throw ContractViolation(std::string(who) + ": time " + std::to_string(t) + " needs " +
                                std::to_string(lag) + " lags");
}

std::vector<Vec3> lagged_coefficients(const Observations& obs, std::size_t t, std::size_t r) {
    std::vector<Vec3> lags;
    lags.reserve(r);
    for (std::size_t i = 1; i <= r; ++i) {
        const auto& c = obs.curves[t - i];
        lags.push_back(FourierBasis::project(c.component(0), c.grid(0)));
    }
    return lags;
}

}  // namespace

// ---------------------------------------------------------------- basis

Vec3 FourierBasis::at(double q) {
    const double root2 = std::numbers::sqrt2;
    const double w = 2.0 * std::numbers::pi * q;
    return {1.0, root2 * std::sin(w), root2 * std::cos(w)};
}

std::vector<double> FourierBasis::evaluate(const Vec3& coef, const Grid& grid) {
    std::vector<double> out(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) out[i] = at(grid.point(i)).dot(coef);
    return out;
}

Vec3 FourierBasis::project(std::span<const double> curve, const Grid& grid) {
    if (curve.size() != grid.size()) throw StructuralError("FourierBasis::project: length mismatch");
    Vec3 acc = Vec3::Zero();
    const std::size_t n = grid.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double w = (i == 0 || i + 1 == n) ? 0.5 : 1.0;
        acc += w * curve[i] * at(grid.point(i));
    }
    return acc * grid.step();
}

// ---------------------------------------------------------------- VAR

VarCoefficients fit_var(std::span<const Vec3> series, std::span<const std::size_t> rows, std::size_t r,
                        bool intercept) {
    if (r == 0) throw ArgumentError("fit_var: order must be positive");
    const std::size_t k = 3 * r + (intercept ? 1 : 0);
    if (rows.size() < k || rows.size() < r + 1)
        throw ArgumentError("fit_var: " + std::to_string(rows.size()) + " observations cannot identify " +
                            std::to_string(k) + " coefficients per equation");
    Eigen::MatrixXd X(rows.size(), k);
    Eigen::MatrixXd Y(rows.size(), 3);
    for (std::size_t row = 0; row < rows.size(); ++row) {
        const std::size_t t = rows[row];
        if (t < r || t >= series.size())
            throw ArgumentError("fit_var: row " + std::to_string(t) + " lacks " + std::to_string(r) + " lags");
        for (std::size_t i = 0; i < r; ++i) X.block(row, 3 * i, 1, 3) = series[t - i - 1].transpose();
        if (intercept) X(row, k - 1) = 1.0;
        Y.row(row) = series[t].transpose();
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    qr.setThreshold(kRankThreshold);
    if (static_cast<std::size_t>(qr.rank()) < k)
        throw ArgumentError("fit_var: rank-deficient design, " + std::to_string(k - qr.rank()) + " of " +
                            std::to_string(k) + " columns are linearly dependent");
    const Eigen::MatrixXd B = qr.solve(Y);   // k x 3
    VarCoefficients out;
    for (std::size_t i = 0; i < r; ++i) out.psi.push_back(B.block(3 * i, 0, 3, 3).transpose());
    if (intercept) out.intercept = B.row(k - 1).transpose();
    return out;
}

VarCoefficients fit_var(std::span<const Vec3> series, std::size_t r, bool intercept) {
    std::vector<std::size_t> rows;
    for (std::size_t t = r; t < series.size(); ++t) rows.push_back(t);
    return fit_var(series, rows, r, intercept);
}

Vec3 var_forecast(const VarCoefficients& coef, std::span<const Vec3> lags) {
    if (lags.size() < coef.order())
        throw ContractViolation("var_forecast: " + std::to_string(coef.order()) + " lag vectors required");
    Vec3 y = coef.intercept;
    for (std::size_t i = 0; i < coef.order(); ++i) y += coef.psi[i] * lags[i];
    return y;
}

FunctionalSample predict_var(const VarCoefficients& coef, std::span<const Vec3> lags, const Grid& grid) {
    return FunctionalSample(grid, {FourierBasis::evaluate(var_forecast(coef, lags), grid)});
}

VarPredictor::VarPredictor(VarCoefficients coef, Grid grid) : coef_(std::move(coef)), grid_(grid) {}

FunctionalSample VarPredictor::predict(const Observations& obs, std::size_t t) const {
    require_lags(obs, t, coef_.order(), "VarPredictor");
    return predict_var(coef_, lagged_coefficients(obs, t, coef_.order()), grid_);
}

OraclePredictor::OraclePredictor(Mat3 psi1, Mat3 psi2, Grid grid) : grid_(grid) {
    coef_.psi = {psi1, psi2};
}

FunctionalSample OraclePredictor::predict(const Observations& obs, std::size_t t) const {
    require_lags(obs, t, 2, "OraclePredictor");
    return predict_var(coef_, lagged_coefficients(obs, t, 2), grid_);
}

std::unique_ptr<PointPredictor> oracle_predictor(const Mat3& psi1, const Mat3& psi2, const Grid& grid) {
    return std::make_unique<OraclePredictor>(psi1, psi2, grid);
}

// ---------------------------------------------------------------- concurrent

ConcurrentSpec ConcurrentSpec::far(std::size_t r) {
    if (r == 0) throw ArgumentError("ConcurrentSpec::far: order must be positive");
    ConcurrentSpec s;
    for (std::size_t i = 1; i <= r; ++i) s.curve_lags.push_back(i);
    return s;
}

ConcurrentSpec ConcurrentSpec::market() {
    ConcurrentSpec s;
    s.curve_lags = {8};
    s.scalar_lag = 2;
    return s;
}

std::size_t ConcurrentSpec::regressors() const noexcept {
    return curve_lags.size() + (scalar_lag ? 1 : 0) + (intercept ? 1 : 0);
}

std::size_t ConcurrentSpec::max_lag() const noexcept {
    std::size_t m = 0;
    for (auto l : curve_lags) m = std::max(m, l);
    if (scalar_lag) m = std::max(m, *scalar_lag);
    return m;
}

ConcurrentCoefficients fit_concurrent(const Observations& obs, std::span<const std::size_t> rows,
                                      const ConcurrentSpec& spec) {
    if (obs.curves.empty()) throw ArgumentError("fit_concurrent: empty series");
    const std::size_t k = spec.regressors();
    if (k == 0) throw ArgumentError("fit_concurrent: no regressors");
    if (rows.size() < k)
        throw ArgumentError("fit_concurrent: " + std::to_string(rows.size()) + " rows for " +
                            std::to_string(k) + " regressors");
    if (spec.scalar_lag && obs.scalars.size() < obs.curves.size())
        throw StructuralError("fit_concurrent: scalar covariate series shorter than curve series");
    for (auto t : rows)
        if (t < spec.max_lag() || t >= obs.size())
            throw ArgumentError("fit_concurrent: row " + std::to_string(t) + " lacks required lags");

    const auto& grids = obs.curves.front().grids();
    ConcurrentCoefficients out{spec, grids, {}};
    Eigen::MatrixXd X(rows.size(), k);
    Eigen::VectorXd y(rows.size());
    for (std::size_t j = 0; j < grids.size(); ++j) {
        out.beta.emplace_back(grids[j].size() * k);
        for (std::size_t i = 0; i < grids[j].size(); ++i) {
            for (std::size_t row = 0; row < rows.size(); ++row) {
                const std::size_t t = rows[row];
                std::size_t c = 0;
                for (auto lag : spec.curve_lags) X(row, c++) = obs.curves[t - lag](j, i);
                if (spec.scalar_lag) X(row, c++) = obs.scalars[t - *spec.scalar_lag];
                if (spec.intercept) X(row, c++) = 1.0;
                y(row) = obs.curves[t](j, i);
            }
            Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
            qr.setThreshold(kRankThreshold);
            if (static_cast<std::size_t>(qr.rank()) < k)
                throw ArgumentError("fit_concurrent: collinear regressors at component " + std::to_string(j) +
                                    ", q = " + format_double(grids[j].point(i)));
            const Eigen::VectorXd b = qr.solve(y);
            for (std::size_t c = 0; c < k; ++c) out.beta[j][i * k + c] = b(c);
        }
    }
    return out;
}

ConcurrentPredictor::ConcurrentPredictor(ConcurrentCoefficients coef,
                                         std::optional<std::vector<Direction>> monotone)
    : coef_(std::move(coef)), monotone_(std::move(monotone)) {
    if (monotone_ && monotone_->size() != coef_.grids.size())
        throw StructuralError("ConcurrentPredictor: one monotone direction per component required");
}

PredictorKind ConcurrentPredictor::kind() const {
    return coef_.spec.scalar_lag ? PredictorKind::market : PredictorKind::far;
}

FunctionalSample ConcurrentPredictor::predict_raw(const Observations& obs, std::size_t t) const {
    const auto& spec = coef_.spec;
    require_lags(obs, t, spec.max_lag(), "ConcurrentPredictor");
    const std::size_t k = spec.regressors();
    std::vector<std::vector<double>> comps;
    for (std::size_t j = 0; j < coef_.grids.size(); ++j) {
        std::vector<double> v(coef_.grids[j].size());
        for (std::size_t i = 0; i < v.size(); ++i) {
            const double* b = &coef_.beta[j][i * k];
            double acc = 0.0;
            std::size_t c = 0;
            for (auto lag : spec.curve_lags) acc += b[c++] * obs.curves[t - lag](j, i);
            if (spec.scalar_lag) acc += b[c++] * obs.scalars[t - *spec.scalar_lag];
            if (spec.intercept) acc += b[c++];
            v[i] = acc;
        }
        comps.push_back(std::move(v));
    }
    return FunctionalSample(coef_.grids, std::move(comps));
}

FunctionalSample ConcurrentPredictor::predict(const Observations& obs, std::size_t t) const {
    FunctionalSample raw = predict_raw(obs, t);
    if (!monotone_) return raw;
    auto comps = raw.components();
    for (std::size_t j = 0; j < comps.size(); ++j) comps[j] = monotone_correct(comps[j], (*monotone_)[j]);
    return FunctionalSample(coef_.grids, std::move(comps));
}

// ---------------------------------------------------------------- rectification

namespace {

std::vector<double> rectify_increasing(std::span<const double> v) {
    const std::size_t n = v.size();
    std::vector<double> out(v.begin(), v.end());
    if (n == 0) return out;
    double top = v[0];
    std::size_t top_at = 0;
    std::size_t i = 1;
    while (i < n) {
        if (v[i] >= top) {
            top = v[i];
            top_at = i;
            ++i;
            continue;
        }
        std::size_t next = i;
        while (next < n && v[next] < top) ++next;
        if (next == n) {
            std::fill(out.begin() + static_cast<std::ptrdiff_t>(i), out.end(), top);
            break;
        }
        const double a = top;
        const double b = v[next];
        const double span = static_cast<double>(next - top_at);
        for (std::size_t x = i; x < next; ++x)
            out[x] = std::min(b, a + (b - a) * (static_cast<double>(x - top_at) / span));
        i = next;
    }
    return out;
}

}  // namespace

std::vector<double> monotone_correct(std::span<const double> values, Direction direction) {
    if (direction == Direction::increasing) return rectify_increasing(values);
    std::vector<double> neg(values.size());
    std::transform(values.begin(), values.end(), neg.begin(), [](double x) { return -x; });
    auto out = rectify_increasing(neg);
    for (double& x : out) x = -x;
    return out;
}

// ---------------------------------------------------------------- serialization

void write_coefficients(std::ostream& out, const VarCoefficients& coef) {
    out << "predictor var " << coef.order() << '\n';
    for (const auto& m : coef.psi)
        for (int r = 0; r < 3; ++r)
            out << format_double(m(r, 0)) << ' ' << format_double(m(r, 1)) << ' ' << format_double(m(r, 2))
                << '\n';
    out << "intercept " << format_double(coef.intercept(0)) << ' ' << format_double(coef.intercept(1)) << ' '
        << format_double(coef.intercept(2)) << '\n';
}

VarCoefficients read_var_coefficients(std::istream& in) {
    std::string tag, kind;
    std::size_t r = 0;
    if (!(in >> tag >> kind >> r) || tag != "predictor" || kind != "var")
        throw ParseError("header", 1, "expected 'predictor var <r>'");
    VarCoefficients coef;
    for (std::size_t i = 0; i < r; ++i) {
        Mat3 m;
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b)
                if (!(in >> m(a, b))) throw ParseError("psi[" + std::to_string(i) + "]", 0, "truncated matrix");
        coef.psi.push_back(m);
    }
    if (!(in >> tag >> coef.intercept(0) >> coef.intercept(1) >> coef.intercept(2)) || tag != "intercept")
        throw ParseError("intercept", 0, "missing intercept line");
    return coef;
}

void write_coefficients(std::ostream& out, const ConcurrentCoefficients& coef) {
    const auto& s = coef.spec;
    out << "predictor " << (s.scalar_lag ? "market" : "far") << ' ' << s.max_lag() << '\n';
    out << "lags";
    for (auto l : s.curve_lags) out << ' ' << l;
    out << '\n' << "scalar_lag " << (s.scalar_lag ? static_cast<long>(*s.scalar_lag) : -1L) << '\n';
    out << "intercept " << (s.intercept ? 1 : 0) << '\n';
    const std::size_t k = s.regressors();
    for (std::size_t j = 0; j < coef.grids.size(); ++j) {
        std::vector<std::vector<double>> cols(k, std::vector<double>(coef.grids[j].size()));
        for (std::size_t i = 0; i < coef.grids[j].size(); ++i)
            for (std::size_t c = 0; c < k; ++c) cols[c][i] = coef.at(j, i, c);
        write_columnar(out, FunctionalSample(coef.grids[j], std::move(cols)));
    }
}

ConcurrentCoefficients read_concurrent_coefficients(std::istream& in) {
    std::string line, tag, kind;
    ConcurrentCoefficients coef;
    auto next_line = [&](const char* what) {
        if (!std::getline(in, line)) throw ParseError(what, 0, "truncated coefficient header");
        return std::istringstream(line);
    };
    {
        auto ss = next_line("predictor");
        std::size_t r = 0;
        if (!(ss >> tag >> kind >> r) || tag != "predictor" || (kind != "far" && kind != "market"))
            throw ParseError("predictor", 1, "expected 'predictor far|market <order>'");
    }
    {
        auto ss = next_line("lags");
        ss >> tag;
        std::size_t l = 0;
        while (ss >> l) coef.spec.curve_lags.push_back(l);
    }
    {
        auto ss = next_line("scalar_lag");
        long l = -1;
        ss >> tag >> l;
        if (l >= 0) coef.spec.scalar_lag = static_cast<std::size_t>(l);
    }
    {
        auto ss = next_line("intercept");
        int flag = 0;
        ss >> tag >> flag;
        coef.spec.intercept = flag != 0;
    }
    const std::size_t k = coef.spec.regressors();
    for (const auto& block : read_columnar(in)) {
        if (block.p() != k) throw ParseError("coefficients", 0, "block width does not match regressor count");
        coef.grids.push_back(block.grid(0));
        std::vector<double> beta(block.grid(0).size() * k);
        for (std::size_t i = 0; i < block.grid(0).size(); ++i)
            for (std::size_t c = 0; c < k; ++c) beta[i * k + c] = block(c, i);
        coef.beta.push_back(std::move(beta));
    }
    return coef;
}

}  // namespace fband
