#include "fband/dgp.hpp"

#include <cmath>
#include <sstream>

#include "fband/error.hpp"

namespace fband {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

Mat3 default_upsilon1() {
    Mat3 m;
    m << 0.8, 0.3, 0.3, 0.3, 0.8, 0.3, 0.3, 0.3, 0.8;
    return m;
}

Mat3 default_upsilon2() {
    Mat3 m;
    m << 0.5, 0.1, 0.1, 0.1, 0.5, 0.1, 0.1, 0.1, 0.5;
    return m;
}

Mat3 default_sigma() {
    Mat3 m;
    m << 0.5, 0.3, 0.3, 0.3, 0.5, 0.3, 0.3, 0.3, 0.5;
    return m;
}

Mat3 half_frobenius_normalized(const Mat3& upsilon) {
    const double norm = upsilon.norm();
    if (!(norm > 0.0)) throw ArgumentError("half_frobenius_normalized: zero matrix");
    return upsilon / (2.0 * norm);
}

double companion_spectral_radius(const Mat3& psi1, const Mat3& psi2) {
    Eigen::Matrix<double, 6, 6> companion = Eigen::Matrix<double, 6, 6>::Zero();
    companion.block<3, 3>(0, 0) = psi1;
    companion.block<3, 3>(0, 3) = psi2;
    companion.block<3, 3>(3, 0) = Mat3::Identity();
    return companion.eigenvalues().cwiseAbs().maxCoeff();
}

MvtSampler::MvtSampler(const Mat3& sigma, std::optional<double> df) : df_(df) {
    if (!sigma.isApprox(sigma.transpose())) throw ArgumentError("MvtSampler: scale matrix is not symmetric");
    if (df && !(*df > 0.0)) throw ArgumentError("MvtSampler: degrees of freedom must be positive");
    if (sigma.isZero(0.0)) {
        degenerate_ = true;
        chol_.setZero();
    } else {
        Eigen::LLT<Mat3> llt(sigma);
        if (llt.info() != Eigen::Success)
            throw ArgumentError("MvtSampler: scale matrix is not positive definite");
        chol_ = llt.matrixL();
    }
    if (df) chi2_.emplace(*df);
}

Vec3 MvtSampler::operator()(Rng& rng) {
    Vec3 z(normal_(rng), normal_(rng), normal_(rng));
    double mix = 1.0;
    if (chi2_) mix = std::sqrt(*df_ / (*chi2_)(rng));
    if (degenerate_) return Vec3::Zero();
    return mix * (chol_ * z);
}

Vec3 sample_mvt(std::optional<double> df, const Mat3& sigma, Rng& rng) {
    MvtSampler sampler(sigma, df);
    return sampler(rng);
}

SimulatedSeries simulate_series(const DgpConfig& cfg) {
    if (cfg.T == 0) throw ArgumentError("simulate_series: T must be positive");
    const double radius = companion_spectral_radius(cfg.psi1, cfg.psi2);
    if (!(radius < 1.0)) {
        std::ostringstream msg;
        msg << "simulate_series: VAR(2) is not stable, det(I - Psi1 u - Psi2 u^2) vanishes for some |u| <= 1 "
            << "(companion spectral radius " << radius << ")";
        throw ArgumentError(msg.str());
    }
    Rng rng(cfg.seed);
    MvtSampler eps(cfg.sigma, cfg.df);
    const Grid grid = cfg.grid();

    Vec3 prev1 = Vec3::Zero();
    Vec3 prev2 = Vec3::Zero();
    SimulatedSeries out;
    out.latent.reserve(cfg.T + 1);
    out.obs.curves.reserve(cfg.T + 1);
    const std::size_t total = cfg.burn_in + cfg.T + 1;
    for (std::size_t step = 0; step < total; ++step) {
        const Vec3 y = cfg.psi1 * prev1 + cfg.psi2 * prev2 + eps(rng);
        prev2 = prev1;
        prev1 = y;
        if (step < cfg.burn_in) continue;
        out.latent.push_back(y);
        out.obs.curves.emplace_back(grid, std::vector<std::vector<double>>{FourierBasis::evaluate(y, grid)});
    }
    return out;
}

}  // namespace fband
