#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <set>

#include "fband/conformal.hpp"
#include "fband/dgp.hpp"
#include "fband/error.hpp"
#include "fband/study.hpp"
#include "support.hpp"

using namespace fband;

namespace {

// π_i as a table over 1..l+1, written straight from the piecewise shift.
std::vector<std::size_t> shift_table(std::size_t l, std::size_t b, std::size_t i) {
    std::vector<std::size_t> out(l + 2, 0);
    for (std::size_t t = 1; t <= l + 1; ++t) {
        const std::size_t s = (i - 1) * b;
        out[t] = (t + s <= l + 1) ? t + s : t + s - (l + 1);
    }
    return out;
}

std::unique_ptr<PointPredictor> oracle_fit(const DgpConfig& dgp) {
    return oracle_predictor(dgp.psi1, dgp.psi2, dgp.grid());
}

}  // namespace

TEST_CASE("block scheme index sets") {
    const BlockScheme s71(7, 1);
    CHECK(s71.n_perms() == 8);
    const std::set<std::size_t> d71(s71.d_set().begin(), s71.d_set().end());
    CHECK(d71 == std::set<std::size_t>{1, 2, 3, 4, 5, 6, 7, 8});
    CHECK(s71.d_set().front() == 8);

    const BlockScheme s53 = build_block_scheme(5, 3);
    CHECK(s53.d_set() == std::vector<std::size_t>{6, 3});
    for (std::size_t t = 1; t <= 3; ++t) CHECK(s53.permute(2, t) == t + 3);
    for (std::size_t t = 4; t <= 6; ++t) CHECK(s53.permute(2, t) == t - 3);

    CHECK(BlockScheme(47, 6).d_set().size() == 8);
    CHECK(BlockScheme(479, 6).n_perms() == 80);
}

TEST_CASE("block scheme rejects fractional block counts") {
    try {
        BlockScheme(7, 3);
        FAIL("expected an error");
    } catch (const ArgumentError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("l=7") != std::string::npos);
        CHECK(msg.find("b=3") != std::string::npos);
    }
    CHECK_THROWS_AS(BlockScheme(5, 7), ArgumentError);
    CHECK_THROWS_AS(BlockScheme(0, 1), ArgumentError);
    CHECK_THROWS_AS(BlockScheme(5, 0), ArgumentError);
}

TEST_CASE("permutation family is a cyclic group") {
    for (std::size_t n = 1; n <= 60; ++n) {
        const std::size_t l = n - 1;
        if (l == 0) continue;
        for (std::size_t b = 1; b <= n; ++b) {
            if (n % b) continue;
            const BlockScheme s(l, b);
            std::vector<std::vector<std::size_t>> perms;
            for (std::size_t i = 1; i <= s.n_perms(); ++i) {
                auto table = shift_table(l, b, i);
                for (std::size_t t = 1; t <= n; ++t) REQUIRE(s.permute(i, t) == table[t]);
                std::vector<std::size_t> img(table.begin() + 1, table.end());
                std::sort(img.begin(), img.end());
                std::vector<std::size_t> all(n);
                std::iota(all.begin(), all.end(), 1);
                REQUIRE(img == all);
                perms.push_back(std::move(table));
            }
            for (std::size_t t = 1; t <= n; ++t) REQUIRE(perms[0][t] == t);
            for (const auto& p : perms) {
                for (const auto& q : perms) {
                    std::vector<std::size_t> comp(n + 1, 0);
                    for (std::size_t t = 1; t <= n; ++t) comp[t] = p[q[t]];
                    REQUIRE(std::find(perms.begin(), perms.end(), comp) != perms.end());
                }
            }
            const std::set<std::size_t> d(s.d_set().begin(), s.d_set().end());
            REQUIRE(d.size() == s.n_perms());
            REQUIRE(d.count(n) == 1);
        }
    }
}

TEST_CASE("contiguous split") {
    const auto p = split_indices(25, 7, 2);
    CHECK(p.m() == 16);
    CHECK(p.calib_idx == std::vector<std::size_t>{18, 19, 20, 21, 22, 23, 24});
    CHECK(p.train_idx.front() == 2);
    CHECK(p.train_idx.back() == 17);
    CHECK(p.target == 25);
    CHECK(split_indices(90, 39, 8).m() == 43);
    CHECK_THROWS_AS(split_indices(10, 9, 2), ArgumentError);
}

TEST_CASE("random split partitions the usable indices") {
    const auto a = split_indices(40, 11, 3, SplitMode::random, 17);
    const auto b = split_indices(40, 11, 3, SplitMode::random, 17);
    CHECK(a.calib_idx == b.calib_idx);
    CHECK(a.l() == 11);
    CHECK(a.m() == 26);
    CHECK(std::is_sorted(a.calib_idx.begin(), a.calib_idx.end()));
    std::set<std::size_t> all(a.train_idx.begin(), a.train_idx.end());
    all.insert(a.calib_idx.begin(), a.calib_idx.end());
    CHECK(all.size() == 37);
    CHECK(*all.begin() == 3);
    CHECK(*all.rbegin() == 39);
    CHECK(split_indices(40, 11, 3, SplitMode::random, 18).calib_idx != a.calib_idx);
}

TEST_CASE("conformal rank and multiplier") {
    CHECK(conformal_rank(0.25, 39, 1) == 30);
    CHECK(conformal_rank(0.25, 7, 1) == 6);
    CHECK(conformal_rank(0.5, 39, 1) == 20);
    CHECK(conformal_rank(0.1, 39, 1) == 36);
    CHECK(conformal_rank(0.25, 47, 6) == 6);

    std::vector<double> scores(39);
    std::iota(scores.begin(), scores.end(), 1.0);
    std::shuffle(scores.begin(), scores.end(), std::mt19937_64(2));
    CHECK(conformal_k(scores, 0.25, 39, 1).k == 30.0);
    CHECK(conformal_k(scores, 0.025, 39, 1).k == 39.0);
    CHECK(conformal_k(scores, 0.02, 39, 1).unbounded);
    CHECK(conformal_k(scores, 0.001, 39, 1).unbounded);
    CHECK_THROWS_AS(conformal_k(scores, 1.0, 39, 1), ArgumentError);
    CHECK_THROWS_AS(conformal_k(scores, 0.0, 39, 1), ArgumentError);
    CHECK_THROWS_AS(conformal_k(std::vector<double>(10, 1.0), 0.25, 39, 1), ArgumentError);

    // Ties keep their multiplicity.
    const std::vector<double> ties{1, 1, 1, 2, 2, 3, 3};
    CHECK(conformal_k(ties, 0.25, 7, 1).k == 3.0);
    CHECK(conformal_k(ties, 0.5, 7, 1).k == 2.0);
}

TEST_CASE("multiplier is nonincreasing in alpha") {
    std::mt19937_64 rng(8);
    for (int rep = 0; rep < 200; ++rep) {
        const auto scores = fband::testing::random_values(rng, 39);
        std::vector<double> abs_scores;
        for (double s : scores) abs_scores.push_back(std::abs(s));
        double prev = INFINITY;
        for (double alpha = 0.025; alpha < 0.99; alpha += 0.0125) {
            const auto k = conformal_k(abs_scores, alpha, 39, 1);
            REQUIRE_FALSE(k.unbounded);
            CHECK(k.k <= prev);
            prev = k.k;
        }
    }
}

TEST_CASE("exact coverage under exchangeability") {
    CHECK(exact_iid_coverage(7, 1, 0.25) == doctest::Approx(0.75));
    CHECK(exact_iid_coverage(479, 6, 0.25) == doctest::Approx(0.75));
    CHECK(exact_iid_coverage(7, 1, 0.20) == doctest::Approx(0.875));
    CHECK(exact_iid_coverage(39, 1, 0.1) == doctest::Approx(0.9));
    CHECK(min_alpha(39, 1) == doctest::Approx(0.025));
}

TEST_CASE("scores, bands and the p-value oracle on simulated data") {
    DgpConfig dgp;
    dgp.T = 25;
    dgp.seed = 4;
    const auto sim = simulate_series(dgp);
    const auto plan = split_indices(25, 7, 2);
    const BlockScheme scheme(7, 1);
    const auto fit = oracle_fit(dgp);
    const auto s = training_modulation(*fit, sim.obs, plan.train_idx);
    const auto scores = calibration_scores(*fit, sim.obs, plan, scheme, s);
    CHECK(scores.size() == 7);
    for (std::size_t i = 0; i < 7; ++i) CHECK(scores.entries[i].time == plan.calib_idx[i]);

    const auto k = conformal_k(scores, 0.25, 7, 1);
    const auto band = predict_band(*fit, sim.obs, plan.target, s, k, 0.25);
    CHECK(band_contains(band, band.center()));
    CHECK(p_value_oracle(band.center(), *fit, sim.obs, plan, scheme, s) == 1.0);

    // A candidate far from everything only counts itself.
    std::vector<std::vector<double>> far = band.center().components();
    for (auto& c : far)
        for (double& v : c) v += 1e6;
    const FunctionalSample outlier(band.center().grids(), far);
    CHECK(p_value_oracle(outlier, *fit, sim.obs, plan, scheme, s) == doctest::Approx(1.0 / 8.0));

    const auto k0 = predict_band(*fit, sim.obs, plan.target, s, {0.0, false}, 0.25);
    CHECK(band_size(k0) == 0.0);
    CHECK(k0.lower(0, 3) == k0.center()(0, 3));

    const auto everything = predict_band(*fit, sim.obs, plan.target, s, conformal_k(scores, 0.1, 7, 1), 0.1);
    CHECK(everything.unbounded());
    CHECK(band_contains(everything, outlier));
}

TEST_CASE("one score for l=5, b=3, taken at the third calibration time") {
    DgpConfig dgp;
    dgp.T = 20;
    dgp.seed = 12;
    const auto sim = simulate_series(dgp);
    const auto plan = split_indices(20, 5, 2);
    const BlockScheme scheme(5, 3);
    const auto fit = oracle_fit(dgp);
    const auto s = training_modulation(*fit, sim.obs, plan.train_idx);
    const auto scores = calibration_scores(*fit, sim.obs, plan, scheme, s);
    REQUIRE(scores.size() == 1);
    CHECK(scores.entries[0].time == plan.calib_idx[2]);
    CHECK_THROWS_AS(calibration_scores(*fit, sim.obs, plan, BlockScheme(7, 1), s), ArgumentError);
}

TEST_CASE("perfect predictions give zero scores") {
    DgpConfig dgp;
    dgp.T = 30;
    dgp.sigma = Mat3::Zero();
    const auto sim = simulate_series(dgp);
    const auto plan = split_indices(30, 7, 2);
    const auto fit = oracle_fit(dgp);
    const auto s = training_modulation(*fit, sim.obs, plan.train_idx);
    for (const auto& e : calibration_scores(*fit, sim.obs, plan, BlockScheme(7, 1), s).entries) CHECK(e.value == 0.0);
}

TEST_CASE("band membership agrees with the brute-force p-value") {
    std::mt19937_64 rng(31);
    for (auto [l, b] : {std::pair<std::size_t, std::size_t>{5, 1}, {5, 3}, {7, 1}, {7, 2}}) {
        DgpConfig dgp;
        dgp.T = l + 12;
        dgp.seed = 100 + l * 10 + b;
        const auto sim = simulate_series(dgp);
        const auto plan = split_indices(dgp.T, l, 2);
        const BlockScheme scheme(l, b);
        const Fitter fitter = [&](const Observations& o, std::span<const std::size_t> rows) {
            return fit_model(Model::var2, o, rows, dgp);
        };
        const auto cf = fit_conformal(sim.obs, plan, scheme, fitter);
        for (double alpha : {0.2, 0.25, 0.34, 0.5, 0.75}) {
            if (alpha < min_alpha(l, b)) continue;
            const auto band = conformal_band(cf, sim.obs, plan, scheme, alpha);
            for (int rep = 0; rep < 300; ++rep) {
                const double spread = std::uniform_real_distribution<double>(0.05, 3.0)(rng);
                auto comps = band.center().components();
                for (auto& c : comps)
                    for (double& v : c) v += spread * std::normal_distribution<double>()(rng);
                const FunctionalSample y(band.center().grids(), comps);
                const double delta = p_value_oracle(y, *cf.predictor, sim.obs, plan, scheme, cf.modulation);
                CHECK(band_contains(band, y) == (delta > alpha));
            }
        }
    }
}

TEST_CASE("band bounds do not depend on the scale of the modulation") {
    DgpConfig dgp;
    dgp.T = 50;
    dgp.seed = 77;
    const auto sim = simulate_series(dgp);
    const auto plan = split_indices(50, 23, 2);
    const BlockScheme scheme(23, 1);
    const auto fit = fit_model(Model::far2, sim.obs, plan.train_idx, dgp);
    const auto s = training_modulation(*fit, sim.obs, plan.train_idx);
    const auto k = conformal_k(calibration_scores(*fit, sim.obs, plan, scheme, s), 0.25, 23, 1);
    const auto base = predict_band(*fit, sim.obs, plan.target, s, k, 0.25);
    for (double lambda : {1e-3, 1.0, 1e3}) {
        const auto sl = s.scaled(lambda);
        const auto kl = conformal_k(calibration_scores(*fit, sim.obs, plan, scheme, sl), 0.25, 23, 1);
        const auto band = predict_band(*fit, sim.obs, plan.target, sl, kl, 0.25);
        for (std::size_t i = 0; i < dgp.grid_points; ++i) {
            CHECK(fband::testing::close_rel(band.lower(0, i), base.lower(0, i), 1e-9));
            CHECK(fband::testing::close_rel(band.upper(0, i), base.upper(0, i), 1e-9));
        }
    }
}
