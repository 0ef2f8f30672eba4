#include <doctest.h>

#include "fband/diagnostics.hpp"

using namespace fband;

TEST_CASE("empirical cdf gap") {
    CHECK(sup_cdf_gap({1, 2, 3}, {1, 2, 3}) == 0.0);
    CHECK(sup_cdf_gap({0, 0}, {1, 1}) == doctest::Approx(1.0));
    CHECK(sup_cdf_gap({1, 2, 3, 4}, {1, 2}) == doctest::Approx(0.5));
    // Brute force over every candidate point and its right limit.
    std::vector<double> x{0.3, 1.2, 1.2, 2.5, 4.0}, y{0.1, 1.2, 3.0};
    double best = 0.0;
    std::vector<double> pts = x;
    pts.insert(pts.end(), y.begin(), y.end());
    for (double a : pts)
        for (double eps : {0.0, 1e-9}) {
            double fx = 0, fy = 0;
            for (double v : x) fx += v < a + eps;
            for (double v : y) fy += v < a + eps;
            best = std::max(best, std::abs(fx / x.size() - fy / y.size()));
        }
    CHECK(sup_cdf_gap(x, y) == doctest::Approx(best));
}

TEST_CASE("oracle model has no fitting discrepancy") {
    DiagnosticsConfig cfg;
    cfg.model = Model::oracle;
    cfg.N = 10;
    cfg.oracle_draws = 2000;
    const auto res = theorem_diagnostics(cfg);
    REQUIRE(res.records.size() == 10);
    for (const auto& r : res.records) {
        CHECK(r.rms_gap == 0.0);
        CHECK(r.target_gap == 0.0);
    }
}

TEST_CASE("fitted-score discrepancy shrinks with training size") {
    DiagnosticsConfig cfg;
    cfg.model = Model::var2;
    cfg.N = 40;
    cfg.oracle_draws = 2000;
    cfg.m = 15;
    const double small = theorem_diagnostics(cfg).median.rms_gap;
    cfg.m = 200;
    const double large = theorem_diagnostics(cfg).median.rms_gap;
    CHECK(large < small);
}

TEST_CASE("calibration cdf gap shrinks with the number of scores") {
    DiagnosticsConfig cfg;
    cfg.model = Model::oracle;
    cfg.m = 30;
    cfg.N = 40;
    cfg.oracle_draws = 20000;
    cfg.l = 7;
    const double few = theorem_diagnostics(cfg).mean.sup_gap;
    cfg.l = 79;
    const double many = theorem_diagnostics(cfg).mean.sup_gap;
    CHECK(many < few);
}

TEST_CASE("oracle score sample is reproducible") {
    const DgpConfig dgp;
    const auto a = oracle_score_sample(dgp, 20, 500, 3);
    CHECK(a == oracle_score_sample(dgp, 20, 500, 3));
    for (double v : a) CHECK(v > 0.0);
}
