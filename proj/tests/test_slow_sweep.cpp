#include <doctest.h>

#include "fband/study.hpp"

using namespace fband;

// Every (model, T, b) cell of the standard study grid covers 0.75 within
// 0.025. Run at N = 5000: at N = 1000 the binomial sd alone is 0.0137.
TEST_CASE("coverage over the full study grid") {
    const std::pair<std::size_t, std::size_t> cells[] = {{1, 25}, {1, 50}, {1, 100}, {1, 1000}, {6, 100}, {6, 1000}};
    for (Model m : all_models())
        for (auto [b, T] : cells) {
            StudyConfig cfg;
            cfg.model = m;
            cfg.T = T;
            cfg.b = b;
            cfg.l = standard_l(T).value();
            cfg.N = 5000;
            const auto r = run_study(cfg);
            INFO(model_name(m), " b=", b, " T=", T, " coverage ", r.coverage);
            CHECK(std::abs(r.coverage - 0.75) <= 0.025);
        }
}
