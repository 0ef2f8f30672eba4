#pragma once

#include <omp.h>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fband {

/// Runs fn(i) for i in [0, n) on OpenMP threads. Exceptions cannot leave an
/// OpenMP region, so the one thrown at the smallest index is rethrown
/// afterwards as runtime_error("<label> <index>: <what>").
template <class Fn>
void parallel_for(std::size_t n, int threads, const char* label, Fn&& fn) {
    long failed = -1;
    std::string failure;
    const int team = threads > 0 ? threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 4) num_threads(team)
    for (long i = 0; i < static_cast<long>(n); ++i) {
        try {
            fn(static_cast<std::size_t>(i));
        } catch (const std::exception& e) {
#pragma omp critical(fband_parallel_for_failure)
            if (failed < 0 || i < failed) {
                failed = i;
                failure = e.what();
            }
        }
    }
    if (failed >= 0) throw std::runtime_error(std::string(label) + " " + std::to_string(failed) + ": " + failure);
}

}  // namespace fband
