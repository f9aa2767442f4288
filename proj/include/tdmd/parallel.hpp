#pragma once

#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>

#include <Eigen/Core>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace tdmd {

inline void set_num_threads(int threads) {
#ifdef _OPENMP
    omp_set_num_threads(threads < 1 ? 1 : threads);
#else
    (void)threads;
#endif
}

inline int num_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

/// Default thread count: TDMD_THREADS when set to a positive integer, else 1.
inline int default_threads() {
    if (const char* env = std::getenv("TDMD_THREADS")) {
        try {
            int t = std::stoi(env);
            if (t > 0)
                return t;
        } catch (...) {
        }
    }
    return 1;
}

/// Runs body(k) for k in [0, count). Iterations must touch disjoint state.
/// The first exception thrown by any iteration is rethrown on the caller.
template <typename Body>
void for_each_slice(Eigen::Index count, Body&& body) {
    std::exception_ptr failure;
    std::mutex guard;
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (count > 1)
#endif
    for (Eigen::Index k = 0; k < count; ++k) {
        try {
            body(k);
        } catch (...) {
            std::lock_guard<std::mutex> lock(guard);
            if (!failure)
                failure = std::current_exception();
        }
    }
    if (failure)
        std::rethrow_exception(failure);
}

} // namespace tdmd
