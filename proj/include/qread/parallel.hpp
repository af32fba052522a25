#pragma once

// Thin OpenMP wrapper. Every parallel loop in this project assigns each
// output element to exactly one iteration, so results are bit-identical
// for any thread count (including the serial fallback build).

#include <cstdint>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace qread {

inline int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

// Scoped thread-count override, used by tests and the benchmark.
class ThreadLimit {
public:
    explicit ThreadLimit(int n) {
#ifdef _OPENMP
        saved_ = omp_get_max_threads();
        omp_set_num_threads(n);
#else
        (void)n;
#endif
    }
    ~ThreadLimit() {
#ifdef _OPENMP
        omp_set_num_threads(saved_);
#endif
    }
    ThreadLimit(const ThreadLimit&) = delete;
    ThreadLimit& operator=(const ThreadLimit&) = delete;

private:
#ifdef _OPENMP
    int saved_ = 1;
#endif
};

template <class F>
void parallel_for(std::int64_t n, F&& body) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) body(i);
#else
    for (std::int64_t i = 0; i < n; ++i) body(i);
#endif
}

}  // namespace qread
