#include "shapetest/parallel.hpp"

#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace shapetest::par {

int configured_threads() {
    const char* env = std::getenv("SHAPETEST_THREADS");
    if (env == nullptr || *env == '\0') return 0;
    try {
        const int v = std::stoi(env);
        return v < 0 ? 0 : v;
    } catch (...) {
        return 0;
    }
}

void run_indexed_serial(std::int64_t count, const std::function<void(std::int64_t)>& task) {
    for (std::int64_t i = 0; i < count; ++i) task(i);
}

void run_indexed(std::int64_t count, const std::function<void(std::int64_t)>& task) {
#ifdef _OPENMP
    const int cap = configured_threads();
    if (cap == 1) {
        run_indexed_serial(count, task);
        return;
    }
    if (cap > 0) {
#pragma omp parallel for schedule(static) num_threads(cap)
        for (std::int64_t i = 0; i < count; ++i) task(i);
    } else {
#pragma omp parallel for schedule(static)
        for (std::int64_t i = 0; i < count; ++i) task(i);
    }
#else
    run_indexed_serial(count, task);
#endif
}

void run_chunked_serial(std::int64_t count,
                        const std::function<void(std::int64_t, std::int64_t)>& task) {
    if (count > 0) task(0, count);
}

void run_chunked(std::int64_t count,
                 const std::function<void(std::int64_t, std::int64_t)>& task) {
    if (count <= 0) return;
#ifdef _OPENMP
    const int cap = configured_threads();
    int workers = cap > 0 ? cap : omp_get_max_threads();
    if (workers > count) workers = static_cast<int>(count);
    if (workers <= 1) {
        run_chunked_serial(count, task);
        return;
    }
    const std::int64_t chunk = (count + workers - 1) / workers;
#pragma omp parallel for schedule(static) num_threads(workers)
    for (int w = 0; w < workers; ++w) {
        const std::int64_t begin = w * chunk;
        const std::int64_t end = begin + chunk < count ? begin + chunk : count;
        if (begin < end) task(begin, end);
    }
#else
    run_chunked_serial(count, task);
#endif
}

}  // namespace shapetest::par
