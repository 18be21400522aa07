#pragma once

#ifdef _OPENMP
#include <omp.h>
#endif

#include <utility>

namespace dno {

// Work items must be independent and own their RNG substreams, so the
// parallel path and the serial reference path (jobs == 1) produce identical
// results. jobs == 0 uses the OpenMP default thread count.
template <typename Fn>
void parallel_for(int count, int jobs, Fn&& fn) {
#ifdef _OPENMP
    if (jobs != 1) {
        if (jobs > 1) {
#pragma omp parallel for schedule(dynamic) num_threads(jobs)
            for (int i = 0; i < count; ++i) fn(i);
        } else {
#pragma omp parallel for schedule(dynamic)
            for (int i = 0; i < count; ++i) fn(i);
        }
        return;
    }
#else
    (void)jobs;
#endif
    for (int i = 0; i < count; ++i) fn(i);
}

inline int hardware_jobs() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

} // namespace dno
