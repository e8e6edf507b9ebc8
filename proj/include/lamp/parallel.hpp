#pragma once

#include <omp.h>

namespace lamp {

// Thread cap from the LAMP_THREADS environment variable; 0 means "no cap".
// Parsed once per process.
int thread_cap();

// Number of OpenMP workers to use after applying the cap.
int worker_count();

// Runs f(i) for i in [0, n). The parallel variant partitions statically, so
// every index is computed exactly once by exactly one thread; results are
// bit-identical to the serial loop as long as f(i) only writes state owned
// by index i.
template <class F>
void parallel_for(int n, bool parallel, F&& f) {
    if (!parallel || n < 2) {
        for (int i = 0; i < n; ++i) f(i);
        return;
    }
    const int nt = worker_count();
#pragma omp parallel for schedule(static) num_threads(nt)
    for (int i = 0; i < n; ++i) f(i);
}

} // namespace lamp
