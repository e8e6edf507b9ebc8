#include "lamp/parallel.hpp"

#include <algorithm>
#include <cstdlib>

namespace lamp {

int thread_cap() {
    static const int cap = [] {
        const char* env = std::getenv("LAMP_THREADS");
        if (!env || !*env) return 0;
        const int v = std::atoi(env);
        return v > 0 ? v : 1;
    }();
    return cap;
}

int worker_count() {
    const int cap = thread_cap();
    const int avail = omp_get_max_threads();
    return cap > 0 ? std::min(cap, avail) : avail;
}

} // namespace lamp
