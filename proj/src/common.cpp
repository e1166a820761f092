#include "jers/common.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <thread>
#include <vector>

namespace jers {

double Rng::normal() {
    // u1 in (0,1] so the log is finite.
    double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

int64_t Rng::uniform_int(int64_t n) {
    if (n <= 0) throw ValueError("Rng::uniform_int: n must be positive");
    // Modulo bias is negligible for the small ranges used here.
    return static_cast<int64_t>(next_u64() % static_cast<uint64_t>(n));
}

int thread_cap() {
    static const int cap = [] {
        const char* env = std::getenv("JERS_THREADS");
        if (!env) return 1;
        int v = std::atoi(env);
        return v < 1 ? 1 : v;
    }();
    return cap;
}

void parallel_for(int64_t n, const std::function<void(int64_t, int64_t)>& body) {
    if (n <= 0) return;
    int threads = std::min<int64_t>(thread_cap(), n);
    if (threads <= 1) {
        body(0, n);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(threads);
    int64_t chunk = (n + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
        int64_t begin = t * chunk;
        int64_t end = std::min(n, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back([&body, begin, end] { body(begin, end); });
    }
    for (auto& th : pool) th.join();
}

} // namespace jers
