#pragma once

#include <cstdlib>
#include <thread>
#include <vector>

namespace spinchain {

// Thread budget: SPINCHAIN_THREADS caps parallelism, 0 or unset means auto.
inline unsigned effective_threads() {
    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    if (const char* env = std::getenv("SPINCHAIN_THREADS")) {
        char* end = nullptr;
        const long n = std::strtol(env, &end, 10);
        if (end != env && n > 0) return static_cast<unsigned>(n);
    }
    return hw;
}

// Chunked parallel map over [0, n); f must be safe to call concurrently on
// distinct indices. Output ordering is up to the caller (index-addressed).
template <class F>
void parallel_for(std::size_t n, F&& f) {
    const unsigned workers = std::min<std::size_t>(effective_threads(), n ? n : 1);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < n; i += workers) f(i);
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace spinchain
