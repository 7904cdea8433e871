#pragma once

#include <cstddef>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace mmdpair {

// Number of worker threads to use: 0 means "ask the hardware".
inline unsigned effective_threads(unsigned requested) {
    if (requested != 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

// Run fn(i) for i in [begin, end) on up to `threads` workers.
//
// Work is split into contiguous blocks, one per worker, and each call writes
// only to its own slot of whatever output the caller owns.  Because the
// partition depends only on (begin, end, threads) and never on timing, and
// because reductions are done afterwards by the caller in index order, results
// are byte-identical for any thread count.  The first exception thrown by a
// worker is rethrown on the calling thread.
inline void parallel_for(std::size_t begin, std::size_t end, unsigned threads,
                         const std::function<void(std::size_t)>& fn) {
    const std::size_t count = end > begin ? end - begin : 0;
    if (count == 0) return;
    unsigned workers = effective_threads(threads);
    if (static_cast<std::size_t>(workers) > count) workers = static_cast<unsigned>(count);

    if (workers <= 1) {
        for (std::size_t i = begin; i < end; ++i) fn(i);
        return;
    }

    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const std::size_t chunk = count / workers;
    const std::size_t rem = count % workers;
    std::size_t cursor = begin;
    for (unsigned t = 0; t < workers; ++t) {
        const std::size_t len = chunk + (t < rem ? 1 : 0);
        const std::size_t lo = cursor;
        const std::size_t hi = lo + len;
        cursor = hi;
        pool.emplace_back([lo, hi, t, &fn, &errors] {
            try {
                for (std::size_t i = lo; i < hi; ++i) fn(i);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

}  // namespace mmdpair
