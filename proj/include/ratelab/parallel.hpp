#ifndef RATELAB_PARALLEL_HPP
#define RATELAB_PARALLEL_HPP

#include <future>
#include <thread>
#include <type_traits>
#include <vector>

namespace ratelab {

inline unsigned resolve_threads(unsigned requested) {
    if (requested != 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

/// Evaluates fn(i) for i in [0, n) and returns the results in index order.
/// Work is split into contiguous blocks run on std::async tasks; because each
/// slot is written exactly once and consumers read in index order, the output
/// is independent of the thread count and of scheduling.
template <class F>
auto ordered_parallel_map(std::size_t n, unsigned threads, F&& fn)
    -> std::vector<std::invoke_result_t<F&, std::size_t>> {
    using R = std::invoke_result_t<F&, std::size_t>;
    std::vector<R> out(n);
    if (n == 0) return out;
    const unsigned t = std::min<std::size_t>(resolve_threads(threads), n);
    if (t <= 1) {
        for (std::size_t i = 0; i < n; ++i) out[i] = fn(i);
        return out;
    }
    const std::size_t block = (n + t - 1) / t;
    std::vector<std::future<void>> futures;
    futures.reserve(t);
    for (unsigned k = 0; k < t; ++k) {
        const std::size_t lo = k * block;
        const std::size_t hi = std::min(n, lo + block);
        if (lo >= hi) break;
        futures.push_back(std::async(std::launch::async, [lo, hi, &out, &fn] {
            for (std::size_t i = lo; i < hi; ++i) out[i] = fn(i);
        }));
    }
    for (auto& f : futures) f.get();
    return out;
}

} // namespace ratelab

#endif
