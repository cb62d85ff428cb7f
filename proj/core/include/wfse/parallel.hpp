#ifndef WFSE_PARALLEL_HPP
#define WFSE_PARALLEL_HPP

#include <cstddef>

namespace wfse {

// Process-wide worker count for data-parallel loops (CLI --threads).
// 0 means "use hardware_concurrency".
void set_num_threads(std::size_t n);
std::size_t num_threads();

namespace detail {
void parallel_for_impl(std::size_t n, void* ctx, void (*body)(void*, std::size_t, std::size_t));
}

// Invokes fn(i) for every i in [0, n), splitting the range into contiguous
// chunks with one worker thread per chunk. Results must be written to
// disjoint preallocated slots so the outcome is independent of the thread
// count; reductions happen after the join, in index order, to keep
// floating-point sums deterministic.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
    auto thunk = [](void* ctx, std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) (*static_cast<Fn*>(ctx))(i);
    };
    detail::parallel_for_impl(n, &fn, thunk);
}

} // namespace wfse

#endif
