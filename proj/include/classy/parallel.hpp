#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace classy {

/// Runs fn(i) for i in [0, n) on up to `jobs` threads. fn must only write to
/// slot i of its outputs; the first exception thrown is rethrown on the caller.
template <class Fn>
void parallel_for(std::size_t n, int jobs, Fn&& fn)
{
    const auto workers = static_cast<std::size_t>(std::max(1, jobs));
    if (workers == 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i)
            fn(i);
        return;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure)
                    failure = std::current_exception();
                next = n;
            }
        }
    };

    std::vector<std::jthread> threads;
    const std::size_t count = std::min(workers, n);
    threads.reserve(count - 1);
    for (std::size_t t = 1; t < count; ++t)
        threads.emplace_back(worker);
    worker();
    threads.clear();
    if (failure)
        std::rethrow_exception(failure);
}

} // namespace classy
