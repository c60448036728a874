#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace lodada {

// Runs fn(i) for i in [0, n) across up to n_threads workers. Tasks must be
// independent; the first exception is rethrown after all workers join.
template <typename Fn>
void parallel_for(std::size_t n, unsigned n_threads, Fn&& fn) {
    if (n == 0) return;
    if (n_threads <= 1 || n == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&]() {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> threads;
    unsigned count = static_cast<unsigned>(std::min<std::size_t>(n_threads, n));
    threads.reserve(count);
    for (unsigned t = 0; t < count; ++t) threads.emplace_back(worker);
    for (std::thread& t : threads) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace lodada
