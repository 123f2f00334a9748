#pragma once

// Chunked parallel scans over canonically ordered integer candidates.
//
// Candidates are visited in the order 0, +1, -1, +2, -2, ...; rank() gives a
// candidate's position in that order.  Workers claim chunks in increasing
// order, so a reduction that keeps the smallest rank (or the best value,
// ties broken by rank) gives the same answer for any number of workers.

#include "intnet/highprec.hpp"

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace intnet {

inline unsigned default_workers()
{
    const unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1u : n;
}

/// Position of q in 0, +1, -1, +2, -2, ...
inline std::uint64_t canonical_rank(std::int64_t q)
{
    if (q == 0) return 0;
    return q > 0 ? 2 * static_cast<std::uint64_t>(q) - 1 : 2 * static_cast<std::uint64_t>(-q);
}

inline BigInt canonical_rank(const BigInt& q)
{
    if (q == 0) return 0;
    return q > 0 ? BigInt(2 * q - 1) : BigInt(-2 * q);
}

inline std::int64_t canonical_value(std::uint64_t rank)
{
    if (rank == 0) return 0;
    const auto m = static_cast<std::int64_t>((rank + 1) / 2);
    return rank % 2 == 1 ? m : -m;
}

/// Calls body(c) for chunks c = 0, 1, ... < n_chunks on `workers` threads.
/// A worker stops claiming once keep_going(c) is false for the chunk it drew.
/// The first exception thrown by any body is rethrown here.
template <class Body, class KeepGoing>
void claim_chunks(std::uint64_t n_chunks, unsigned workers, Body&& body, KeepGoing&& keep_going)
{
    std::atomic<std::uint64_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;

    auto run = [&] {
        while (!failed.load(std::memory_order_relaxed)) {
            const std::uint64_t c = next.fetch_add(1);
            if (c >= n_chunks || !keep_going(c)) return;
            try {
                body(c);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                failed = true;
                return;
            }
        }
    };

    workers = std::max(1u, workers);
    if (workers == 1 || n_chunks <= 1) {
        run();
    } else {
        std::vector<std::jthread> pool;
        const auto count = static_cast<unsigned>(std::min<std::uint64_t>(workers, n_chunks));
        pool.reserve(count);
        for (unsigned w = 0; w < count; ++w) pool.emplace_back(run);
    }
    if (error) std::rethrow_exception(error);
}

template <class Body>
void claim_chunks(std::uint64_t n_chunks, unsigned workers, Body&& body)
{
    claim_chunks(n_chunks, workers, std::forward<Body>(body), [](std::uint64_t) { return true; });
}

}  // namespace intnet
