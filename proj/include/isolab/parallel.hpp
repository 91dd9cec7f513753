#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace isolab {

/// Number of worker threads used by parallel_for_slots.  0 = hardware pick.
/// Results never depend on this value: work is partitioned by fixed-size
/// chunks keyed to their index, and reductions run in index order.
void set_max_threads(int n);
int max_threads();

/// Runs fn(i) for i in [0, count), each call writing only to its own slot.
/// Threads grab indices from a shared counter; since every index carries its
/// own random stream and output slot, the schedule cannot affect results.
void parallel_for_slots(std::size_t count, const std::function<void(std::size_t)>& fn);

/// Chunk layout shared by every estimator: fixed chunk size, so the chunk
/// boundaries (and hence the random streams) are independent of thread count.
struct ChunkPlan {
    std::size_t total = 0;
    std::size_t chunk = 0;

    explicit ChunkPlan(std::size_t totalCount, std::size_t chunkSize = 1u << 14)
        : total(totalCount), chunk(chunkSize) {}
    std::size_t count() const { return total == 0 ? 0 : (total + chunk - 1) / chunk; }
    std::size_t begin(std::size_t i) const { return i * chunk; }
    std::size_t end(std::size_t i) const {
        std::size_t e = (i + 1) * chunk;
        return e < total ? e : total;
    }
    std::size_t size(std::size_t i) const { return end(i) - begin(i); }
};

}  // namespace isolab
