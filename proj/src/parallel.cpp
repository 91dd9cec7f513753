#include "isolab/parallel.hpp"

#include <algorithm>

namespace isolab {

namespace {
int g_maxThreads = 0;

int resolved_threads() {
    if (g_maxThreads > 0) return g_maxThreads;
    unsigned hw = std::thread::hardware_concurrency();
    return static_cast<int>(std::clamp(hw, 1u, 8u));
}
}  // namespace

void set_max_threads(int n) { g_maxThreads = n; }
int max_threads() { return resolved_threads(); }

void parallel_for_slots(std::size_t count, const std::function<void(std::size_t)>& fn) {
    if (count == 0) return;
    int workers = std::min<std::size_t>(count, static_cast<std::size_t>(resolved_threads()));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr firstError;
    std::atomic<bool> failed{false};
    auto body = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= count || failed.load()) return;
            try {
                fn(i);
            } catch (...) {
                if (!failed.exchange(true)) firstError = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int t = 0; t < workers; ++t) pool.emplace_back(body);
    for (auto& th : pool) th.join();
    if (failed.load() && firstError) std::rethrow_exception(firstError);
}

}  // namespace isolab
