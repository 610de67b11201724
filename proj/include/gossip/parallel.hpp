#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace gossip {

/// Worker count: GOSSIP_THREADS if set to a positive integer, else the
/// hardware concurrency.
inline unsigned worker_count() {
    unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("GOSSIP_THREADS")) {
        try {
            const long v = std::stol(env);
            if (v > 0) return static_cast<unsigned>(v);
        } catch (const std::exception&) {
        }
    }
    return hw;
}

/// Error raised inside a replicate, tagged with its index.
class ReplicateError : public std::runtime_error {
public:
    ReplicateError(std::size_t index, const std::string& what)
        : std::runtime_error("replicate " + std::to_string(index) + ": " + what), index_(index) {}
    std::size_t index() const { return index_; }

private:
    std::size_t index_;
};

/// out[i] = fn(i) for i in [0, n). Results are stored by index, so the output
/// does not depend on scheduling. The first failure (lowest index) is rethrown
/// as a ReplicateError.
template <class T, class Fn>
std::vector<T> farm(std::size_t n, Fn&& fn, unsigned threads = worker_count()) {
    std::vector<T> out(n);
    threads = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, threads), std::max<std::size_t>(n, 1)));
    std::atomic<std::size_t> next{0};
    std::mutex err_mu;
    std::size_t err_index = n;
    std::string err_what;

    auto work = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                out[i] = fn(i);
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(err_mu);
                if (i < err_index) {
                    err_index = i;
                    err_what = e.what();
                }
            }
        }
    };
    if (threads == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (unsigned k = 0; k < threads; ++k) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }
    if (err_index < n) throw ReplicateError(err_index, err_what);
    return out;
}

}  // namespace gossip
