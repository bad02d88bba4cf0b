#pragma once

// Independent Monte Carlo trials on a pool of worker threads. Results are stored
// by trial index and reduced in index order, so the output is identical for any
// worker count.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <type_traits>
#include <vector>

namespace ccnet {

inline constexpr const char* kWorkersEnv = "CCNET_WORKERS";

/// Worker count: $CCNET_WORKERS if set to a positive integer, else hardware concurrency.
inline unsigned default_workers() {
    if (const char* env = std::getenv(kWorkersEnv)) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

template <class F>
auto run_trials(std::size_t trials, unsigned workers, F&& trial) {
    using T = std::invoke_result_t<F&, std::size_t>;
    static_assert(!std::is_same_v<T, bool>, "return a non-bool type; std::vector<bool> is not thread-safe per element");
    std::vector<T> out(trials);
    const unsigned pool = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(trials, 1))));
    if (pool == 1) {
        for (std::size_t i = 0; i < trials; ++i) out[i] = trial(i);
        return out;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto work = [&] {
        for (std::size_t i = next++; i < trials; i = next++) {
            try {
                out[i] = trial(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                next = trials;
            }
        }
    };
    std::vector<std::thread> threads;
    threads.reserve(pool);
    for (unsigned w = 0; w < pool; ++w) threads.emplace_back(work);
    for (auto& t : threads) t.join();
    if (error) std::rethrow_exception(error);
    return out;
}

struct MeanEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t count = 0;
};

/// Plain mean with a batch-means standard error over contiguous batches.
inline MeanEstimate batch_means(const std::vector<double>& values, std::size_t batches = 20) {
    MeanEstimate est;
    est.count = values.size();
    if (values.empty()) return est;
    double sum = 0.0;
    for (double v : values) sum += v;
    est.mean = sum / double(values.size());
    const std::size_t b = std::min(batches, values.size());
    if (b < 2) return est;
    std::vector<double> means;
    means.reserve(b);
    for (std::size_t k = 0; k < b; ++k) {
        const std::size_t lo = k * values.size() / b;
        const std::size_t hi = (k + 1) * values.size() / b;
        double s = 0.0;
        for (std::size_t i = lo; i < hi; ++i) s += values[i];
        means.push_back(s / double(hi - lo));
    }
    double mm = 0.0;
    for (double m : means) mm += m;
    mm /= double(b);
    double var = 0.0;
    for (double m : means) var += (m - mm) * (m - mm);
    var /= double(b - 1);
    est.std_error = std::sqrt(var / double(b));
    return est;
}

inline double median(std::vector<double> v) {
    if (v.empty()) return std::nan("");
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + std::ptrdiff_t(mid), v.end());
    const double hi = v[mid];
    if (v.size() % 2 == 1) return hi;
    const double lo = *std::max_element(v.begin(), v.begin() + std::ptrdiff_t(mid));
    return 0.5 * (lo + hi);
}

}  // namespace ccnet
