#pragma once

#include <cstddef>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace wdro {

using Vec = std::vector<double>;

/// Absolute tolerance for probability-mass invariants (weights sum to one).
inline constexpr double kWeightTol = 1e-12;

/// Thrown when a solve is requested on a primal problem that is not strictly
/// feasible (e.g. E_{pi0} c >= rho).
class InfeasibleError : public std::runtime_error {
  public:
    explicit InfeasibleError(const std::string& what) : std::runtime_error(what) {}
};

/// Thrown on malformed or inconsistent run configurations.
class ConfigError : public std::runtime_error {
  public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Dense row-major matrix. Plain storage; no algebra beyond indexing.
struct Mat {
    std::size_t rows = 0;
    std::size_t cols = 0;
    Vec data;

    Mat() = default;
    Mat(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    double* row(std::size_t i) { return data.data() + i * cols; }
    const double* row(std::size_t i) const { return data.data() + i * cols; }
};

/// Worker count: hardware concurrency capped by the WDRO_THREADS environment
/// variable. Results never depend on it; only wall time does.
inline int thread_budget() {
    int n = static_cast<int>(std::thread::hardware_concurrency());
    if (n <= 0) n = 1;
    if (const char* env = std::getenv("WDRO_THREADS")) {
        char* end = nullptr;
        long cap = std::strtol(env, &end, 10);
        if (end != env && cap > 0 && cap < n) n = static_cast<int>(cap);
    }
    return n;
}

/// Runs fn(i) for i in [0, n). Each index owns its output slot, so the result
/// is identical for any worker count; reductions over the slots must then be
/// done in index order by the caller.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
    const int workers = thread_budget();
    if (workers <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    const std::size_t k = static_cast<std::size_t>(workers) < n ? static_cast<std::size_t>(workers) : n;
    std::vector<std::thread> pool;
    pool.reserve(k);
    for (std::size_t w = 0; w < k; ++w) {
        pool.emplace_back([&, w]() {
            for (std::size_t i = w; i < n; i += k) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

} // namespace wdro
