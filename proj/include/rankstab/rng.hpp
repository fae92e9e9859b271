#pragma once

// Counter-based splittable random source. A stream is identified by
// (seed, stream); the n-th draw is a pure function of (seed, stream, n),
// so replicate r of a Monte Carlo run can take stream r and produce the
// same values whether replicates run sequentially or in parallel.
//
// Gaussian variates come from the inverse normal CDF applied to one
// uniform each, keeping the draw count per replicate fixed.

#include <cstdint>
#include <functional>
#include <thread>
#include <vector>

#include "rankstab/special_functions.hpp"

namespace rankstab {

class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t stream)
        : key_(mix(mix(seed ^ 0x9e3779b97f4a7c15ULL, stream), 0x2545f4914f6cdd1dULL)) {}

    std::uint64_t next_u64() { return mix(key_, counter_++); }

    // Uniform on (0,1): 53-bit mantissa offset away from both endpoints.
    double next_uniform() {
        const std::uint64_t bits = next_u64() >> 11;
        return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
    }

    double next_gaussian() { return std_normal_quantile(next_uniform()); }

    // Fisher-Yates prefix shuffle: fills `out` with the first `take` entries
    // of a random permutation of 0..n-1.
    void sample_indices(std::size_t n, std::size_t take, std::vector<std::size_t>& out) {
        scratch_.resize(n);
        for (std::size_t i = 0; i < n; ++i) scratch_[i] = i;
        if (take > n) take = n;
        for (std::size_t i = 0; i < take; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(next_u64() % (n - i));
            std::swap(scratch_[i], scratch_[j]);
        }
        out.assign(scratch_.begin(), scratch_.begin() + take);
    }

private:
    // Two-round 64-bit avalanche over key ^ golden-weighted counter
    // (SplitMix64 finalizer applied to the combined word).
    static std::uint64_t mix(std::uint64_t key, std::uint64_t ctr) {
        std::uint64_t z = key + ctr * 0x9e3779b97f4a7c15ULL + 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        z ^= z >> 31;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    std::vector<std::size_t> scratch_;
};

// Pairwise (cascade) sum over values in index order; the reduction tree is a
// pure function of the length, so totals are bit-stable no matter how the
// values were produced.
inline double pairwise_sum(const double* v, std::size_t n) {
    if (n == 0) return 0.0;
    if (n <= 8) {
        double s = v[0];
        for (std::size_t i = 1; i < n; ++i) s += v[i];
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(v, half) + pairwise_sum(v + half, n - half);
}

inline double pairwise_sum(const std::vector<double>& v) {
    return pairwise_sum(v.data(), v.size());
}

// Runs fn(i) for i in [0, n) across `threads` workers on contiguous blocks.
// Each index writes only its own slot, so the result is identical to the
// sequential run.
inline void parallel_for_index(std::size_t n, unsigned threads,
                               const std::function<void(std::size_t)>& fn) {
    if (threads <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(threads, n));
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            const std::size_t lo = n * w / workers;
            const std::size_t hi = n * (w + 1) / workers;
            for (std::size_t i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

} // namespace rankstab
