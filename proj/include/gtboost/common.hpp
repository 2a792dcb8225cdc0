#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace gtboost {

/// Raised for invalid parameters / configuration (CLI maps it to exit code 1).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Raised for malformed or incompatible input data / files (CLI exit code 2).
struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// ---------------------------------------------------------------------------
// Seeding
//
// Every random operation takes an explicit 64-bit seed and derives all its
// randomness from one generator seeded with it. Derived seeds (per tree, per
// replicate, ...) are produced with splitmix64 so that streams never overlap.
// ---------------------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Combine a base seed with a stream index into a fresh seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(seed ^ splitmix64(stream + 0x71c70e16a2b4bc1dULL));
}

inline std::mt19937_64 make_engine(std::uint64_t seed) {
    return std::mt19937_64(seed);
}

// ---------------------------------------------------------------------------
// Operation counters (logical, machine-independent cost accounting)
// ---------------------------------------------------------------------------

/// threshold_evals: candidate thresholds evaluated on real feature columns
///   (one per admissible gap between distinct sorted values).
/// gt_calls: pseudo-feature group evaluations.
/// gt_scan_pairs: (sample, threshold-position) pairs touched inside GT calls.
/// samples_touched: values gathered and scanned over all split searches.
struct OpCounters {
    std::uint64_t threshold_evals = 0;
    std::uint64_t gt_calls = 0;
    std::uint64_t gt_scan_pairs = 0;
    std::uint64_t samples_touched = 0;

    OpCounters& operator+=(const OpCounters& o) {
        threshold_evals += o.threshold_evals;
        gt_calls += o.gt_calls;
        gt_scan_pairs += o.gt_scan_pairs;
        samples_touched += o.samples_touched;
        return *this;
    }
    OpCounters operator-(const OpCounters& o) const {
        OpCounters r = *this;
        r.threshold_evals -= o.threshold_evals;
        r.gt_calls -= o.gt_calls;
        r.gt_scan_pairs -= o.gt_scan_pairs;
        r.samples_touched -= o.samples_touched;
        return r;
    }
};

// ---------------------------------------------------------------------------
// Minimal fork-join helper. Results must not depend on chunking: callers
// reduce with a total order or write to disjoint slots.
// ---------------------------------------------------------------------------

template <class Fn>
void parallel_chunks(int workers, std::size_t n, Fn&& fn) {
    if (n == 0) return;
    if (workers < 1) workers = 1;
    const std::size_t nw = std::min<std::size_t>(static_cast<std::size_t>(workers), n);
    if (nw <= 1) {
        fn(std::size_t{0}, std::size_t{0}, n);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(nw);
    const std::size_t chunk = (n + nw - 1) / nw;
    for (std::size_t w = 0; w < nw; ++w) {
        const std::size_t lo = w * chunk;
        const std::size_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&fn, w, lo, hi] { fn(w, lo, hi); });
    }
    for (auto& t : pool) t.join();
}

}  // namespace gtboost
