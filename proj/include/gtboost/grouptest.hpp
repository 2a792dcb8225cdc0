#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "gtboost/common.hpp"
#include "gtboost/dataset.hpp"
#include "gtboost/splitcore.hpp"

namespace gtboost {

// ---------------------------------------------------------------------------
// Random feature subsets
// ---------------------------------------------------------------------------

struct GTConfig {
    int s = 1;              // desired number of features
    double delta = 0.1;     // failure probability budget
    std::uint64_t seed = 0;
};

/// Number of random subsets: 1 when s == 1 (the whole feature set is used),
/// otherwise ceil(e * s * ln(s / delta)).
inline int num_subsets(int s, double delta) {
    if (s < 1) throw ConfigError("num_subsets: s must be >= 1");
    if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("num_subsets: delta must lie in (0, 1)");
    if (s == 1) return 1;
    const double e = std::exp(1.0);
    return static_cast<int>(std::ceil(e * static_cast<double>(s) * std::log(static_cast<double>(s) / delta)));
}

/// p ordered subsets of distinct feature ids; the stored order is the
/// randomization order later used for binary halving.
struct SubsetPlan {
    std::vector<std::vector<int>> subsets;
    std::uint64_t generated_seed = 0;
};

/// Draw p subsets of size ceil(d/s) uniformly without replacement from the
/// allowed features (all of [d] by default), in random order. s == 1 yields a
/// single subset containing every feature.
inline SubsetPlan make_subset_plan(int d, const GTConfig& cfg, std::span<const int> allowed = {}) {
    if (d < 1) throw ConfigError("make_subset_plan: d must be >= 1");
    std::vector<int> pool;
    if (allowed.empty()) {
        pool.resize(static_cast<std::size_t>(d));
        for (int j = 0; j < d; ++j) pool[static_cast<std::size_t>(j)] = j;
    } else {
        pool.assign(allowed.begin(), allowed.end());
    }
    const auto dd = static_cast<int>(pool.size());

    SubsetPlan plan;
    plan.generated_seed = cfg.seed;
    auto engine = make_engine(cfg.seed);

    const int p = num_subsets(cfg.s, cfg.delta);
    const int size = cfg.s == 1 ? dd : static_cast<int>(std::ceil(static_cast<double>(dd) / cfg.s));
    plan.subsets.reserve(static_cast<std::size_t>(p));
    std::vector<int> scratch = pool;
    for (int g = 0; g < p; ++g) {
        // Partial Fisher-Yates: the first `size` entries are a uniform sample
        // without replacement, already in random order.
        for (int i = 0; i < size; ++i) {
            std::uniform_int_distribution<int> pick(i, dd - 1);
            std::swap(scratch[static_cast<std::size_t>(i)], scratch[static_cast<std::size_t>(pick(engine))]);
        }
        plan.subsets.emplace_back(scratch.begin(), scratch.begin() + size);
    }
    return plan;
}

// ---------------------------------------------------------------------------
// Prefix-sum cache: pseudo-feature of any contiguous slice of a subset's
// order is one subtraction per sample.
// ---------------------------------------------------------------------------

struct PrefixSumCache {
    // prefix[g] holds (k+1) columns of length m, column-major:
    // prefix[g][r*m + i] = sum of the first r features of subset g at sample i.
    std::vector<std::vector<double>> prefix;
    std::size_t m = 0;

    double slice_sum(std::size_t g, std::size_t lo, std::size_t hi, std::size_t i) const {
        const auto& pf = prefix[g];
        return pf[hi * m + i] - pf[lo * m + i];
    }
};

inline PrefixSumCache build_prefix_cache(const FeatureMatrix& fm, const SubsetPlan& plan) {
    PrefixSumCache cache;
    cache.m = fm.rows();
    const std::size_t m = cache.m;
    cache.prefix.resize(plan.subsets.size());
    for (std::size_t g = 0; g < plan.subsets.size(); ++g) {
        const auto& subset = plan.subsets[g];
        auto& pf = cache.prefix[g];
        pf.assign((subset.size() + 1) * m, 0.0);
        for (std::size_t r = 0; r < subset.size(); ++r) {
            const auto& col = fm.columns[static_cast<std::size_t>(subset[r])];
            const double* prev = pf.data() + r * m;
            double* next = pf.data() + (r + 1) * m;
            for (std::size_t i = 0; i < m; ++i) next[i] = prev[i] + col[i];
        }
    }
    return cache;
}

namespace detail {

struct GtScratch {
    std::vector<std::pair<double, double>> zy;  // (pseudo-feature, residual)
};

}  // namespace detail

/// One group test: minimum SSE_L + SSE_R over thresholds of the pseudo-feature
/// of subset slice [lo, hi), evaluated on the node samples. A constant
/// pseudo-feature yields the node SSE (no reduction possible).
inline double group_test(const PrefixSumCache& cache, std::size_t subset_index, std::size_t lo,
                         std::size_t hi, std::span<const std::uint32_t> node_samples,
                         std::span<const double> residuals, double node_sse,
                         OpCounters* counters = nullptr, detail::GtScratch* scratch = nullptr) {
    const std::size_t n = node_samples.size();
    if (n < 2) throw ConfigError("group_test: need at least 2 samples");
    if (counters) {
        ++counters->gt_calls;
        counters->gt_scan_pairs += n;
        counters->samples_touched += n;
    }

    detail::GtScratch local;
    auto& zy = (scratch ? *scratch : local).zy;
    zy.clear();
    zy.reserve(n);
    double sum = 0.0, sumsq = 0.0;
    for (auto i : node_samples) {
        const double z = cache.slice_sum(subset_index, lo, hi, i);
        const double y = residuals[i];
        zy.emplace_back(z, y);
        sum += y;
        sumsq += y * y;
    }
    std::sort(zy.begin(), zy.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    if (zy.front().first == zy.back().first) return node_sse;

    double best = node_sse;
    double sum_l = 0.0, sumsq_l = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double y = zy[i].second;
        sum_l += y;
        sumsq_l += y * y;
        if (zy[i].first == zy[i + 1].first) continue;
        const auto nl = static_cast<double>(i + 1);
        const auto nr = static_cast<double>(n - i - 1);
        const double sum_r = sum - sum_l;
        const double sse =
            (sumsq_l - sum_l * sum_l / nl) + ((sumsq - sumsq_l) - sum_r * sum_r / nr);
        best = std::min(best, sse);
    }
    return std::max(best, 0.0);
}

/// Binary halving over a subset's stored random order: keep the half with the
/// smaller group-test value (ties keep the first half) until one feature is
/// left. Costs two GT evaluations per level, none for singleton subsets.
inline int binary_search_subset(const PrefixSumCache& cache, const SubsetPlan& plan,
                                std::size_t subset_index, std::span<const std::uint32_t> node_samples,
                                std::span<const double> residuals, double node_sse,
                                OpCounters* counters = nullptr,
                                detail::GtScratch* scratch = nullptr) {
    const auto& subset = plan.subsets[subset_index];
    if (subset.empty()) throw ConfigError("binary_search_subset: empty subset");
    std::size_t lo = 0, hi = subset.size();
    while (hi - lo > 1) {
        const std::size_t mid = lo + (hi - lo + 1) / 2;  // first half gets the extra element
        const double vl =
            group_test(cache, subset_index, lo, mid, node_samples, residuals, node_sse, counters, scratch);
        const double vr =
            group_test(cache, subset_index, mid, hi, node_samples, residuals, node_sse, counters, scratch);
        if (vl <= vr) hi = mid;
        else lo = mid;
    }
    return subset[lo];
}

/// Run the binary search on every subset and return the deduplicated, sorted
/// candidate feature set. Subset searches are independent and may run on
/// several workers; the union is order-free.
inline std::vector<int> gt_candidates(const PrefixSumCache& cache, const SubsetPlan& plan,
                                      std::span<const std::uint32_t> node_samples,
                                      std::span<const double> residuals, double node_sse,
                                      OpCounters* counters = nullptr, int workers = 1) {
    const std::size_t p = plan.subsets.size();
    std::vector<int> survivors(p, -1);
    std::vector<OpCounters> chunk_counters(std::max<std::size_t>(1, static_cast<std::size_t>(workers)));
    parallel_chunks(workers, p, [&](std::size_t w, std::size_t lo, std::size_t hi) {
        detail::GtScratch scratch;
        for (std::size_t g = lo; g < hi; ++g)
            survivors[g] = binary_search_subset(cache, plan, g, node_samples, residuals, node_sse,
                                                &chunk_counters[w], &scratch);
    });
    if (counters)
        for (const auto& c : chunk_counters) *counters += c;
    std::sort(survivors.begin(), survivors.end());
    survivors.erase(std::unique(survivors.begin(), survivors.end()), survivors.end());
    return survivors;
}

/// The GT-GBM node split: (a) best normalized criterion over the already-used
/// features, (b) candidate generation by group testing, (c) exhaustive
/// evaluation of the candidates with the new-feature penalty, (d) the
/// candidate wins only when strictly better than the old-feature split.
inline std::optional<NodeSplit> gt_split(const SplitWorkspace& ws, const NodeStats& node,
                                         std::span<const std::uint32_t> node_samples,
                                         const SubsetPlan& plan, const PrefixSumCache& cache,
                                         const SplitCriterionConfig& cfg,
                                         const FeatureUsageSets& usage, double sse_r) {
    if (!(sse_r > 0.0)) throw ConfigError("gt_split: root SSE must be positive");
    if (node.count < 2) return std::nullopt;

    const std::vector<int> old_features = cfg.mode == CriterionMode::multitask
                                              ? usage.omega_task_indices()
                                              : usage.omega_indices();
    std::optional<NodeSplit> omega_split;
    if (!old_features.empty())
        omega_split = best_split_exhaustive(ws, node, old_features, cfg, usage, sse_r);

    const std::vector<int> candidates =
        gt_candidates(cache, plan, node_samples, ws.residuals, node.sse, ws.counters, ws.workers);
    std::optional<NodeSplit> cand_split;
    if (!candidates.empty())
        cand_split = best_split_exhaustive(ws, node, candidates, cfg, usage, sse_r);

    if (!omega_split) return cand_split;
    if (!cand_split) return omega_split;
    // Penalized candidate must beat the old-feature split strictly.
    if (cand_split->criterion_value < omega_split->criterion_value) return cand_split;
    return omega_split;
}

}  // namespace gtboost
