#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "gtboost/common.hpp"
#include "gtboost/dataset.hpp"

namespace gtboost {

// ---------------------------------------------------------------------------
// Split criteria
// ---------------------------------------------------------------------------

enum class CriterionMode { plain, gbfs, agbm, multitask };

/// mu penalizes features outside Omega (GBFS: any mu >= 0, A-GBM: mu in [0,1]
/// because the criterion is normalized into [0,1]). The multitask mode uses
/// mu_group / mu_task against the cross-task and per-task usage sets.
struct SplitCriterionConfig {
    CriterionMode mode = CriterionMode::plain;
    double mu = 0.0;
    double mu_group = 0.0;
    double mu_task = 0.0;

    bool normalizes() const {
        return mode == CriterionMode::agbm || mode == CriterionMode::multitask;
    }

    void validate() const {
        switch (mode) {
            case CriterionMode::plain:
                break;
            case CriterionMode::gbfs:
                if (!(mu >= 0.0)) throw ConfigError("gbfs: mu must be >= 0");
                break;
            case CriterionMode::agbm:
                if (!(mu >= 0.0 && mu <= 1.0)) throw ConfigError("agbm: mu must lie in [0, 1]");
                break;
            case CriterionMode::multitask:
                if (!(mu_group >= 0.0 && mu_task >= 0.0))
                    throw ConfigError("multitask: mu_group and mu_task must be >= 0");
                if (!(mu_group + mu_task < 1.0))
                    throw ConfigError("multitask: mu_group + mu_task must be < 1");
                break;
        }
    }
};

/// Feature-usage bookkeeping: Omega (features used by the model so far),
/// Omega_G (used by any task), Omega^t (used by the current task). Sets only
/// ever grow; in multitask mode Omega^t is a subset of Omega_G.
struct FeatureUsageSets {
    std::vector<std::uint8_t> omega;
    std::vector<std::uint8_t> omega_group;
    std::vector<std::uint8_t> omega_task;

    explicit FeatureUsageSets(std::size_t d = 0)
        : omega(d, 0), omega_group(d, 0), omega_task(d, 0) {}

    void insert(std::size_t j) { omega[j] = 1; }
    bool contains(std::size_t j) const { return omega[j] != 0; }

    std::vector<int> omega_indices() const {
        std::vector<int> out;
        for (std::size_t j = 0; j < omega.size(); ++j)
            if (omega[j]) out.push_back(static_cast<int>(j));
        return out;
    }
    std::vector<int> omega_task_indices() const {
        std::vector<int> out;
        for (std::size_t j = 0; j < omega_task.size(); ++j)
            if (omega_task[j]) out.push_back(static_cast<int>(j));
        return out;
    }
};

/// Eq.-style multitask value: normalized child SSE plus indicator penalties.
inline double multitask_criterion(double sse_l, double sse_r_child, double sse_root, int feature,
                                  const SplitCriterionConfig& cfg, const FeatureUsageSets& usage) {
    const auto j = static_cast<std::size_t>(feature);
    const double penalty = (usage.omega_group[j] ? 0.0 : cfg.mu_group) +
                           (usage.omega_task[j] ? 0.0 : cfg.mu_task);
    return (sse_l + sse_r_child) / sse_root + penalty;
}

namespace detail {

/// Penalty paid by feature j under the configured mode, and whether j counts
/// as new. Computed as one double so that equal-mu configurations produce
/// bit-identical criteria.
inline std::pair<double, bool> feature_penalty(int feature, const SplitCriterionConfig& cfg,
                                               const FeatureUsageSets& usage) {
    const auto j = static_cast<std::size_t>(feature);
    switch (cfg.mode) {
        case CriterionMode::plain:
            return {0.0, !usage.omega[j]};
        case CriterionMode::gbfs:
        case CriterionMode::agbm:
            return usage.omega[j] ? std::pair{0.0, false} : std::pair{cfg.mu, true};
        case CriterionMode::multitask: {
            const double p = (usage.omega_group[j] ? 0.0 : cfg.mu_group) +
                             (usage.omega_task[j] ? 0.0 : cfg.mu_task);
            return {p, !usage.omega_task[j]};
        }
    }
    return {0.0, true};
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Node statistics
// ---------------------------------------------------------------------------

/// Sum of squared errors about the mean.
inline double sse_root(std::span<const double> targets) {
    if (targets.empty()) throw ConfigError("sse_root: empty input");
    double sum = 0.0;
    for (double y : targets) sum += y;
    const double mean = sum / static_cast<double>(targets.size());
    double sse = 0.0;
    for (double y : targets) sse += (y - mean) * (y - mean);
    return sse;
}

// ---------------------------------------------------------------------------
// Presorted columns: one global argsort per feature, reused by every node via
// a membership mask.
// ---------------------------------------------------------------------------

struct SortedColumns {
    std::vector<std::vector<std::uint32_t>> order;  // order[j]: ascending by value, stable

    static SortedColumns build(const FeatureMatrix& fm) {
        SortedColumns sc;
        sc.order.resize(fm.cols());
        for (std::size_t j = 0; j < fm.cols(); ++j) {
            auto& ord = sc.order[j];
            ord.resize(fm.rows());
            std::iota(ord.begin(), ord.end(), 0u);
            const auto& col = fm.columns[j];
            std::stable_sort(ord.begin(), ord.end(),
                             [&col](std::uint32_t a, std::uint32_t b) { return col[a] < col[b]; });
        }
        return sc;
    }
};

// ---------------------------------------------------------------------------
// Split search
// ---------------------------------------------------------------------------

/// Winning split of one node. criterion_value is in the mode's scale (divided
/// by the tree-root SSE when the mode normalizes) and includes the penalty;
/// raw_sse is the plain SSE_L + SSE_R.
struct NodeSplit {
    int feature = -1;
    double threshold = 0.0;
    double criterion_value = std::numeric_limits<double>::infinity();
    double raw_sse = 0.0;
    bool is_new_feature = false;
};

namespace detail {

/// Total order used to reduce candidate splits to one winner: lower criterion,
/// then previously-used feature over new, then lower feature index, then lower
/// threshold. Evaluation order (and hence worker count) cannot change the
/// result.
inline bool split_better(const NodeSplit& a, const NodeSplit& b) {
    if (a.criterion_value != b.criterion_value) return a.criterion_value < b.criterion_value;
    if (a.is_new_feature != b.is_new_feature) return !a.is_new_feature;
    if (a.feature != b.feature) return a.feature < b.feature;
    return a.threshold < b.threshold;
}

/// Best threshold of one feature at one node: minimum SSE_L + SSE_R over the
/// midpoints between consecutive distinct values, lower threshold on ties.
/// Returns false when the feature is constant on the node.
struct FeatureScan {
    double raw_sse = 0.0;
    double threshold = 0.0;
};

inline bool scan_feature(const std::vector<double>& col, std::span<const std::uint32_t> global_order,
                         const std::vector<std::uint8_t>& mask, std::size_t node_count,
                         std::span<const double> residuals, double total_sum, double total_sumsq,
                         std::vector<double>& vbuf, std::vector<double>& ybuf, FeatureScan& out,
                         OpCounters* counters) {
    vbuf.clear();
    ybuf.clear();
    vbuf.reserve(node_count);
    ybuf.reserve(node_count);
    for (std::uint32_t i : global_order) {
        if (!mask[i]) continue;
        vbuf.push_back(col[i]);
        ybuf.push_back(residuals[i]);
    }
    const std::size_t n = vbuf.size();
    if (counters) counters->samples_touched += n;
    if (n < 2 || vbuf.front() == vbuf.back()) return false;

    double best = std::numeric_limits<double>::infinity();
    double best_thr = 0.0;
    double sum_l = 0.0, sumsq_l = 0.0;
    std::uint64_t evals = 0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double y = ybuf[i];
        sum_l += y;
        sumsq_l += y * y;
        if (vbuf[i] == vbuf[i + 1]) continue;
        ++evals;
        const auto nl = static_cast<double>(i + 1);
        const auto nr = static_cast<double>(n - i - 1);
        const double sum_r = total_sum - sum_l;
        const double sse = (sumsq_l - sum_l * sum_l / nl) +
                           ((total_sumsq - sumsq_l) - sum_r * sum_r / nr);
        if (sse < best) {
            best = sse;
            best_thr = vbuf[i] + 0.5 * (vbuf[i + 1] - vbuf[i]);
        }
    }
    if (counters) counters->threshold_evals += evals;
    // Guard against tiny negative values from cancellation.
    out.raw_sse = std::max(best, 0.0);
    out.threshold = best_thr;
    return true;
}

}  // namespace detail

/// Immutable per-fit context for split search: feature columns, global sort
/// orders, current residuals and counters.
struct SplitWorkspace {
    const FeatureMatrix* features = nullptr;
    const SortedColumns* presort = nullptr;
    std::span<const double> residuals;
    OpCounters* counters = nullptr;
    int workers = 1;
};

/// Node membership for split search: mask over all samples plus cached stats.
struct NodeStats {
    const std::vector<std::uint8_t>* mask = nullptr;
    std::size_t count = 0;
    double sum = 0.0;
    double sumsq = 0.0;
    double sse = 0.0;  // SSE about the node mean
};

/// Exhaustive penalized split search over feature_subset. Returns the best
/// split under the configured criterion, or nothing when no feature has two
/// distinct values on the node.
inline std::optional<NodeSplit> best_split_exhaustive(const SplitWorkspace& ws, const NodeStats& node,
                                                      std::span<const int> feature_subset,
                                                      const SplitCriterionConfig& cfg,
                                                      const FeatureUsageSets& usage, double sse_r) {
    if (node.count < 2) return std::nullopt;
    if (cfg.normalizes() && !(sse_r > 0.0))
        throw ConfigError("normalized split criterion needs a positive root SSE");

    std::vector<NodeSplit> chunk_best(std::max<std::size_t>(1, static_cast<std::size_t>(ws.workers)));
    std::vector<OpCounters> chunk_counters(chunk_best.size());

    parallel_chunks(ws.workers, feature_subset.size(), [&](std::size_t w, std::size_t lo, std::size_t hi) {
        std::vector<double> vbuf, ybuf;
        NodeSplit best;
        OpCounters local;
        for (std::size_t fi = lo; fi < hi; ++fi) {
            const int j = feature_subset[fi];
            detail::FeatureScan scan;
            if (!detail::scan_feature(ws.features->columns[static_cast<std::size_t>(j)],
                                      ws.presort->order[static_cast<std::size_t>(j)], *node.mask,
                                      node.count, ws.residuals, node.sum, node.sumsq, vbuf, ybuf,
                                      scan, &local))
                continue;
            const auto [penalty, is_new] = detail::feature_penalty(j, cfg, usage);
            NodeSplit cand;
            cand.feature = j;
            cand.threshold = scan.threshold;
            cand.raw_sse = scan.raw_sse;
            cand.is_new_feature = is_new;
            cand.criterion_value = (cfg.normalizes() ? scan.raw_sse / sse_r : scan.raw_sse) + penalty;
            if (detail::split_better(cand, best)) best = cand;
        }
        chunk_best[w] = best;
        chunk_counters[w] = local;
    });

    NodeSplit best;
    for (const auto& c : chunk_best)
        if (c.feature >= 0 && detail::split_better(c, best)) best = c;
    if (ws.counters)
        for (const auto& c : chunk_counters) *ws.counters += c;
    if (best.feature < 0) return std::nullopt;
    return best;
}

// ---------------------------------------------------------------------------
// Regression tree
// ---------------------------------------------------------------------------

struct TreeNodeRec {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double leaf = 0.0;

    bool is_leaf() const { return feature < 0; }
};

struct RegressionTree {
    std::vector<TreeNodeRec> nodes;     // nodes[0] is the root
    std::vector<int> used_features;     // sorted, unique
    std::vector<double> feature_gain;   // size d, criterion-scale gain per feature

    double predict_one(std::span<const double> x) const {
        int cur = 0;
        while (!nodes[static_cast<std::size_t>(cur)].is_leaf()) {
            const auto& nd = nodes[static_cast<std::size_t>(cur)];
            cur = x[static_cast<std::size_t>(nd.feature)] < nd.threshold ? nd.left : nd.right;
        }
        return nodes[static_cast<std::size_t>(cur)].leaf;
    }
};

struct TreeGrowthConfig {
    SplitCriterionConfig criterion;
    double alpha = 1.0;
    std::span<const int> feature_subset;
};

namespace detail {

struct PendingNode {
    int index;
    std::vector<std::uint32_t> samples;
};

inline NodeStats node_stats(const std::vector<std::uint32_t>& samples,
                            std::span<const double> residuals,
                            const std::vector<std::uint8_t>& mask) {
    NodeStats st;
    st.mask = &mask;
    st.count = samples.size();
    double sum = 0.0, sumsq = 0.0;
    for (auto i : samples) {
        const double y = residuals[i];
        sum += y;
        sumsq += y * y;
    }
    st.sum = sum;
    st.sumsq = sumsq;
    const double mean = sum / static_cast<double>(samples.size());
    double sse = 0.0;
    for (auto i : samples) {
        const double dlt = residuals[i] - mean;
        sse += dlt * dlt;
    }
    st.sse = sse;
    return st;
}

inline bool residuals_constant(const std::vector<std::uint32_t>& samples,
                               std::span<const double> residuals) {
    const double first = residuals[samples.front()];
    for (auto i : samples) {
        if (residuals[i] != first) return false;
    }
    return true;
}

}  // namespace detail

/// Grow one regression tree on the residuals, breadth-first. A node is split
/// while its sample count exceeds alpha * m_root, its residuals are not all
/// equal, and some feature still admits a threshold; leaves predict the mean
/// of the residuals routed to them. Features chosen earlier in the same tree
/// are penalty-free at later nodes.
template <class Splitter>
RegressionTree fit_tree_with(const SplitWorkspace& ws, std::span<const double> residuals,
                             const TreeGrowthConfig& grow, const FeatureUsageSets& usage,
                             Splitter&& choose_split) {
    const std::size_t m = residuals.size();
    const std::size_t d = ws.features->cols();
    if (m == 0) throw ConfigError("fit_tree: empty residuals");

    RegressionTree tree;
    tree.feature_gain.assign(d, 0.0);

    FeatureUsageSets local = usage;  // grows as this tree selects features

    std::vector<std::uint8_t> mask(m, 0);
    std::vector<std::uint32_t> root_samples(m);
    std::iota(root_samples.begin(), root_samples.end(), 0u);

    const double min_split_count = grow.alpha * static_cast<double>(m);
    for (auto i : root_samples) mask[i] = 1;
    NodeStats root_stats = detail::node_stats(root_samples, residuals, mask);
    const double sse_r = root_stats.sse;
    for (auto i : root_samples) mask[i] = 0;

    std::deque<detail::PendingNode> queue;
    tree.nodes.emplace_back();
    queue.push_back({0, std::move(root_samples)});

    std::vector<std::uint8_t> used(d, 0);

    while (!queue.empty()) {
        auto pending = std::move(queue.front());
        queue.pop_front();
        auto& samples = pending.samples;
        const auto node_index = static_cast<std::size_t>(pending.index);

        for (auto i : samples) mask[i] = 1;
        NodeStats st = detail::node_stats(samples, residuals, mask);

        const bool pure = detail::residuals_constant(samples, residuals);
        const bool big_enough =
            samples.size() >= 2 && static_cast<double>(samples.size()) > min_split_count;

        std::optional<NodeSplit> split;
        if (big_enough && !pure)
            split = choose_split(ws, st, std::span<const std::uint32_t>(samples), local, sse_r);

        if (!split) {
            tree.nodes[node_index].feature = -1;
            tree.nodes[node_index].leaf = st.sum / static_cast<double>(samples.size());
            for (auto i : samples) mask[i] = 0;
            continue;
        }

        const auto jf = static_cast<std::size_t>(split->feature);
        const auto& col = ws.features->columns[jf];
        std::vector<std::uint32_t> left, right;
        left.reserve(samples.size());
        right.reserve(samples.size());
        for (auto i : samples) (col[i] < split->threshold ? left : right).push_back(i);
        for (auto i : samples) mask[i] = 0;
        // Midpoint thresholds always leave both sides nonempty.
        if (left.empty() || right.empty())
            throw std::logic_error("fit_tree: split produced an empty child");

        const double parent_val = grow.criterion.normalizes() ? st.sse / sse_r : st.sse;
        const double child_val =
            grow.criterion.normalizes() ? split->raw_sse / sse_r : split->raw_sse;
        tree.feature_gain[jf] +=
            (parent_val - child_val) * (static_cast<double>(samples.size()) / static_cast<double>(m));

        if (!used[jf]) {
            used[jf] = 1;
            tree.used_features.push_back(split->feature);
        }
        local.omega[jf] = 1;
        local.omega_group[jf] = 1;
        local.omega_task[jf] = 1;

        const int li = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        const int ri = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        tree.nodes[node_index].feature = split->feature;
        tree.nodes[node_index].threshold = split->threshold;
        tree.nodes[node_index].left = li;
        tree.nodes[node_index].right = ri;
        queue.push_back({li, std::move(left)});
        queue.push_back({ri, std::move(right)});
    }

    std::sort(tree.used_features.begin(), tree.used_features.end());
    return tree;
}

/// Exhaustive-search tree fit (GBFS / A-GBM / plain CART depending on mode).
inline RegressionTree fit_tree(const SplitWorkspace& ws, std::span<const double> residuals,
                               const TreeGrowthConfig& grow, const FeatureUsageSets& usage) {
    return fit_tree_with(ws, residuals, grow, usage,
                         [&grow](const SplitWorkspace& w, const NodeStats& st,
                                 std::span<const std::uint32_t>, const FeatureUsageSets& u,
                                 double sse_r) {
                             return best_split_exhaustive(w, st, grow.feature_subset,
                                                          grow.criterion, u, sse_r);
                         });
}

}  // namespace gtboost
