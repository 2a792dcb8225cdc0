// Independent reference implementations used as test oracles. These are kept
// deliberately naive (quadratic scans, two-pass means, direct quadrature) and
// share no code with the library paths they check.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include <gtboost/dataset.hpp>
#include <gtboost/splitcore.hpp>

namespace oracles {

inline double direct_sse(const std::vector<double>& ys) {
    if (ys.empty()) return 0.0;
    double mean = 0.0;
    for (double y : ys) mean += y;
    mean /= static_cast<double>(ys.size());
    double sse = 0.0;
    for (double y : ys) sse += (y - mean) * (y - mean);
    return sse;
}

struct OracleSplit {
    int feature = -1;
    double threshold = 0.0;
    double criterion = std::numeric_limits<double>::infinity();
    double raw_sse = 0.0;
    bool is_new = false;
};

/// Quadratic brute force over (feature, midpoint threshold) pairs, computing
/// each child SSE from scratch and applying the penalty and tie rule directly.
inline std::optional<OracleSplit> brute_force_split(
    const gtboost::FeatureMatrix& fm, const std::vector<std::uint32_t>& samples,
    const std::vector<double>& residuals, const std::vector<int>& feature_subset,
    const gtboost::SplitCriterionConfig& cfg, const gtboost::FeatureUsageSets& usage,
    double sse_root_value) {
    OracleSplit best;
    for (int j : feature_subset) {
        const auto& col = fm.columns[static_cast<std::size_t>(j)];
        std::vector<double> vals;
        vals.reserve(samples.size());
        for (auto i : samples) vals.push_back(col[i]);
        std::sort(vals.begin(), vals.end());
        vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
        for (std::size_t t = 0; t + 1 < vals.size(); ++t) {
            const double thr = vals[t] + 0.5 * (vals[t + 1] - vals[t]);
            std::vector<double> left, right;
            for (auto i : samples) (col[i] < thr ? left : right).push_back(residuals[i]);
            if (left.empty() || right.empty()) continue;
            const double raw = direct_sse(left) + direct_sse(right);

            double penalty = 0.0;
            bool is_new = false;
            switch (cfg.mode) {
                case gtboost::CriterionMode::plain:
                    is_new = !usage.omega[static_cast<std::size_t>(j)];
                    break;
                case gtboost::CriterionMode::gbfs:
                case gtboost::CriterionMode::agbm:
                    if (!usage.omega[static_cast<std::size_t>(j)]) {
                        penalty = cfg.mu;
                        is_new = true;
                    }
                    break;
                case gtboost::CriterionMode::multitask:
                    penalty = (usage.omega_group[static_cast<std::size_t>(j)] ? 0.0 : cfg.mu_group) +
                              (usage.omega_task[static_cast<std::size_t>(j)] ? 0.0 : cfg.mu_task);
                    is_new = !usage.omega_task[static_cast<std::size_t>(j)];
                    break;
            }
            const bool norm = cfg.mode == gtboost::CriterionMode::agbm ||
                              cfg.mode == gtboost::CriterionMode::multitask;
            OracleSplit cand;
            cand.feature = j;
            cand.threshold = thr;
            cand.raw_sse = raw;
            cand.is_new = is_new;
            cand.criterion = (norm ? raw / sse_root_value : raw) + penalty;

            bool better = false;
            if (cand.criterion != best.criterion) better = cand.criterion < best.criterion;
            else if (cand.is_new != best.is_new) better = !cand.is_new;
            else if (cand.feature != best.feature) better = cand.feature < best.feature;
            else better = cand.threshold < best.threshold;
            if (better) best = cand;
        }
    }
    if (best.feature < 0) return std::nullopt;
    return best;
}

struct OracleTreeNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1, right = -1;
    double leaf = 0.0;
};

/// Reference tree builder: same growth rules as the library (breadth-first,
/// split while count > alpha*m and the residuals are not all equal), but every
/// split decided by the quadratic oracle above.
inline std::vector<OracleTreeNode> brute_force_tree(const gtboost::FeatureMatrix& fm,
                                                    const std::vector<double>& residuals,
                                                    const std::vector<int>& feature_subset,
                                                    const gtboost::SplitCriterionConfig& cfg,
                                                    gtboost::FeatureUsageSets usage, double alpha) {
    const std::size_t m = residuals.size();
    const double min_split = alpha * static_cast<double>(m);

    std::vector<double> all(residuals.begin(), residuals.end());
    const double sse_r = direct_sse(all);

    std::vector<OracleTreeNode> nodes;
    struct Pending {
        int index;
        std::vector<std::uint32_t> samples;
    };
    std::vector<Pending> queue;
    std::vector<std::uint32_t> root(m);
    for (std::uint32_t i = 0; i < m; ++i) root[i] = i;
    nodes.emplace_back();
    queue.push_back({0, root});

    std::size_t head = 0;
    while (head < queue.size()) {
        auto pending = queue[head++];
        auto& samples = pending.samples;

        std::vector<double> ys;
        for (auto i : samples) ys.push_back(residuals[i]);
        const bool pure = std::all_of(ys.begin(), ys.end(), [&](double y) { return y == ys[0]; });
        const bool big = samples.size() >= 2 && static_cast<double>(samples.size()) > min_split;

        std::optional<OracleSplit> split;
        if (big && !pure)
            split = brute_force_split(fm, samples, residuals, feature_subset, cfg, usage, sse_r);
        if (!split) {
            double mean = 0.0;
            for (double y : ys) mean += y;
            nodes[static_cast<std::size_t>(pending.index)].leaf =
                mean / static_cast<double>(ys.size());
            continue;
        }

        usage.omega[static_cast<std::size_t>(split->feature)] = 1;
        usage.omega_group[static_cast<std::size_t>(split->feature)] = 1;
        usage.omega_task[static_cast<std::size_t>(split->feature)] = 1;

        std::vector<std::uint32_t> left, right;
        const auto& col = fm.columns[static_cast<std::size_t>(split->feature)];
        for (auto i : samples) (col[i] < split->threshold ? left : right).push_back(i);

        const int li = static_cast<int>(nodes.size());
        nodes.emplace_back();
        const int ri = static_cast<int>(nodes.size());
        nodes.emplace_back();
        auto& nd = nodes[static_cast<std::size_t>(pending.index)];
        nd.feature = split->feature;
        nd.threshold = split->threshold;
        nd.left = li;
        nd.right = ri;
        queue.push_back({li, std::move(left)});
        queue.push_back({ri, std::move(right)});
    }
    return nodes;
}

/// Composite-Simpson quadrature of f over [0, 1].
inline double simpson(const std::function<double(double)>& f, int intervals = 4096) {
    const double h = 1.0 / intervals;
    double acc = f(0.0) + f(1.0);
    for (int i = 1; i < intervals; ++i) acc += f(i * h) * (i % 2 ? 4.0 : 2.0);
    return acc * h / 3.0;
}

/// Pairwise-enumeration AUC with half credit for ties.
inline double pairwise_auc(const std::vector<double>& scores, const std::vector<double>& labels) {
    double wins = 0.0, pairs = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] <= 0.5) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (labels[j] > 0.5) continue;
            pairs += 1.0;
            if (scores[i] > scores[j]) wins += 1.0;
            else if (scores[i] == scores[j]) wins += 0.5;
        }
    }
    return wins / pairs;
}

/// Random dense instance in [0, 1] with noisy linear-ish targets; marked
/// standardized so it can be fit directly.
inline gtboost::LabeledDataset random_instance(std::size_t n, std::size_t d, std::uint64_t seed,
                                               int distinct_values = 0) {
    std::mt19937_64 engine(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    gtboost::LabeledDataset ds;
    ds.features.columns.assign(d, std::vector<double>(n));
    for (std::size_t j = 0; j < d; ++j)
        for (std::size_t i = 0; i < n; ++i) {
            double v = unif(engine);
            if (distinct_values > 0)
                v = std::floor(v * distinct_values) / distinct_values;
            ds.features.columns[j][i] = v;
        }
    ds.targets.resize(n);
    std::normal_distribution<double> noise(0.0, 0.3);
    for (std::size_t i = 0; i < n; ++i) {
        double y = noise(engine);
        for (std::size_t j = 0; j < std::min<std::size_t>(3, d); ++j)
            y += (static_cast<double>(j) + 1.0) * ds.features.columns[j][i];
        ds.targets[i] = y;
    }
    ds.standardization.min.assign(d, 0.0);
    ds.standardization.range.assign(d, 1.0);
    return ds;
}

}  // namespace oracles
