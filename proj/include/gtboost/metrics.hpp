#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gtboost/common.hpp"
#include "gtboost/dataset.hpp"

namespace gtboost {

inline double rmse(std::span<const double> pred, std::span<const double> truth) {
    if (pred.size() != truth.size() || pred.empty())
        throw DataError("rmse: sequences must have equal nonzero length");
    double s = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - truth[i];
        s += d * d;
    }
    return std::sqrt(s / static_cast<double>(pred.size()));
}

namespace detail {

inline bool is_positive(double label) { return label > 0.5; }

/// Indices ordered by descending score; ties keep original index order.
inline std::vector<std::uint32_t> rank_desc(std::span<const double> scores) {
    std::vector<std::uint32_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), 0u);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::uint32_t a, std::uint32_t b) { return scores[a] > scores[b]; });
    return idx;
}

}  // namespace detail

/// Mann-Whitney statistic with midranks for tied scores.
inline double auc_roc(std::span<const double> scores, std::span<const double> labels) {
    if (scores.size() != labels.size() || scores.empty())
        throw DataError("auc_roc: sequences must have equal nonzero length");
    std::vector<std::uint32_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), 0u);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::uint32_t a, std::uint32_t b) { return scores[a] < scores[b]; });

    double n_pos = 0.0, n_neg = 0.0, rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < idx.size()) {
        std::size_t j = i;
        while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) ++j;
        const double midrank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
        for (std::size_t k = i; k < j; ++k) {
            if (detail::is_positive(labels[idx[k]])) {
                n_pos += 1.0;
                rank_sum_pos += midrank;
            } else {
                n_neg += 1.0;
            }
        }
        i = j;
    }
    if (n_pos == 0.0 || n_neg == 0.0) throw DataError("auc_roc: both classes must be present");
    return (rank_sum_pos - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg);
}

/// Average precision: mean over positives of the precision at their rank in
/// descending-score order (ties resolved by stable original index).
inline double auc_pr(std::span<const double> scores, std::span<const double> labels) {
    if (scores.size() != labels.size() || scores.empty())
        throw DataError("auc_pr: sequences must have equal nonzero length");
    const auto order = detail::rank_desc(scores);
    double positives_seen = 0.0, ap = 0.0, total_pos = 0.0;
    for (std::size_t r = 0; r < order.size(); ++r) {
        if (detail::is_positive(labels[order[r]])) {
            positives_seen += 1.0;
            ap += positives_seen / static_cast<double>(r + 1);
            total_pos += 1.0;
        }
    }
    if (total_pos == 0.0) throw DataError("auc_pr: needs at least one positive");
    return ap / total_pos;
}

namespace detail {

inline std::map<long long, std::vector<std::uint32_t>> group_rows(std::span<const long long> groups) {
    std::map<long long, std::vector<std::uint32_t>> by_group;
    for (std::uint32_t i = 0; i < groups.size(); ++i) by_group[groups[i]].push_back(i);
    return by_group;
}

}  // namespace detail

/// Fraction of positives among the top-k by score. With groups, the per-group
/// values are averaged over groups holding at least k items.
inline double precision_at_k(std::span<const double> scores, std::span<const double> labels, int k,
                             std::span<const long long> groups = {}) {
    if (k < 1) throw ConfigError("precision_at_k: k must be >= 1");
    if (scores.size() != labels.size() || scores.empty())
        throw DataError("precision_at_k: sequences must have equal nonzero length");

    auto top_k_fraction = [&](const std::vector<std::uint32_t>& rows) {
        std::vector<double> s(rows.size()), l(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            s[i] = scores[rows[i]];
            l[i] = labels[rows[i]];
        }
        const auto order = detail::rank_desc(s);
        double hits = 0.0;
        for (int r = 0; r < k; ++r)
            if (detail::is_positive(l[order[static_cast<std::size_t>(r)]])) hits += 1.0;
        return hits / static_cast<double>(k);
    };

    if (groups.empty()) {
        if (static_cast<std::size_t>(k) > scores.size())
            throw DataError("precision_at_k: k exceeds the sample count");
        std::vector<std::uint32_t> all(scores.size());
        std::iota(all.begin(), all.end(), 0u);
        return top_k_fraction(all);
    }

    const auto by_group = detail::group_rows(groups);
    double sum = 0.0;
    std::size_t counted = 0;
    for (const auto& [gid, rows] : by_group) {
        if (rows.size() < static_cast<std::size_t>(k)) continue;
        sum += top_k_fraction(rows);
        ++counted;
    }
    if (counted == 0) throw DataError("precision_at_k: k exceeds every group size");
    return sum / static_cast<double>(counted);
}

/// Mean reciprocal rank over groups: 1 / rank of the first positive by
/// descending score; groups without a positive are excluded.
inline double mrr(std::span<const double> scores, std::span<const double> labels,
                  std::span<const long long> groups) {
    if (groups.empty()) throw DataError("mrr: group ids are required");
    if (scores.size() != labels.size() || scores.size() != groups.size() || scores.empty())
        throw DataError("mrr: sequences must have equal nonzero length");

    const auto by_group = detail::group_rows(groups);
    double sum = 0.0;
    std::size_t counted = 0;
    for (const auto& [gid, rows] : by_group) {
        std::vector<double> s(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) s[i] = scores[rows[i]];
        const auto order = detail::rank_desc(s);
        for (std::size_t r = 0; r < order.size(); ++r) {
            if (detail::is_positive(labels[rows[order[r]]])) {
                sum += 1.0 / static_cast<double>(r + 1);
                ++counted;
                break;
            }
        }
    }
    if (counted == 0) throw DataError("mrr: no group contains a positive");
    return sum / static_cast<double>(counted);
}

/// Pearson correlation matrix of the selected feature columns: unit diagonal,
/// symmetric, entries in [-1, 1]. Constant features are an error.
inline std::vector<std::vector<double>> pearson_matrix(const LabeledDataset& ds,
                                                       std::span<const int> feature_subset) {
    const std::size_t k = feature_subset.size();
    const std::size_t m = ds.rows();
    if (k == 0) throw ConfigError("pearson_matrix: empty feature subset");

    std::vector<std::vector<double>> centered(k, std::vector<double>(m));
    std::vector<double> norm(k);
    for (std::size_t a = 0; a < k; ++a) {
        const auto& col = ds.features.columns[static_cast<std::size_t>(feature_subset[a])];
        const double mean = std::accumulate(col.begin(), col.end(), 0.0) / static_cast<double>(m);
        double ss = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            centered[a][i] = col[i] - mean;
            ss += centered[a][i] * centered[a][i];
        }
        if (!(ss > 0.0))
            throw DataError("pearson_matrix: feature " + std::to_string(feature_subset[a]) +
                            " is constant");
        norm[a] = std::sqrt(ss);
    }

    std::vector<std::vector<double>> r(k, std::vector<double>(k, 1.0));
    for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = a + 1; b < k; ++b) {
            double dot = 0.0;
            for (std::size_t i = 0; i < m; ++i) dot += centered[a][i] * centered[b][i];
            const double v = std::clamp(dot / (norm[a] * norm[b]), -1.0, 1.0);
            r[a][b] = v;
            r[b][a] = v;
        }
    }
    return r;
}

// ---------------------------------------------------------------------------
// Evaluation report
// ---------------------------------------------------------------------------

struct EvalReport {
    double rmse_value = 0.0;
    std::optional<double> auc_roc_value;
    std::optional<double> auc_pr_value;
    std::map<int, double> precision_at_k_values;
    std::optional<double> mrr_value;
    int n_features_used = 0;

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["rmse"] = rmse_value;
        if (auc_roc_value) j["auc_roc"] = *auc_roc_value;
        if (auc_pr_value) j["auc_pr"] = *auc_pr_value;
        for (const auto& [k, v] : precision_at_k_values) j["prec_at_" + std::to_string(k)] = v;
        if (mrr_value) j["mrr"] = *mrr_value;
        j["n_features_used"] = n_features_used;
        return j;
    }

    /// Header + value line, deterministic column order.
    std::string to_csv() const {
        const auto j = to_json();
        std::ostringstream head, row;
        bool first = true;
        for (auto it = j.begin(); it != j.end(); ++it) {
            if (!first) {
                head << ",";
                row << ",";
            }
            first = false;
            head << it.key();
            row << it.value().dump();
        }
        return head.str() + "\n" + row.str() + "\n";
    }
};

}  // namespace gtboost
