#pragma once

#include <chrono>
#include <cstdint>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gtboost/common.hpp"
#include "gtboost/dataset.hpp"
#include "gtboost/grouptest.hpp"
#include "gtboost/splitcore.hpp"

namespace gtboost {

enum class SplitterKind { exhaustive, grouptest };

struct BoostConfig {
    int iterations = 100;
    double shrinkage = 0.1;
    double alpha = 0.1;
    SplitCriterionConfig criterion;
    SplitterKind splitter = SplitterKind::exhaustive;
    std::optional<GTConfig> gt;        // required when splitter == grouptest
    std::uint64_t seed = 0;
    int workers = 1;
    std::vector<int> feature_subset;   // empty = all features

    void validate() const {
        if (iterations < 1) throw ConfigError("iterations must be >= 1");
        if (!(shrinkage > 0.0 && shrinkage <= 1.0)) throw ConfigError("shrinkage must lie in (0, 1]");
        if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in (0, 1]");
        criterion.validate();
        if (splitter == SplitterKind::grouptest) {
            if (!gt) throw ConfigError("group-testing splitter needs s and delta");
            if (gt->s < 1) throw ConfigError("s must be >= 1");
            if (!(gt->delta > 0.0 && gt->delta < 1.0)) throw ConfigError("delta must lie in (0, 1)");
        }
        if (workers < 1) throw ConfigError("workers must be >= 1");
    }
};

/// Per-round training diagnostics.
struct RoundLog {
    int round = 0;
    double train_rmse = 0.0;
    std::size_t omega_size = 0;
    double seconds = 0.0;
};

/// Logical cost of the first tree's root split plus per-round totals; filled
/// when a FitStats pointer is handed to fit().
struct FitStats {
    OpCounters total;
    OpCounters first_root_split;       // counters spent on the first tree's root node
    std::vector<RoundLog> rounds;
    double presort_seconds = 0.0;
    double precompute_seconds = 0.0;   // prefix-sum cache builds (group testing)
};

// ---------------------------------------------------------------------------
// Models
// ---------------------------------------------------------------------------

struct BoostedModel {
    std::string mode = "plain";
    double base = 0.0;                 // H is initialized to 0; the first leaf absorbs the mean
    double shrinkage = 1.0;
    std::vector<RegressionTree> trees;
    StandardizationParams standardization;
    std::vector<int> omega;            // sorted union of features used by the trees
    std::vector<double> feature_gain;  // size d

    std::size_t n_features() const { return feature_gain.size(); }

    double predict_one_standardized(std::span<const double> x) const {
        double acc = base;
        for (const auto& t : trees) acc += shrinkage * t.predict_one(x);
        return acc;
    }

    /// Predict from raw feature rows: inputs are standardized with the stored
    /// parameters and clamped into [0, 1] before routing.
    std::vector<double> predict(const FeatureMatrix& raw) const {
        if (raw.cols() != n_features())
            throw DataError("predict: model expects " + std::to_string(n_features()) +
                            " features, data has " + std::to_string(raw.cols()));
        const std::size_t m = raw.rows();
        std::vector<double> out(m);
        std::vector<double> x(raw.cols());
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < raw.cols(); ++j)
                x[j] = standardization.apply_clamped(j, raw.columns[j][i]);
            out[i] = predict_one_standardized(x);
        }
        return out;
    }

    /// Predict on already-standardized rows (training-time representation).
    std::vector<double> predict_standardized(const FeatureMatrix& std_features) const {
        if (std_features.cols() != n_features())
            throw DataError("predict: feature count mismatch");
        const std::size_t m = std_features.rows();
        std::vector<double> out(m);
        std::vector<double> x(std_features.cols());
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < std_features.cols(); ++j)
                x[j] = std::clamp(std_features.columns[j][i], 0.0, 1.0);
            out[i] = predict_one_standardized(x);
        }
        return out;
    }
};

struct MultitaskModel {
    std::vector<BoostedModel> tasks;
    std::vector<int> omega_group;      // union of all per-task omegas
};

namespace detail {

inline const char* mode_name(CriterionMode mode, SplitterKind splitter) {
    switch (mode) {
        case CriterionMode::plain: return "plain";
        case CriterionMode::gbfs: return "gbfs";
        case CriterionMode::agbm: return splitter == SplitterKind::grouptest ? "gtgbm" : "agbm";
        case CriterionMode::multitask:
            return splitter == SplitterKind::grouptest ? "multitask-gtgbm" : "multitask-agbm";
    }
    return "plain";
}

inline double rmse_of(std::span<const double> residuals) {
    double s = 0.0;
    for (double g : residuals) s += g * g;
    return std::sqrt(s / static_cast<double>(residuals.size()));
}

struct TaskState {
    const LabeledDataset* data = nullptr;
    SortedColumns presort;
    std::vector<double> residuals;
    BoostedModel model;
};

/// One boosting round for one task: fit a tree on the residuals, add it with
/// shrinkage, refresh residuals, and record which features it used.
inline void boost_one_round(TaskState& ts, const BoostConfig& cfg, FeatureUsageSets& usage,
                            std::span<const int> features, int round, FitStats* stats,
                            OpCounters* counters) {
    SplitWorkspace ws;
    ws.features = &ts.data->features;
    ws.presort = &ts.presort;
    ws.residuals = ts.residuals;
    ws.counters = counters;
    ws.workers = cfg.workers;

    TreeGrowthConfig grow;
    grow.criterion = cfg.criterion;
    grow.alpha = cfg.alpha;
    grow.feature_subset = features;

    const auto t0 = std::chrono::steady_clock::now();

    // The root is the first node the breadth-first builder asks to split, so
    // the first callback of round 0 is the per-root-split cost.
    bool first_split = round == 0;
    auto capture_root = [&](const OpCounters& before) {
        if (stats && counters && first_split) {
            stats->first_root_split = *counters - before;
            first_split = false;
        }
    };

    RegressionTree tree;
    if (cfg.splitter == SplitterKind::exhaustive) {
        tree = fit_tree_with(
            ws, ts.residuals, grow, usage,
            [&](const SplitWorkspace& w, const NodeStats& st, std::span<const std::uint32_t>,
                const FeatureUsageSets& u, double sse_r) {
                const OpCounters before = counters ? *counters : OpCounters{};
                auto split = best_split_exhaustive(w, st, grow.feature_subset, grow.criterion, u, sse_r);
                capture_root(before);
                return split;
            });
    } else {
        GTConfig gt = *cfg.gt;
        gt.seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(round));
        const auto p0 = std::chrono::steady_clock::now();
        const SubsetPlan plan = make_subset_plan(static_cast<int>(ts.data->cols()), gt, features);
        const PrefixSumCache cache = build_prefix_cache(ts.data->features, plan);
        const auto p1 = std::chrono::steady_clock::now();
        if (stats) stats->precompute_seconds += std::chrono::duration<double>(p1 - p0).count();
        tree = fit_tree_with(
            ws, ts.residuals, grow, usage,
            [&](const SplitWorkspace& w, const NodeStats& st, std::span<const std::uint32_t> samples,
                const FeatureUsageSets& u, double sse_r) {
                const OpCounters before = counters ? *counters : OpCounters{};
                auto split = gt_split(w, st, samples, plan, cache, grow.criterion, u, sse_r);
                capture_root(before);
                return split;
            });
    }

    for (std::size_t j = 0; j < tree.feature_gain.size(); ++j)
        ts.model.feature_gain[j] += tree.feature_gain[j];
    for (int j : tree.used_features) {
        usage.omega[static_cast<std::size_t>(j)] = 1;
        if (!std::binary_search(ts.model.omega.begin(), ts.model.omega.end(), j)) {
            ts.model.omega.insert(
                std::lower_bound(ts.model.omega.begin(), ts.model.omega.end(), j), j);
        }
    }

    std::vector<double> x(ts.data->cols());
    for (std::size_t i = 0; i < ts.residuals.size(); ++i) {
        for (std::size_t j = 0; j < ts.data->cols(); ++j) x[j] = ts.data->features.columns[j][i];
        ts.residuals[i] -= cfg.shrinkage * tree.predict_one(x);
    }
    ts.model.trees.push_back(std::move(tree));

    if (stats) {
        const auto t1 = std::chrono::steady_clock::now();
        RoundLog log;
        log.round = round;
        log.train_rmse = rmse_of(ts.residuals);
        log.omega_size = ts.model.omega.size();
        log.seconds = std::chrono::duration<double>(t1 - t0).count();
        stats->rounds.push_back(log);
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Single-task fit (plain / GBFS / A-GBM / GT-GBM)
// ---------------------------------------------------------------------------

inline BoostedModel fit(const LabeledDataset& ds, const BoostConfig& cfg, FitStats* stats = nullptr) {
    cfg.validate();
    if (cfg.criterion.mode == CriterionMode::multitask)
        throw ConfigError("fit: use fit_multitask for the multitask criterion");
    if (!ds.standardized()) throw ConfigError("fit: dataset must be standardized first");
    if (ds.rows() < 2) throw ConfigError("fit: need at least 2 samples");

    detail::TaskState ts;
    ts.data = &ds;
    const auto s0 = std::chrono::steady_clock::now();
    ts.presort = SortedColumns::build(ds.features);
    const auto s1 = std::chrono::steady_clock::now();
    if (stats) stats->presort_seconds = std::chrono::duration<double>(s1 - s0).count();

    ts.residuals = ds.targets;
    ts.model.mode = detail::mode_name(cfg.criterion.mode, cfg.splitter);
    ts.model.base = 0.0;
    ts.model.shrinkage = cfg.shrinkage;
    ts.model.standardization = ds.standardization;
    ts.model.feature_gain.assign(ds.cols(), 0.0);

    std::vector<int> features = cfg.feature_subset;
    if (features.empty()) {
        features.resize(ds.cols());
        for (std::size_t j = 0; j < ds.cols(); ++j) features[j] = static_cast<int>(j);
    }

    FeatureUsageSets usage(ds.cols());
    OpCounters counters;
    for (int k = 0; k < cfg.iterations; ++k)
        detail::boost_one_round(ts, cfg, usage, features, k, stats, &counters);
    if (stats) stats->total = counters;
    return std::move(ts.model);
}

// ---------------------------------------------------------------------------
// Multitask fit (round-robin over tasks inside each boosting iteration)
// ---------------------------------------------------------------------------

inline MultitaskModel fit_multitask(const TaskBundle& tb, const BoostConfig& cfg,
                                    std::vector<FitStats>* stats = nullptr) {
    cfg.validate();
    if (cfg.criterion.mode != CriterionMode::multitask)
        throw ConfigError("fit_multitask: criterion mode must be multitask");
    if (tb.tasks.empty()) throw ConfigError("fit_multitask: no tasks");
    const std::size_t d = tb.tasks.front().cols();
    for (const auto& task : tb.tasks) {
        if (task.cols() != d)
            throw ConfigError("fit_multitask: all tasks must share one feature dimension");
        if (!task.standardized()) throw ConfigError("fit_multitask: tasks must be standardized");
        if (task.rows() < 2) throw ConfigError("fit_multitask: every task needs >= 2 samples");
    }

    std::vector<detail::TaskState> states(tb.tasks.size());
    std::vector<FeatureUsageSets> usages(tb.tasks.size(), FeatureUsageSets(d));
    std::vector<std::uint8_t> omega_group(d, 0);
    for (std::size_t t = 0; t < tb.tasks.size(); ++t) {
        auto& ts = states[t];
        ts.data = &tb.tasks[t];
        ts.presort = SortedColumns::build(tb.tasks[t].features);
        ts.residuals = tb.tasks[t].targets;
        ts.model.mode = detail::mode_name(cfg.criterion.mode, cfg.splitter);
        ts.model.base = 0.0;
        ts.model.shrinkage = cfg.shrinkage;
        ts.model.standardization = tb.tasks[t].standardization;
        ts.model.feature_gain.assign(d, 0.0);
    }

    std::vector<int> features(d);
    for (std::size_t j = 0; j < d; ++j) features[j] = static_cast<int>(j);
    if (stats) stats->assign(tb.tasks.size(), FitStats{});

    // Loop order is rounds outer, tasks inner: Omega_G updates after each
    // task's tree, so later tasks in the same round see earlier selections.
    for (int k = 0; k < cfg.iterations; ++k) {
        for (std::size_t t = 0; t < tb.tasks.size(); ++t) {
            auto& usage = usages[t];
            usage.omega_group = omega_group;
            detail::boost_one_round(states[t], cfg, usage, features, k,
                                    stats ? &(*stats)[t] : nullptr, nullptr);
            for (int j : states[t].model.trees.back().used_features) {
                usage.omega_task[static_cast<std::size_t>(j)] = 1;
                omega_group[static_cast<std::size_t>(j)] = 1;
            }
        }
    }

    MultitaskModel model;
    for (auto& st : states) model.tasks.push_back(std::move(st.model));
    for (std::size_t j = 0; j < d; ++j)
        if (omega_group[j]) model.omega_group.push_back(static_cast<int>(j));
    return model;
}

// ---------------------------------------------------------------------------
// Persistence (versioned JSON; round trips are exact)
// ---------------------------------------------------------------------------

inline constexpr int kModelFormatVersion = 1;

namespace detail {

inline nlohmann::json tree_to_json(const RegressionTree& tree) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& nd : tree.nodes) {
        if (nd.is_leaf()) nodes.push_back({{"leaf", nd.leaf}});
        else
            nodes.push_back({{"feature", nd.feature},
                             {"threshold", nd.threshold},
                             {"left", nd.left},
                             {"right", nd.right}});
    }
    return {{"nodes", std::move(nodes)}};
}

inline RegressionTree tree_from_json(const nlohmann::json& jt, std::size_t d) {
    RegressionTree tree;
    tree.feature_gain.assign(d, 0.0);
    std::vector<std::uint8_t> used(d, 0);
    for (const auto& jn : jt.at("nodes")) {
        TreeNodeRec nd;
        if (jn.contains("leaf")) {
            nd.leaf = jn.at("leaf").get<double>();
        } else {
            nd.feature = jn.at("feature").get<int>();
            nd.threshold = jn.at("threshold").get<double>();
            nd.left = jn.at("left").get<int>();
            nd.right = jn.at("right").get<int>();
            if (nd.feature < 0 || static_cast<std::size_t>(nd.feature) >= d)
                throw DataError("model file: node feature index out of range");
            used[static_cast<std::size_t>(nd.feature)] = 1;
        }
        tree.nodes.push_back(nd);
    }
    if (tree.nodes.empty()) throw DataError("model file: tree without nodes");
    for (std::size_t j = 0; j < d; ++j)
        if (used[j]) tree.used_features.push_back(static_cast<int>(j));
    return tree;
}

inline nlohmann::json model_to_json(const BoostedModel& model) {
    nlohmann::json j;
    j["version"] = kModelFormatVersion;
    j["mode"] = model.mode;
    j["shrinkage"] = model.shrinkage;
    j["base"] = model.base;
    nlohmann::json std_params = nlohmann::json::array();
    for (std::size_t k = 0; k < model.standardization.size(); ++k)
        std_params.push_back(
            {{"min", model.standardization.min[k]}, {"range", model.standardization.range[k]}});
    j["standardization"] = std::move(std_params);
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& t : model.trees) trees.push_back(tree_to_json(t));
    j["trees"] = std::move(trees);
    j["omega"] = model.omega;
    j["feature_gain"] = model.feature_gain;
    return j;
}

inline BoostedModel model_from_json(const nlohmann::json& j) {
    BoostedModel model;
    model.mode = j.at("mode").get<std::string>();
    model.shrinkage = j.at("shrinkage").get<double>();
    model.base = j.at("base").get<double>();
    for (const auto& sp : j.at("standardization")) {
        model.standardization.min.push_back(sp.at("min").get<double>());
        model.standardization.range.push_back(sp.at("range").get<double>());
    }
    const std::size_t d = model.standardization.size();
    model.feature_gain = j.at("feature_gain").get<std::vector<double>>();
    if (model.feature_gain.size() != d)
        throw DataError("model file: feature_gain length mismatch");
    model.omega = j.at("omega").get<std::vector<int>>();
    for (const auto& jt : j.at("trees")) model.trees.push_back(tree_from_json(jt, d));
    return model;
}

inline nlohmann::json parse_model_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open model file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("model file " + path + ": " + e.what());
    }
    if (!j.contains("version")) throw DataError("model file " + path + ": missing version field");
    const int version = j.at("version").get<int>();
    if (version != kModelFormatVersion)
        throw DataError("model file " + path + ": format version " + std::to_string(version) +
                        " is not supported; this build reads version " +
                        std::to_string(kModelFormatVersion));
    return j;
}

}  // namespace detail

inline void save_model(const BoostedModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write model file: " + path);
    out << detail::model_to_json(model).dump(1) << "\n";
}

inline BoostedModel load_model(const std::string& path) {
    try {
        return detail::model_from_json(detail::parse_model_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw DataError("model file " + path + ": " + e.what());
    }
}

inline void save_multitask_model(const MultitaskModel& model, const std::string& path) {
    nlohmann::json j;
    j["version"] = kModelFormatVersion;
    j["mode"] = model.tasks.empty() ? "multitask-agbm" : model.tasks.front().mode;
    j["omega_group"] = model.omega_group;
    nlohmann::json tasks = nlohmann::json::array();
    for (const auto& t : model.tasks) tasks.push_back(detail::model_to_json(t));
    j["tasks"] = std::move(tasks);
    std::ofstream out(path);
    if (!out) throw DataError("cannot write model file: " + path);
    out << j.dump(1) << "\n";
}

inline MultitaskModel load_multitask_model(const std::string& path) {
    try {
        const auto j = detail::parse_model_file(path);
        MultitaskModel model;
        model.omega_group = j.at("omega_group").get<std::vector<int>>();
        for (const auto& jt : j.at("tasks")) model.tasks.push_back(detail::model_from_json(jt));
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("model file " + path + ": " + e.what());
    }
}

}  // namespace gtboost
