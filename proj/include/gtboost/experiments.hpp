#pragma once

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gtboost/boosting.hpp"
#include "gtboost/common.hpp"
#include "gtboost/dataset.hpp"
#include "gtboost/grouptest.hpp"
#include "gtboost/metrics.hpp"

namespace gtboost {

namespace detail {

/// Shortest round-trip decimal form; keeps text outputs byte-stable.
inline std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Phase-transition grid: root-node candidate recovery on the synthetic
// sparse additive instance, swept over ambient dimension and sample size.
// ---------------------------------------------------------------------------

struct PhaseGridSpec {
    std::vector<int> d_values{30, 60, 90, 120, 150};
    std::vector<int> n_values{250, 500, 1000, 2000, 4000};
    int replicates = 50;
    int s = 3;
    double delta = 0.1;
    double noise_sd = 1.0;
    std::uint64_t seed = 0;
    int workers = 1;
};

struct PhaseGridResult {
    PhaseGridSpec spec;
    std::vector<std::vector<int>> successes;  // [d_index][n_index]

    double rate(std::size_t di, std::size_t ni) const {
        return static_cast<double>(successes[di][ni]) / static_cast<double>(spec.replicates);
    }

    std::string to_csv() const {
        std::ostringstream out;
        out << "d_over_n";
        for (int n : spec.n_values) out << "," << n;
        out << "\n";
        for (std::size_t di = 0; di < spec.d_values.size(); ++di) {
            out << spec.d_values[di];
            for (std::size_t ni = 0; ni < spec.n_values.size(); ++ni)
                out << "," << detail::format_double(rate(di, ni));
            out << "\n";
        }
        return out.str();
    }

    std::string counts_csv() const {
        std::ostringstream out;
        out << "d_over_n";
        for (int n : spec.n_values) out << "," << n;
        out << "\n";
        for (std::size_t di = 0; di < spec.d_values.size(); ++di) {
            out << spec.d_values[di];
            for (std::size_t ni = 0; ni < spec.n_values.size(); ++ni)
                out << "," << successes[di][ni];
            out << "\n";
        }
        return out.str();
    }

    /// Linear grayscale heatmap; dark cells are success rates near 1.
    std::string to_svg() const {
        const int cell = 48, left = 64, top = 40;
        const auto rows = static_cast<int>(spec.d_values.size());
        const auto cols = static_cast<int>(spec.n_values.size());
        std::ostringstream out;
        out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << left + cols * cell + 8
            << "\" height=\"" << top + rows * cell + 8 << "\">\n";
        out << "<text x=\"" << left << "\" y=\"16\" font-size=\"12\">root-split success rate "
            << "(dark = 1.0)</text>\n";
        for (int c = 0; c < cols; ++c)
            out << "<text x=\"" << left + c * cell + 8 << "\" y=\"" << top - 6
                << "\" font-size=\"10\">n=" << spec.n_values[static_cast<std::size_t>(c)]
                << "</text>\n";
        for (int r = 0; r < rows; ++r) {
            out << "<text x=\"4\" y=\"" << top + r * cell + cell / 2
                << "\" font-size=\"10\">d=" << spec.d_values[static_cast<std::size_t>(r)]
                << "</text>\n";
            for (int c = 0; c < cols; ++c) {
                const double v = rate(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
                const int gray = static_cast<int>(std::lround((1.0 - v) * 255.0));
                out << "<rect x=\"" << left + c * cell << "\" y=\"" << top + r * cell
                    << "\" width=\"" << cell << "\" height=\"" << cell << "\" fill=\"rgb(" << gray
                    << "," << gray << "," << gray << ")\" stroke=\"black\"/>\n";
            }
        }
        out << "</svg>\n";
        return out.str();
    }
};

/// One replicate: generate the synthetic instance, run the candidate
/// generation at the root node only, and test whether all three active
/// features survived into the candidate set.
inline bool phase_grid_replicate(int d, int n, int s, double delta, double noise_sd,
                                 std::uint64_t seed) {
    SyntheticSpec sspec;
    sspec.n = static_cast<std::size_t>(n);
    sspec.d = static_cast<std::size_t>(d);
    sspec.noise_sd = noise_sd;
    sspec.seed = seed;
    const LabeledDataset ds = generate_synthetic(sspec);

    GTConfig gt{s, delta, mix_seed(seed, 0x5eedULL)};
    const SubsetPlan plan = make_subset_plan(d, gt);
    const PrefixSumCache cache = build_prefix_cache(ds.features, plan);

    std::vector<std::uint32_t> all(static_cast<std::size_t>(n));
    std::iota(all.begin(), all.end(), 0u);
    const double node_sse = sse_root(ds.targets);
    const auto candidates = gt_candidates(cache, plan, all, ds.targets, node_sse);
    bool found[3] = {false, false, false};
    for (int c : candidates)
        if (c < 3) found[c] = true;
    return found[0] && found[1] && found[2];
}

inline PhaseGridResult run_phase_grid(const PhaseGridSpec& spec) {
    if (spec.replicates < 1) throw ConfigError("phase grid: replicates must be >= 1");
    if (spec.d_values.empty() || spec.n_values.empty())
        throw ConfigError("phase grid: grids must be nonempty");
    for (int d : spec.d_values)
        if (d < 3) throw ConfigError("phase grid: every d must be >= 3");

    PhaseGridResult result;
    result.spec = spec;
    result.successes.assign(spec.d_values.size(), std::vector<int>(spec.n_values.size(), 0));

    struct Cell {
        std::size_t di, ni;
        int rep;
    };
    std::vector<Cell> cells;
    for (std::size_t di = 0; di < spec.d_values.size(); ++di)
        for (std::size_t ni = 0; ni < spec.n_values.size(); ++ni)
            for (int r = 0; r < spec.replicates; ++r) cells.push_back({di, ni, r});

    std::vector<std::uint8_t> ok(cells.size(), 0);
    parallel_chunks(spec.workers, cells.size(), [&](std::size_t, std::size_t lo, std::size_t hi) {
        for (std::size_t c = lo; c < hi; ++c) {
            const auto& cell = cells[c];
            const int d = spec.d_values[cell.di];
            const int n = spec.n_values[cell.ni];
            // Replicate seed depends only on (d, n, rep), never on scheduling.
            const std::uint64_t seed = mix_seed(
                mix_seed(mix_seed(spec.seed, static_cast<std::uint64_t>(d)),
                         static_cast<std::uint64_t>(n)),
                static_cast<std::uint64_t>(cell.rep));
            ok[c] = phase_grid_replicate(d, n, spec.s, spec.delta, spec.noise_sd, seed) ? 1 : 0;
        }
    });
    for (std::size_t c = 0; c < cells.size(); ++c)
        if (ok[c]) ++result.successes[cells[c].di][cells[c].ni];
    return result;
}

// ---------------------------------------------------------------------------
// Isolation Monte Carlo: how often does some active feature fail to be the
// unique active member of every subset of a fresh plan?
// ---------------------------------------------------------------------------

struct IsolationResult {
    int d = 0, s = 0;
    double delta = 0.0;
    int trials = 0;
    int subsets = 0;
    int failures = 0;
    std::uint64_t seed = 0;

    double failure_rate() const {
        return static_cast<double>(failures) / static_cast<double>(trials);
    }
    nlohmann::json to_json() const {
        return {{"d", d},           {"s", s},       {"delta", delta},
                {"trials", trials}, {"subsets", subsets}, {"failures", failures},
                {"failure_rate", failure_rate()}, {"seed", seed}};
    }
};

inline IsolationResult run_isolation_trial(int d, int s, double delta, int trials,
                                           std::uint64_t seed) {
    if (s > d) throw ConfigError("isolation: s must be <= d");
    if (trials < 1) throw ConfigError("isolation: trials must be >= 1");
    IsolationResult res;
    res.d = d;
    res.s = s;
    res.delta = delta;
    res.trials = trials;
    res.seed = seed;
    res.subsets = num_subsets(s, delta);

    for (int t = 0; t < trials; ++t) {
        const std::uint64_t trial_seed = mix_seed(seed, static_cast<std::uint64_t>(t));
        auto engine = make_engine(trial_seed);
        // Random active set S* of size s.
        std::vector<int> pool(static_cast<std::size_t>(d));
        std::iota(pool.begin(), pool.end(), 0);
        for (int i = 0; i < s; ++i) {
            std::uniform_int_distribution<int> pick(i, d - 1);
            std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(pick(engine))]);
        }
        std::vector<std::uint8_t> active(static_cast<std::size_t>(d), 0);
        for (int i = 0; i < s; ++i) active[static_cast<std::size_t>(pool[static_cast<std::size_t>(i)])] = 1;

        GTConfig gt{s, delta, mix_seed(trial_seed, 1)};
        const SubsetPlan plan = make_subset_plan(d, gt);

        std::vector<std::uint8_t> isolated(static_cast<std::size_t>(d), 0);
        for (const auto& subset : plan.subsets) {
            int only_active = -1;
            int active_count = 0;
            for (int j : subset) {
                if (active[static_cast<std::size_t>(j)]) {
                    ++active_count;
                    only_active = j;
                    if (active_count > 1) break;
                }
            }
            if (active_count == 1) isolated[static_cast<std::size_t>(only_active)] = 1;
        }
        bool all_isolated = true;
        for (int i = 0; i < s; ++i)
            if (!isolated[static_cast<std::size_t>(pool[static_cast<std::size_t>(i)])]) {
                all_isolated = false;
                break;
            }
        if (!all_isolated) ++res.failures;
    }
    return res;
}

// ---------------------------------------------------------------------------
// Timing / operation-count study: exhaustive A-GBM vs group-testing GT-GBM
// on the same instance with shared shrinkage / alpha / rounds.
// ---------------------------------------------------------------------------

struct MethodTiming {
    std::string name;
    double presort_seconds = 0.0;
    double precompute_seconds = 0.0;
    std::vector<double> round_seconds;
    OpCounters total;
    OpCounters root_split;

    double tree_seconds() const {
        return std::accumulate(round_seconds.begin(), round_seconds.end(), 0.0);
    }
    nlohmann::json to_json() const {
        return {{"name", name},
                {"presort_seconds", presort_seconds},
                {"precompute_seconds", precompute_seconds},
                {"round_seconds", round_seconds},
                {"tree_seconds", tree_seconds()},
                {"threshold_evals", total.threshold_evals},
                {"gt_calls", total.gt_calls},
                {"gt_scan_pairs", total.gt_scan_pairs},
                {"samples_touched", total.samples_touched},
                {"root_threshold_evals", root_split.threshold_evals},
                {"root_gt_calls", root_split.gt_calls},
                {"root_gt_scan_pairs", root_split.gt_scan_pairs},
                {"root_samples_touched", root_split.samples_touched}};
    }
};

/// Speed-condition arithmetic (base-2 logs): the group-testing search wins
/// asymptotically when s*log2(s)*log2(n) < d / log2(d/s). Degenerate at
/// d <= s, where the condition is reported as not met.
struct SpeedCondition {
    double lhs = 0.0;
    double rhs = 0.0;
    bool met = false;
};

inline SpeedCondition speed_condition(std::size_t n, std::size_t d, int s) {
    SpeedCondition sc;
    const double sd = static_cast<double>(s);
    sc.lhs = sd * std::log2(std::max(sd, 1.0)) * std::log2(static_cast<double>(n));
    if (static_cast<double>(d) > sd) {
        sc.rhs = static_cast<double>(d) / std::log2(static_cast<double>(d) / sd);
        sc.met = sc.lhs < sc.rhs;
    }
    return sc;
}

struct TimingReport {
    std::size_t n = 0, d = 0;
    int s = 0;
    double delta = 0.0;
    int workers = 1;
    MethodTiming agbm;
    MethodTiming gtgbm;
    double condition_lhs = 0.0;
    double condition_rhs = 0.0;
    bool speed_condition_met = false;
    std::uint64_t gt_call_budget_per_root = 0;  // 2 * p * ceil(log2(ceil(d/s)))

    nlohmann::json to_json() const {
        return {{"n", n},
                {"d", d},
                {"s", s},
                {"delta", delta},
                {"workers", workers},
                {"agbm", agbm.to_json()},
                {"gtgbm", gtgbm.to_json()},
                {"speed_condition", {{"lhs", condition_lhs},
                                     {"rhs", condition_rhs},
                                     {"met", speed_condition_met}}},
                {"gt_call_budget_per_root", gt_call_budget_per_root},
                {"wall_clock_speedup",
                 gtgbm.tree_seconds() > 0.0 ? agbm.tree_seconds() / gtgbm.tree_seconds() : 0.0}};
    }
};

inline std::uint64_t gt_call_budget(int d, int s, double delta) {
    const int p = num_subsets(s, delta);
    const int subset_size = s == 1 ? d : static_cast<int>(std::ceil(static_cast<double>(d) / s));
    const auto levels =
        static_cast<std::uint64_t>(std::ceil(std::log2(static_cast<double>(subset_size))));
    return 2ULL * static_cast<std::uint64_t>(p) * levels;
}

/// Equal-rounds comparison of the two splitters; both configs share shrinkage,
/// alpha, iterations and mu. Counters are logical and machine-independent;
/// wall clock is reported alongside.
inline TimingReport run_timing(const LabeledDataset& ds, const BoostConfig& agbm_cfg,
                               const BoostConfig& gtgbm_cfg) {
    if (agbm_cfg.iterations != gtgbm_cfg.iterations ||
        agbm_cfg.shrinkage != gtgbm_cfg.shrinkage || agbm_cfg.alpha != gtgbm_cfg.alpha)
        throw ConfigError("timing: both configs must share shrinkage, alpha and iterations");
    if (gtgbm_cfg.splitter != SplitterKind::grouptest || !gtgbm_cfg.gt)
        throw ConfigError("timing: second config must use the group-testing splitter");

    TimingReport report;
    report.n = ds.rows();
    report.d = ds.cols();
    report.s = gtgbm_cfg.gt->s;
    report.delta = gtgbm_cfg.gt->delta;
    report.workers = agbm_cfg.workers;

    auto run = [&](const BoostConfig& cfg, const char* name) {
        FitStats stats;
        (void)fit(ds, cfg, &stats);
        MethodTiming mt;
        mt.name = name;
        mt.presort_seconds = stats.presort_seconds;
        mt.precompute_seconds = stats.precompute_seconds;
        for (const auto& r : stats.rounds) mt.round_seconds.push_back(r.seconds);
        mt.total = stats.total;
        mt.root_split = stats.first_root_split;
        return mt;
    };
    report.agbm = run(agbm_cfg, "agbm");
    report.gtgbm = run(gtgbm_cfg, "gtgbm");

    const auto sc = speed_condition(report.n, report.d, report.s);
    report.condition_lhs = sc.lhs;
    report.condition_rhs = sc.rhs;
    report.speed_condition_met = sc.met;
    report.gt_call_budget_per_root =
        gt_call_budget(static_cast<int>(report.d), report.s, report.delta);
    if (report.gtgbm.root_split.gt_calls > report.gt_call_budget_per_root)
        throw std::logic_error("timing: GT call budget violated at the root split");
    return report;
}

// ---------------------------------------------------------------------------
// Rank-then-retrain baseline
// ---------------------------------------------------------------------------

/// Features ordered by accumulated criterion gain, descending; equal gains
/// break toward the lower feature index.
struct ImportanceRanking {
    std::vector<int> order;
    std::vector<double> gains;  // aligned with order

    std::vector<int> top_k(int k) const {
        return std::vector<int>(order.begin(), order.begin() + k);
    }
};

inline ImportanceRanking rank_features(const std::vector<double>& gain) {
    ImportanceRanking r;
    r.order.resize(gain.size());
    std::iota(r.order.begin(), r.order.end(), 0);
    std::stable_sort(r.order.begin(), r.order.end(), [&](int a, int b) {
        return gain[static_cast<std::size_t>(a)] > gain[static_cast<std::size_t>(b)];
    });
    r.gains.reserve(gain.size());
    for (int j : r.order) r.gains.push_back(gain[static_cast<std::size_t>(j)]);
    return r;
}

/// Train on all features with mu = 0, rank by gain, then retrain restricted to
/// the top-k columns. Returns the retrained model and the full ranking.
inline std::pair<BoostedModel, ImportanceRanking> topk_baseline(const LabeledDataset& ds, int k,
                                                                const BoostConfig& base_cfg) {
    if (k < 1 || static_cast<std::size_t>(k) > ds.cols())
        throw ConfigError("topk_baseline: k must lie in [1, d]");

    BoostConfig cfg = base_cfg;
    cfg.criterion.mu = 0.0;
    cfg.criterion.mu_group = 0.0;
    cfg.criterion.mu_task = 0.0;
    cfg.feature_subset.clear();
    const BoostedModel full = fit(ds, cfg);

    const ImportanceRanking ranking = rank_features(full.feature_gain);
    BoostConfig retrain_cfg = cfg;
    retrain_cfg.feature_subset = ranking.top_k(k);
    std::sort(retrain_cfg.feature_subset.begin(), retrain_cfg.feature_subset.end());
    BoostedModel retrained = fit(ds, retrain_cfg);
    return {std::move(retrained), ranking};
}

// ---------------------------------------------------------------------------
// Correlation export
// ---------------------------------------------------------------------------

inline std::string correlation_csv(const std::vector<std::vector<double>>& matrix) {
    std::ostringstream out;
    for (const auto& row : matrix) {
        for (std::size_t j = 0; j < row.size(); ++j) {
            if (j) out << ",";
            out << detail::format_double(row[j]);
        }
        out << "\n";
    }
    return out.str();
}

/// Pearson matrix of the model's top-k features by gain, written as CSV.
inline std::vector<std::vector<double>> top_feature_correlations(const BoostedModel& model,
                                                                 const LabeledDataset& ds, int k) {
    const ImportanceRanking ranking = rank_features(model.feature_gain);
    int ranked = 0;
    for (double g : ranking.gains)
        if (g > 0.0) ++ranked;
    if (k < 1 || k > ranked)
        throw DataError("correlations: model ranks only " + std::to_string(ranked) +
                        " features, cannot take top " + std::to_string(k));
    return pearson_matrix(ds, ranking.top_k(k));
}

inline void export_correlations(const BoostedModel& model, const LabeledDataset& ds, int k,
                                const std::string& path) {
    const auto matrix = top_feature_correlations(model, ds, k);
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << correlation_csv(matrix);
}

}  // namespace gtboost
