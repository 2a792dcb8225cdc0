#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include <gtboost/boosting.hpp>
#include <gtboost/metrics.hpp>

#include "oracles.hpp"

using namespace gtboost;
namespace fs = std::filesystem;

namespace {

BoostConfig agbm_config(int iterations, double shrinkage, double alpha, double mu,
                        std::uint64_t seed = 0) {
    BoostConfig cfg;
    cfg.iterations = iterations;
    cfg.shrinkage = shrinkage;
    cfg.alpha = alpha;
    cfg.criterion.mode = CriterionMode::agbm;
    cfg.criterion.mu = mu;
    cfg.seed = seed;
    return cfg;
}

bool models_equal(const BoostedModel& a, const BoostedModel& b) {
    if (a.trees.size() != b.trees.size() || a.omega != b.omega) return false;
    for (std::size_t t = 0; t < a.trees.size(); ++t) {
        const auto& ta = a.trees[t].nodes;
        const auto& tb = b.trees[t].nodes;
        if (ta.size() != tb.size()) return false;
        for (std::size_t k = 0; k < ta.size(); ++k) {
            if (ta[k].feature != tb[k].feature || ta[k].threshold != tb[k].threshold ||
                ta[k].left != tb[k].left || ta[k].right != tb[k].right || ta[k].leaf != tb[k].leaf)
                return false;
        }
    }
    return true;
}

}  // namespace

TEST_CASE("a single all-absorbing tree predicts the mean") {
    auto ds = oracles::random_instance(30, 4, 1);
    auto model = fit(ds, agbm_config(1, 1.0, 1.0, 0.0));
    double mean = 0.0;
    for (double y : ds.targets) mean += y;
    mean /= static_cast<double>(ds.rows());
    auto pred = model.predict_standardized(ds.features);
    for (double p : pred) CHECK(p == Catch::Approx(mean).margin(1e-12));
    CHECK(model.omega.empty());
}

TEST_CASE("perfectly separable one-feature data reaches zero training RMSE") {
    LabeledDataset ds;
    ds.features.columns = {{0.1, 0.2, 0.8, 0.9}};
    ds.targets = {0, 0, 1, 1};
    ds.standardization.min = {0.0};
    ds.standardization.range = {1.0};
    auto model = fit(ds, agbm_config(1, 1.0, 0.01, 0.0));
    auto pred = model.predict_standardized(ds.features);
    CHECK(rmse(pred, ds.targets) == Catch::Approx(0.0).margin(1e-12));
    CHECK(model.omega == std::vector<int>{0});
}

TEST_CASE("mu = 1 freezes omega after the first tree") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto ds = oracles::random_instance(60, 6, 7000 + seed);
        auto grown = fit(ds, agbm_config(6, 0.5, 0.2, 1.0, seed));
        auto first = fit(ds, agbm_config(1, 0.5, 0.2, 1.0, seed));
        CHECK(grown.omega == first.omega);
    }
}

TEST_CASE("training RMSE is non-increasing with mu = 0") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        auto ds = oracles::random_instance(80, 5, 300 + seed);
        FitStats stats;
        fit(ds, agbm_config(10, 0.4, 0.1, 0.0, seed), &stats);
        REQUIRE(stats.rounds.size() == 10);
        for (std::size_t k = 1; k < stats.rounds.size(); ++k)
            CHECK(stats.rounds[k].train_rmse <= stats.rounds[k - 1].train_rmse + 1e-12);
    }
}

TEST_CASE("omega grows monotonically and stays within [d]") {
    auto ds = oracles::random_instance(80, 6, 11);
    BoostConfig cfg = agbm_config(8, 0.3, 0.1, 0.01);
    FitStats stats;
    auto model = fit(ds, cfg, &stats);
    for (std::size_t k = 1; k < stats.rounds.size(); ++k)
        CHECK(stats.rounds[k].omega_size >= stats.rounds[k - 1].omega_size);
    CHECK(model.omega.size() <= 6);
}

TEST_CASE("gbfs on unit-variance roots equals agbm with the same mu") {
    // Scale so that the root SSE is exactly 1 in round 1; stop after a single
    // tree so the invariant holds by construction.
    auto ds = oracles::random_instance(50, 5, 77);
    const double root = sse_root(ds.targets);
    for (auto& y : ds.targets) y /= std::sqrt(root);
    REQUIRE(sse_root(ds.targets) == Catch::Approx(1.0).margin(1e-9));

    BoostConfig gbfs = agbm_config(1, 1.0, 0.1, 0.2);
    gbfs.criterion.mode = CriterionMode::gbfs;
    BoostConfig agbm = agbm_config(1, 1.0, 0.1, 0.2);
    auto a = fit(ds, gbfs);
    auto b = fit(ds, agbm);
    REQUIRE(a.trees.size() == b.trees.size());
    REQUIRE(a.trees[0].nodes.size() == b.trees[0].nodes.size());
    for (std::size_t k = 0; k < a.trees[0].nodes.size(); ++k) {
        CHECK(a.trees[0].nodes[k].feature == b.trees[0].nodes[k].feature);
        CHECK(a.trees[0].nodes[k].threshold == b.trees[0].nodes[k].threshold);
    }
}

TEST_CASE("fit is deterministic") {
    auto ds = oracles::random_instance(60, 8, 13);
    BoostConfig cfg = agbm_config(5, 0.3, 0.1, 0.05, 99);
    auto a = fit(ds, cfg);
    auto b = fit(ds, cfg);
    CHECK(models_equal(a, b));

    BoostConfig two = cfg;
    two.workers = 2;
    auto c = fit(ds, two);
    CHECK(models_equal(a, c));
}

TEST_CASE("grouptest splitter is deterministic under its seed schedule") {
    auto ds = oracles::random_instance(100, 12, 15);
    BoostConfig cfg = agbm_config(4, 0.3, 0.1, 0.01, 7);
    cfg.splitter = SplitterKind::grouptest;
    cfg.gt = GTConfig{3, 0.1, 0};
    auto a = fit(ds, cfg);
    auto b = fit(ds, cfg);
    CHECK(models_equal(a, b));
    cfg.workers = 2;
    auto c = fit(ds, cfg);
    CHECK(models_equal(a, c));
}

TEST_CASE("config validation rejects bad parameters") {
    auto ds = oracles::random_instance(10, 3, 1);
    CHECK_THROWS_AS(fit(ds, agbm_config(0, 0.5, 0.5, 0.0)), ConfigError);
    CHECK_THROWS_AS(fit(ds, agbm_config(1, 0.0, 0.5, 0.0)), ConfigError);
    CHECK_THROWS_AS(fit(ds, agbm_config(1, 0.5, 1.5, 0.0)), ConfigError);
    CHECK_THROWS_AS(fit(ds, agbm_config(1, 0.5, 0.5, 1.5)), ConfigError);
    BoostConfig gt_cfg = agbm_config(1, 0.5, 0.5, 0.0);
    gt_cfg.splitter = SplitterKind::grouptest;
    CHECK_THROWS_AS(fit(ds, gt_cfg), ConfigError);

    LabeledDataset raw;
    raw.features.columns = {{1.0, 2.0}};
    raw.targets = {0.0, 1.0};
    CHECK_THROWS_AS(fit(raw, agbm_config(1, 0.5, 0.5, 0.0)), ConfigError);
}

TEST_CASE("predict applies stored standardization and clamps") {
    LabeledDataset raw;
    raw.features.columns = {{0.0, 5.0, 10.0}};
    raw.targets = {0.0, 0.5, 1.0};
    auto [ds, params] = standardize(raw);
    auto model = fit(ds, agbm_config(3, 1.0, 0.3, 0.0));

    FeatureMatrix query;
    query.columns = {{12.0}};  // 1.2 * max clamps to 1.0
    FeatureMatrix corner;
    corner.columns = {{10.0}};
    CHECK(model.predict(query)[0] == model.predict(corner)[0]);

    FeatureMatrix bad;
    bad.columns = {{1.0}, {2.0}};
    CHECK_THROWS_AS(model.predict(bad), DataError);
}

TEST_CASE("an empty model predicts its base everywhere") {
    BoostedModel model;
    model.base = 0.0;
    model.standardization.min = {0.0};
    model.standardization.range = {1.0};
    model.feature_gain = {0.0};
    FeatureMatrix fm;
    fm.columns = {{0.3, 0.9}};
    auto pred = model.predict(fm);
    CHECK(pred == std::vector<double>{0.0, 0.0});
}

TEST_CASE("training predictions replay the stored residual identity") {
    auto ds = oracles::random_instance(60, 5, 17);
    BoostConfig cfg = agbm_config(8, 0.3, 0.1, 0.0, 3);
    FitStats stats;
    auto model = fit(ds, cfg, &stats);
    auto pred = model.predict_standardized(ds.features);
    // The incrementally tracked residuals and a full prediction replay must
    // describe the same model.
    const double replay_rmse = rmse(pred, ds.targets);
    CHECK(replay_rmse == Catch::Approx(stats.rounds.back().train_rmse).margin(1e-9));
}

TEST_CASE("model files round-trip exactly") {
    auto ds = oracles::random_instance(50, 6, 19);
    auto model = fit(ds, agbm_config(5, 0.4, 0.2, 0.01, 5));
    const auto path = fs::temp_directory_path() / "gtboost_model_roundtrip.json";
    save_model(model, path.string());
    auto loaded = load_model(path.string());

    std::mt19937_64 engine(23);
    std::uniform_real_distribution<double> unif(-0.5, 1.5);
    FeatureMatrix queries;
    queries.columns.assign(6, std::vector<double>(100));
    for (auto& col : queries.columns)
        for (auto& v : col) v = unif(engine);
    CHECK(model.predict(queries) == loaded.predict(queries));
    fs::remove(path);
}

TEST_CASE("model loading rejects malformed files") {
    const auto dir = fs::temp_directory_path();
    const auto truncated = dir / "gtboost_truncated.json";
    {
        std::ofstream out(truncated);
        out << "{\"version\": 1, \"mode\": \"agbm\", \"trees\": [";
    }
    CHECK_THROWS_AS(load_model(truncated.string()), DataError);
    fs::remove(truncated);

    const auto wrong = dir / "gtboost_wrong_version.json";
    {
        std::ofstream out(wrong);
        out << "{\"version\": 99}";
    }
    try {
        load_model(wrong.string());
        FAIL("expected DataError");
    } catch (const DataError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("99") != std::string::npos);
        CHECK(msg.find("1") != std::string::npos);
    }
    fs::remove(wrong);
}

// ---------------------------------------------------------------------------
// Multitask
// ---------------------------------------------------------------------------

namespace {

BoostConfig multitask_config(int iterations, double mu_group, double mu_task, std::uint64_t seed) {
    BoostConfig cfg;
    cfg.iterations = iterations;
    cfg.shrinkage = 0.5;
    cfg.alpha = 0.1;
    cfg.criterion.mode = CriterionMode::multitask;
    cfg.criterion.mu_group = mu_group;
    cfg.criterion.mu_task = mu_task;
    cfg.seed = seed;
    return cfg;
}

}  // namespace

TEST_CASE("multitask with one task equals single-task with mu = mu_G + mu_t") {
    auto ds = oracles::random_instance(60, 6, 29);
    const double mu_group = 0.1, mu_task = 0.15;

    TaskBundle tb;
    tb.tasks = {ds};
    auto mt = fit_multitask(tb, multitask_config(5, mu_group, mu_task, 11));

    BoostConfig single = agbm_config(5, 0.5, 0.1, 0.0, 11);
    single.criterion.mu = mu_group + mu_task;
    auto st = fit(ds, single);

    CHECK(models_equal(mt.tasks[0], st));
    CHECK(mt.omega_group == st.omega);
}

TEST_CASE("multitask with mu_G = 0 decouples the tasks") {
    auto ds1 = oracles::random_instance(50, 6, 31);
    auto ds2 = oracles::random_instance(70, 6, 37);
    const double mu_task = 0.2;

    TaskBundle tb;
    tb.tasks = {ds1, ds2};
    auto mt = fit_multitask(tb, multitask_config(4, 0.0, mu_task, 13));

    for (std::size_t t = 0; t < tb.tasks.size(); ++t) {
        BoostConfig single = agbm_config(4, 0.5, 0.1, mu_task, 13);
        auto st = fit(tb.tasks[t], single);
        CHECK(models_equal(mt.tasks[t], st));
    }
}

TEST_CASE("omega_group is the union of per-task selections") {
    auto ds1 = oracles::random_instance(50, 6, 41);
    auto ds2 = oracles::random_instance(60, 6, 43);
    TaskBundle tb;
    tb.tasks = {ds1, ds2};
    auto mt = fit_multitask(tb, multitask_config(3, 0.05, 0.05, 17));

    std::set<int> expect;
    for (const auto& task : mt.tasks) expect.insert(task.omega.begin(), task.omega.end());
    std::set<int> got(mt.omega_group.begin(), mt.omega_group.end());
    CHECK(got == expect);
}

TEST_CASE("a feature selected by an earlier task in the round is group-penalty-free") {
    // Task 1 must pick feature 0 (its only signal). Task 2 slightly prefers
    // feature 1 un-penalized, but with a large group penalty and a shared
    // round it reuses feature 0 that task 1 just selected.
    const std::size_t n = 40;
    std::mt19937_64 engine(53);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    LabeledDataset t1;
    t1.features.columns.assign(2, std::vector<double>(n));
    for (auto& col : t1.features.columns)
        for (auto& v : col) v = unif(engine);
    t1.targets.resize(n);
    for (std::size_t i = 0; i < n; ++i) t1.targets[i] = t1.features.columns[0][i];
    t1.standardization.min.assign(2, 0.0);
    t1.standardization.range.assign(2, 1.0);

    LabeledDataset t2;
    t2.features.columns.assign(2, std::vector<double>(n));
    for (auto& col : t2.features.columns)
        for (auto& v : col) v = unif(engine);
    t2.targets.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        t2.targets[i] = 0.9 * t2.features.columns[0][i] + 1.0 * t2.features.columns[1][i];
    t2.standardization.min.assign(2, 0.0);
    t2.standardization.range.assign(2, 1.0);

    TaskBundle tb;
    tb.tasks = {t1, t2};
    auto mt = fit_multitask(tb, multitask_config(1, 0.6, 0.0, 19));
    REQUIRE(mt.tasks[0].omega == std::vector<int>{0});
    // With mu_group = 0.6 both features would be too expensive for task 2 if
    // they were all new; feature 0 is free through Omega_G, so it is used.
    REQUIRE_FALSE(mt.tasks[1].omega.empty());
    CHECK(mt.tasks[1].omega.front() == 0);
}

TEST_CASE("multitask validation") {
    auto ds = oracles::random_instance(20, 3, 61);
    TaskBundle tb;
    tb.tasks = {ds};
    CHECK_THROWS_AS(fit_multitask(tb, multitask_config(1, 0.6, 0.5, 1)), ConfigError);
    auto other = oracles::random_instance(20, 4, 62);
    tb.tasks.push_back(other);
    CHECK_THROWS_AS(fit_multitask(tb, multitask_config(1, 0.1, 0.1, 1)), ConfigError);
}

TEST_CASE("multitask model files round-trip") {
    auto ds1 = oracles::random_instance(40, 5, 71);
    auto ds2 = oracles::random_instance(45, 5, 73);
    TaskBundle tb;
    tb.tasks = {ds1, ds2};
    auto mt = fit_multitask(tb, multitask_config(3, 0.1, 0.1, 23));
    const auto path = fs::temp_directory_path() / "gtboost_multitask_roundtrip.json";
    save_multitask_model(mt, path.string());
    auto loaded = load_multitask_model(path.string());
    REQUIRE(loaded.tasks.size() == 2);
    CHECK(loaded.omega_group == mt.omega_group);
    for (std::size_t t = 0; t < 2; ++t)
        CHECK(loaded.tasks[t].predict_standardized(tb.tasks[t].features) ==
              mt.tasks[t].predict_standardized(tb.tasks[t].features));
    fs::remove(path);
}
