// gtboost command-line driver: training, prediction, evaluation and the
// experiment suite. All outputs are plain text (CSV / JSON / SVG) and every
// run echoes its resolved configuration for reproducibility.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <gtboost/gtboost.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct DataOptions {
    std::vector<std::string> paths;
    std::string format = "auto";  // auto | csv | svmlight
    std::string target = "y";
    std::string group;
};

void add_data_options(CLI::App* cmd, DataOptions& opt, bool multiple) {
    auto* data = cmd->add_option("--data", opt.paths, "input data file(s)")->required();
    if (!multiple) data->expected(1);
    cmd->add_option("--format", opt.format, "data format: auto, csv or svmlight")
        ->check(CLI::IsMember({"auto", "csv", "svmlight"}));
    cmd->add_option("--target", opt.target, "CSV target column (name or index)");
    cmd->add_option("--group", opt.group, "CSV group-id column for ranking data");
}

bool is_svmlight(const DataOptions& opt, const std::string& path) {
    if (opt.format == "csv") return false;
    if (opt.format == "svmlight") return true;
    const auto ext = fs::path(path).extension().string();
    return ext != ".csv";
}

gtboost::LabeledDataset load_one(const DataOptions& opt, const std::string& path) {
    if (is_svmlight(opt, path)) return gtboost::load_svmlight(path);
    return gtboost::load_csv(path, opt.target, opt.group);
}

struct TrainOptions {
    DataOptions data;
    std::string mode = "agbm";
    double mu = 0.0;
    double mu_group = 0.0;
    double mu_task = 0.0;
    double shrinkage = 0.1;
    double alpha = 0.1;
    int iterations = 200;
    int s = 0;
    double delta = 0.1;
    std::uint64_t seed = 0;
    int workers = 1;
    std::string out_dir = ".";
    std::string model_out;
};

void write_text(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    std::ofstream out(path);
    if (!out) throw gtboost::DataError("cannot write " + path.string());
    out << text;
}

void echo_config(const std::string& out_dir, const std::vector<std::pair<std::string, std::string>>& kv,
                 bool to_stdout = true) {
    std::ostringstream text;
    for (const auto& [k, v] : kv) text << k << " = " << v << "\n";
    fs::create_directories(out_dir);
    write_text(fs::path(out_dir) / "resolved_config.txt", text.str());
    if (to_stdout) std::cout << text.str();
}

std::string fmt(double v) { return gtboost::detail::format_double(v); }

gtboost::BoostConfig make_boost_config(const TrainOptions& opt) {
    gtboost::BoostConfig cfg;
    cfg.iterations = opt.iterations;
    cfg.shrinkage = opt.shrinkage;
    cfg.alpha = opt.alpha;
    cfg.seed = opt.seed;
    cfg.workers = opt.workers;

    if (opt.mode == "plain") {
        cfg.criterion.mode = gtboost::CriterionMode::plain;
    } else if (opt.mode == "gbfs") {
        cfg.criterion.mode = gtboost::CriterionMode::gbfs;
        cfg.criterion.mu = opt.mu;
    } else if (opt.mode == "agbm" || opt.mode == "gtgbm") {
        cfg.criterion.mode = gtboost::CriterionMode::agbm;
        cfg.criterion.mu = opt.mu;
    } else if (opt.mode == "multitask-agbm" || opt.mode == "multitask-gtgbm") {
        cfg.criterion.mode = gtboost::CriterionMode::multitask;
        cfg.criterion.mu_group = opt.mu_group;
        cfg.criterion.mu_task = opt.mu_task;
    } else {
        throw gtboost::ConfigError("unknown mode: " + opt.mode);
    }
    if (opt.mode == "gtgbm" || opt.mode == "multitask-gtgbm") {
        if (opt.s < 1) throw gtboost::ConfigError(opt.mode + " needs --s >= 1");
        cfg.splitter = gtboost::SplitterKind::grouptest;
        cfg.gt = gtboost::GTConfig{opt.s, opt.delta, opt.seed};
    }
    cfg.validate();
    return cfg;
}

int cmd_train(const TrainOptions& opt) {
    const auto cfg = make_boost_config(opt);
    const bool multitask = cfg.criterion.mode == gtboost::CriterionMode::multitask;
    if (!multitask && opt.data.paths.size() != 1)
        throw gtboost::ConfigError("single-task training takes exactly one --data file");

    std::string data_list = opt.data.paths.front();
    for (std::size_t i = 1; i < opt.data.paths.size(); ++i) data_list += ";" + opt.data.paths[i];
    echo_config(opt.out_dir, {{"command", "train"},
                              {"data", data_list},
                              {"mode", opt.mode},
                              {"mu", fmt(opt.mu)},
                              {"mu_group", fmt(opt.mu_group)},
                              {"mu_task", fmt(opt.mu_task)},
                              {"shrinkage", fmt(opt.shrinkage)},
                              {"alpha", fmt(opt.alpha)},
                              {"iterations", std::to_string(opt.iterations)},
                              {"s", std::to_string(opt.s)},
                              {"delta", fmt(opt.delta)},
                              {"seed", std::to_string(opt.seed)},
                              {"workers", std::to_string(opt.workers)}});

    const std::string model_path =
        opt.model_out.empty() ? (fs::path(opt.out_dir) / "model.json").string() : opt.model_out;
    std::ostringstream log;

    if (multitask) {
        gtboost::TaskBundle tb;
        for (const auto& path : opt.data.paths) {
            auto raw = load_one(opt.data, path);
            tb.tasks.push_back(gtboost::standardize(raw).first);
            tb.task_names.push_back(path);
        }
        std::vector<gtboost::FitStats> stats;
        auto model = gtboost::fit_multitask(tb, cfg, &stats);
        gtboost::save_multitask_model(model, model_path);
        log << "round,task,train_rmse,omega_size,wall_clock_ms\n";
        for (int k = 0; k < cfg.iterations; ++k)
            for (std::size_t t = 0; t < stats.size(); ++t) {
                const auto& r = stats[t].rounds[static_cast<std::size_t>(k)];
                log << k << "," << t << "," << fmt(r.train_rmse) << "," << r.omega_size << ","
                    << fmt(r.seconds * 1e3) << "\n";
            }
    } else {
        auto raw = load_one(opt.data, opt.data.paths.front());
        auto ds = gtboost::standardize(raw).first;
        gtboost::FitStats stats;
        auto model = gtboost::fit(ds, cfg, &stats);
        gtboost::save_model(model, model_path);
        log << "round,train_rmse,omega_size,wall_clock_ms\n";
        for (const auto& r : stats.rounds)
            log << r.round << "," << fmt(r.train_rmse) << "," << r.omega_size << ","
                << fmt(r.seconds * 1e3) << "\n";
    }
    write_text(fs::path(opt.out_dir) / "train_log.csv", log.str());
    std::cout << "model written to " << model_path << "\n";
    return 0;
}

struct PredictOptions {
    DataOptions data;
    std::string model;
    std::string out;
    std::string out_dir = ".";
    int task = -1;
    bool has_target = false;
};

gtboost::BoostedModel load_single_model(const std::string& path, int task) {
    json probe;
    {
        std::ifstream in(path);
        if (!in) throw gtboost::DataError("cannot open model file: " + path);
        try {
            in >> probe;
        } catch (const json::exception& e) {
            throw gtboost::DataError("model file " + path + ": " + e.what());
        }
    }
    if (probe.contains("tasks")) {
        auto mt = gtboost::load_multitask_model(path);
        if (task < 0 || static_cast<std::size_t>(task) >= mt.tasks.size())
            throw gtboost::ConfigError("multitask model: choose a task with --task 0.." +
                                       std::to_string(mt.tasks.size() - 1));
        return mt.tasks[static_cast<std::size_t>(task)];
    }
    return gtboost::load_model(path);
}

gtboost::FeatureMatrix load_features(const PredictOptions& opt, const std::string& path) {
    if (is_svmlight(opt.data, path)) return gtboost::load_svmlight(path).features;
    if (opt.has_target) return gtboost::load_csv(path, opt.data.target, opt.data.group).features;
    return gtboost::load_csv_features(path);
}

int cmd_predict(const PredictOptions& opt) {
    // Score output goes to stdout when --out is absent, so the config echo
    // stays file-only here.
    echo_config(opt.out_dir, {{"command", "predict"},
                              {"model", opt.model},
                              {"data", opt.data.paths.front()},
                              {"out", opt.out.empty() ? "-" : opt.out}},
                false);
    const auto model = load_single_model(opt.model, opt.task);
    auto features = load_features(opt, opt.data.paths.front());
    // svmlight width can fall short of the model when trailing features are
    // absent from the file; pad with zero columns.
    if (is_svmlight(opt.data, opt.data.paths.front()) && features.cols() < model.n_features())
        features.columns.resize(model.n_features(),
                                std::vector<double>(features.rows(), 0.0));
    const auto scores = model.predict(features);
    std::ostringstream text;
    for (double sc : scores) text << fmt(sc) << "\n";
    if (opt.out.empty()) std::cout << text.str();
    else
        write_text(opt.out, text.str());
    return 0;
}

struct EvaluateOptions {
    DataOptions data;
    std::string model;
    std::string pred;
    std::vector<std::string> metrics;
    int k = 2;
    std::string out_dir = ".";
    int task = -1;
};

int cmd_evaluate(const EvaluateOptions& opt) {
    std::string metric_list;
    for (const auto& m : opt.metrics) metric_list += (metric_list.empty() ? "" : ";") + m;
    echo_config(opt.out_dir, {{"command", "evaluate"},
                              {"model", opt.model},
                              {"data", opt.data.paths.front()},
                              {"metrics", metric_list.empty() ? "auto" : metric_list},
                              {"k", std::to_string(opt.k)}},
                false);
    const auto model = load_single_model(opt.model, opt.task);
    auto raw = load_one(opt.data, opt.data.paths.front());
    if (is_svmlight(opt.data, opt.data.paths.front()) && raw.cols() < model.n_features())
        raw.features.columns.resize(model.n_features(), std::vector<double>(raw.rows(), 0.0));

    std::vector<double> scores;
    if (!opt.pred.empty()) {
        std::ifstream in(opt.pred);
        if (!in) throw gtboost::DataError("cannot open predictions file: " + opt.pred);
        double v;
        while (in >> v) scores.push_back(v);
        if (scores.size() != raw.rows())
            throw gtboost::DataError("predictions file has " + std::to_string(scores.size()) +
                                     " rows, data has " + std::to_string(raw.rows()));
    } else {
        scores = model.predict(raw.features);
    }

    const bool binary = std::all_of(raw.targets.begin(), raw.targets.end(), [](double y) {
        return y == 0.0 || y == 1.0;
    });
    std::vector<std::string> metrics = opt.metrics;
    if (metrics.empty()) {
        metrics = {"rmse"};
        if (binary) {
            metrics.push_back("auc_roc");
            metrics.push_back("auc_pr");
        }
        if (raw.grouped()) metrics.push_back("mrr");
    }

    gtboost::EvalReport report;
    report.n_features_used = static_cast<int>(model.omega.size());
    for (const auto& metric : metrics) {
        if (metric == "rmse") {
            report.rmse_value = gtboost::rmse(scores, raw.targets);
        } else if (metric == "auc_roc") {
            report.auc_roc_value = gtboost::auc_roc(scores, raw.targets);
        } else if (metric == "auc_pr") {
            report.auc_pr_value = gtboost::auc_pr(scores, raw.targets);
        } else if (metric == "prec_at_k") {
            report.precision_at_k_values[opt.k] =
                gtboost::precision_at_k(scores, raw.targets, opt.k, raw.group_ids);
        } else if (metric == "mrr") {
            report.mrr_value = gtboost::mrr(scores, raw.targets, raw.group_ids);
        } else {
            throw gtboost::ConfigError("unknown metric: " + metric);
        }
    }

    const auto j = report.to_json();
    fs::create_directories(opt.out_dir);
    write_text(fs::path(opt.out_dir) / "eval.json", j.dump(1) + "\n");
    write_text(fs::path(opt.out_dir) / "eval.csv", report.to_csv());
    std::cout << j.dump(1) << "\n";
    return 0;
}

std::vector<int> parse_int_list(const std::string& text) {
    std::vector<int> out;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        try {
            out.push_back(std::stoi(tok));
        } catch (const std::exception&) {
            throw gtboost::ConfigError("bad integer '" + tok + "' in list: " + text);
        }
    }
    if (out.empty()) throw gtboost::ConfigError("empty integer list: " + text);
    return out;
}

gtboost::SyntheticSpec parse_synthetic(const std::string& text, double noise_sd,
                                       std::uint64_t seed) {
    gtboost::SyntheticSpec spec;
    spec.noise_sd = noise_sd;
    spec.seed = seed;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos)
            throw gtboost::ConfigError("bad --synthetic token: " + tok + " (want n=..,d=..)");
        const auto key = tok.substr(0, eq);
        long long value = 0;
        try {
            value = std::stoll(tok.substr(eq + 1));
        } catch (const std::exception&) {
            throw gtboost::ConfigError("bad --synthetic value in token: " + tok);
        }
        if (value < 1) throw gtboost::ConfigError("--synthetic values must be >= 1");
        if (key == "n") spec.n = static_cast<std::size_t>(value);
        else if (key == "d") spec.d = static_cast<std::size_t>(value);
        else
            throw gtboost::ConfigError("bad --synthetic key: " + key);
    }
    if (spec.n == 0 || spec.d == 0)
        throw gtboost::ConfigError("--synthetic needs both n=.. and d=..");
    return spec;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"gradient-boosted trees with embedded forward feature selection"};
    app.require_subcommand(1);

    // ----- train ------------------------------------------------------------
    TrainOptions train;
    auto* train_cmd = app.add_subcommand("train", "fit a model and write it as JSON");
    add_data_options(train_cmd, train.data, true);
    train_cmd->add_option("--mode", train.mode,
                          "plain, gbfs, agbm, gtgbm, multitask-agbm or multitask-gtgbm");
    train_cmd->add_option("--mu", train.mu, "new-feature penalty");
    train_cmd->add_option("--mu-group", train.mu_group, "multitask group penalty");
    train_cmd->add_option("--mu-task", train.mu_task, "multitask per-task penalty");
    train_cmd->add_option("--shrinkage", train.shrinkage, "per-tree shrinkage");
    train_cmd->add_option("--alpha", train.alpha, "minimum node fraction for a split");
    train_cmd->add_option("--iterations", train.iterations, "boosting rounds");
    train_cmd->add_option("--s", train.s, "desired feature count (group testing)");
    train_cmd->add_option("--delta", train.delta, "group-testing failure budget");
    train_cmd->add_option("--seed", train.seed, "random seed");
    train_cmd->add_option("--workers", train.workers, "internal parallelism cap");
    train_cmd->add_option("--out-dir", train.out_dir, "output directory")
        ->envname("GTBOOST_OUT_DIR");
    train_cmd->add_option("--model-out", train.model_out, "model file path");
    train_cmd->set_config("--config", "", "key = value file; flags override");

    // ----- predict ----------------------------------------------------------
    PredictOptions predict;
    auto* predict_cmd = app.add_subcommand("predict", "write one score per input row");
    add_data_options(predict_cmd, predict.data, false);
    predict_cmd->add_option("--model", predict.model, "model file")->required();
    predict_cmd->add_option("--out", predict.out, "output file (default stdout)");
    predict_cmd->add_option("--out-dir", predict.out_dir, "directory for the config echo")
        ->envname("GTBOOST_OUT_DIR");
    predict_cmd->add_option("--task", predict.task, "task index for multitask models");
    predict_cmd->add_flag("--has-target", predict.has_target,
                          "CSV input includes the target column; drop it");
    predict_cmd->set_config("--config");

    // ----- evaluate ---------------------------------------------------------
    EvaluateOptions evaluate;
    auto* eval_cmd = app.add_subcommand("evaluate", "score a model and print an EvalReport");
    add_data_options(eval_cmd, evaluate.data, false);
    eval_cmd->add_option("--model", evaluate.model, "model file")->required();
    eval_cmd->add_option("--pred", evaluate.pred, "precomputed scores, one per line");
    eval_cmd->add_option("--metric", evaluate.metrics,
                         "rmse, auc_roc, auc_pr, prec_at_k, mrr (repeatable)");
    eval_cmd->add_option("--k", evaluate.k, "k for prec_at_k");
    eval_cmd->add_option("--task", evaluate.task, "task index for multitask models");
    eval_cmd->add_option("--out-dir", evaluate.out_dir, "output directory")
        ->envname("GTBOOST_OUT_DIR");
    eval_cmd->set_config("--config");

    // ----- experiment -------------------------------------------------------
    auto* exp_cmd = app.add_subcommand("experiment", "reproducible studies");
    exp_cmd->require_subcommand(1);

    gtboost::PhaseGridSpec grid;
    std::string grid_d = "30,60,90,120,150";
    std::string grid_n = "250,500,1000,2000,4000";
    std::string grid_out = ".";
    auto* grid_cmd = exp_cmd->add_subcommand("phase-grid", "root-split success-rate grid");
    grid_cmd->add_option("--d-values", grid_d, "comma-separated ambient dimensions");
    grid_cmd->add_option("--n-values", grid_n, "comma-separated sample counts");
    grid_cmd->add_option("--replicates", grid.replicates, "replicates per cell");
    grid_cmd->add_option("--s", grid.s, "active feature count");
    grid_cmd->add_option("--delta", grid.delta, "failure budget");
    grid_cmd->add_option("--noise-sd", grid.noise_sd, "noise standard deviation");
    grid_cmd->add_option("--seed", grid.seed, "random seed");
    grid_cmd->add_option("--workers", grid.workers, "internal parallelism cap");
    grid_cmd->add_option("--out-dir", grid_out, "output directory")->envname("GTBOOST_OUT_DIR");
    grid_cmd->set_config("--config");

    struct {
        int d = 90, s = 3, trials = 5000;
        double delta = 0.2;
        std::uint64_t seed = 0;
        std::string out_dir = ".";
    } iso;
    auto* iso_cmd = exp_cmd->add_subcommand("isolation", "active-feature isolation Monte Carlo");
    iso_cmd->add_option("--d", iso.d, "ambient dimension");
    iso_cmd->add_option("--s", iso.s, "active feature count");
    iso_cmd->add_option("--delta", iso.delta, "failure budget");
    iso_cmd->add_option("--trials", iso.trials, "number of trials");
    iso_cmd->add_option("--seed", iso.seed, "random seed");
    iso_cmd->add_option("--out-dir", iso.out_dir, "output directory")->envname("GTBOOST_OUT_DIR");
    iso_cmd->set_config("--config");

    struct {
        std::string synthetic;
        std::string data;
        double noise_sd = 1.0;
        int s = 10;
        double delta = 0.1;
        double mu = 0.001;
        double shrinkage = 0.1;
        double alpha = 0.02;
        int iterations = 3;
        std::uint64_t seed = 0;
        int workers = 1;
        std::string out_dir = ".";
    } timing;
    auto* timing_cmd = exp_cmd->add_subcommand("timing", "exhaustive vs group-testing costs");
    timing_cmd->add_option("--synthetic", timing.synthetic, "synthetic instance, e.g. n=20000,d=500");
    timing_cmd->add_option("--data", timing.data, "svmlight/CSV dataset instead of synthetic");
    timing_cmd->add_option("--noise-sd", timing.noise_sd, "synthetic noise sd");
    timing_cmd->add_option("--s", timing.s, "desired feature count");
    timing_cmd->add_option("--delta", timing.delta, "failure budget");
    timing_cmd->add_option("--mu", timing.mu, "new-feature penalty");
    timing_cmd->add_option("--shrinkage", timing.shrinkage, "per-tree shrinkage");
    timing_cmd->add_option("--alpha", timing.alpha, "minimum node fraction");
    timing_cmd->add_option("--iterations", timing.iterations, "boosting rounds");
    timing_cmd->add_option("--seed", timing.seed, "random seed");
    timing_cmd->add_option("--workers", timing.workers, "internal parallelism cap");
    timing_cmd->add_option("--out-dir", timing.out_dir, "output directory")
        ->envname("GTBOOST_OUT_DIR");
    timing_cmd->set_config("--config");

    struct {
        std::string synthetic;
        std::string data;
        std::string target = "y";
        int k = 10;
        double shrinkage = 0.1;
        double alpha = 0.1;
        int iterations = 50;
        std::uint64_t seed = 0;
        std::string out_dir = ".";
    } topk;
    auto* topk_cmd = exp_cmd->add_subcommand("topk", "rank-then-retrain baseline");
    topk_cmd->add_option("--synthetic", topk.synthetic, "synthetic instance, e.g. n=2000,d=50");
    topk_cmd->add_option("--data", topk.data, "dataset file");
    topk_cmd->add_option("--target", topk.target, "CSV target column");
    topk_cmd->add_option("--k", topk.k, "features to keep");
    topk_cmd->add_option("--shrinkage", topk.shrinkage, "per-tree shrinkage");
    topk_cmd->add_option("--alpha", topk.alpha, "minimum node fraction");
    topk_cmd->add_option("--iterations", topk.iterations, "boosting rounds");
    topk_cmd->add_option("--seed", topk.seed, "random seed");
    topk_cmd->add_option("--out-dir", topk.out_dir, "output directory")->envname("GTBOOST_OUT_DIR");
    topk_cmd->set_config("--config");

    struct {
        std::string model;
        std::string data;
        std::string target = "y";
        std::string format = "auto";
        int k = 20;
        std::string out_dir = ".";
    } corr;
    auto* corr_cmd = exp_cmd->add_subcommand("correlations", "top-k feature Pearson matrix");
    corr_cmd->add_option("--model", corr.model, "model file")->required();
    corr_cmd->add_option("--data", corr.data, "dataset file")->required();
    corr_cmd->add_option("--target", corr.target, "CSV target column");
    corr_cmd->add_option("--format", corr.format, "data format")
        ->check(CLI::IsMember({"auto", "csv", "svmlight"}));
    corr_cmd->add_option("--k", corr.k, "top features by gain");
    corr_cmd->add_option("--out-dir", corr.out_dir, "output directory")->envname("GTBOOST_OUT_DIR");
    corr_cmd->set_config("--config");

    try {
        app.parse(argc, argv);

        if (*train_cmd) return cmd_train(train);
        if (*predict_cmd) return cmd_predict(predict);
        if (*eval_cmd) return cmd_evaluate(evaluate);

        if (*grid_cmd) {
            grid.d_values = parse_int_list(grid_d);
            grid.n_values = parse_int_list(grid_n);
            echo_config(grid_out, {{"command", "experiment phase-grid"},
                                   {"d_values", grid_d},
                                   {"n_values", grid_n},
                                   {"replicates", std::to_string(grid.replicates)},
                                   {"s", std::to_string(grid.s)},
                                   {"delta", fmt(grid.delta)},
                                   {"noise_sd", fmt(grid.noise_sd)},
                                   {"seed", std::to_string(grid.seed)},
                                   {"workers", std::to_string(grid.workers)}});
            const auto result = gtboost::run_phase_grid(grid);
            write_text(fs::path(grid_out) / "phase_grid.csv", result.to_csv());
            write_text(fs::path(grid_out) / "phase_grid_counts.csv", result.counts_csv());
            write_text(fs::path(grid_out) / "phase_grid.svg", result.to_svg());
            std::cout << result.to_csv();
            return 0;
        }
        if (*iso_cmd) {
            echo_config(iso.out_dir, {{"command", "experiment isolation"},
                                      {"d", std::to_string(iso.d)},
                                      {"s", std::to_string(iso.s)},
                                      {"delta", fmt(iso.delta)},
                                      {"trials", std::to_string(iso.trials)},
                                      {"seed", std::to_string(iso.seed)}});
            const auto result =
                gtboost::run_isolation_trial(iso.d, iso.s, iso.delta, iso.trials, iso.seed);
            write_text(fs::path(iso.out_dir) / "isolation.json", result.to_json().dump(1) + "\n");
            std::cout << result.to_json().dump(1) << "\n";
            return 0;
        }
        if (*timing_cmd) {
            gtboost::LabeledDataset ds;
            if (!timing.synthetic.empty()) {
                ds = gtboost::generate_synthetic(
                    parse_synthetic(timing.synthetic, timing.noise_sd, timing.seed));
            } else if (!timing.data.empty()) {
                DataOptions dopt;
                ds = gtboost::standardize(load_one(dopt, timing.data)).first;
            } else {
                throw gtboost::ConfigError("timing needs --synthetic or --data");
            }
            echo_config(timing.out_dir, {{"command", "experiment timing"},
                                         {"n", std::to_string(ds.rows())},
                                         {"d", std::to_string(ds.cols())},
                                         {"s", std::to_string(timing.s)},
                                         {"delta", fmt(timing.delta)},
                                         {"mu", fmt(timing.mu)},
                                         {"shrinkage", fmt(timing.shrinkage)},
                                         {"alpha", fmt(timing.alpha)},
                                         {"iterations", std::to_string(timing.iterations)},
                                         {"seed", std::to_string(timing.seed)},
                                         {"workers", std::to_string(timing.workers)}});
            gtboost::BoostConfig agbm;
            agbm.iterations = timing.iterations;
            agbm.shrinkage = timing.shrinkage;
            agbm.alpha = timing.alpha;
            agbm.criterion.mode = gtboost::CriterionMode::agbm;
            agbm.criterion.mu = timing.mu;
            agbm.seed = timing.seed;
            agbm.workers = timing.workers;
            gtboost::BoostConfig gtc = agbm;
            gtc.splitter = gtboost::SplitterKind::grouptest;
            gtc.gt = gtboost::GTConfig{timing.s, timing.delta, timing.seed};
            const auto report = gtboost::run_timing(ds, agbm, gtc);
            write_text(fs::path(timing.out_dir) / "timing.json", report.to_json().dump(1) + "\n");
            std::cout << report.to_json().dump(1) << "\n";
            return 0;
        }
        if (*topk_cmd) {
            gtboost::LabeledDataset ds;
            if (!topk.synthetic.empty()) {
                ds = gtboost::generate_synthetic(parse_synthetic(topk.synthetic, 1.0, topk.seed));
            } else if (!topk.data.empty()) {
                DataOptions dopt;
                dopt.target = topk.target;
                ds = gtboost::standardize(load_one(dopt, topk.data)).first;
            } else {
                throw gtboost::ConfigError("topk needs --synthetic or --data");
            }
            echo_config(topk.out_dir, {{"command", "experiment topk"},
                                       {"k", std::to_string(topk.k)},
                                       {"n", std::to_string(ds.rows())},
                                       {"d", std::to_string(ds.cols())},
                                       {"shrinkage", fmt(topk.shrinkage)},
                                       {"alpha", fmt(topk.alpha)},
                                       {"iterations", std::to_string(topk.iterations)},
                                       {"seed", std::to_string(topk.seed)}});
            gtboost::BoostConfig base;
            base.iterations = topk.iterations;
            base.shrinkage = topk.shrinkage;
            base.alpha = topk.alpha;
            base.criterion.mode = gtboost::CriterionMode::agbm;
            base.seed = topk.seed;
            auto [model, ranking] = gtboost::topk_baseline(ds, topk.k, base);
            gtboost::save_model(model, (fs::path(topk.out_dir) / "topk_model.json").string());
            std::ostringstream rank_csv;
            rank_csv << "rank,feature,gain\n";
            for (std::size_t r = 0; r < ranking.order.size(); ++r)
                rank_csv << r << "," << ranking.order[r] << "," << fmt(ranking.gains[r]) << "\n";
            write_text(fs::path(topk.out_dir) / "ranking.csv", rank_csv.str());
            const double final_rmse =
                gtboost::rmse(model.predict_standardized(ds.features), ds.targets);
            json report{{"k", topk.k}, {"train_rmse_retrained", final_rmse}};
            write_text(fs::path(topk.out_dir) / "report.json", report.dump(1) + "\n");
            std::cout << report.dump(1) << "\n";
            return 0;
        }
        if (*corr_cmd) {
            const auto model = load_single_model(corr.model, 0);
            DataOptions dopt;
            dopt.format = corr.format;
            dopt.target = corr.target;
            auto ds = gtboost::standardize(load_one(dopt, corr.data)).first;
            echo_config(corr.out_dir, {{"command", "experiment correlations"},
                                       {"model", corr.model},
                                       {"data", corr.data},
                                       {"k", std::to_string(corr.k)}});
            gtboost::export_correlations(model, ds, corr.k,
                                         (fs::path(corr.out_dir) / "correlations.csv").string());
            std::cout << "correlations written\n";
            return 0;
        }
        return 0;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const gtboost::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const gtboost::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 3;
    }
}
