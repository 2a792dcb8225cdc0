#include <catch2/catch_amalgamated.hpp>

#include <random>

#include <gtboost/metrics.hpp>

#include "oracles.hpp"

using namespace gtboost;

TEST_CASE("rmse basics") {
    CHECK(rmse(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2, 3}) == 0.0);
    CHECK(rmse(std::vector<double>{0, 0}, std::vector<double>{1, 1}) == 1.0);
    CHECK(rmse(std::vector<double>{0, 2}, std::vector<double>{0, 0}) ==
          Catch::Approx(std::sqrt(2.0)).margin(1e-12));
    CHECK_THROWS_AS(rmse(std::vector<double>{1}, std::vector<double>{1, 2}), DataError);
}

TEST_CASE("rmse symmetry and scale equivariance") {
    std::mt19937_64 engine(3);
    std::uniform_real_distribution<double> unif(-2.0, 2.0);
    std::vector<double> a(50), b(50);
    for (std::size_t i = 0; i < a.size(); ++i) {
        a[i] = unif(engine);
        b[i] = unif(engine);
    }
    CHECK(rmse(a, b) == rmse(b, a));
    std::vector<double> ca(a), cb(b);
    for (auto& v : ca) v *= -3.5;
    for (auto& v : cb) v *= -3.5;
    CHECK(rmse(ca, cb) == Catch::Approx(3.5 * rmse(a, b)).epsilon(1e-12));
}

TEST_CASE("auc_roc fixed cases") {
    CHECK(auc_roc(std::vector<double>{0.1, 0.9}, std::vector<double>{0, 1}) == 1.0);
    CHECK(auc_roc(std::vector<double>{0.1, 0.4, 0.35, 0.8}, std::vector<double>{0, 0, 1, 1}) ==
          Catch::Approx(0.75).margin(1e-12));
    CHECK(auc_roc(std::vector<double>{0.5, 0.5, 0.5, 0.5}, std::vector<double>{0, 1, 0, 1}) ==
          Catch::Approx(0.5).margin(1e-12));
    CHECK_THROWS_AS(auc_roc(std::vector<double>{0.1, 0.2}, std::vector<double>{1, 1}), DataError);
}

TEST_CASE("auc_roc equals pairwise enumeration") {
    std::mt19937_64 engine(11);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::bernoulli_distribution coin(0.4);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 5 + engine() % 195;
        std::vector<double> scores(n), labels(n);
        bool pos = false, neg = false;
        for (std::size_t i = 0; i < n; ++i) {
            // Quantized scores to exercise midranks.
            scores[i] = std::floor(unif(engine) * 20.0) / 20.0;
            labels[i] = coin(engine) ? 1.0 : 0.0;
            (labels[i] > 0.5 ? pos : neg) = true;
        }
        if (!pos || !neg) continue;
        CHECK(auc_roc(scores, labels) ==
              Catch::Approx(oracles::pairwise_auc(scores, labels)).margin(1e-12));
    }
}

TEST_CASE("auc_roc is invariant under strictly monotone transforms") {
    std::mt19937_64 engine(13);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<double> scores(120), labels(120);
    for (std::size_t i = 0; i < scores.size(); ++i) {
        scores[i] = unif(engine);
        labels[i] = i % 3 == 0 ? 1.0 : 0.0;
    }
    const double base = auc_roc(scores, labels);
    std::vector<double> warped(scores);
    for (auto& s : warped) s = std::exp(4.0 * s) - 7.0;
    CHECK(auc_roc(warped, labels) == Catch::Approx(base).margin(1e-12));
}

TEST_CASE("auc_pr fixed cases") {
    CHECK(auc_pr(std::vector<double>{0.9, 0.8, 0.1, 0.2}, std::vector<double>{1, 1, 0, 0}) == 1.0);
    CHECK(auc_pr(std::vector<double>{0.2, 0.9}, std::vector<double>{1, 0}) ==
          Catch::Approx(0.5).margin(1e-12));
    // Single positive at rank r of n gives exactly 1/r.
    CHECK(auc_pr(std::vector<double>{0.9, 0.8, 0.7, 0.6}, std::vector<double>{0, 0, 1, 0}) ==
          Catch::Approx(1.0 / 3.0).margin(1e-12));
    CHECK_THROWS_AS(auc_pr(std::vector<double>{0.1}, std::vector<double>{0}), DataError);
}

TEST_CASE("precision_at_k global and grouped") {
    CHECK(precision_at_k(std::vector<double>{0.9, 0.8, 0.1}, std::vector<double>{1, 1, 0}, 2) == 1.0);
    CHECK(precision_at_k(std::vector<double>{0.9, 0.8, 0.1}, std::vector<double>{1, 0, 1}, 2) == 0.5);

    const std::vector<double> scores{0.9, 0.8, 0.7, 0.6};
    const std::vector<double> labels{1, 1, 0, 0};
    const std::vector<long long> groups{0, 0, 1, 1};
    CHECK(precision_at_k(scores, labels, 2, groups) == Catch::Approx(0.5).margin(1e-12));

    // Groups smaller than k are skipped; k bigger than all groups is an error.
    const std::vector<long long> uneven{0, 0, 1, 1};
    CHECK_THROWS_AS(precision_at_k(scores, labels, 3, uneven), DataError);
    CHECK_THROWS_AS(precision_at_k(scores, labels, 9), DataError);
}

TEST_CASE("mrr over groups") {
    const std::vector<double> scores{0.9, 0.1, 0.8, 0.9};
    const std::vector<double> labels{1, 0, 0, 1};
    const std::vector<long long> groups{0, 0, 1, 1};
    CHECK(mrr(scores, labels, groups) == 1.0);

    // First positives at ranks 1 and 4.
    const std::vector<double> s2{0.9, 0.1, 0.9, 0.8, 0.7, 0.6};
    const std::vector<double> l2{1, 0, 0, 0, 0, 1};
    const std::vector<long long> g2{0, 0, 1, 1, 1, 1};
    CHECK(mrr(s2, l2, g2) == Catch::Approx(0.625).margin(1e-12));

    const std::vector<double> s3{0.9, 0.5};
    const std::vector<double> l3{0, 1};
    const std::vector<long long> g3{0, 0};
    CHECK(mrr(s3, l3, g3) == Catch::Approx(0.5).margin(1e-12));

    CHECK_THROWS_AS(mrr(s3, l3, std::vector<long long>{}), DataError);
    CHECK_THROWS_AS(mrr(s3, std::vector<double>{0, 0}, g3), DataError);
}

TEST_CASE("ranking metrics ignore within-group score-preserving permutations") {
    const std::vector<double> scores{0.9, 0.8, 0.7, 0.9, 0.8, 0.7};
    const std::vector<double> labels{0, 1, 0, 1, 0, 0};
    const std::vector<long long> groups{0, 0, 0, 1, 1, 1};
    const double m1 = mrr(scores, labels, groups);
    const double p1 = precision_at_k(scores, labels, 2, groups);

    // Reorder the rows of each group; scores follow their labels.
    const std::vector<double> scores2{0.7, 0.9, 0.8, 0.8, 0.7, 0.9};
    const std::vector<double> labels2{0, 0, 1, 0, 0, 1};
    const std::vector<long long> groups2{0, 0, 0, 1, 1, 1};
    CHECK(mrr(scores2, labels2, groups2) == m1);
    CHECK(precision_at_k(scores2, labels2, 2, groups2) == p1);
}

TEST_CASE("pearson matrix properties") {
    LabeledDataset ds;
    std::mt19937_64 engine(7);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const std::size_t n = 10000;
    ds.features.columns.assign(3, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
        ds.features.columns[0][i] = unif(engine);
        ds.features.columns[1][i] = -ds.features.columns[0][i];
        ds.features.columns[2][i] = unif(engine);
    }
    ds.targets.assign(n, 0.0);

    auto m = pearson_matrix(ds, std::vector<int>{0, 1, 2});
    CHECK(m[0][0] == 1.0);
    CHECK(m[1][1] == 1.0);
    CHECK(m[0][1] == Catch::Approx(-1.0).margin(1e-12));
    CHECK(m[1][0] == m[0][1]);
    CHECK(std::abs(m[0][2]) < 0.05);  // independent columns, n = 10^4

    LabeledDataset constant;
    constant.features.columns = {{1.0, 1.0, 1.0}};
    constant.targets = {0, 0, 0};
    CHECK_THROWS_AS(pearson_matrix(constant, std::vector<int>{0}), DataError);
}

TEST_CASE("eval report serializes flat json and csv") {
    EvalReport report;
    report.rmse_value = 0.25;
    report.auc_roc_value = 0.9;
    report.precision_at_k_values[2] = 0.75;
    report.n_features_used = 12;
    const auto j = report.to_json();
    CHECK(j.at("rmse").get<double>() == 0.25);
    CHECK(j.at("auc_roc").get<double>() == 0.9);
    CHECK(j.at("prec_at_2").get<double>() == 0.75);
    CHECK_FALSE(j.contains("mrr"));
    const std::string csv = report.to_csv();
    CHECK(csv.find("rmse") != std::string::npos);
    CHECK(csv.find("0.25") != std::string::npos);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);
}
