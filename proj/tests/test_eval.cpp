#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "lcdb/eval.hpp"
#include "lcdb/scm.hpp"
#include "oracles.hpp"

using namespace lcdb;

namespace {

ExpressionTable tiny_table() {
    ExpressionTable t;
    t.gene_names = {"A", "B", "C"};
    t.values.resize(5, 3);
    // Three observational rows: A mean 1 sd 1, B mean 0 sd 2, C mean 5 sd 1.
    t.values << 0, -2, 4,
                1, 0, 5,
                2, 2, 6,
                9, 0, 7,   // knockout of A: B at its mean, C two sd above
                1, -3, 5;  // knockout of ZZZ (unmeasured)
    t.sample_ids = {"o1", "o2", "o3", "kA", "kZ"};
    t.intervention = {std::nullopt, std::nullopt, std::nullopt, std::string("A"), std::string("ZZZ")};
    return t;
}

GroundTruth scores_from(const std::vector<double>& s) {
    GroundTruth gt;
    for (std::size_t i = 0; i < s.size(); ++i) gt.scores[{i / 50, 50 + i % 50}] = s[i];
    return gt;
}

}  // namespace

TEST(GroundTruthScores, StandardizedDeviation) {
    const auto t = tiny_table();
    Diagnostics diag;
    const auto gt = ground_truth_scores(t, {3, 4}, {0, 1, 2}, &diag);
    EXPECT_EQ(gt.scores.size(), 2u);
    EXPECT_EQ(gt.scores.at({0, 1}), 0.0);
    EXPECT_DOUBLE_EQ(gt.scores.at({0, 2}), 2.0);
    EXPECT_FALSE(gt.scores.contains({0, 0}));
    EXPECT_THROW(ground_truth_scores(t, {3}, {0}), InsufficientSamples);
    EXPECT_THROW(ground_truth_scores(t, {0}, {0, 1, 2}), DomainError);
}

TEST(GroundTruthScores, ZeroSpreadGeneExcluded) {
    auto t = tiny_table();
    t.values.col(1).head(3).setConstant(3.0);
    Diagnostics diag;
    const auto gt = ground_truth_scores(t, {3}, {0, 1, 2}, &diag);
    EXPECT_FALSE(gt.scores.contains({0, 1}));
    EXPECT_TRUE(gt.scores.contains({0, 2}));
    EXPECT_EQ(diag.count(), 1u);
}

TEST(Prevalence, ExactCount) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0, 5);
    std::vector<double> s(1000);
    for (auto& v : s) v = u(rng);
    const auto gt = scores_from(s);
    for (double q : {0.01, 0.1, 0.001, 0.5, 0.333}) {
        const auto labels = threshold_at_prevalence(gt, q);
        const auto pos = std::count_if(labels.begin(), labels.end(), [](const auto& kv) { return kv.second; });
        EXPECT_EQ(static_cast<std::size_t>(pos), static_cast<std::size_t>(std::floor(q * 1000))) << q;
    }
    EXPECT_THROW(threshold_at_prevalence(gt, 0.0005), DomainError);
    EXPECT_THROW(threshold_at_prevalence(gt, 1.0), DomainError);
}

TEST(Prevalence, AllButLowestAndTies) {
    std::vector<double> s(100);
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = 1.0 + static_cast<double>(i % 7);
    s[42] = 0.0;
    const auto gt = scores_from(s);
    const auto labels = threshold_at_prevalence(gt, 0.999);
    for (const auto& [pair, label] : labels) EXPECT_EQ(label, !(pair == GenePair{0, 92}));

    std::vector<double> flat(100, 1.0);
    const auto tie = threshold_at_prevalence(scores_from(flat), 0.05);
    std::size_t i = 0;
    for (const auto& [pair, label] : tie) EXPECT_EQ(label, i++ < 5);
}

TEST(Prevalence, InjectedShiftsRecovered) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> noise;
    const std::size_t p = 20, n_obs = 100;
    ExpressionTable t;
    for (std::size_t j = 0; j < p; ++j) t.gene_names.push_back("G" + std::to_string(j));
    t.values.resize(static_cast<Eigen::Index>(n_obs + p), static_cast<Eigen::Index>(p));
    for (std::size_t i = 0; i < n_obs; ++i) {
        t.sample_ids.push_back("o" + std::to_string(i));
        t.intervention.emplace_back(std::nullopt);
        for (std::size_t j = 0; j < p; ++j) t.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = noise(rng);
    }
    // Knockout rows sit near the observational mean except for injected shifts.
    std::set<GenePair> injected;
    for (std::size_t k = 0; k < p; ++k) {
        const auto r = static_cast<Eigen::Index>(n_obs + k);
        t.sample_ids.push_back("k" + std::to_string(k));
        t.intervention.emplace_back(t.gene_names[k]);
        for (std::size_t j = 0; j < p; ++j) t.values(r, static_cast<Eigen::Index>(j)) = 0.2 * noise(rng);
        if (k % 2 == 0) {
            const std::size_t j = (k + 3) % p;
            t.values(r, static_cast<Eigen::Index>(j)) = 8.0 + static_cast<double>(k);
            injected.insert({k, j});
        }
    }
    const auto gt = ground_truth_scores(t, t.interventional_rows(), t.observational_rows());
    const double q = static_cast<double>(injected.size()) / static_cast<double>(gt.scores.size()) + 1e-9;
    const auto labels = threshold_at_prevalence(gt, q);
    std::set<GenePair> positives;
    for (const auto& [pair, label] : labels)
        if (label) positives.insert(pair);
    EXPECT_EQ(positives, injected);
}

TEST(RocCurveTest, PerfectAndUninformative) {
    std::map<GenePair, bool> labels;
    PredictionScores pred;
    for (std::size_t i = 0; i < 20; ++i) {
        labels[{i, 99}] = i < 5;
        if (i < 5) pred.add({i, 99}, 3);
    }
    const auto perfect = roc_curve(pred, labels);
    EXPECT_EQ(perfect.positives, 5u);
    EXPECT_EQ(perfect.negatives, 15u);
    EXPECT_TRUE(std::any_of(perfect.points.begin(), perfect.points.end(),
                            [](const RocPoint& p) { return p.fpr == 0.0 && p.tpr == 1.0; }));
    EXPECT_DOUBLE_EQ(roc_auc(perfect), 1.0);

    const auto flat = roc_curve(PredictionScores{}, labels);
    ASSERT_EQ(flat.points.size(), 2u);
    EXPECT_EQ(flat.points.back().fpr, 1.0);
    EXPECT_EQ(flat.points.back().tpr, 1.0);
    EXPECT_DOUBLE_EQ(roc_auc(flat), 0.5);

    PredictionScores outside;
    outside.add({500, 501}, 7);
    EXPECT_EQ(roc_curve(outside, labels).points.size(), 2u);
    EXPECT_THROW(roc_curve(pred, {}), DomainError);
    EXPECT_THROW(roc_curve(pred, {{{0, 1}, true}}), DomainError);
}

TEST(RocCurveTest, AucMatchesPairwiseOracle) {
    std::mt19937_64 rng(5);
    for (int rep = 0; rep < 300; ++rep) {
        const std::size_t n = 2 + rng() % 200;
        const int max_count = 1 + static_cast<int>(rng() % 12);
        std::map<GenePair, bool> labels;
        PredictionScores pred;
        std::vector<int> counts;
        std::vector<bool> lab;
        for (std::size_t i = 0; i < n; ++i) {
            const bool l = i == 0 ? true : (i == 1 ? false : rng() % 3 == 0);
            const int c = static_cast<int>(rng() % static_cast<unsigned>(max_count + 1));
            labels[{i, n + i}] = l;
            if (c > 0) pred.add({i, n + i}, c);
            counts.push_back(c);
            lab.push_back(l);
        }
        const auto curve = roc_curve(pred, labels);
        EXPECT_NEAR(roc_auc(curve), oracle::pairwise_auc(counts, lab), 1e-12);
        for (std::size_t i = 1; i < curve.points.size(); ++i) {
            EXPECT_GE(curve.points[i].fpr, curve.points[i - 1].fpr);
            EXPECT_GE(curve.points[i].tpr, curve.points[i - 1].tpr);
        }
        EXPECT_EQ(curve.points.back().fpr, 1.0);
        EXPECT_EQ(curve.points.back().tpr, 1.0);
    }
}

TEST(RocCurveTest, MonotoneTransformInvariance) {
    std::mt19937_64 rng(6);
    std::map<GenePair, bool> labels;
    PredictionScores a, b;
    for (std::size_t i = 0; i < 300; ++i) {
        labels[{i, 1000}] = rng() % 4 == 0;
        const int c = static_cast<int>(rng() % 10);
        if (c > 0) {
            a.add({i, 1000}, c);
            b.add({i, 1000}, c * c + 3);
        }
    }
    const auto ca = roc_curve(a, labels), cb = roc_curve(b, labels);
    ASSERT_EQ(ca.points.size(), cb.points.size());
    for (std::size_t i = 0; i < ca.points.size(); ++i) {
        EXPECT_EQ(ca.points[i].fpr, cb.points[i].fpr);
        EXPECT_EQ(ca.points[i].tpr, cb.points[i].tpr);
    }
}

TEST(PartialAuc, Interpolation) {
    const std::vector<RocPoint> diag{{0, 0}, {1, 1}};
    EXPECT_DOUBLE_EQ(partial_auc(diag, 0.1), 0.005);
    EXPECT_DOUBLE_EQ(partial_auc(diag, 1.0), 0.5);
    const std::vector<RocPoint> step{{0, 0}, {0, 1}, {1, 1}};
    EXPECT_DOUBLE_EQ(partial_auc(step, 0.1), 0.1);
}

TEST(RandomBand, ContainsDiagonal) {
    for (auto [p, n] : {std::pair<std::size_t, std::size_t>{5, 95}, {50, 50}, {10, 9990}, {1, 1}}) {
        for (const auto& b : random_band(p, n, 0.99, 200)) {
            EXPECT_LE(b.tpr_low, b.fpr + 1e-12);
            EXPECT_GE(b.tpr_high, b.fpr - 1e-12);
            EXPECT_GE(b.tpr_low, 0.0);
            EXPECT_LE(b.tpr_high, 1.0);
        }
    }
    EXPECT_THROW(random_band(0, 5, 0.99), DomainError);
    EXPECT_THROW(random_band(5, 5, 1.0), DomainError);
}

TEST(RandomBand, HalfWidthMatchesMonteCarlo) {
    const std::size_t P = 100, N = 100, t = 100;
    const auto band = random_band(P, N, 0.99, 2);
    const auto& mid = band[1];
    ASSERT_DOUBLE_EQ(mid.fpr, 0.5);
    std::vector<int> pool(P + N, 0);
    std::fill(pool.begin(), pool.begin() + P, 1);
    std::mt19937_64 rng(7);
    std::vector<int> draws;
    draws.reserve(100000);
    for (int r = 0; r < 100000; ++r) {
        // Partial shuffle of the first t entries.
        for (std::size_t i = 0; i < t; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
            std::swap(pool[i], pool[pick(rng)]);
        }
        draws.push_back(std::accumulate(pool.begin(), pool.begin() + t, 0));
    }
    std::sort(draws.begin(), draws.end());
    const double lo = draws[static_cast<std::size_t>(0.005 * draws.size())];
    const double hi = draws[static_cast<std::size_t>(0.995 * draws.size())];
    const double mc_half = (hi - lo) / 2.0 / static_cast<double>(P);
    const double half = (mid.tpr_high - mid.tpr_low) / 2.0;
    EXPECT_NEAR(half, mc_half, 0.1 * mc_half);
}

TEST(RandomBand, ShrinksWithScale) {
    double prev = 2.0;
    for (std::size_t scale : {1, 10, 100}) {
        const auto band = random_band(20 * scale, 180 * scale, 0.99, 10);
        const double width = band[5].tpr_high - band[5].tpr_low;
        EXPECT_LT(width, prev);
        prev = width;
    }
}

TEST(FoldMerge, OnlyTestFoldTargets) {
    auto scm = random_scm(12, 0.2, 0.5, 1.0, 1, {.intercept_low = 2.0, .intercept_high = 3.0});
    std::vector<std::size_t> targets(12);
    for (std::size_t i = 0; i < 12; ++i) targets[i] = i;
    const auto table = sample_knockout_panel(scm, 30, targets, 2);
    const auto split = make_folds(table, 3, 9);
    std::vector<PredictionScores> per_fold(3);
    for (auto& p : per_fold)
        for (std::size_t c = 0; c < 12; ++c) p.add({c, (c + 1) % 12}, 5);
    const auto merged = merge_fold_predictions(table, split, per_fold);
    EXPECT_EQ(merged.counts.size(), 12u);
    const auto gt = split_ground_truth(table, split);
    EXPECT_EQ(gt.scores.size(), 12u * 11u);
    for (const auto& [pair, count] : merged.counts) {
        EXPECT_EQ(count, 5);
        EXPECT_TRUE(gt.scores.contains(pair));
    }
    EXPECT_THROW(merge_fold_predictions(table, split, {}), DomainError);
}
