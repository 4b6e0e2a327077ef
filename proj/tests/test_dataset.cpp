#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "lcdb/dataset.hpp"
#include "lcdb/scm.hpp"

using namespace lcdb;

namespace {

ExpressionTable parse(const std::string& text, TableChecks checks = {}) {
    std::istringstream in(text);
    return parse_table(in, checks);
}

std::size_t error_line(const std::string& text) {
    try {
        parse(text);
    } catch (const ParseError& e) {
        return e.line();
    }
    return 0;
}

ExpressionTable synthetic(std::size_t n_obs, std::size_t n_iv) {
    ExpressionTable t;
    t.gene_names = {"A", "B"};
    t.values = Matrix::Zero(static_cast<Eigen::Index>(n_obs + n_iv), 2);
    for (std::size_t i = 0; i < n_obs + n_iv; ++i) {
        t.sample_ids.push_back("s" + std::to_string(i));
        t.values(static_cast<Eigen::Index>(i), 0) = static_cast<double>(i);
        if (i < n_obs) {
            t.intervention.emplace_back(std::nullopt);
        } else {
            t.intervention.emplace_back("T" + std::to_string(i));
        }
    }
    return t;
}

}  // namespace

TEST(ParseTable, ValidFile) {
    const auto t = parse(
        "sample_id\tintervention\tG1\tG2\tG3\n"
        "s1\t-\t1.5\t-2\t3e-3\n"
        "s2\tG2\t0\t0.25\t7\n");
    EXPECT_EQ(t.num_samples(), 2u);
    EXPECT_EQ(t.num_genes(), 3u);
    EXPECT_TRUE(t.is_observational(0));
    EXPECT_EQ(*t.intervention[1], "G2");
    EXPECT_EQ(t.values(0, 2), 3e-3);
    EXPECT_EQ(t.gene_index("G3"), 2u);
    EXPECT_FALSE(t.gene_index("G9").has_value());
}

TEST(ParseTable, UnmeasuredTargetKept) {
    const auto t = parse("sample_id\tintervention\tG1\ns1\t-\t1\ns2\tYFG1\t2\n");
    EXPECT_EQ(*t.intervention[1], "YFG1");
    EXPECT_EQ(t.interventional_rows(), std::vector<std::size_t>{1});
}

TEST(ParseTable, DuplicateGeneNamed) {
    try {
        parse("sample_id\tintervention\tG1\tG2\tG1\ns1\t-\t1\t2\t3\n");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("G1"), std::string::npos);
        EXPECT_EQ(e.line(), 1u);
    }
}

TEST(ParseTable, ErrorsCarryLineNumbers) {
    EXPECT_EQ(error_line(""), 1u);
    EXPECT_EQ(error_line("id\tintervention\tG1\n"), 1u);
    EXPECT_EQ(error_line("sample_id\tintervention\tG1\ns1\t-\t1\ns2\t-\tabc\n"), 3u);
    EXPECT_EQ(error_line("sample_id\tintervention\tG1\ns1\t-\t1\t2\n"), 2u);
    EXPECT_EQ(error_line("sample_id\tintervention\tG1\ns1\tG1\t1\ns2\tG1\t2\n"), 3u);
    EXPECT_EQ(error_line("sample_id\tintervention\tG1\ns1\t-\t1x\n"), 2u);
    EXPECT_EQ(error_line("sample_id\tintervention\tG1\ns1\t-\tnan\n"), 2u);
    EXPECT_NO_THROW(parse("sample_id\tintervention\tG1\ns1\tG1\t1\ns2\tG1\t2\n", {.unique_targets = false}));
}

TEST(SaveTable, RoundTripIsBitExact) {
    const auto f = fixture("icp-diamond");
    auto t = sample_context_table(f.scm, 40, 40, 11);
    t.values(0, 0) = 0.1 + 0.2;
    t.values(1, 1) = -1e-300;
    t.values(2, 2) = 123456789.123456789;
    const auto path = std::filesystem::temp_directory_path() / "lcdb_roundtrip.tsv";
    save_table(path.string(), t);
    const auto back = load_table(path.string(), {.unique_targets = false});
    std::filesystem::remove(path);
    EXPECT_EQ(back.gene_names, t.gene_names);
    EXPECT_EQ(back.sample_ids, t.sample_ids);
    EXPECT_EQ(back.intervention, t.intervention);
    ASSERT_EQ(back.values.rows(), t.values.rows());
    for (Eigen::Index i = 0; i < t.values.rows(); ++i)
        for (Eigen::Index j = 0; j < t.values.cols(); ++j) ASSERT_EQ(back.values(i, j), t.values(i, j));
    EXPECT_THROW(load_table("/nonexistent/table.tsv"), DataError);
}

TEST(JciDatasetTest, ContextMustHaveBothValues) {
    EXPECT_THROW(JciDataset(Matrix::Zero(3, 1), {0, 0, 0}, {"A"}), Error);
    EXPECT_THROW(JciDataset(Matrix::Zero(3, 1), {0, 1, 2}, {"A"}), DomainError);
    EXPECT_THROW(JciDataset(Matrix::Zero(3, 1), {0, 1}, {"A"}), DomainError);
    const JciDataset d(Matrix::Zero(3, 1), {0, 1, 1}, {"A"});
    EXPECT_EQ(d.context_column().sum(), 2.0);
    EXPECT_EQ(d.subset({2, 0}).context().labels(), (std::vector<int>{1, 0}));
}

TEST(MakeFolds, SmallEqualFolds) {
    const auto split = make_folds(synthetic(10, 10), 5, 1);
    for (std::size_t f = 0; f < 5; ++f) {
        EXPECT_EQ(split.observational[f].size(), 2u);
        EXPECT_EQ(split.interventional[f].size(), 2u);
    }
}

TEST(MakeFolds, CompendiumSizes) {
    const auto table = synthetic(262, 1479);
    const auto split = make_folds(table, 5, 42);
    std::vector<std::size_t> all;
    for (std::size_t f = 0; f < 5; ++f) {
        const auto o = split.observational[f].size(), i = split.interventional[f].size();
        EXPECT_TRUE(o == 52 || o == 53) << o;
        EXPECT_TRUE(i == 295 || i == 296) << i;
        const auto rows = split.test_rows(f);
        all.insert(all.end(), rows.begin(), rows.end());
    }
    std::sort(all.begin(), all.end());
    ASSERT_EQ(all.size(), table.num_samples());
    for (std::size_t r = 0; r < all.size(); ++r) EXPECT_EQ(all[r], r);
}

TEST(MakeFolds, DeterministicAndSeeded) {
    const auto table = synthetic(30, 40);
    const auto a = make_folds(table, 5, 7);
    const auto b = make_folds(table, 5, 7);
    const auto c = make_folds(table, 5, 8);
    EXPECT_EQ(a.observational, b.observational);
    EXPECT_EQ(a.interventional, b.interventional);
    EXPECT_NE(a.interventional, c.interventional);
    EXPECT_THROW(make_folds(table, 1, 7), DomainError);
    EXPECT_THROW(make_folds(synthetic(3, 40), 5, 7), InsufficientSamples);
}

TEST(PoolTraining, FourFifthsAndDisjointTargets) {
    const auto table = synthetic(50, 100);
    const auto split = make_folds(table, 5, 3);
    for (std::size_t f = 0; f < 5; ++f) {
        const auto train = pool_training(table, split, f);
        EXPECT_EQ(train.num_samples(), 120u);
        EXPECT_EQ(train.context_column().sum(), 80.0);
        // Column 0 holds the table row index, so training rows are identifiable.
        for (Eigen::Index i = 0; i < train.system().rows(); ++i) {
            const auto row = static_cast<std::size_t>(train.system()(i, 0));
            EXPECT_EQ(std::count(split.interventional[f].begin(), split.interventional[f].end(), row), 0);
            EXPECT_EQ(train.system().row(i), table.values.row(static_cast<Eigen::Index>(row)));
        }
    }
    EXPECT_THROW(pool_training(table, split, 5), DomainError);
}
