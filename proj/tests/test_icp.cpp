#include <algorithm>
#include <random>

#include <gtest/gtest.h>

#include "lcdb/icp.hpp"
#include "lcdb/scm.hpp"
#include "oracles.hpp"

using namespace lcdb;

namespace {

LinearScm shifted_random_scm(std::size_t p, std::uint64_t seed) {
    auto scm = random_scm(p, 0.3, 0.5, 1.2, seed);
    std::mt19937_64 rng(seed);
    InterventionSet shifts;
    for (std::size_t j = 0; j < p; ++j)
        if (rng() % 3 == 0) shifts.emplace_back(j, MechanismChange::shift(1.0));
    if (shifts.empty()) shifts.emplace_back(0, MechanismChange::shift(1.0));
    scm.context_targets[1] = shifts;
    return scm;
}

}  // namespace

TEST(SubsetOrder, SizeThenLexicographic) {
    std::vector<std::vector<std::size_t>> seen;
    for_each_subset_by_size(std::vector<std::size_t>{2, 5, 9}, [&](const std::vector<std::size_t>& s) {
        seen.push_back(s);
        return true;
    });
    const std::vector<std::vector<std::size_t>> expected{{}, {2}, {5}, {9}, {2, 5}, {2, 9}, {5, 9}, {2, 5, 9}};
    EXPECT_EQ(seen, expected);
}

TEST(IcpScan, EmptySetAcceptedStopsAfterOneTest) {
    const auto r = icp_scan({1, 2, 3, 4, 5, 6, 7, 8}, 0.01, true, [](const auto&) { return 0.5; });
    EXPECT_EQ(r.tests_run, 1u);
    EXPECT_TRUE(r.stopped_early);
    EXPECT_TRUE(r.output_set.empty());
    EXPECT_FALSE(r.model_rejected);
}

TEST(IcpScan, NothingAcceptedRejectsModel) {
    const auto r = icp_scan({1, 2, 3}, 0.01, true, [](const auto&) { return std::optional<double>(0.001); });
    EXPECT_TRUE(r.model_rejected);
    EXPECT_TRUE(r.output_set.empty());
    EXPECT_EQ(r.tests_run, 8u);
}

TEST(IcpScan, FailedTestsCountAsRejected) {
    const auto r = icp_scan({4, 7}, 0.01, true, [](const std::vector<std::size_t>& s) -> std::optional<double> {
        if (s.size() == 2) return std::nullopt;
        if (s == std::vector<std::size_t>{4}) return 0.3;
        return 0.0;
    });
    EXPECT_EQ(r.output_set, std::vector<std::size_t>{4});
    EXPECT_EQ(r.accepted_sets.size(), 1u);
}

TEST(IcpScan, MatchesNaiveEnumeration) {
    std::mt19937_64 rng(17);
    for (int rep = 0; rep < 500; ++rep) {
        const std::size_t m = rng() % 9;
        std::vector<std::size_t> cand(m);
        for (std::size_t i = 0; i < m; ++i) cand[i] = 3 * i + rng() % 3;
        std::shuffle(cand.begin(), cand.end(), rng);
        // Acceptance decided by a hash of the subset.
        const std::uint64_t salt = rng();
        const double density = (rng() % 100) / 100.0;
        auto accept = [&](const std::vector<std::size_t>& s) {
            std::uint64_t h = salt;
            for (auto v : s) h = mix64(h ^ (v + 0x9e37));
            return static_cast<double>(h % 1000) / 1000.0 < density;
        };
        const auto r = icp_scan(cand, 0.01, false, [&](const auto& s) { return accept(s) ? 0.5 : 0.0; });
        const auto [ref, rejected] = oracle::naive_icp(cand, accept);
        EXPECT_EQ(r.output_set, ref);
        EXPECT_EQ(r.model_rejected, rejected);
        EXPECT_EQ(r.tests_run, std::size_t{1} << m);
        const auto early = icp_scan(cand, 0.01, true, [&](const auto& s) { return accept(s) ? 0.5 : 0.0; });
        EXPECT_EQ(early.output_set, ref);
    }
}

TEST(Icp, DiamondRecoversBothParents) {
    const auto f = fixture("icp-diamond");
    int hits = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto data = sample_context_dataset(f.scm, 1000, 1000, seed);
        const auto r = icp_for_target(2, data, {});
        hits += r.output_set == std::vector<std::size_t>{0, 1};
    }
    EXPECT_GE(hits, 90);
}

TEST(Icp, ChainRecoversParent) {
    const auto f = fixture("lcd-chain");
    int hits = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto data = sample_context_dataset(f.scm, 1000, 1000, seed);
        hits += icp_for_target(1, data, {}).output_set == std::vector<std::size_t>{0};
    }
    EXPECT_GE(hits, 90);
}

TEST(Icp, ResultInvariants) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto scm = shifted_random_scm(12, seed);
        const auto data = sample_context_dataset(scm, 200, 200, seed);
        for (std::size_t y = 0; y < 12; ++y) {
            for (bool stop : {true, false}) {
                const auto r = icp_for_target(y, data, {.alpha = 0.01, .boost = {}, .stop_if_empty = stop});
                EXPECT_LE(r.candidates.size(), 8u);
                EXPECT_LE(r.tests_run, std::size_t{1} << std::min<std::size_t>(8, 11));
                for (const auto& a : r.accepted_sets) {
                    EXPECT_TRUE(std::includes(a.members.begin(), a.members.end(), r.output_set.begin(), r.output_set.end()));
                    EXPECT_GE(a.p_value, 0.01);
                    if (a.members.empty()) {
                        EXPECT_TRUE(r.output_set.empty());
                    }
                }
                if (r.model_rejected) {
                    EXPECT_TRUE(r.output_set.empty());
                }
            }
            // Early stopping never changes the output.
            EXPECT_EQ(icp_for_target(y, data, {.alpha = 0.01, .boost = {}, .stop_if_empty = true}).output_set,
                      icp_for_target(y, data, {.alpha = 0.01, .boost = {}, .stop_if_empty = false}).output_set);
        }
    }
}

TEST(Icp, ExplicitCandidatesMatchNaiveEnumeration) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto scm = shifted_random_scm(9, seed);
        const auto data = sample_context_dataset(scm, 150, 150, seed);
        const std::size_t y = seed % 9;
        std::vector<std::size_t> cand;
        for (std::size_t x = 0; x < 9; ++x)
            if (x != y) cand.push_back(x);
        const auto r = icp_with_candidates(y, cand, data, 0.01, false);
        auto accept = [&](const std::vector<std::size_t>& s) {
            Matrix design(data.system().rows(), static_cast<Eigen::Index>(s.size()));
            for (std::size_t i = 0; i < s.size(); ++i)
                design.col(static_cast<Eigen::Index>(i)) = data.system().col(static_cast<Eigen::Index>(s[i]));
            try {
                return mean_var_pvalues(data.system().col(static_cast<Eigen::Index>(y)), design, data.context()).p >= 0.01;
            } catch (const Error&) {
                return false;
            }
        };
        const auto [ref, rejected] = oracle::naive_icp(cand, accept);
        EXPECT_EQ(r.output_set, ref) << "seed " << seed;
        EXPECT_EQ(r.model_rejected, rejected);
    }
}

TEST(IcpPredict, IndependentVariablesGiveNothing) {
    auto scm = LinearScm::empty({"A", "B"});
    scm.context_targets[1] = {{0, MechanismChange::shift(2.0)}, {1, MechanismChange::shift(2.0)}};
    int empty = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        empty += icp_predict(sample_context_dataset(scm, 300, 300, seed), {}).counts.empty();
    }
    EXPECT_GE(empty, 18);
}

TEST(IcpPredict, DiamondPairs) {
    const auto f = fixture("icp-diamond");
    const auto pred = icp_predict(sample_context_dataset(f.scm, 1000, 1000, 3), {});
    EXPECT_TRUE(pred.contains({0, 2}));
    EXPECT_TRUE(pred.contains({1, 2}));
}
