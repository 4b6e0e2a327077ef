#pragma once

// Local Causal Discovery over triples (C, X, Y). A triple is reported when
//   (a) C and X are dependent,
//   (b) X and Y are dependent,
//   (c) C and Y are independent given X,
// and then X is an ancestral cause of Y with no confounding between them.
//
// The triple search is written against a test backend so that the same code
// runs on data (partial correlation or mean-variance tests) and on a causal
// graph (d-separation oracle).

#include <concepts>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lcdb/boosting.hpp"
#include "lcdb/dataset.hpp"
#include "lcdb/diagnostics.hpp"
#include "lcdb/indep_tests.hpp"
#include "lcdb/scm.hpp"
#include "lcdb/scores.hpp"

namespace lcdb {

enum class TestKind { kPartialCorrelation, kMeanVariance };

struct LcdConfig {
    double alpha = 0.01;
    TestKind test_kind = TestKind::kPartialCorrelation;
    bool preselect = false;
    BoostParams boost;

    /// lcd, lcd-mv, lcd-bst, lcd-bst-mv.
    static LcdConfig named(std::string_view name, double alpha = 0.01, BoostParams boost = {}) {
        LcdConfig c;
        c.alpha = alpha;
        c.boost = boost;
        if (name == "lcd") {
        } else if (name == "lcd-mv") {
            c.test_kind = TestKind::kMeanVariance;
        } else if (name == "lcd-bst") {
            c.preselect = true;
        } else if (name == "lcd-bst-mv") {
            c.preselect = true;
            c.test_kind = TestKind::kMeanVariance;
        } else {
            throw DomainError("unknown LCD variant '" + std::string(name) + "'");
        }
        return c;
    }
};

struct LcdTriple {
    std::size_t cause = 0;
    std::size_t effect = 0;
    double p_cx = 0.0;  // C vs X
    double p_xy = 0.0;  // X vs Y
    double p_ci = 1.0;  // C vs Y given X

    friend bool operator==(const LcdTriple&, const LcdTriple&) = default;
};

template <class T>
concept LcdTestBackend = requires(T& t, std::size_t x, std::size_t y) {
    { t.context_dependence(x) } -> std::same_as<TestDecision>;
    { t.pair_dependence(x, y) } -> std::same_as<TestDecision>;
    { t.context_given(y, x) } -> std::same_as<TestDecision>;
};

/// Statistical backend on a pooled dataset. Test (a) depends only on X and
/// is computed once per variable.
class DataLcdTests {
public:
    DataLcdTests(const JciDataset& data, const LcdConfig& config) : data_(data), config_(config) {
        check_alpha(config.alpha);
        context_cache_.resize(data.num_vars());
        context_error_.resize(data.num_vars());
    }

    TestDecision context_dependence(std::size_t x) {
        if (!context_cache_[x] && context_error_[x].empty()) {
            try {
                ++invocations_;
                context_cache_[x] = compute_context_dependence(x);
            } catch (const Error& e) {
                context_error_[x] = e.what();
            }
        }
        if (!context_cache_[x]) throw Error(context_error_[x]);
        return *context_cache_[x];
    }

    TestDecision pair_dependence(std::size_t x, std::size_t y) {
        ++invocations_;
        return parcor_indep_test(data_.system().col(static_cast<Eigen::Index>(x)),
                                 data_.system().col(static_cast<Eigen::Index>(y)), config_.alpha);
    }

    TestDecision context_given(std::size_t y, std::size_t x) {
        ++invocations_;
        const auto yc = data_.system().col(static_cast<Eigen::Index>(y));
        const auto xc = data_.system().col(static_cast<Eigen::Index>(x));
        if (config_.test_kind == TestKind::kPartialCorrelation) {
            return parcor_indep_test(data_.context_column(), yc, xc, config_.alpha);
        }
        return mean_var_invariance_test(yc, xc, data_.context(), config_.alpha);
    }

    std::size_t invocations() const { return invocations_; }

private:
    TestDecision compute_context_dependence(std::size_t x) const {
        const auto xc = data_.system().col(static_cast<Eigen::Index>(x));
        if (config_.test_kind == TestKind::kPartialCorrelation) {
            return parcor_indep_test(data_.context_column(), xc, config_.alpha);
        }
        return mean_var_invariance_test(xc, Matrix(xc.size(), 0), data_.context(), config_.alpha);
    }

    const JciDataset& data_;
    LcdConfig config_;
    std::vector<std::optional<TestDecision>> context_cache_;
    std::vector<std::string> context_error_;
    std::size_t invocations_ = 0;
};

/// d-separation backend: system variable i is graph node i, the context is
/// node `context_node`. p-values are 0 (dependent) or 1 (separated).
class OracleLcdTests {
public:
    OracleLcdTests(const Dmg& graph, std::size_t context_node, double alpha = 0.01)
        : graph_(graph), context_(context_node), alpha_(alpha) {}

    TestDecision context_dependence(std::size_t x) { return verdict(context_, x, {}); }
    TestDecision pair_dependence(std::size_t x, std::size_t y) { return verdict(x, y, {}); }
    TestDecision context_given(std::size_t y, std::size_t x) { return verdict(context_, y, {x}); }

private:
    TestDecision verdict(std::size_t a, std::size_t b, const std::vector<std::size_t>& z) const {
        return TestDecision::at_level(d_separated(graph_, a, b, z) ? 1.0 : 0.0, alpha_);
    }

    const Dmg& graph_;
    std::size_t context_;
    double alpha_;
};

/// LCD triples with the given effect, testing (a), (b), (c) in order and
/// stopping at the first failed constraint. Test errors skip the candidate.
template <LcdTestBackend Backend>
std::vector<LcdTriple> lcd_search_target(Backend& tests, std::size_t effect, const std::vector<std::size_t>& candidates,
                                         Diagnostics* diag = nullptr) {
    std::vector<LcdTriple> out;
    for (std::size_t x : candidates) {
        if (x == effect) throw DomainError("lcd_for_target: effect is among the candidates");
        try {
            const TestDecision a = tests.context_dependence(x);
            if (!a.dependent) continue;
            const TestDecision b = tests.pair_dependence(x, effect);
            if (!b.dependent) continue;
            const TestDecision c = tests.context_given(effect, x);
            if (c.dependent) continue;
            out.push_back({x, effect, a.p_value, b.p_value, c.p_value});
        } catch (const Error& e) {
            note(diag, "lcd candidate " + std::to_string(x) + " -> " + std::to_string(effect) + ": " + e.what());
        }
    }
    return out;
}

inline std::vector<LcdTriple> lcd_for_target(std::size_t effect, const std::vector<std::size_t>& candidates,
                                             const JciDataset& data, const LcdConfig& config,
                                             Diagnostics* diag = nullptr) {
    DataLcdTests tests(data, config);
    return lcd_search_target(tests, effect, candidates, diag);
}

/// All LCD triples over the dataset: candidates are every other variable, or
/// the boosting preselection for the effect when config.preselect is set.
inline std::vector<LcdTriple> lcd_triples(const JciDataset& data, const LcdConfig& config, Diagnostics* diag = nullptr) {
    DataLcdTests tests(data, config);
    std::optional<BoostPanel> panel;
    if (config.preselect) panel.emplace(data.system());
    std::vector<LcdTriple> all;
    for (std::size_t y = 0; y < data.num_vars(); ++y) {
        std::vector<std::size_t> candidates;
        if (panel) {
            try {
                candidates = panel->preselect_target(y, config.boost);
            } catch (const Error& e) {
                note(diag, "lcd preselection for " + data.gene_names()[y] + ": " + e.what());
                continue;
            }
            std::sort(candidates.begin(), candidates.end());
        } else {
            candidates.reserve(data.num_vars() - 1);
            for (std::size_t x = 0; x < data.num_vars(); ++x)
                if (x != y) candidates.push_back(x);
        }
        const auto found = lcd_search_target(tests, y, candidates, diag);
        all.insert(all.end(), found.begin(), found.end());
    }
    return all;
}

inline PredictionScores lcd_predict(const JciDataset& data, const LcdConfig& config, Diagnostics* diag = nullptr) {
    PredictionScores out;
    for (const auto& t : lcd_triples(data, config, diag)) out.add({t.cause, t.effect});
    return out;
}

}  // namespace lcdb
