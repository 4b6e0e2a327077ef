#pragma once

// Invariant Causal Prediction with boosting preselection and the
// mean-variance invariance test. Candidate subsets are scanned by increasing
// size (lexicographic within a size); the output is the intersection of all
// subsets whose residuals are not rejected as non-invariant.

#include <algorithm>
#include <functional>
#include <iterator>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lcdb/boosting.hpp"
#include "lcdb/dataset.hpp"
#include "lcdb/diagnostics.hpp"
#include "lcdb/indep_tests.hpp"
#include "lcdb/scores.hpp"

namespace lcdb {

struct IcpConfig {
    double alpha = 0.01;
    BoostParams boost;
    bool stop_if_empty = true;
};

struct AcceptedSet {
    std::vector<std::size_t> members;
    double p_value = 1.0;
};

struct IcpResult {
    std::size_t target = 0;
    std::vector<std::size_t> candidates;  // sorted preselection
    std::vector<AcceptedSet> accepted_sets;
    std::vector<std::size_t> output_set;  // sorted
    bool model_rejected = false;
    bool stopped_early = false;
    std::size_t tests_run = 0;
    std::string error;  // preselection failure, if any
};

/// Calls visit(subset) for every subset of `items` by increasing size,
/// lexicographic within a size, until visit returns false.
template <class Visit>
void for_each_subset_by_size(const std::vector<std::size_t>& items, Visit&& visit) {
    const std::size_t m = items.size();
    std::vector<std::size_t> idx;
    std::vector<std::size_t> subset;
    for (std::size_t k = 0; k <= m; ++k) {
        idx.resize(k);
        for (std::size_t i = 0; i < k; ++i) idx[i] = i;
        while (true) {
            subset.resize(k);
            for (std::size_t i = 0; i < k; ++i) subset[i] = items[idx[i]];
            if (!visit(std::as_const(subset))) return;
            // Advance to the next k-combination in lexicographic order.
            std::size_t i = k;
            while (i > 0 && idx[i - 1] == m - k + (i - 1)) --i;
            if (i == 0) break;
            ++idx[i - 1];
            for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
        }
    }
}

/// The subset scan with a running intersection. `test(subset)` returns the
/// invariance p-value or nullopt when the test failed (not accepted).
inline IcpResult icp_scan(std::vector<std::size_t> candidates, double alpha, bool stop_if_empty,
                          const std::function<std::optional<double>(const std::vector<std::size_t>&)>& test) {
    std::sort(candidates.begin(), candidates.end());
    IcpResult r;
    r.candidates = candidates;
    r.output_set = candidates;
    bool any_accepted = false;
    for_each_subset_by_size(candidates, [&](const std::vector<std::size_t>& subset) {
        ++r.tests_run;
        const auto p = test(subset);
        if (!p || *p < alpha) return true;
        r.accepted_sets.push_back({subset, *p});
        if (!any_accepted) {
            r.output_set = subset;
            any_accepted = true;
        } else {
            std::vector<std::size_t> kept;
            std::set_intersection(r.output_set.begin(), r.output_set.end(), subset.begin(), subset.end(),
                                  std::back_inserter(kept));
            r.output_set = std::move(kept);
        }
        if (stop_if_empty && r.output_set.empty()) {
            r.stopped_early = true;
            return false;
        }
        return true;
    });
    if (!any_accepted) {
        r.model_rejected = true;
        r.output_set.clear();
    }
    return r;
}

/// ICP scan for `effect` over an explicit candidate list.
inline IcpResult icp_with_candidates(std::size_t effect, std::vector<std::size_t> candidates, const JciDataset& data,
                                     double alpha, bool stop_if_empty, Diagnostics* diag = nullptr) {
    check_alpha(alpha);
    const auto& sys = data.system();
    const auto y = sys.col(static_cast<Eigen::Index>(effect));
    Matrix design;
    auto test = [&](const std::vector<std::size_t>& subset) -> std::optional<double> {
        design.resize(sys.rows(), static_cast<Eigen::Index>(subset.size()));
        for (std::size_t i = 0; i < subset.size(); ++i) {
            design.col(static_cast<Eigen::Index>(i)) = sys.col(static_cast<Eigen::Index>(subset[i]));
        }
        try {
            return mean_var_pvalues(y, design, data.context()).p;
        } catch (const Error& e) {
            note(diag, "icp subset test for target " + data.gene_names()[effect] + ": " + e.what());
            return std::nullopt;
        }
    };
    IcpResult r = icp_scan(std::move(candidates), alpha, stop_if_empty, test);
    r.target = effect;
    return r;
}

/// ICP for one target; the preselection comes from `panel` when given.
inline IcpResult icp_for_target(std::size_t effect, const JciDataset& data, const IcpConfig& config,
                                Diagnostics* diag = nullptr, const BoostPanel* panel = nullptr) {
    std::optional<BoostPanel> local;
    if (panel == nullptr) panel = &local.emplace(data.system());
    std::vector<std::size_t> candidates;
    try {
        candidates = panel->preselect_target(effect, config.boost);
    } catch (const Error& e) {
        IcpResult r;
        r.target = effect;
        r.error = e.what();
        note(diag, "icp preselection for " + data.gene_names()[effect] + ": " + e.what());
        return r;
    }
    return icp_with_candidates(effect, std::move(candidates), data, config.alpha, config.stop_if_empty, diag);
}

inline PredictionScores icp_predict(const JciDataset& data, const IcpConfig& config, Diagnostics* diag = nullptr) {
    PredictionScores out;
    const BoostPanel panel(data.system());
    for (std::size_t y = 0; y < data.num_vars(); ++y) {
        const IcpResult r = icp_for_target(y, data, config, diag, &panel);
        for (auto x : r.output_set) out.add({x, y});
    }
    return out;
}

}  // namespace lcdb
