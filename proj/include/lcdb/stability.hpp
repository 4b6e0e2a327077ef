#pragma once

// Stability selection: run an estimator on B random subsamples (without
// replacement) and count how often each ordered pair is predicted.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "lcdb/dataset.hpp"
#include "lcdb/diagnostics.hpp"
#include "lcdb/estimators.hpp"
#include "lcdb/parallel.hpp"
#include "lcdb/random.hpp"
#include "lcdb/scores.hpp"

namespace lcdb {

struct StabilityParams {
    int subsamples = 100;
    double fraction = 0.5;
    std::uint64_t seed = 0;
    std::size_t threads = 1;
    /// A call fails when more than this share of subsample runs fail.
    double max_failed_share = 0.1;
};

/// Sorted row indices of subsample b: floor(fraction * n) distinct rows,
/// drawn with a generator derived from (seed, b).
inline std::vector<std::size_t> subsample_rows(std::size_t n, double fraction, std::uint64_t seed, std::uint64_t b) {
    if (!(fraction > 0.0 && fraction <= 1.0)) throw DomainError("subsample fraction must lie in (0, 1]");
    const auto m = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n)));
    std::vector<std::size_t> rows(n);
    for (std::size_t i = 0; i < n; ++i) rows[i] = i;
    Rng rng(derive_seed(seed, b));
    for (std::size_t i = 0; i < m; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, n - 1);
        std::swap(rows[i], rows[pick(rng)]);
    }
    rows.resize(m);
    std::sort(rows.begin(), rows.end());
    return rows;
}

using Estimator = std::function<PredictionScores(const JciDataset&, Diagnostics*)>;

/// Counts over params.subsamples runs. The result depends only on the
/// dataset, the estimator and (subsamples, fraction, seed); not on threads.
inline PredictionScores stabilized_run(const JciDataset& data, const Estimator& estimator, const StabilityParams& params,
                                       Diagnostics* diag = nullptr) {
    if (params.subsamples < 1) throw DomainError("stabilized_run: need at least one subsample");
    const auto runs = static_cast<std::size_t>(params.subsamples);
    std::vector<PredictionScores> results(runs);
    std::vector<char> failed(runs, 0);
    parallel_for(runs, params.threads, [&](std::size_t b) {
        try {
            const auto rows = subsample_rows(data.num_samples(), params.fraction, params.seed, b);
            results[b] = estimator(data.subset(rows), diag);
        } catch (const Error& e) {
            failed[b] = 1;
            note(diag, "subsample " + std::to_string(b) + " failed: " + e.what());
        }
    });
    const auto n_failed = static_cast<std::size_t>(std::count(failed.begin(), failed.end(), 1));
    if (static_cast<double>(n_failed) > params.max_failed_share * static_cast<double>(runs)) {
        throw Error("stabilized_run: " + std::to_string(n_failed) + " of " + std::to_string(runs) +
                    " subsample runs failed");
    }
    PredictionScores total;
    total.runs = params.subsamples;
    for (std::size_t b = 0; b < runs; ++b) {
        if (failed[b]) continue;
        for (const auto& [pair, count] : results[b].counts) if (count > 0) total.add(pair);
    }
    return total;
}

inline PredictionScores stabilized_run(const JciDataset& data, const EstimatorConfig& config,
                                       const StabilityParams& params, Diagnostics* diag = nullptr) {
    return stabilized_run(
        data, [&config](const JciDataset& d, Diagnostics* dg) { return run_estimator(d, config, dg); }, params, diag);
}

}  // namespace lcdb
