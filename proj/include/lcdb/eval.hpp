#pragma once

// Evaluation against interventional test data: standardized knockout effect
// scores, prevalence thresholding, tie-aware ROC curves and the band of
// random rankings.

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "lcdb/dataset.hpp"
#include "lcdb/diagnostics.hpp"
#include "lcdb/scores.hpp"
#include "lcdb/stats.hpp"

namespace lcdb {

/// Knockout effect scores keyed by (intervention target, affected gene).
struct GroundTruth {
    std::map<GenePair, double> scores;
    std::string source;
};

struct ObservationalMoments {
    Vector mean;
    Vector sd;  // n-1 denominator
};

inline ObservationalMoments observational_moments(const ExpressionTable& table, const std::vector<std::size_t>& obs_rows) {
    if (obs_rows.size() < 2) throw InsufficientSamples("ground truth needs at least 2 observational rows");
    const auto p = table.values.cols();
    ObservationalMoments m{Vector::Zero(p), Vector::Zero(p)};
    for (auto r : obs_rows) m.mean += table.values.row(static_cast<Eigen::Index>(r)).transpose();
    m.mean /= static_cast<double>(obs_rows.size());
    for (auto r : obs_rows) {
        m.sd.array() += (table.values.row(static_cast<Eigen::Index>(r)).transpose() - m.mean).array().square();
    }
    m.sd = (m.sd / static_cast<double>(obs_rows.size() - 1)).cwiseSqrt();
    return m;
}

/// |X_{j;i} - mu_j| / sigma_j for every interventional row i whose target is
/// a measured gene and every other gene j. Genes with sigma_j = 0 are left
/// out with a diagnostic.
inline GroundTruth ground_truth_scores(const ExpressionTable& table, const std::vector<std::size_t>& intervention_rows,
                                       const std::vector<std::size_t>& obs_rows, Diagnostics* diag = nullptr) {
    const auto moments = observational_moments(table, obs_rows);
    const auto p = table.num_genes();
    std::vector<char> usable(p, 1);
    for (std::size_t j = 0; j < p; ++j) {
        if (!(moments.sd[static_cast<Eigen::Index>(j)] > 0.0)) {
            usable[j] = 0;
            note(diag, "gene " + table.gene_names[j] + " has zero observational spread; excluded from ground truth");
        }
    }
    GroundTruth gt;
    gt.source = "observational rows: " + std::to_string(obs_rows.size());
    for (auto r : intervention_rows) {
        if (table.is_observational(r)) throw DomainError("ground_truth_scores: row is observational");
        const auto target = table.gene_index(*table.intervention[r]);
        if (!target) continue;
        for (std::size_t j = 0; j < p; ++j) {
            if (j == *target || !usable[j]) continue;
            const auto jj = static_cast<Eigen::Index>(j);
            const double s =
                std::fabs(table.values(static_cast<Eigen::Index>(r), jj) - moments.mean[jj]) / moments.sd[jj];
            gt.scores[{*target, j}] = s;
        }
    }
    return gt;
}

/// Labels the floor(q * |pairs|) highest scoring pairs true; ties at the
/// cut are resolved by lexicographic pair order.
inline std::map<GenePair, bool> threshold_at_prevalence(const GroundTruth& gt, double q) {
    if (!(q > 0.0 && q < 1.0)) throw DomainError("prevalence must lie in (0, 1)");
    const auto positives = static_cast<std::size_t>(std::floor(q * static_cast<double>(gt.scores.size())));
    if (positives < 1) throw DomainError("prevalence selects no pair");
    std::vector<std::pair<GenePair, double>> ranked(gt.scores.begin(), gt.scores.end());
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    std::map<GenePair, bool> labels;
    for (std::size_t i = 0; i < ranked.size(); ++i) labels.emplace(ranked[i].first, i < positives);
    return labels;
}

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
};

struct RocCurve {
    std::vector<RocPoint> points;
    std::size_t positives = 0;
    std::size_t negatives = 0;
};

/// ROC curve of prediction counts against labels over the labelled pairs.
/// Pairs without a prediction count 0; each group of equal counts forms one
/// segment.
inline RocCurve roc_curve(const PredictionScores& prediction, const std::map<GenePair, bool>& labels) {
    if (labels.empty()) throw DomainError("roc_curve: empty universe");
    std::vector<std::pair<int, bool>> ranked;
    ranked.reserve(labels.size());
    RocCurve curve;
    for (const auto& [pair, label] : labels) {
        ranked.emplace_back(prediction.count(pair), label);
        (label ? curve.positives : curve.negatives) += 1;
    }
    if (curve.positives == 0 || curve.negatives == 0) {
        throw DomainError("roc_curve: universe needs both positive and negative pairs");
    }
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    const double P = static_cast<double>(curve.positives);
    const double N = static_cast<double>(curve.negatives);
    curve.points.push_back({0.0, 0.0});
    std::size_t tp = 0;
    std::size_t fp = 0;
    for (std::size_t i = 0; i < ranked.size();) {
        std::size_t j = i;
        while (j < ranked.size() && ranked[j].first == ranked[i].first) {
            (ranked[j].second ? tp : fp) += 1;
            ++j;
        }
        curve.points.push_back({static_cast<double>(fp) / N, static_cast<double>(tp) / P});
        i = j;
    }
    return curve;
}

/// Trapezoidal area under a piecewise linear curve up to max_fpr.
inline double partial_auc(const std::vector<RocPoint>& points, double max_fpr) {
    double area = 0.0;
    for (std::size_t i = 1; i < points.size(); ++i) {
        const auto& a = points[i - 1];
        const auto& b = points[i];
        if (a.fpr >= max_fpr) break;
        if (b.fpr <= max_fpr) {
            area += (b.fpr - a.fpr) * (a.tpr + b.tpr) / 2.0;
        } else {
            const double t = (max_fpr - a.fpr) / (b.fpr - a.fpr);
            const double tpr_cut = a.tpr + t * (b.tpr - a.tpr);
            area += (max_fpr - a.fpr) * (a.tpr + tpr_cut) / 2.0;
        }
    }
    return area;
}

inline double roc_auc(const RocCurve& curve) { return partial_auc(curve.points, 1.0); }

namespace detail {

inline double log_choose(double n, double k) {
    return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

/// Smallest k with P(K <= k) >= prob for K ~ Hypergeometric(total, successes, draws).
inline std::size_t hypergeometric_quantile(std::size_t total, std::size_t successes, std::size_t draws, double prob) {
    const std::size_t failures = total - successes;
    const std::size_t lo = draws > failures ? draws - failures : 0;
    const std::size_t hi = std::min(successes, draws);
    const double log_norm = log_choose(static_cast<double>(total), static_cast<double>(draws));
    double cdf = 0.0;
    for (std::size_t k = lo; k <= hi; ++k) {
        cdf += std::exp(log_choose(static_cast<double>(successes), static_cast<double>(k)) +
                        log_choose(static_cast<double>(failures), static_cast<double>(draws - k)) - log_norm);
        if (cdf >= prob * (1.0 - 1e-12)) return k;
    }
    return hi;
}

}  // namespace detail

struct BandPoint {
    double fpr = 0.0;
    double tpr_low = 0.0;
    double tpr_high = 0.0;
};

/// Central `confidence` band of the TPR of a uniformly random ranking of
/// `positives` + `negatives` pairs, at grid_size + 1 equally spaced FPR
/// values. At FPR f, f * total pairs have been drawn and the number of
/// positives among them is hypergeometric; when f * total is fractional the
/// lower edge uses the floor and the upper edge the ceiling of the draws.
inline std::vector<BandPoint> random_band(std::size_t positives, std::size_t negatives, double confidence,
                                          std::size_t grid_size = 1000) {
    if (positives < 1 || negatives < 1) throw DomainError("random_band: need positives and negatives");
    if (!(confidence > 0.0 && confidence < 1.0)) throw DomainError("random_band: confidence must lie in (0, 1)");
    if (grid_size < 1) throw DomainError("random_band: empty grid");
    const std::size_t total = positives + negatives;
    const double tail = (1.0 - confidence) / 2.0;
    std::vector<BandPoint> band;
    band.reserve(grid_size + 1);
    for (std::size_t g = 0; g <= grid_size; ++g) {
        const double f = static_cast<double>(g) / static_cast<double>(grid_size);
        const double drawn = f * static_cast<double>(total);
        const double near = std::round(drawn);
        const bool whole = std::fabs(drawn - near) < 1e-9;
        const auto lo_draws = static_cast<std::size_t>(whole ? near : std::floor(drawn));
        const auto hi_draws = static_cast<std::size_t>(whole ? near : std::ceil(drawn));
        const auto k_low = detail::hypergeometric_quantile(total, positives, lo_draws, tail);
        const auto k_high = detail::hypergeometric_quantile(total, positives, hi_draws, 1.0 - tail);
        band.push_back({f, static_cast<double>(k_low) / static_cast<double>(positives),
                        static_cast<double>(k_high) / static_cast<double>(positives)});
    }
    return band;
}

/// Area under the upper edge of the band up to max_fpr.
inline double band_upper_partial_auc(const std::vector<BandPoint>& band, double max_fpr) {
    std::vector<RocPoint> upper;
    upper.reserve(band.size());
    for (const auto& b : band) upper.push_back({b.fpr, b.tpr_high});
    return partial_auc(upper, max_fpr);
}

/// Ground truth over all folds: each fold's interventional test rows scored
/// with moments from all observational rows of the table.
inline GroundTruth split_ground_truth(const ExpressionTable& table, const FoldSplit& split, Diagnostics* diag = nullptr) {
    std::vector<std::size_t> iv_rows;
    for (const auto& f : split.interventional) iv_rows.insert(iv_rows.end(), f.begin(), f.end());
    std::sort(iv_rows.begin(), iv_rows.end());
    auto gt = ground_truth_scores(table, iv_rows, table.observational_rows(), diag);
    gt.source = "all observational rows; " + std::to_string(split.k) + " folds";
    return gt;
}

/// Merges per-fold predictions, keeping from fold f only pairs whose cause is
/// a knockout target of that fold's test rows. Folds are disjoint in their
/// targets, so the merge is a disjoint union.
inline PredictionScores merge_fold_predictions(const ExpressionTable& table, const FoldSplit& split,
                                               const std::vector<PredictionScores>& per_fold) {
    if (per_fold.size() != split.k) throw DomainError("merge_fold_predictions: need one prediction set per fold");
    PredictionScores merged;
    merged.runs = per_fold.empty() ? 1 : per_fold.front().runs;
    for (std::size_t f = 0; f < split.k; ++f) {
        std::vector<char> is_target(table.num_genes(), 0);
        for (auto r : split.interventional[f]) {
            if (const auto t = table.gene_index(*table.intervention[r])) is_target[*t] = 1;
        }
        for (const auto& [pair, count] : per_fold[f].counts) {
            if (pair.cause < is_target.size() && is_target[pair.cause]) merged.add(pair, count);
        }
    }
    return merged;
}

}  // namespace lcdb
