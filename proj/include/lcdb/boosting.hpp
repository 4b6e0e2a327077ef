#pragma once

// Componentwise L2-boosting with linear base learners, used both as a
// variable preselection step and as a (non-causal) baseline estimator.
//
// Predictors are standardized and the response centered. Each iteration
// fits the current residual on every eligible column separately and moves
// the fit by nu times the best single-column least squares fit. Working on
// the correlation vector g = Z^T u keeps an iteration at O(p) once the
// Gram columns of the selected predictors are known.

#include <cmath>
#include <string>
#include <vector>

#include "lcdb/dataset.hpp"
#include "lcdb/diagnostics.hpp"
#include "lcdb/scores.hpp"
#include "lcdb/stats.hpp"

namespace lcdb {

struct BoostParams {
    std::size_t max_vars = 8;
    int mstop = 100;
    double nu = 0.1;
};

struct BoostSelection {
    std::vector<std::size_t> selection_order;  // first-selection order, distinct
    Vector coefficients;                       // on standardized predictors
    std::vector<double> rss_path;              // training RSS after each iteration
    int mstop = 0;
    double nu = 0.0;
};

namespace detail {

inline void check_boost_params(int mstop, double nu) {
    if (mstop < 1) throw DomainError("l2_boost: mstop must be positive");
    if (!(nu > 0.0 && nu <= 1.0)) throw DomainError("l2_boost: nu must lie in (0, 1]");
}

/// Standardizes columns in place (n-1 scaling); returns per-column
/// eligibility (false for constant columns, which are zeroed).
inline std::vector<char> standardize_columns(Matrix& z) {
    const auto n = z.rows();
    std::vector<char> eligible(static_cast<std::size_t>(z.cols()), 0);
    for (Eigen::Index j = 0; j < z.cols(); ++j) {
        auto col = z.col(j);
        const double scale = col.cwiseAbs().maxCoeff();
        col.array() -= col.mean();
        const double ss = col.squaredNorm();
        if (negligible_spread(ss, scale, n)) {
            col.setZero();
            continue;
        }
        col /= std::sqrt(ss / static_cast<double>(n - 1));
        eligible[static_cast<std::size_t>(j)] = 1;
    }
    return eligible;
}

/// Boosting loop on the correlation vector. `gram_col(j)` returns column j
/// of Z^T Z. `rss0` is the squared norm of the centered response.
template <class GramColumn>
BoostSelection boost_on_correlations(Vector g, const std::vector<char>& eligible, Eigen::Index n, double rss0,
                                     int mstop, double nu, GramColumn&& gram_col) {
    const auto p = g.size();
    const double denom = static_cast<double>(n - 1);
    BoostSelection sel;
    sel.mstop = mstop;
    sel.nu = nu;
    sel.coefficients = Vector::Zero(p);
    sel.rss_path.reserve(static_cast<std::size_t>(mstop));
    std::vector<char> selected(static_cast<std::size_t>(p), 0);
    double rss = rss0;
    for (int m = 0; m < mstop; ++m) {
        Eigen::Index best = -1;
        double best_score = -1.0;
        for (Eigen::Index j = 0; j < p; ++j) {
            if (!eligible[static_cast<std::size_t>(j)]) continue;
            const double score = g[j] * g[j];
            if (score > best_score) {
                best_score = score;
                best = j;
            }
        }
        const double beta = g[best] / denom;
        const double step = nu * beta;
        sel.coefficients[best] += step;
        g.noalias() -= step * gram_col(best);
        rss -= (2.0 * nu - nu * nu) * beta * beta * denom;
        sel.rss_path.push_back(std::max(rss, 0.0));
        if (!selected[static_cast<std::size_t>(best)]) {
            selected[static_cast<std::size_t>(best)] = 1;
            sel.selection_order.push_back(static_cast<std::size_t>(best));
        }
    }
    return sel;
}

inline bool any_eligible(const std::vector<char>& eligible) {
    for (char e : eligible)
        if (e) return true;
    return false;
}

}  // namespace detail

/// Componentwise L2-boosting of response on the columns of predictors.
/// Ties in the componentwise fit go to the lowest column index.
inline BoostSelection l2_boost(const MatrixRef& predictors, const VectorRef& response, int mstop, double nu) {
    detail::check_boost_params(mstop, nu);
    const auto n = predictors.rows();
    if (response.size() != n) throw DomainError("l2_boost: response length does not match predictor rows");
    if (n < 3) throw InsufficientSamples("l2_boost: need at least 3 samples");
    if (predictors.cols() < 1) throw NoEligiblePredictor("l2_boost: no predictors");

    Matrix z = predictors;
    const auto eligible = detail::standardize_columns(z);
    if (!detail::any_eligible(eligible)) throw NoEligiblePredictor("l2_boost: all predictor columns are constant");

    const Vector u = response.array() - response.mean();
    const double rss0 = u.squaredNorm();
    if (detail::negligible_spread(rss0, detail::max_abs(response), n)) {
        throw DegenerateVariance("l2_boost: constant response");
    }

    std::vector<Vector> cache(static_cast<std::size_t>(z.cols()));
    auto gram_col = [&](Eigen::Index j) -> const Vector& {
        auto& c = cache[static_cast<std::size_t>(j)];
        if (c.size() == 0) c = z.transpose() * z.col(j);
        return c;
    };
    return detail::boost_on_correlations(z.transpose() * u, eligible, n, rss0, mstop, nu, gram_col);
}

/// First max_vars indices of the boosting selection order.
inline std::vector<std::size_t> preselect(const MatrixRef& predictors, const VectorRef& response, std::size_t max_vars,
                                          int mstop, double nu) {
    if (max_vars < 1) throw DomainError("preselect: max_vars must be positive");
    auto order = l2_boost(predictors, response, mstop, nu).selection_order;
    if (order.size() > max_vars) order.resize(max_vars);
    return order;
}

/// Boosting of every system variable on all the others, sharing one
/// standardized matrix and Gram matrix across targets.
class BoostPanel {
public:
    explicit BoostPanel(const Matrix& system) : z_(system), n_(system.rows()) {
        if (n_ < 3) throw InsufficientSamples("BoostPanel: need at least 3 samples");
        sd_.resize(system.cols());
        for (Eigen::Index j = 0; j < system.cols(); ++j) {
            const double m = system.col(j).mean();
            sd_[j] = std::sqrt((system.col(j).array() - m).square().sum() / static_cast<double>(n_ - 1));
        }
        eligible_ = detail::standardize_columns(z_);
        gram_ = z_.transpose() * z_;
    }

    std::size_t num_vars() const { return static_cast<std::size_t>(z_.cols()); }

    /// Boosting of variable `target` on all other variables. Indices in the
    /// result refer to the full variable set; coefficients has one entry per
    /// variable (zero at the target).
    BoostSelection boost_target(std::size_t target, int mstop, double nu) const {
        detail::check_boost_params(mstop, nu);
        const auto t = static_cast<Eigen::Index>(target);
        if (t >= z_.cols()) throw DomainError("BoostPanel: target out of range");
        if (!eligible_[target]) throw DegenerateVariance("l2_boost: constant response");
        auto eligible = eligible_;
        eligible[target] = 0;
        if (!detail::any_eligible(eligible)) throw NoEligiblePredictor("l2_boost: all predictor columns are constant");
        // Centered response is sd * z_target.
        const double sd = sd_[t];
        const Vector g = sd * gram_.col(t);
        const double rss0 = sd * sd * static_cast<double>(n_ - 1);
        return detail::boost_on_correlations(g, eligible, n_, rss0, mstop, nu,
                                             [this](Eigen::Index j) { return gram_.col(j); });
    }

    std::vector<std::size_t> preselect_target(std::size_t target, const BoostParams& params) const {
        if (params.max_vars < 1) throw DomainError("preselect: max_vars must be positive");
        auto order = boost_target(target, params.mstop, params.nu).selection_order;
        if (order.size() > params.max_vars) order.resize(params.max_vars);
        return order;
    }

private:
    Matrix z_;
    Eigen::Index n_;
    Vector sd_;
    std::vector<char> eligible_;
    Matrix gram_;
};

/// Non-causal baseline: every preselected predictor X of Y yields (X, Y).
inline PredictionScores baseline_predict(const JciDataset& data, const BoostParams& params,
                                         Diagnostics* diag = nullptr) {
    PredictionScores out;
    const BoostPanel panel(data.system());
    for (std::size_t y = 0; y < data.num_vars(); ++y) {
        try {
            for (std::size_t x : panel.preselect_target(y, params)) out.add({x, y});
        } catch (const Error& e) {
            note(diag, "boost-baseline target " + data.gene_names()[y] + ": " + e.what());
        }
    }
    return out;
}

}  // namespace lcdb
