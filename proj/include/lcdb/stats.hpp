#pragma once

// Numerical primitives shared by every estimator: least squares, correlation,
// the Student t and F distributions, and the two-sample mean/variance tests.
// Variances use the n-1 denominator throughout.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "lcdb/errors.hpp"

namespace lcdb {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using VectorRef = Eigen::Ref<const Eigen::VectorXd>;
using MatrixRef = Eigen::Ref<const Eigen::MatrixXd>;

struct RegressionFit {
    Vector coefficients;  // one per predictor column
    double intercept = 0.0;
    bool has_intercept = false;
    Vector residuals;
    double rss = 0.0;
};

namespace detail {

// Sum of squared deviations is treated as zero when it is below rounding
// noise relative to the magnitude of the data.
inline bool negligible_spread(double ss, double scale, Eigen::Index n) {
    const double tol = 64.0 * std::numeric_limits<double>::epsilon() * scale;
    return ss <= static_cast<double>(n) * tol * tol;
}

inline double max_abs(const VectorRef& v) {
    return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

// Modified Lentz evaluation of the continued fraction for I_x(a, b).
inline double beta_continued_fraction(double a, double b, double x) {
    constexpr int kMaxIter = 20000;
    constexpr double kEps = 1e-16;
    constexpr double kTiny = 1e-300;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) return h;
    }
    throw DomainError("incomplete beta: continued fraction did not converge");
}

}  // namespace detail

/// Regularized incomplete beta function as the pair (I_x(a,b), 1 - I_x(a,b)).
/// The smaller tail is evaluated directly, so both members keep full
/// relative accuracy far out in the tails.
inline std::pair<double, double> incomplete_beta_tails(double x, double a, double b) {
    if (!(a > 0.0) || !(b > 0.0)) throw DomainError("incomplete beta: shape parameters must be positive");
    if (!(x >= 0.0 && x <= 1.0)) throw DomainError("incomplete beta: x outside [0, 1]");
    if (x == 0.0) return {0.0, 1.0};
    if (x == 1.0) return {1.0, 0.0};
    const double log_front =
        std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        const double lower = front * detail::beta_continued_fraction(a, b, x) / a;
        return {lower, 1.0 - lower};
    }
    const double upper = front * detail::beta_continued_fraction(b, a, 1.0 - x) / b;
    return {1.0 - upper, upper};
}

inline double incomplete_beta(double x, double a, double b) {
    return incomplete_beta_tails(x, a, b).first;
}

/// P(T <= t) for Student's t with df degrees of freedom.
inline double student_t_cdf(double t, double df) {
    if (!(df > 0.0)) throw DomainError("student_t_cdf: df must be positive, got " + std::to_string(df));
    if (std::isnan(t)) throw DomainError("student_t_cdf: t is NaN");
    if (t == 0.0) return 0.5;
    if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
    // Both signs share one evaluation of the tail so cdf(t) + cdf(-t) == 1.
    const double tail = 0.5 * incomplete_beta(df / (df + t * t), 0.5 * df, 0.5);
    return t < 0.0 ? tail : 1.0 - tail;
}

/// Two-sided tail probability P(|T| >= |t|), accurate for tiny values.
inline double student_t_two_sided(double t, double df) {
    if (!(df > 0.0)) throw DomainError("student_t_two_sided: df must be positive");
    if (std::isinf(t)) return 0.0;
    if (t == 0.0) return 1.0;
    return std::min(1.0, incomplete_beta(df / (df + t * t), 0.5 * df, 0.5));
}

/// F distribution tails (P(F <= x), P(F > x)).
inline std::pair<double, double> f_tails(double x, double d1, double d2) {
    if (!(d1 > 0.0) || !(d2 > 0.0)) throw DomainError("f_cdf: degrees of freedom must be positive");
    if (!(x >= 0.0)) throw DomainError("f_cdf: x must be nonnegative");
    if (std::isinf(x)) return {1.0, 0.0};
    const double z = d1 * x / (d1 * x + d2);
    return incomplete_beta_tails(z, 0.5 * d1, 0.5 * d2);
}

inline double f_cdf(double x, double d1, double d2) { return f_tails(x, d1, d2).first; }

inline double mean(const VectorRef& v) {
    if (v.size() == 0) throw InsufficientSamples("mean of empty sample");
    return v.mean();
}

/// Unbiased sample variance.
inline double variance(const VectorRef& v) {
    if (v.size() < 2) throw InsufficientSamples("variance needs at least 2 samples");
    const double m = v.mean();
    return (v.array() - m).square().sum() / static_cast<double>(v.size() - 1);
}

/// Least squares fit of response on predictors, optionally with an intercept.
///
/// Uses a column-pivoted Householder QR; a rank-deficient design raises
/// SingularDesign instead of falling back to a pseudo-inverse.
inline RegressionFit ols_fit(const MatrixRef& predictors, const VectorRef& response, bool with_intercept) {
    const Eigen::Index n = response.size();
    const Eigen::Index k = predictors.cols();
    if (predictors.rows() != n) throw DomainError("ols_fit: predictor rows do not match response length");
    const Eigen::Index needed = k + (with_intercept ? 2 : 1);
    if (n < needed) {
        throw InsufficientSamples("ols_fit: " + std::to_string(n) + " samples for " + std::to_string(k) +
                                  " predictors");
    }

    RegressionFit fit;
    fit.has_intercept = with_intercept;
    if (k == 0) {
        fit.coefficients.resize(0);
        if (with_intercept) {
            fit.intercept = response.mean();
            fit.residuals = response.array() - fit.intercept;
        } else {
            fit.residuals = response;
        }
        fit.rss = fit.residuals.squaredNorm();
        return fit;
    }

    // With an intercept, solve the equivalent slope problem on centered columns.
    Matrix design;
    Vector target;
    Eigen::RowVectorXd col_means;
    double response_mean = 0.0;
    if (with_intercept) {
        col_means = predictors.colwise().mean();
        design = predictors.rowwise() - col_means;
        response_mean = response.mean();
        target = response.array() - response_mean;
    } else {
        design = predictors;
        target = response;
    }

    Eigen::ColPivHouseholderQR<Matrix> qr(design);
    qr.setThreshold(1e-10);
    if (qr.rank() < k) {
        throw SingularDesign("ols_fit: design of " + std::to_string(k) + " columns has rank " +
                             std::to_string(qr.rank()));
    }
    fit.coefficients = qr.solve(target);
    if (with_intercept) fit.intercept = response_mean - col_means.dot(fit.coefficients);
    fit.residuals = target - design * fit.coefficients;
    fit.rss = fit.residuals.squaredNorm();
    return fit;
}

/// Pearson correlation, clamped to [-1, 1].
inline double pearson_corr(const VectorRef& x, const VectorRef& y) {
    const Eigen::Index n = x.size();
    if (y.size() != n) throw DomainError("pearson_corr: length mismatch");
    if (n < 3) throw InsufficientSamples("pearson_corr: need at least 3 samples");
    const Eigen::ArrayXd dx = x.array() - x.mean();
    const Eigen::ArrayXd dy = y.array() - y.mean();
    const double sxx = dx.square().sum();
    const double syy = dy.square().sum();
    if (detail::negligible_spread(sxx, detail::max_abs(x), n) || detail::negligible_spread(syy, detail::max_abs(y), n)) {
        throw DegenerateVariance("pearson_corr: constant input");
    }
    const double sxy = (dx * dy).sum();
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

/// Partial correlation of x and y given a single conditioning variable z,
/// via the first-order recursion on pairwise correlations.
inline double partial_corr(const VectorRef& x, const VectorRef& y, const VectorRef& z) {
    if (x.size() < 4) throw InsufficientSamples("partial_corr: need at least 4 samples");
    const double rxy = pearson_corr(x, y);
    const double rxz = pearson_corr(x, z);
    const double ryz = pearson_corr(y, z);
    constexpr double kCollinear = 1.0 - 1e-12;
    if (std::fabs(rxz) >= kCollinear || std::fabs(ryz) >= kCollinear) {
        throw DegenerateConditioning("partial_corr: conditioning variable is collinear with a tested variable");
    }
    const double denom = std::sqrt((1.0 - rxz * rxz) * (1.0 - ryz * ryz));
    return std::clamp((rxy - rxz * ryz) / denom, -1.0, 1.0);
}

/// Welch two-sample t-test; returns the two-sided p-value.
///
/// Two constant samples give p = 1 when their values agree and p = 0
/// otherwise, so subsamples with constant slices never abort a run.
inline double welch_t_test(const VectorRef& a, const VectorRef& b) {
    if (a.size() < 2 || b.size() < 2) throw InsufficientSamples("welch_t_test: each sample needs 2 values");
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    const double ma = a.mean();
    const double mb = b.mean();
    const double va = variance(a);
    const double vb = variance(b);
    const bool a_const = detail::negligible_spread(va * (na - 1.0), detail::max_abs(a), a.size());
    const bool b_const = detail::negligible_spread(vb * (nb - 1.0), detail::max_abs(b), b.size());
    if (a_const && b_const) {
        const double scale = std::max(detail::max_abs(a), detail::max_abs(b));
        return std::fabs(ma - mb) <= 64.0 * std::numeric_limits<double>::epsilon() * scale ? 1.0 : 0.0;
    }
    const double sa = va / na;
    const double sb = vb / nb;
    const double se2 = sa + sb;
    const double t = (ma - mb) / std::sqrt(se2);
    const double df = se2 * se2 / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
    return student_t_two_sided(t, df);
}

/// Two-sided F-test for equality of variances.
inline double f_var_test(const VectorRef& a, const VectorRef& b) {
    if (a.size() < 2 || b.size() < 2) throw InsufficientSamples("f_var_test: each sample needs 2 values");
    const double va = variance(a);
    const double vb = variance(b);
    const auto na = a.size();
    const auto nb = b.size();
    if (detail::negligible_spread(va * static_cast<double>(na - 1), detail::max_abs(a), na) ||
        detail::negligible_spread(vb * static_cast<double>(nb - 1), detail::max_abs(b), nb)) {
        throw DegenerateVariance("f_var_test: constant sample");
    }
    // Evaluate with the larger variance on top so that swapping arguments
    // hits the same tail computation.
    const bool a_top = va > vb || (va == vb && na >= nb);
    const double ratio = a_top ? va / vb : vb / va;
    const double d1 = static_cast<double>(a_top ? na - 1 : nb - 1);
    const double d2 = static_cast<double>(a_top ? nb - 1 : na - 1);
    const auto [lower, upper] = f_tails(ratio, d1, d2);
    return std::min(1.0, 2.0 * std::min(lower, upper));
}

}  // namespace lcdb
