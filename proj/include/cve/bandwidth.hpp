#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>

#include "cve/errors.hpp"

namespace cve {

/// tr(Sigma_hat)/p with the 1/n covariance normalization: the best
/// isotropic approximation s of Sigma_hat in Frobenius norm.
inline double isotropic_variance(const Eigen::MatrixXd& X) {
    if (X.rows() < 2) throw InvalidArgument("isotropic_variance: need n >= 2");
    Eigen::MatrixXd Xc = X.rowwise() - X.colwise().mean();
    double trace = Xc.squaredNorm() / static_cast<double>(X.rows());
    if (!(trace > 0.0)) throw DegenerateData("isotropic_variance: all columns constant");
    return trace / static_cast<double>(X.cols());
}

namespace detail {

/// Regularized lower incomplete gamma P(a, x): series for x < a+1,
/// Lentz continued fraction for the upper tail otherwise.
inline double gammap(double a, double x) {
    if (!(a > 0.0) || x < 0.0) throw InvalidArgument("gammap: need a > 0, x >= 0");
    if (x == 0.0) return 0.0;
    const double lg = std::lgamma(a);
    if (x < a + 1.0) {
        double term = 1.0 / a;
        double sum = term;
        for (int k = 1; k < 10000; ++k) {
            term *= x / (a + k);
            sum += term;
            if (std::abs(term) < std::abs(sum) * 1e-16) break;
        }
        return sum * std::exp(-x + a * std::log(x) - lg);
    }
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double f = d;
    for (int k = 1; k < 10000; ++k) {
        double an = -k * (k - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        double delta = d * c;
        f *= delta;
        if (std::abs(delta - 1.0) < 1e-16) break;
    }
    double q = std::exp(-x + a * std::log(x) - lg) * f;
    return 1.0 - q;
}

} // namespace detail

/// Chi-square CDF with df degrees of freedom.
inline double chi2_cdf(int df, double x) {
    if (df < 1) throw InvalidArgument("chi2_cdf: df must be positive");
    if (x <= 0.0) return 0.0;
    return detail::gammap(0.5 * df, 0.5 * x);
}

/// Inverse chi-square CDF by bisection on the regularized incomplete
/// gamma, converged to floating-point resolution.
inline double chi2_quantile(int df, double prob) {
    if (df < 1) throw InvalidArgument("chi2_quantile: df must be positive");
    if (!(prob > 0.0 && prob < 1.0))
        throw InvalidArgument("chi2_quantile: prob must lie in (0, 1)");
    double lo = 0.0;
    double hi = df + 10.0;
    while (chi2_cdf(df, hi) < prob) {
        hi *= 2.0;
        if (hi > 1e300) throw InvalidArgument("chi2_quantile: quantile out of range");
    }
    for (int it = 0; it < 200 && (hi - lo) > 1e-15 * (1.0 + hi); ++it) {
        double mid = 0.5 * (lo + hi);
        if (chi2_cdf(df, mid) < prob) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

/// Slice-count bandwidth rule: h = chi2^{-1}_{p-q}((nObs-1)/(n-1)) * 2 tr(Sigma_hat)/p.
/// nObs is the expected number of points in a slice under an isotropic
/// normal approximation of the predictors.
inline double bandwidth_nobs(Eigen::Index n, Eigen::Index p, Eigen::Index q,
                             const Eigen::MatrixXd& X, double nobs) {
    if (q >= p) throw InvalidArgument("bandwidth_nobs: need q < p");
    if (!(nobs > 1.0) || nobs > static_cast<double>(n))
        throw InvalidArgument("bandwidth_nobs: need 1 < nObs <= n");
    if (X.rows() != n || X.cols() != p) throw InvalidArgument("bandwidth_nobs: X shape mismatch");
    double prob = (nobs - 1.0) / (static_cast<double>(n) - 1.0);
    // nObs = n asks for every point in every slice: the quantile diverges
    if (prob >= 1.0) return std::numeric_limits<double>::infinity();
    return chi2_quantile(static_cast<int>(p - q), prob) * 2.0 * isotropic_variance(X);
}

/// Rule-of-thumb bandwidth h = 1.2^2 * (2 tr(Sigma_hat)/p) * n^{-2/(4+p-q)}.
inline double bandwidth_rot(Eigen::Index n, Eigen::Index p, Eigen::Index q,
                            const Eigen::MatrixXd& X) {
    if (q >= p) throw InvalidArgument("bandwidth_rot: need q < p");
    if (n < 2) throw InvalidArgument("bandwidth_rot: need n >= 2");
    if (X.rows() != n || X.cols() != p) throw InvalidArgument("bandwidth_rot: X shape mismatch");
    double k = static_cast<double>(p - q);
    return 1.2 * 1.2 * (2.0 * isotropic_variance(X))
           * std::pow(static_cast<double>(n), -2.0 / (4.0 + k));
}

/// A bandwidth specification: fixed value, slice-count rule, or the
/// rule-of-thumb default.
struct BandwidthRule {
    enum class Kind { fixed, nobs, rule_of_thumb };
    Kind kind = Kind::rule_of_thumb;
    double value = 0.0; // fixed h, or the nObs target

    static BandwidthRule fixed(double h) {
        if (!(h > 0.0)) throw InvalidArgument("BandwidthRule: fixed h must be positive");
        return {Kind::fixed, h};
    }
    static BandwidthRule nobs(double target) { return {Kind::nobs, target}; }
    static BandwidthRule rule_of_thumb() { return {Kind::rule_of_thumb, 0.0}; }

    double resolve(const Eigen::MatrixXd& X, Eigen::Index q) const {
        switch (kind) {
        case Kind::fixed: return value;
        case Kind::nobs: return bandwidth_nobs(X.rows(), X.cols(), q, X, value);
        case Kind::rule_of_thumb: return bandwidth_rot(X.rows(), X.cols(), q, X);
        }
        throw InvalidArgument("BandwidthRule: unknown kind");
    }
};

} // namespace cve
