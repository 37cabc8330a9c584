#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "cve/dataset.hpp"
#include "cve/errors.hpp"
#include "cve/manifold.hpp"

namespace cve {

// Kernel values below this are treated as a fully underflowed slice.
inline constexpr double kDegenerateFloor = 1e-300;

/// Weighted first/second moments of y in one slice and the resulting
/// conditional-variance estimate Ltilde = ybar2 - ybar1^2.
struct LocalStats {
    double ybar1 = 0.0;
    double ybar2 = 0.0;
    double ltilde = 0.0;
    Eigen::VectorXd weights;
};

/// Squared distances of each X_i to the affine plane s0 + span{V},
///   d_i = ||X_i - s0||^2 - ||V^T (X_i - s0)||^2.
inline Eigen::VectorXd distances(const DataSet& data, const StiefelPoint& V,
                                 const Eigen::VectorXd& s0) {
    if (V.p() != data.p() || s0.size() != data.p())
        throw InvalidArgument("distances: dimension mismatch");
    Eigen::MatrixXd Xc = data.X.rowwise() - s0.transpose();
    Eigen::MatrixXd T = Xc * V.matrix();
    Eigen::VectorXd d = Xc.rowwise().squaredNorm() - T.rowwise().squaredNorm();
    return d.cwiseMax(0.0);
}

/// Normalized slice weights w_i = K(d_i/h) / sum_j K(d_j/h).
inline Eigen::VectorXd kernel_weights(const Eigen::VectorXd& d, const KernelSpec& kernel) {
    kernel.validate();
    Eigen::VectorXd k(d.size());
    for (Eigen::Index i = 0; i < d.size(); ++i) k(i) = kernel.eval(d(i) / kernel.h);
    double total = k.sum();
    if (!(total > kDegenerateFloor)) throw DegenerateSlice(-1);
    return k / total;
}

inline LocalStats local_stats(const Eigen::VectorXd& y, const Eigen::VectorXd& w) {
    if (y.size() != w.size()) throw InvalidArgument("local_stats: length mismatch");
    LocalStats s;
    s.ybar1 = w.dot(y);
    s.ybar2 = w.dot(y.cwiseProduct(y));
    s.ltilde = s.ybar2 - s.ybar1 * s.ybar1;
    s.weights = w;
    return s;
}

/// Ltilde_n(V, s0): kernel-weighted conditional variance of y in the
/// slice around s0 + span{V}.
inline LocalStats ltilde(const DataSet& data, const StiefelPoint& V,
                         const Eigen::VectorXd& s0, const KernelSpec& kernel) {
    return local_stats(data.y, kernel_weights(distances(data, V, s0), kernel));
}

/// Shared evaluation state for one (data, V, h) triple. Every data point
/// acts as a shifting point; row i of D/K describes the slice at X_i.
/// Reused by the gradient assembly so the O(n^2 p) pass happens once.
struct PairwiseCache {
    Eigen::MatrixXd D;         // D(i,j) = d_j(V, X_i), ambient form
    Eigen::MatrixXd K;         // kernel values K(D/h)
    Eigen::VectorXd slice_sum; // sum_j K(i,j), self term included
    Eigen::VectorXd ybar1;     // per-slice weighted mean of y
    Eigen::VectorXd ltilde;    // per-slice conditional variance
    double Ln = 0.0;           // (1/n) sum_i ltilde(i)
    Eigen::VectorXd wtilde;    // between-slice weights, self terms excluded
    double offdiag_sum = 0.0;  // S = sum_{l != u} K(l,u)
    double Lwn = 0.0;          // sum_i wtilde(i) ltilde(i)
};

namespace detail {

/// Core evaluation at an arbitrary ambient frame V (orthonormality not
/// required; finite differences probe off-manifold points).
inline PairwiseCache pairwise_eval(const DataSet& data, const Eigen::MatrixXd& V,
                                   const KernelSpec& kernel) {
    kernel.validate();
    if (V.rows() != data.p()) throw InvalidArgument("pairwise_eval: V rows != p");
    const Eigen::Index n = data.n();
    PairwiseCache c;

    Eigen::MatrixXd T = data.X * V;
    Eigen::VectorXd sx = data.X.rowwise().squaredNorm();
    Eigen::VectorXd st = T.rowwise().squaredNorm();
    Eigen::MatrixXd G = data.X * data.X.transpose();
    Eigen::MatrixXd H = T * T.transpose();
    c.D = (sx.replicate(1, n) + sx.transpose().replicate(n, 1) - 2.0 * G)
        - (st.replicate(1, n) + st.transpose().replicate(n, 1) - 2.0 * H);
    c.D.diagonal().setZero();

    if (kernel.kind == Kernel::gaussian) {
        c.K = (-(0.5 / (kernel.h * kernel.h)) * c.D.array().square()).exp();
    } else {
        c.K.resize(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j) c.K(i, j) = kernel.eval(c.D(i, j) / kernel.h);
    }

    c.slice_sum = c.K.rowwise().sum();
    for (Eigen::Index i = 0; i < n; ++i)
        if (!(c.slice_sum(i) > kDegenerateFloor)) throw DegenerateSlice(i);

    Eigen::VectorXd ky = c.K * data.y;
    Eigen::VectorXd ky2 = c.K * data.y.cwiseProduct(data.y);
    c.ybar1 = ky.cwiseQuotient(c.slice_sum);
    c.ltilde = ky2.cwiseQuotient(c.slice_sum) - c.ybar1.cwiseProduct(c.ybar1);
    c.Ln = c.ltilde.mean();

    Eigen::VectorXd ni = c.slice_sum - c.K.diagonal();
    c.offdiag_sum = ni.sum();
    if (!(c.offdiag_sum > kDegenerateFloor)) throw DegenerateSlice(-1);
    c.wtilde = ni / c.offdiag_sum;
    c.Lwn = c.wtilde.dot(c.ltilde);
    return c;
}

inline double ambient_Ln(const DataSet& data, const Eigen::MatrixXd& V, const KernelSpec& kernel) {
    return pairwise_eval(data, V, kernel).Ln;
}

inline double ambient_Ln_weighted(const DataSet& data, const Eigen::MatrixXd& V,
                                  const KernelSpec& kernel) {
    return pairwise_eval(data, V, kernel).Lwn;
}

} // namespace detail

/// Sample objective L_n(V) = (1/n) sum_i Ltilde_n(V, X_i).
inline double objective_Ln(const DataSet& data, const StiefelPoint& V, const KernelSpec& kernel) {
    return detail::ambient_Ln(data, V.matrix(), kernel);
}

/// Slice-occupancy weighted objective L^w_n(V) = sum_i wtilde(V, X_i) Ltilde_n(V, X_i).
inline double objective_Ln_weighted(const DataSet& data, const StiefelPoint& V,
                                    const KernelSpec& kernel) {
    return detail::ambient_Ln_weighted(data, V.matrix(), kernel);
}

/// Closed-form population objective of the bivariate single-index toy
/// model Y = B^T X + eps with X ~ N(0, Sigma):
///   L(V) = (B^T V)^2 / (V^T Sigma^{-1} V) + eta^2,
/// minimized (= eta^2) exactly when V is orthogonal to B.
inline double oracle_L_toy(const StiefelPoint& V, const Eigen::Matrix2d& Sigma,
                           const Eigen::Vector2d& B, double eta2) {
    if (V.p() != 2 || V.q() != 1) throw InvalidArgument("oracle_L_toy: V must be 2x1");
    if (std::abs(B.norm() - 1.0) > 1e-8) throw InvalidArgument("oracle_L_toy: B must be unit");
    if (eta2 < 0.0) throw InvalidArgument("oracle_L_toy: eta2 must be nonnegative");
    Eigen::LLT<Eigen::Matrix2d> llt(Sigma);
    if (llt.info() != Eigen::Success)
        throw InvalidArgument("oracle_L_toy: Sigma must be positive definite");
    Eigen::Vector2d v = V.matrix().col(0);
    double bv = B.dot(v);
    double quad = v.dot(llt.solve(v));
    return bv * bv / quad + eta2;
}

} // namespace cve
