#pragma once

#include <Eigen/Dense>
#include <functional>

#include "cve/dataset.hpp"
#include "cve/errors.hpp"
#include "cve/manifold.hpp"
#include "cve/objective.hpp"

namespace cve {

/// Ambient gradient of an objective at V, together with the objective
/// value from the same evaluation pass.
struct GradientResult {
    Eigen::MatrixXd G;
    double value = 0.0;
};

enum class WeightedGradientMode { full, partial };

/// d/dV of d(V, x, s0) = ||x-s0||^2 - ||V^T (x-s0)||^2, which is
/// -2 (x-s0)(x-s0)^T V.
inline Eigen::MatrixXd grad_distance(const Eigen::VectorXd& x, const StiefelPoint& V,
                                     const Eigen::VectorXd& s0) {
    if (x.size() != V.p() || s0.size() != V.p())
        throw InvalidArgument("grad_distance: dimension mismatch");
    Eigen::VectorXd delta = x - s0;
    return -2.0 * delta * (delta.transpose() * V.matrix());
}

namespace detail {

inline void require_gaussian(const KernelSpec& kernel) {
    if (kernel.kind != Kernel::gaussian)
        throw UnsupportedKernel("analytic gradients are derived for the Gaussian kernel only");
}

/// Gradient of the chosen objective assembled from a pairwise cache.
/// Each pair (shift i, point j) contributes A(i,j) * grad d_j(V, X_i)
/// with grad d = -2 Delta Delta^T V; the quadratic form in Delta collapses
/// to X^T [diag(rowsum A) + diag(colsum A) - A - A^T] X.
inline Eigen::MatrixXd assemble_gradient(const DataSet& data, const Eigen::MatrixXd& V,
                                         const KernelSpec& kernel, const PairwiseCache& c,
                                         bool weighted, WeightedGradientMode mode) {
    const Eigen::Index n = data.n();
    const double h2 = kernel.h * kernel.h;

    Eigen::ArrayXXd resid = data.y.transpose().replicate(n, 1).array()
                          - c.ybar1.replicate(1, n).array();
    Eigen::ArrayXXd coef = c.ltilde.replicate(1, n).array() - resid.square();
    Eigen::ArrayXXd W = c.K.array().colwise() / c.slice_sum.array(); // W(i,j) = w_j in slice i
    Eigen::MatrixXd A;
    if (!weighted) {
        A = (coef * W * c.D.array() / (static_cast<double>(n) * h2)).matrix();
    } else {
        A = (c.wtilde.replicate(1, n).array() * coef * W * c.D.array() / h2).matrix();
        if (mode == WeightedGradientMode::full) {
            Eigen::MatrixXd Koff = c.K;
            Koff.diagonal().setZero();
            A.array() -= (Koff.array() / c.offdiag_sum)
                       * (c.ltilde.replicate(1, n).array() - c.Lwn) * c.D.array() / h2;
        }
    }

    Eigen::VectorXd rsum = A.rowwise().sum();
    Eigen::VectorXd csum = A.colwise().sum();
    Eigen::MatrixXd B = -A - A.transpose();
    B.diagonal() += rsum + csum;
    return -2.0 * (data.X.transpose() * B * data.X) * V;
}

} // namespace detail

/// Gradient of Ltilde_n(V, s0) for the Gaussian kernel:
///   (1/h^2) sum_i (Ltilde - (Y_i - ybar1)^2) w_i d_i grad d_i.
inline GradientResult grad_Ltilde(const DataSet& data, const StiefelPoint& V,
                                  const Eigen::VectorXd& s0, const KernelSpec& kernel) {
    detail::require_gaussian(kernel);
    kernel.validate();
    if (s0.size() != data.p() || V.p() != data.p())
        throw InvalidArgument("grad_Ltilde: dimension mismatch");

    Eigen::MatrixXd Xc = data.X.rowwise() - s0.transpose();
    Eigen::MatrixXd T = Xc * V.matrix();
    Eigen::VectorXd d = Xc.rowwise().squaredNorm() - T.rowwise().squaredNorm();
    Eigen::VectorXd k(d.size());
    for (Eigen::Index i = 0; i < d.size(); ++i) k(i) = kernel.eval(d(i) / kernel.h);
    double total = k.sum();
    if (!(total > kDegenerateFloor)) throw DegenerateSlice(-1);
    Eigen::VectorXd w = k / total;

    double ybar1 = w.dot(data.y);
    double ybar2 = w.dot(data.y.cwiseProduct(data.y));
    double lt = ybar2 - ybar1 * ybar1;

    Eigen::VectorXd resid = data.y.array() - ybar1;
    Eigen::VectorXd coef = (lt - resid.array().square()).matrix()
                               .cwiseProduct(w).cwiseProduct(d)
                           / (kernel.h * kernel.h);
    GradientResult r;
    r.G = -2.0 * Xc.transpose() * coef.asDiagonal() * T;
    r.value = lt;
    return r;
}

/// Gradient of L_n(V) = (1/n) sum_i Ltilde_n(V, X_i), Gaussian kernel.
inline GradientResult grad_Ln(const DataSet& data, const StiefelPoint& V,
                              const KernelSpec& kernel) {
    detail::require_gaussian(kernel);
    PairwiseCache c = detail::pairwise_eval(data, V.matrix(), kernel);
    GradientResult r;
    r.G = detail::assemble_gradient(data, V.matrix(), kernel, c, false,
                                    WeightedGradientMode::full);
    r.value = c.Ln;
    return r;
}

/// Gradient of the weighted objective L^w_n(V). Full mode includes the
/// grad wtilde term and matches finite differences of L^w_n; partial mode
/// returns sum_i wtilde(V, X_i) grad Ltilde_n(V, X_i), the search
/// direction used by the weighted estimator variants.
inline GradientResult grad_Ln_weighted(const DataSet& data, const StiefelPoint& V,
                                       const KernelSpec& kernel, WeightedGradientMode mode) {
    detail::require_gaussian(kernel);
    if (data.n() < 2) throw InvalidArgument("grad_Ln_weighted: need n >= 2");
    PairwiseCache c = detail::pairwise_eval(data, V.matrix(), kernel);
    GradientResult r;
    r.G = detail::assemble_gradient(data, V.matrix(), kernel, c, true, mode);
    r.value = c.Lwn;
    return r;
}

/// Central-difference verification of an ambient gradient. Returns the
/// maximum entrywise discrepancy |fd - g| scaled by
/// 1 + |objective value| + max|g|.
inline double finite_diff_check(const std::function<double(const Eigen::MatrixXd&)>& objective,
                                const GradientResult& gradient, const StiefelPoint& V,
                                double step) {
    if (!(step >= 1e-8 && step <= 1e-3))
        throw InvalidArgument("finite_diff_check: step must lie in [1e-8, 1e-3]");
    const Eigen::MatrixXd& Vm = V.matrix();
    double denom = 1.0 + std::abs(gradient.value) + gradient.G.cwiseAbs().maxCoeff();
    double worst = 0.0;
    for (Eigen::Index i = 0; i < Vm.rows(); ++i) {
        for (Eigen::Index j = 0; j < Vm.cols(); ++j) {
            Eigen::MatrixXd Vp = Vm, Vn = Vm;
            Vp(i, j) += step;
            Vn(i, j) -= step;
            double fd = (objective(Vp) - objective(Vn)) / (2.0 * step);
            double rel = std::abs(fd - gradient.G(i, j)) / denom;
            if (rel > worst) worst = rel;
        }
    }
    return worst;
}

} // namespace cve
