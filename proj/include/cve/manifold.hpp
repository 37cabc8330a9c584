#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <utility>

#include "cve/errors.hpp"
#include "cve/rng.hpp"

namespace cve {

/// A point on the Stiefel manifold S(p,q): a p x q matrix with
/// orthonormal columns. Construction validates the invariant.
class StiefelPoint {
public:
    static constexpr double kOrthTol = 1e-10;

    explicit StiefelPoint(Eigen::MatrixXd V) : V_(std::move(V)) {
        if (V_.rows() < 1 || V_.cols() < 1 || V_.cols() > V_.rows())
            throw InvalidArgument("StiefelPoint: need 1 <= q <= p");
        if (orth_deviation(V_) > kOrthTol)
            throw InvalidArgument("StiefelPoint: columns not orthonormal");
    }

    const Eigen::MatrixXd& matrix() const { return V_; }
    Eigen::Index p() const { return V_.rows(); }
    Eigen::Index q() const { return V_.cols(); }

    /// Projection onto span{V}: P = V V^T.
    Eigen::MatrixXd projection() const { return V_ * V_.transpose(); }

    /// ||V^T V - I||_F for an arbitrary candidate frame.
    static double orth_deviation(const Eigen::MatrixXd& V) {
        Eigen::MatrixXd gram = V.transpose() * V;
        gram.diagonal().array() -= 1.0;
        return gram.norm();
    }

private:
    Eigen::MatrixXd V_;
};

/// p x p projection matrix onto a q-dimensional subspace.
struct SubspaceProjection {
    Eigen::MatrixXd P;

    /// trace(P), an integer for a true projection.
    double rank() const { return P.trace(); }
    double symmetry_deviation() const { return (P - P.transpose()).norm(); }
    double idempotency_deviation() const { return (P * P - P).norm(); }
};

inline SubspaceProjection projection_of(const StiefelPoint& V) {
    return SubspaceProjection{V.projection()};
}

/// Draw from the invariant (uniform) measure on S(p,q): the Q-factor of
/// the QR decomposition of a p x q standard-normal matrix. The R diagonal
/// is forced nonnegative so the factor is unique across backends.
inline StiefelPoint random_stiefel(Eigen::Index p, Eigen::Index q, Rng& rng) {
    if (q < 1 || q > p) throw InvalidArgument("random_stiefel: need 1 <= q <= p");
    Eigen::MatrixXd A(p, q);
    for (Eigen::Index i = 0; i < p; ++i)
        for (Eigen::Index j = 0; j < q; ++j) A(i, j) = rng.normal();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(A);
    Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(p, q);
    Eigen::MatrixXd R = qr.matrixQR().topRows(q);
    for (Eigen::Index j = 0; j < q; ++j)
        if (R(j, j) < 0.0) Q.col(j) = -Q.col(j);
    return StiefelPoint(std::move(Q));
}

/// One Cayley-transform retraction step:
///   W = G V^T - V G^T,  V+ = (I + tau W)^{-1} (I - tau W) V.
/// W is skew-symmetric, so I + tau W is always invertible and the step
/// preserves orthonormality.
inline StiefelPoint cayley_step(const StiefelPoint& V, const Eigen::MatrixXd& G, double tau) {
    const Eigen::Index p = V.p();
    if (G.rows() != p || G.cols() != V.q())
        throw InvalidArgument("cayley_step: gradient shape mismatch");
    const Eigen::MatrixXd& Vm = V.matrix();
    Eigen::MatrixXd W = G * Vm.transpose() - Vm * G.transpose();
    Eigen::MatrixXd lhs = Eigen::MatrixXd::Identity(p, p) + tau * W;
    Eigen::MatrixXd rhs = (Eigen::MatrixXd::Identity(p, p) - tau * W) * Vm;
    return StiefelPoint(lhs.partialPivLu().solve(rhs));
}

/// Orthonormal basis U of span{V}^perp: U^T V = 0, U^T U = I_{p-q}.
inline StiefelPoint orth_complement(const StiefelPoint& V) {
    if (V.q() >= V.p())
        throw InvalidArgument("orth_complement: complement of a full frame is empty");
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(V.matrix());
    Eigen::MatrixXd Qfull = qr.householderQ();
    return StiefelPoint(Qfull.rightCols(V.p() - V.q()));
}

/// Subspace estimation error err = ||P_B - P_Bhat||_F / sqrt(2k) in [0,1].
/// Depends only on the spanned subspaces.
inline double subspace_error(const StiefelPoint& B, const StiefelPoint& Bhat) {
    if (B.p() != Bhat.p() || B.q() != Bhat.q())
        throw InvalidArgument("subspace_error: frames must share p and rank k");
    double err = (B.projection() - Bhat.projection()).norm()
                 / std::sqrt(2.0 * static_cast<double>(B.q()));
    if (err < 0.0) err = 0.0;
    if (err > 1.0) err = 1.0;
    return err;
}

} // namespace cve
