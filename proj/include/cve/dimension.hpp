#pragma once

#include <Eigen/Dense>
#include <vector>

#include "cve/bandwidth.hpp"
#include "cve/dataset.hpp"
#include "cve/errors.hpp"
#include "cve/optimizer.hpp"
#include "cve/parallel.hpp"

namespace cve {

struct LooResult {
    Eigen::VectorXd predictions;
    int fallback_count = 0; // points whose LOO weights all underflowed
};

/// Leave-one-out locally constant (kernel average) regression in the
/// reduced space. Prediction i uses only observations j != i with Gaussian
/// weights exp(-d_ij / (2h)) on squared distances d_ij; an isolated point
/// falls back to the leave-one-out global mean.
inline LooResult loo_smooth(const Eigen::MatrixXd& Z, const Eigen::VectorXd& y,
                            double bandwidth) {
    const Eigen::Index n = Z.rows();
    if (n < 3) throw InvalidArgument("loo_smooth: need n >= 3");
    if (y.size() != n) throw InvalidArgument("loo_smooth: y length mismatch");
    if (!(bandwidth > 0.0)) throw InvalidArgument("loo_smooth: bandwidth must be positive");

    Eigen::VectorXd s = Z.rowwise().squaredNorm();
    Eigen::MatrixXd D = s.replicate(1, n) + s.transpose().replicate(n, 1)
                      - 2.0 * (Z * Z.transpose());
    Eigen::MatrixXd K = (-D.array() / (2.0 * bandwidth)).exp();
    K.diagonal().setZero();

    LooResult r;
    r.predictions.resize(n);
    const double ysum = y.sum();
    for (Eigen::Index i = 0; i < n; ++i) {
        double total = K.row(i).sum();
        if (total > kDegenerateFloor) {
            r.predictions(i) = K.row(i).dot(y) / total;
        } else {
            r.predictions(i) = (ysum - y(i)) / static_cast<double>(n - 1);
            ++r.fallback_count;
        }
    }
    return r;
}

struct CvPoint {
    int l;
    double cv;
    int fallbacks;
};

struct CvCurve {
    std::vector<CvPoint> values;
    int khat = 1; // argmin of cv, ties broken toward smaller l
};

/// Cross-validated dimension selection: for each l, fit the reduction
/// B_l once on the full data (l = p uses the identity), then score the
/// leave-one-out prediction error of y from B_l^T X. The smoother
/// bandwidth is the rule-of-thumb applied to the reduced covariates with
/// their full dimension l.
inline CvCurve cv_curve(const DataSet& data, int lmax, Variant variant,
                        const BandwidthRule& rule, const OptimConfig& config,
                        int threads = 1) {
    data.validate();
    if (lmax < 1 || lmax > data.p()) throw InvalidArgument("cv_curve: need 1 <= lmax <= p");

    std::vector<CvPoint> points(static_cast<std::size_t>(lmax));
    Rng base(config.seed);
    parallel_for(points.size(), threads, [&](std::size_t idx) {
        const int l = static_cast<int>(idx) + 1;
        Eigen::MatrixXd Z;
        if (l == data.p()) {
            Z = data.X;
        } else {
            OptimConfig cfg = config;
            cfg.seed = base.substream({0xD1Au, static_cast<std::uint64_t>(l)}).seed();
            // annotate fit failures with the offending l, keeping the category
            try {
                FitResult fit = fit_cve(data, l, variant, rule, cfg);
                Z = data.X * fit.Bhat.matrix();
            } catch (const InvalidArgument& e) {
                throw InvalidArgument("cv_curve: fit for l=" + std::to_string(l) + " failed: "
                                      + e.what());
            } catch (const std::exception& e) {
                throw std::runtime_error("cv_curve: fit for l=" + std::to_string(l)
                                         + " failed: " + e.what());
            }
        }
        double h = bandwidth_rot(Z.rows(), Z.cols(), 0, Z);
        LooResult loo = loo_smooth(Z, data.y, h);
        double cv = (data.y - loo.predictions).squaredNorm() / static_cast<double>(data.n());
        points[idx] = CvPoint{l, cv, loo.fallback_count};
    });

    CvCurve curve;
    curve.values = std::move(points);
    curve.khat = curve.values.front().l;
    double best = curve.values.front().cv;
    for (const auto& pt : curve.values) {
        if (pt.cv < best) {
            best = pt.cv;
            curve.khat = pt.l;
        }
    }
    return curve;
}

} // namespace cve
