#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "cve/dataset.hpp"
#include "cve/dimension.hpp"
#include "cve/errors.hpp"
#include "cve/manifold.hpp"
#include "cve/optimizer.hpp"
#include "cve/parallel.hpp"
#include "cve/rng.hpp"

namespace cve::sim {

enum class Model { M1, M2, M3, M4, M5, M6, M7 };

inline const char* model_name(Model m) {
    static const char* names[] = {"M1", "M2", "M3", "M4", "M5", "M6", "M7"};
    return names[static_cast<int>(m)];
}

inline std::optional<Model> model_from_name(const std::string& s) {
    for (int i = 0; i < 7; ++i)
        if (s == model_name(static_cast<Model>(i))) return static_cast<Model>(i);
    return std::nullopt;
}

enum class PredictorLaw { gaussian_identity, ar_gaussian, mixture, uniform_cube, student_t };

/// Error distribution: centered normal, or the generalized normal
/// GN(a, b, c) with density c/(2b Gamma(1/c)) exp(-(|z-a|/b)^c).
struct ErrorLaw {
    enum class Kind { normal, gnorm };
    Kind kind = Kind::normal;
    double sd = 1.0;               // normal
    double a = 0.0, b = 1.0, c = 2.0; // gnorm
};

/// Var of GN(., b, c): b^2 Gamma(3/c) / Gamma(1/c).
inline double gnorm_variance(double b, double c) {
    if (!(b > 0.0 && c > 0.0)) throw InvalidArgument("gnorm_variance: need b, c > 0");
    return b * b * std::exp(std::lgamma(3.0 / c) - std::lgamma(1.0 / c));
}

/// GN scale that yields a target variance for shape c.
inline double gnorm_scale_for_variance(double variance, double c) {
    if (!(variance > 0.0)) throw InvalidArgument("gnorm_scale_for_variance: variance > 0");
    return std::sqrt(variance * std::exp(std::lgamma(1.0 / c) - std::lgamma(3.0 / c)));
}

/// Draw from GN(a, b, c): sign * b * E^{1/c} + a with E ~ Gamma(1/c, 1)
/// and an independent random sign.
inline double sample_gnorm(double a, double b, double c, Rng& rng) {
    if (!(b > 0.0 && c > 0.0)) throw InvalidArgument("sample_gnorm: need b, c > 0");
    double e = rng.gamma(1.0 / c);
    double mag = b * std::pow(e, 1.0 / c);
    return (rng.bernoulli(0.5) ? mag : -mag) + a;
}

/// One simulation model: true directions B, predictor and error laws,
/// and the link selected by id.
struct ModelSpec {
    Model id = Model::M1;
    Eigen::Index n = 100;
    Eigen::Index p = 20;
    Eigen::Index k = 1;
    Eigen::MatrixXd B; // p x k, orthonormal columns
    PredictorLaw predictors = PredictorLaw::gaussian_identity;
    double rho = 0.5;    // ar_gaussian
    double p_mix = 0.3;  // mixture
    double lambda = 1.0; // mixture
    double t_df = 3.0;   // student_t
    ErrorLaw error;
};

inline double link_value(Model id, const Eigen::VectorXd& u) {
    constexpr double kPi = 3.14159265358979323846;
    switch (id) {
    case Model::M1:
    case Model::M2: return std::cos(u(0));
    case Model::M3: return 2.0 * std::log(std::abs(u(0)) + 2.0);
    case Model::M4: {
        double t = 1.5 + u(1);
        return u(0) / (0.5 + t * t);
    }
    case Model::M5: {
        double t = u(1) + 1.0;
        return std::cos(kPi * u(0)) * t * t;
    }
    case Model::M6: return u(0) * u(0) + u(1) * u(1) + u(2) * u(2);
    case Model::M7: return u(0) * u(1) * u(1) + u(2) * u(3);
    }
    return 0.0;
}

/// The study configuration of the reference tables: p = 20,
/// b1 = (1,1,1,1,1,1,0,..)/sqrt(6), b2 = (1,-1,1,-1,1,-1,0,..)/sqrt(6)
/// for M1-M5; M6 uses e1, e2, e_p and M7 additionally e3. Error scales
/// are solved from Var(eps) = 0.25 for the generalized-normal models;
/// `table_error_params` selects the printed parameterization instead.
inline ModelSpec standard_model(Model id, Eigen::Index n_override = 0, Eigen::Index p = 20,
                                bool table_error_params = false, double p_mix = 0.3,
                                double lambda = 1.0) {
    ModelSpec s;
    s.id = id;
    s.p = p;
    auto unit = [&](Eigen::Index j) {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(p);
        e(j) = 1.0;
        return e;
    };
    auto b131 = [&](bool alternating) {
        if (p < 6) throw InvalidArgument("standard_model: M1-M5 need p >= 6");
        Eigen::VectorXd b = Eigen::VectorXd::Zero(p);
        for (int i = 0; i < 6; ++i) b(i) = (alternating && i % 2 == 1) ? -1.0 : 1.0;
        return Eigen::VectorXd(b / std::sqrt(6.0));
    };

    switch (id) {
    case Model::M1:
        s.n = 100; s.k = 1;
        s.B = b131(false);
        s.predictors = PredictorLaw::ar_gaussian;
        s.error = {ErrorLaw::Kind::gnorm, 0.0, 0.0,
                   table_error_params ? std::sqrt(0.5) : gnorm_scale_for_variance(0.25, 0.5), 0.5};
        break;
    case Model::M2:
        s.n = 100; s.k = 1;
        s.B = b131(false);
        s.predictors = PredictorLaw::mixture;
        s.p_mix = p_mix;
        s.lambda = lambda;
        s.error = {ErrorLaw::Kind::normal, 0.5};
        break;
    case Model::M3:
        s.n = 100; s.k = 1;
        s.B = b131(false);
        s.predictors = PredictorLaw::gaussian_identity;
        s.error = {ErrorLaw::Kind::normal, 0.5};
        break;
    case Model::M4:
        s.n = 200; s.k = 2;
        s.B.resize(p, 2);
        s.B.col(0) = b131(false);
        s.B.col(1) = b131(true);
        s.predictors = PredictorLaw::ar_gaussian;
        s.error = {ErrorLaw::Kind::normal, 0.5};
        break;
    case Model::M5:
        s.n = 200; s.k = 2;
        s.B.resize(p, 2);
        s.B.col(0) = b131(false);
        s.B.col(1) = b131(true);
        s.predictors = PredictorLaw::uniform_cube;
        s.error = {ErrorLaw::Kind::normal, 0.5};
        break;
    case Model::M6:
        if (p < 3) throw InvalidArgument("standard_model: M6 needs p >= 3");
        s.n = 200; s.k = 3;
        s.B.resize(p, 3);
        s.B.col(0) = unit(0);
        s.B.col(1) = unit(1);
        s.B.col(2) = unit(p - 1);
        s.predictors = PredictorLaw::gaussian_identity;
        s.error = {ErrorLaw::Kind::normal, 0.5};
        break;
    case Model::M7:
        if (p < 4) throw InvalidArgument("standard_model: M7 needs p >= 4");
        s.n = 400; s.k = 4;
        s.B.resize(p, 4);
        s.B.col(0) = unit(0);
        s.B.col(1) = unit(1);
        s.B.col(2) = unit(p - 1);
        s.B.col(3) = unit(2);
        s.predictors = PredictorLaw::student_t;
        s.error = {ErrorLaw::Kind::gnorm, 0.0, 0.0,
                   table_error_params ? std::sqrt(1.0 / 120.0) : gnorm_scale_for_variance(0.25, 1.0),
                   1.0};
        break;
    }
    if (n_override > 0) s.n = n_override;
    return s;
}

/// Draw the n x p predictor matrix for one replication, row by row.
inline Eigen::MatrixXd sample_predictors(const ModelSpec& spec, Rng& rng) {
    const Eigen::Index n = spec.n, p = spec.p;
    Eigen::MatrixXd X(n, p);
    switch (spec.predictors) {
    case PredictorLaw::gaussian_identity:
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < p; ++j) X(i, j) = rng.normal();
        break;
    case PredictorLaw::ar_gaussian: {
        Eigen::MatrixXd Sigma(p, p);
        for (Eigen::Index i = 0; i < p; ++i)
            for (Eigen::Index j = 0; j < p; ++j)
                Sigma(i, j) = std::pow(spec.rho, std::abs(static_cast<double>(i - j)));
        Eigen::MatrixXd L = Sigma.llt().matrixL();
        Eigen::VectorXd z(p);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < p; ++j) z(j) = rng.normal();
            X.row(i) = (L * z).transpose();
        }
        break;
    }
    case PredictorLaw::mixture:
        for (Eigen::Index i = 0; i < n; ++i) {
            double z = rng.bernoulli(spec.p_mix) ? 1.0 : -1.0;
            for (Eigen::Index j = 0; j < p; ++j) X(i, j) = spec.lambda * z + rng.normal();
        }
        break;
    case PredictorLaw::uniform_cube:
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < p; ++j) X(i, j) = rng.uniform01();
        break;
    case PredictorLaw::student_t:
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < p; ++j) X(i, j) = rng.normal();
            double w = rng.chisq(spec.t_df);
            X.row(i) *= std::sqrt(spec.t_df / w);
        }
        break;
    }
    return X;
}

struct Generated {
    DataSet data;
    StiefelPoint B;
    Eigen::VectorXd noise;
    Eigen::VectorXd link;
};

/// One replication: y_i = g(B^T X_i) + eps_i, with the true B returned
/// for scoring.
inline Generated generate(const ModelSpec& spec, Rng& rng) {
    Eigen::MatrixXd X = sample_predictors(spec, rng);
    Eigen::MatrixXd U = X * spec.B;
    Eigen::VectorXd g(spec.n), eps(spec.n);
    for (Eigen::Index i = 0; i < spec.n; ++i) g(i) = link_value(spec.id, U.row(i).transpose());
    for (Eigen::Index i = 0; i < spec.n; ++i) {
        eps(i) = spec.error.kind == ErrorLaw::Kind::normal
                     ? spec.error.sd * rng.normal()
                     : sample_gnorm(spec.error.a, spec.error.b, spec.error.c, rng);
    }
    return Generated{DataSet(g + eps, std::move(X)), StiefelPoint(spec.B), std::move(eps),
                     std::move(g)};
}

struct StudyCell {
    Model model;
    Variant variant;
    double mean_err = std::numeric_limits<double>::quiet_NaN();
    double sd_err = std::numeric_limits<double>::quiet_NaN();
    int reps = 0;     // successful replications in the aggregates
    int failures = 0;
    int dim_correct = -1; // -1 when dimension selection was not run
    std::vector<double> errors; // per replication, NaN on failure
    std::vector<int> khats;     // per replication, -1 when absent
};

struct StudySummary {
    std::vector<StudyCell> cells;
    std::uint64_t seed = 0;
    int reps_requested = 0;
};

struct StudyOptions {
    int reps = 20;
    std::uint64_t seed = 0;
    int threads = 1;
    bool select_dim = false;
    int lmax = 0; // 0 -> min(p, 10)
    OptimConfig optim;
    BandwidthRule bandwidth;
};

/// Replication study: per (model, rep) one dataset is drawn on the
/// substream (seed, model, rep) and every variant is fitted on it.
/// Replications run in parallel; aggregation order is fixed, so the
/// summary does not depend on the thread count.
inline StudySummary run_study(const std::vector<ModelSpec>& specs,
                              const std::vector<Variant>& variants, const StudyOptions& opt) {
    if (opt.reps < 1) throw InvalidArgument("run_study: need reps >= 1");
    if (specs.empty() || variants.empty())
        throw InvalidArgument("run_study: specs and variants must be nonempty");

    struct RepOut {
        std::vector<double> errs;
        std::vector<int> khats;
        std::vector<int> failed;
    };
    const std::size_t reps = static_cast<std::size_t>(opt.reps);
    std::vector<std::vector<RepOut>> slots(specs.size(), std::vector<RepOut>(reps));
    Rng base(opt.seed);

    parallel_for(specs.size() * reps, opt.threads, [&](std::size_t idx) {
        const std::size_t mi = idx / reps;
        const std::size_t rep = idx % reps;
        const ModelSpec& spec = specs[mi];
        Rng data_rng = base.substream({mi, rep, 0xDA7Au});
        Generated gen = generate(spec, data_rng);

        RepOut out;
        out.errs.assign(variants.size(), std::numeric_limits<double>::quiet_NaN());
        out.khats.assign(variants.size(), -1);
        out.failed.assign(variants.size(), 0);

        for (std::size_t vi = 0; vi < variants.size(); ++vi) {
            const Variant v = variants[vi];
            try {
                std::optional<StiefelPoint> bhat;
                if (v == Variant::random_baseline) {
                    Rng frame_rng = base.substream({mi, rep, 0xBA5Eu, vi});
                    bhat = random_stiefel(spec.p, spec.k, frame_rng);
                } else {
                    OptimConfig cfg = opt.optim;
                    cfg.seed = base.substream({mi, rep, 0xF17u, vi}).seed();
                    bhat = fit_cve(gen.data, spec.k, v, opt.bandwidth, cfg).Bhat;
                }
                out.errs[vi] = subspace_error(gen.B, *bhat);
                if (opt.select_dim && v != Variant::random_baseline) {
                    OptimConfig dcfg = opt.optim;
                    dcfg.seed = base.substream({mi, rep, 0xD135u, vi}).seed();
                    int lmax = opt.lmax > 0 ? opt.lmax
                                            : static_cast<int>(std::min<Eigen::Index>(spec.p, 10));
                    out.khats[vi] = cv_curve(gen.data, lmax, v, opt.bandwidth, dcfg).khat;
                }
            } catch (const std::exception&) {
                out.failed[vi] = 1;
            }
        }
        slots[mi][rep] = std::move(out);
    });

    StudySummary summary;
    summary.seed = opt.seed;
    summary.reps_requested = opt.reps;
    for (std::size_t mi = 0; mi < specs.size(); ++mi) {
        for (std::size_t vi = 0; vi < variants.size(); ++vi) {
            StudyCell cell;
            cell.model = specs[mi].id;
            cell.variant = variants[vi];
            double sum = 0.0;
            for (std::size_t rep = 0; rep < reps; ++rep) {
                const RepOut& out = slots[mi][rep];
                cell.errors.push_back(out.errs[vi]);
                cell.khats.push_back(out.khats[vi]);
                if (out.failed[vi]) {
                    ++cell.failures;
                } else {
                    sum += out.errs[vi];
                    ++cell.reps;
                    if (out.khats[vi] >= 0 && out.khats[vi] == specs[mi].k)
                        cell.dim_correct = std::max(cell.dim_correct, 0) + 1;
                }
            }
            if (opt.select_dim && variants[vi] != Variant::random_baseline)
                cell.dim_correct = std::max(cell.dim_correct, 0);
            if (cell.reps > 0) {
                cell.mean_err = sum / cell.reps;
                double ss = 0.0;
                for (double e : cell.errors)
                    if (std::isfinite(e)) ss += (e - cell.mean_err) * (e - cell.mean_err);
                cell.sd_err = cell.reps > 1 ? std::sqrt(ss / (cell.reps - 1)) : 0.0;
            }
            summary.cells.push_back(std::move(cell));
        }
    }
    return summary;
}

} // namespace cve::sim
