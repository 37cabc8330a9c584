#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "cve/bandwidth.hpp"
#include "cve/dataset.hpp"
#include "cve/errors.hpp"
#include "cve/gradients.hpp"
#include "cve/manifold.hpp"
#include "cve/objective.hpp"
#include "cve/parallel.hpp"
#include "cve/rng.hpp"

namespace cve {

/// Estimator variants. random_baseline is a scoring control used by the
/// simulation suite, not a fit.
enum class Variant { cve, wcve, rcve, random_baseline };

inline const char* variant_name(Variant v) {
    switch (v) {
    case Variant::cve: return "cve";
    case Variant::wcve: return "wcve";
    case Variant::rcve: return "rcve";
    case Variant::random_baseline: return "random";
    }
    return "?";
}

struct OptimConfig {
    double tau0 = 1.0;   // initial step size
    double gamma = 0.5;  // step reduction factor, in (0,1)
    double tol = 1e-3;   // convergence tolerance on the projection change
    int maxit = 50;      // cap on accepted steps
    int m = 10;          // number of random starts
    std::uint64_t seed = 0;

    void validate() const {
        if (!(tau0 > 0.0)) throw InvalidArgument("OptimConfig: tau0 must be positive");
        if (!(gamma > 0.0 && gamma < 1.0)) throw InvalidArgument("OptimConfig: gamma in (0,1)");
        if (!(tol > 0.0)) throw InvalidArgument("OptimConfig: tol must be positive");
        if (maxit < 1) throw InvalidArgument("OptimConfig: maxit >= 1");
        if (m < 1) throw InvalidArgument("OptimConfig: m >= 1");
    }
};

struct IterRecord {
    double objective;  // objective at the candidate frame
    double tau;        // step size used for this candidate
    bool accepted;
    double error;      // ||P_j - P_{j+1}||_F / sqrt(2q)
};

struct SearchTrace {
    std::vector<IterRecord> iterations;
    int accepted = 0;
    int rejected = 0;
    bool stalled = false;        // tau underflowed below 1e-12
    double max_orth_dev = 0.0;   // max ||V^T V - I||_F over iterates
    double final_value = 0.0;
};

struct SearchResult {
    StiefelPoint V;
    double value;
    SearchTrace trace;
};

// Below this step size the Cayley step is numerically the identity.
inline constexpr double kStallTau = 1e-12;

/// Curvilinear search on S(p,q) with the simplified descent rule.
/// Per iteration: G = gradient at the current frame,
/// W = G V^T - V G^T, candidate V+ = (I + tau W)^{-1}(I - tau W) V.
/// A candidate that increases the objective is rejected (tau *= gamma and
/// the convergence error is reset so a rejection never terminates);
/// otherwise it is accepted (count++, tau /= gamma). Stops when the
/// projection change falls to tol, accepted steps exceed maxit, or tau
/// stalls. cve optimizes L_n with its gradient; wcve optimizes L^w_n with
/// the partially weighted gradient.
inline SearchResult curvilinear_search(const DataSet& data, const StiefelPoint& V0,
                                       const KernelSpec& kernel, Variant variant,
                                       const OptimConfig& config) {
    config.validate();
    kernel.validate();
    if (variant != Variant::cve && variant != Variant::wcve)
        throw InvalidArgument("curvilinear_search: variant must be cve or wcve");
    const bool weighted = variant == Variant::wcve;
    const double sqrt2q = std::sqrt(2.0 * static_cast<double>(V0.q()));

    auto value_of = [&](const PairwiseCache& c) { return weighted ? c.Lwn : c.Ln; };
    auto gradient_of = [&](const PairwiseCache& c, const StiefelPoint& at) {
        return detail::assemble_gradient(data, at.matrix(), kernel, c, weighted,
                                         WeightedGradientMode::partial);
    };

    StiefelPoint V = V0;
    PairwiseCache cache = detail::pairwise_eval(data, V.matrix(), kernel);
    double value = value_of(cache);
    Eigen::MatrixXd G = gradient_of(cache, V);

    SearchTrace trace;
    trace.max_orth_dev = StiefelPoint::orth_deviation(V.matrix());
    double tau = config.tau0;
    double error = config.tol + 1.0;
    int count = 0;

    while (error > config.tol && count <= config.maxit) {
        StiefelPoint candidate = cayley_step(V, G, tau);
        error = (V.projection() - candidate.projection()).norm() / sqrt2q;
        PairwiseCache cand_cache = detail::pairwise_eval(data, candidate.matrix(), kernel);
        double cand_value = value_of(cand_cache);

        bool accept = cand_value <= value; // rejects NaN as well
        trace.iterations.push_back({cand_value, tau, accept, error});
        if (accept) {
            V = candidate;
            value = cand_value;
            cache = std::move(cand_cache);
            G = gradient_of(cache, V);
            double dev = StiefelPoint::orth_deviation(V.matrix());
            if (dev > trace.max_orth_dev) trace.max_orth_dev = dev;
            ++count;
            ++trace.accepted;
            tau /= config.gamma;
        } else {
            ++trace.rejected;
            tau *= config.gamma;
            error = config.tol + 1.0;
            if (tau < kStallTau) {
                trace.stalled = true;
                break;
            }
        }
    }
    trace.final_value = value;
    return SearchResult{std::move(V), value, std::move(trace)};
}

/// Fitted reduction: minimizer V_q over S(p,q), the estimator
/// Bhat spanning span{V_q}^perp, and per-start search records.
struct FitResult {
    StiefelPoint Vq;
    StiefelPoint Bhat;
    double objective;
    double bandwidth;
    std::vector<SearchTrace> starts;
    std::optional<SearchTrace> refine; // rcve only
    int best_start = 0;
    bool all_stalled = false;
};

/// Multistart conditional variance estimation of a k-dimensional mean
/// subspace. Runs m independent searches from invariant-measure starts
/// (start j uses the RNG substream (seed, j)) and keeps the lowest final
/// objective, ties broken toward the lower start index. rcve refines the
/// cve winner once under the weighted objective.
inline FitResult fit_cve(const DataSet& data, Eigen::Index k, Variant variant,
                         const BandwidthRule& rule, const OptimConfig& config,
                         int threads = 1) {
    data.validate();
    config.validate();
    if (k < 1 || k >= data.p()) throw InvalidArgument("fit_cve: need 1 <= k < p");
    if (variant == Variant::random_baseline)
        throw InvalidArgument("fit_cve: random_baseline is not a fit variant");
    const Eigen::Index q = data.p() - k;
    KernelSpec kernel{Kernel::gaussian, rule.resolve(data.X, q)};

    const Variant search_variant = variant == Variant::wcve ? Variant::wcve : Variant::cve;
    Rng base(config.seed);
    std::vector<std::optional<SearchResult>> slots(static_cast<std::size_t>(config.m));
    parallel_for(slots.size(), threads, [&](std::size_t j) {
        Rng stream = base.substream({static_cast<std::uint64_t>(j)});
        StiefelPoint V0 = random_stiefel(data.p(), q, stream);
        slots[j] = curvilinear_search(data, V0, kernel, search_variant, config);
    });

    int best = 0;
    for (int j = 1; j < config.m; ++j) {
        double vj = slots[j]->value;
        if (std::isfinite(vj) && (!std::isfinite(slots[best]->value) || vj < slots[best]->value))
            best = j;
    }

    std::vector<SearchTrace> starts;
    starts.reserve(slots.size());
    bool all_stalled = true;
    for (auto& s : slots) {
        all_stalled = all_stalled && s->trace.stalled;
        starts.push_back(std::move(s->trace));
    }
    SearchResult winner{std::move(slots[static_cast<std::size_t>(best)]->V),
                        slots[static_cast<std::size_t>(best)]->value, {}};

    std::optional<SearchTrace> refine;
    if (variant == Variant::rcve) {
        SearchResult refined = curvilinear_search(data, winner.V, kernel, Variant::wcve, config);
        refine = std::move(refined.trace);
        winner.V = std::move(refined.V);
        winner.value = refined.value;
    }

    StiefelPoint bhat = orth_complement(winner.V);
    return FitResult{std::move(winner.V), std::move(bhat), winner.value, kernel.h,
                     std::move(starts),   std::move(refine), best,        all_stalled};
}

} // namespace cve
