#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "cve/manifold.hpp"
#include "cve/simsuite.hpp"

using Catch::Approx;
using namespace cve::sim;

namespace {

struct Batched {
    double mean, se;
};

template <typename F>
Batched batch_stat(int batches, F&& stat) {
    std::vector<double> vals;
    for (int b = 0; b < batches; ++b) vals.push_back(stat(b));
    double mean = 0.0;
    for (double v : vals) mean += v;
    mean /= vals.size();
    double ss = 0.0;
    for (double v : vals) ss += (v - mean) * (v - mean);
    return {mean, std::sqrt(ss / (vals.size() - 1) / vals.size())};
}

} // namespace

TEST_CASE("gnorm variance identities", "[simsuite]") {
    REQUIRE(gnorm_variance(std::sqrt(1.0 / 120.0), 1.0) == Approx(1.0 / 60.0).margin(1e-12));
    REQUIRE(gnorm_variance(1.3, 2.0) == Approx(1.3 * 1.3 / 2.0).margin(1e-12));
    for (double c : {0.5, 1.0, 2.0, 3.5}) {
        double b = gnorm_scale_for_variance(0.25, c);
        REQUIRE(gnorm_variance(b, c) == Approx(0.25).margin(1e-12));
    }
}

TEST_CASE("gnorm with shape two is gaussian", "[simsuite][slow]") {
    cve::Rng rng(5);
    const double b = 1.3;
    auto v = batch_stat(20, [&](int) {
        double s2 = 0.0;
        for (int i = 0; i < 5000; ++i) {
            double z = sample_gnorm(0.0, b, 2.0, rng);
            s2 += z * z;
        }
        return s2 / 5000.0;
    });
    REQUIRE(std::abs(v.mean - b * b / 2.0) <= 3.0 * v.se + 1e-3);
}

TEST_CASE("gnorm with shape one is laplace", "[simsuite][slow]") {
    cve::Rng rng(6);
    const double b = 0.9;
    auto v = batch_stat(20, [&](int) {
        double s2 = 0.0;
        for (int i = 0; i < 5000; ++i) {
            double z = sample_gnorm(0.0, b, 1.0, rng);
            s2 += z * z;
        }
        return s2 / 5000.0;
    });
    REQUIRE(std::abs(v.mean - 2.0 * b * b) <= 3.0 * v.se + 1e-3);

    cve::Rng rng2(7);
    auto kurt = batch_stat(20, [&](int) {
        double s2 = 0.0, s4 = 0.0;
        const int n = 10000;
        for (int i = 0; i < n; ++i) {
            double z = sample_gnorm(0.0, b, 1.0, rng2);
            s2 += z * z;
            s4 += z * z * z * z;
        }
        s2 /= n;
        s4 /= n;
        return s4 / (s2 * s2) - 3.0; // excess kurtosis
    });
    REQUIRE(std::abs(kurt.mean - 3.0) <= 3.0 * kurt.se + 0.05);
}

TEST_CASE("standard models carry orthonormal true directions", "[simsuite]") {
    for (int m = 0; m < 7; ++m) {
        ModelSpec spec = standard_model(static_cast<Model>(m));
        Eigen::MatrixXd gram = spec.B.transpose() * spec.B;
        gram.diagonal().array() -= 1.0;
        REQUIRE(gram.norm() <= 1e-12);
        REQUIRE_NOTHROW(cve::StiefelPoint(spec.B));
    }
    REQUIRE(standard_model(Model::M1).k == 1);
    REQUIRE(standard_model(Model::M4).k == 2);
    REQUIRE(standard_model(Model::M4).n == 200);
    REQUIRE(standard_model(Model::M6).k == 3);
    REQUIRE(standard_model(Model::M7).k == 4);
    REQUIRE(standard_model(Model::M7).n == 400);
}

TEST_CASE("error scales follow the text, table parameters behind the flag", "[simsuite]") {
    ModelSpec text = standard_model(Model::M1);
    REQUIRE(gnorm_variance(text.error.b, text.error.c) == Approx(0.25).margin(1e-12));
    ModelSpec table = standard_model(Model::M1, 0, 20, true);
    REQUIRE(table.error.b == Approx(std::sqrt(0.5)).margin(1e-15));
    REQUIRE(gnorm_variance(table.error.b, table.error.c) == Approx(60.0).margin(1e-9));

    ModelSpec m7 = standard_model(Model::M7);
    REQUIRE(gnorm_variance(m7.error.b, m7.error.c) == Approx(0.25).margin(1e-12));
    ModelSpec m7t = standard_model(Model::M7, 0, 20, true);
    REQUIRE(gnorm_variance(m7t.error.b, m7t.error.c) == Approx(1.0 / 60.0).margin(1e-12));
}

TEST_CASE("ar predictors reproduce the autoregressive covariance", "[simsuite][slow]") {
    ModelSpec spec = standard_model(Model::M1, 5000, 6);
    cve::Rng rng(8);
    Eigen::MatrixXd X = sample_predictors(spec, rng);
    Eigen::MatrixXd Xc = X.rowwise() - X.colwise().mean();
    Eigen::MatrixXd S = Xc.transpose() * Xc / 5000.0;
    REQUIRE(S(0, 1) == Approx(0.5).margin(0.05));
    REQUIRE(S(1, 2) == Approx(0.5).margin(0.05));
    REQUIRE(S(0, 2) == Approx(0.25).margin(0.05));
    REQUIRE(S(0, 0) == Approx(1.0).margin(0.07));
}

TEST_CASE("degenerate mixture is standard normal", "[simsuite][slow]") {
    ModelSpec spec = standard_model(Model::M2, 8000, 6, false, 0.3, 0.0);
    cve::Rng rng(9);
    Eigen::MatrixXd X = sample_predictors(spec, rng);
    Eigen::VectorXd mean = X.colwise().mean();
    REQUIRE(mean.cwiseAbs().maxCoeff() <= 4.0 / std::sqrt(8000.0));
    Eigen::MatrixXd Xc = X.rowwise() - mean.transpose();
    Eigen::MatrixXd S = Xc.transpose() * Xc / 8000.0;
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) {
            double expect = i == j ? 1.0 : 0.0;
            REQUIRE(S(i, j) == Approx(expect).margin(4.0 * std::sqrt(2.0 / 8000.0)));
        }
}

TEST_CASE("mixture shifts every coordinate by the same scalar", "[simsuite]") {
    ModelSpec spec = standard_model(Model::M2, 2000, 6, false, 0.3, 50.0);
    cve::Rng rng(10);
    Eigen::MatrixXd X = sample_predictors(spec, rng);
    // with lambda >> 1 the row sign is unambiguous; coordinates share it
    int plus = 0;
    for (int i = 0; i < 2000; ++i) {
        bool row_plus = X(i, 0) > 0;
        for (int j = 1; j < 6; ++j) REQUIRE((X(i, j) > 0) == row_plus);
        plus += row_plus ? 1 : 0;
    }
    double freq = plus / 2000.0;
    REQUIRE(freq == Approx(0.3).margin(4.0 * std::sqrt(0.3 * 0.7 / 2000.0)));
}

TEST_CASE("uniform cube predictors stay in bounds", "[simsuite]") {
    ModelSpec spec = standard_model(Model::M5, 3000, 6);
    cve::Rng rng(11);
    Eigen::MatrixXd X = sample_predictors(spec, rng);
    REQUIRE(X.minCoeff() >= 0.0);
    REQUIRE(X.maxCoeff() <= 1.0);
    double se = std::sqrt(1.0 / 12.0 / (3000.0 * 6.0));
    REQUIRE(X.mean() == Approx(0.5).margin(3.0 * se));
}

TEST_CASE("student t predictors are heavy tailed and symmetric", "[simsuite][slow]") {
    ModelSpec spec = standard_model(Model::M7, 10000, 5);
    cve::Rng rng(12);
    Eigen::MatrixXd X = sample_predictors(spec, rng);
    const double total = 10000.0 * 5.0;
    double frac_tail = (X.array().abs() > 2.0).count() / total;
    // t with 3 degrees of freedom: P(|X| > 2) ~ 0.1394; normal would give 0.0455
    REQUIRE(frac_tail == Approx(0.1394).margin(0.015));
    double mean = X.mean();
    REQUIRE(std::abs(mean) <= 0.08);
}

TEST_CASE("generate basics", "[simsuite]") {
    SECTION("noiseless model reproduces the link exactly") {
        ModelSpec spec = standard_model(Model::M3, 50, 8);
        spec.error.sd = 0.0;
        cve::Rng rng(13);
        Generated g = generate(spec, rng);
        REQUIRE((g.data.y - g.link).cwiseAbs().maxCoeff() == 0.0);
        for (int i = 0; i < 50; ++i) {
            double u = g.data.X.row(i) * spec.B.col(0);
            REQUIRE(g.data.y(i) == Approx(2.0 * std::log(std::abs(u) + 2.0)).margin(1e-12));
        }
    }
    SECTION("sum of squares link dominates its noise") {
        ModelSpec spec = standard_model(Model::M6, 80, 5);
        cve::Rng rng(14);
        Generated g = generate(spec, rng);
        REQUIRE(g.link.minCoeff() >= 0.0);
        for (int i = 0; i < 80; ++i) REQUIRE(g.data.y(i) - g.noise(i) >= -1e-12);
    }
    SECTION("same seed gives bit identical replications") {
        ModelSpec spec = standard_model(Model::M1, 40, 8);
        cve::Rng a(15), b(15);
        Generated ga = generate(spec, a);
        Generated gb = generate(spec, b);
        REQUIRE(ga.data.X == gb.data.X);
        REQUIRE(ga.data.y == gb.data.y);
    }
}

TEST_CASE("generated response variance decomposes", "[simsuite][slow]") {
    // var(y) = var(g) + var(eps) under independence; batched self-calibration
    auto stat = batch_stat(12, [&](int b) {
        ModelSpec spec = standard_model(Model::M1, 1500, 8);
        cve::Rng rng(100 + b);
        Generated g = generate(spec, rng);
        auto var = [](const Eigen::VectorXd& v) {
            double m = v.mean();
            return (v.array() - m).square().sum() / v.size();
        };
        return var(g.data.y) - var(g.link);
    });
    REQUIRE(std::abs(stat.mean - 0.25) <= 4.0 * stat.se + 0.01);
}

TEST_CASE("higher-rank models beat a random frame at desk scale", "[simsuite][slow]") {
    // M4..M7 fit with k = 2, 2, 3, 4; even a short run separates the
    // estimator from random frames by a wide margin
    StudyOptions opt;
    opt.reps = 3;
    opt.seed = 404;
    opt.threads = 4;
    opt.optim.m = 3;
    for (Model m : {Model::M4, Model::M5, Model::M6, Model::M7}) {
        auto summary = run_study({standard_model(m)},
                                 {cve::Variant::cve, cve::Variant::random_baseline}, opt);
        const auto& cve_cell = summary.cells[0];
        const auto& base_cell = summary.cells[1];
        INFO(model_name(m) << ": cve " << cve_cell.mean_err << " baseline "
                           << base_cell.mean_err);
        REQUIRE(cve_cell.failures == 0);
        REQUIRE(cve_cell.mean_err < base_cell.mean_err);
        REQUIRE(cve_cell.mean_err <= 0.85);
    }
}

TEST_CASE("weighting helps on the heavy-tailed interaction model", "[simsuite][slow]") {
    // M7 is the setting where slice-occupancy weighting pays off: the
    // weighted variant should clearly beat the plain objective
    StudyOptions opt;
    opt.reps = 6;
    opt.seed = 31;
    opt.threads = 4;
    opt.optim.m = 5;
    auto summary = run_study({standard_model(Model::M7)},
                             {cve::Variant::cve, cve::Variant::wcve}, opt);
    double cve_mean = summary.cells[0].mean_err;
    double wcve_mean = summary.cells[1].mean_err;
    INFO("cve " << cve_mean << " wcve " << wcve_mean);
    REQUIRE(wcve_mean < cve_mean);
    REQUIRE(wcve_mean <= 0.7);
}

TEST_CASE("run_study aggregates, reproduces, and counts failures", "[simsuite]") {
    ModelSpec spec = standard_model(Model::M3, 60, 8);
    StudyOptions opt;
    opt.reps = 3;
    opt.seed = 17;
    opt.optim.m = 2;

    SECTION("structure, determinism across thread counts") {
        auto s1 = run_study({spec}, {cve::Variant::cve, cve::Variant::random_baseline}, opt);
        REQUIRE(s1.cells.size() == 2);
        for (const auto& cell : s1.cells) {
            REQUIRE(cell.reps == 3);
            REQUIRE(cell.failures == 0);
            for (double e : cell.errors) {
                REQUIRE(e >= 0.0);
                REQUIRE(e <= 1.0);
            }
        }
        StudyOptions opt2 = opt;
        opt2.threads = 3;
        auto s2 = run_study({spec}, {cve::Variant::cve, cve::Variant::random_baseline}, opt2);
        for (std::size_t c = 0; c < s1.cells.size(); ++c) {
            REQUIRE(s1.cells[c].mean_err == s2.cells[c].mean_err);
            REQUIRE(s1.cells[c].sd_err == s2.cells[c].sd_err);
            for (std::size_t r = 0; r < s1.cells[c].errors.size(); ++r)
                REQUIRE(s1.cells[c].errors[r] == s2.cells[c].errors[r]);
        }
    }
    SECTION("single replication has zero spread") {
        StudyOptions one = opt;
        one.reps = 1;
        auto s = run_study({spec}, {cve::Variant::cve}, one);
        REQUIRE(s.cells[0].sd_err == 0.0);
    }
    SECTION("per replication errors equal direct refits") {
        auto s = run_study({spec}, {cve::Variant::cve}, opt);
        cve::Rng base(opt.seed);
        for (int rep = 0; rep < opt.reps; ++rep) {
            cve::Rng data_rng = base.substream({0u, static_cast<std::uint64_t>(rep), 0xDA7Au});
            Generated g = generate(spec, data_rng);
            cve::OptimConfig cfg = opt.optim;
            cfg.seed = base.substream({0u, static_cast<std::uint64_t>(rep), 0xF17u, 0u}).seed();
            auto fit = cve::fit_cve(g.data, spec.k, cve::Variant::cve, opt.bandwidth, cfg);
            REQUIRE(s.cells[0].errors[static_cast<std::size_t>(rep)]
                    == cve::subspace_error(g.B, fit.Bhat));
        }
    }
    SECTION("impossible fits are recorded as failures") {
        ModelSpec broken = standard_model(Model::M6, 30, 3);
        broken.k = 3; // k = p has no complement to estimate
        broken.B = Eigen::MatrixXd::Identity(3, 3);
        auto s = run_study({broken}, {cve::Variant::cve}, opt);
        REQUIRE(s.cells[0].failures == 3);
        REQUIRE(s.cells[0].reps == 0);
        REQUIRE(std::isnan(s.cells[0].mean_err));
    }
    SECTION("dimension selection is recorded when requested") {
        StudyOptions dopt = opt;
        dopt.reps = 2;
        dopt.select_dim = true;
        dopt.lmax = 2;
        auto s = run_study({spec}, {cve::Variant::cve}, dopt);
        REQUIRE(s.cells[0].dim_correct >= 0);
        for (int kh : s.cells[0].khats) {
            REQUIRE(kh >= 1);
            REQUIRE(kh <= 2);
        }
    }
}
