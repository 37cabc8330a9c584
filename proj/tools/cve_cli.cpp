// Command-line front end: CSV ingestion, fitting, dimension selection,
// simulation studies, the toy-model sweep, and a gradient self-check.
//
// Exit codes: 0 success, 2 usage/input error, 3 numerical failure.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cve/cve.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr double kPi = 3.14159265358979323846;

std::string fnv1a_hex(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return "unreadable";
    std::uint64_t hash = 1469598103934665603ULL;
    char buf[1 << 14];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            hash ^= static_cast<unsigned char>(buf[i]);
            hash *= 1099511628211ULL;
        }
        if (!in) break;
    }
    char out[17];
    std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(hash));
    return out;
}

json make_manifest(const std::string& command, const json& options, std::uint64_t seed,
                   const std::string& input_digest, double seconds) {
    return json{{"command", command},
                {"options", options},
                {"seed", seed},
                {"input_digest", input_digest},
                {"artifact_version", kVersion},
                {"timing_seconds", seconds}};
}

cve::BandwidthRule parse_bandwidth(const std::string& s) {
    if (s == "rot") return cve::BandwidthRule::rule_of_thumb();
    if (s.rfind("nobs=", 0) == 0) return cve::BandwidthRule::nobs(std::stod(s.substr(5)));
    if (s.rfind("fixed=", 0) == 0) return cve::BandwidthRule::fixed(std::stod(s.substr(6)));
    throw cve::InvalidArgument("unknown bandwidth spec '" + s + "' (rot | nobs=<x> | fixed=<h>)");
}

cve::Variant parse_variant(const std::string& s) {
    if (s == "cve") return cve::Variant::cve;
    if (s == "wcve") return cve::Variant::wcve;
    if (s == "rcve") return cve::Variant::rcve;
    if (s == "random") return cve::Variant::random_baseline;
    throw cve::InvalidArgument("unknown variant '" + s + "'");
}

struct LoadedData {
    cve::DataSet data;
    std::vector<std::string> predictor_columns;
    json standardization; // null when off
};

LoadedData load_dataset(const std::string& path, const std::string& response, bool standardize) {
    cve::CsvTable table = cve::read_csv(path);
    std::ptrdiff_t ycol = -1;
    for (std::size_t j = 0; j < table.columns.size(); ++j)
        if (table.columns[j] == response) ycol = static_cast<std::ptrdiff_t>(j);
    if (ycol < 0) throw cve::CsvError(path + ": response column '" + response + "' not found");
    if (table.columns.size() < 2)
        throw cve::CsvError(path + ": need at least one predictor column");
    if (table.values.rows() < 2) throw cve::CsvError(path + ": need at least two data rows");

    LoadedData out;
    out.data.y = table.values.col(ycol);
    out.data.X.resize(table.values.rows(), table.values.cols() - 1);
    Eigen::Index col = 0;
    for (std::size_t j = 0; j < table.columns.size(); ++j) {
        if (static_cast<std::ptrdiff_t>(j) == ycol) continue;
        out.data.X.col(col++) = table.values.col(static_cast<Eigen::Index>(j));
        out.predictor_columns.push_back(table.columns[j]);
    }
    out.data.validate();
    out.standardization = nullptr;

    if (standardize) {
        auto scale = [&](Eigen::VectorXd& v, const std::string& name, json& rec) {
            double mean = v.mean();
            double sd = std::sqrt((v.array() - mean).square().sum()
                                  / static_cast<double>(v.size() - 1));
            if (!(sd > 0.0))
                throw cve::DegenerateData(path + ": column '" + name
                                          + "' is constant, cannot standardize");
            v = (v.array() - mean) / sd;
            rec = json{{"column", name}, {"mean", mean}, {"sd", sd}};
        };
        json cols = json::array();
        for (Eigen::Index j = 0; j < out.data.X.cols(); ++j) {
            Eigen::VectorXd c = out.data.X.col(j);
            json rec;
            scale(c, out.predictor_columns[static_cast<std::size_t>(j)], rec);
            out.data.X.col(j) = c;
            cols.push_back(rec);
        }
        json yrec;
        scale(out.data.y, response, yrec);
        out.standardization = json{{"predictors", cols}, {"response", yrec}};
    }
    return out;
}

json trace_to_json(const cve::SearchTrace& t) {
    json iters = json::array();
    for (const auto& it : t.iterations)
        iters.push_back(json{{"objective", it.objective},
                             {"tau", it.tau},
                             {"accepted", it.accepted},
                             {"error", it.error}});
    return json{{"final_value", t.final_value}, {"iterations", t.iterations.size()},
                {"accepted", t.accepted},       {"rejected", t.rejected},
                {"stalled", t.stalled},         {"max_orth_dev", t.max_orth_dev},
                {"trace", iters}};
}

json matrix_to_json(const Eigen::MatrixXd& m) {
    json vals = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i) vals.push_back(m(i, j));
    return json{{"rows", m.rows()}, {"cols", m.cols()}, {"column_major", vals}};
}

void write_json_file(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw cve::CsvError("cannot open output file: " + path);
    out << j.dump(2) << "\n";
}

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
};

// ---------------------------------------------------------------- fit

int cmd_fit(const std::string& input, const std::string& response, int k,
            const std::string& variant_str, const std::string& bandwidth_str, int starts,
            int maxit, std::uint64_t seed, int threads, bool standardize,
            const std::string& out_path) {
    Timer timer;
    cve::Variant variant = parse_variant(variant_str);
    if (variant == cve::Variant::random_baseline)
        throw cve::InvalidArgument("fit: variant must be cve, wcve or rcve");
    cve::BandwidthRule rule = parse_bandwidth(bandwidth_str);
    if (k < 1) throw cve::InvalidArgument("fit: --dim must be a positive dimension");

    LoadedData loaded = load_dataset(input, response, standardize);
    cve::OptimConfig config;
    config.m = starts;
    config.maxit = maxit;
    config.seed = seed;
    cve::FitResult fit = cve::fit_cve(loaded.data, k, variant, rule, config, threads);

    json starts_json = json::array();
    for (const auto& t : fit.starts) starts_json.push_back(trace_to_json(t));
    json result{{"n", loaded.data.n()},
                {"p", loaded.data.p()},
                {"k", k},
                {"q", loaded.data.p() - k},
                {"variant", variant_str},
                {"bandwidth", fit.bandwidth},
                {"objective", fit.objective},
                {"Bhat", matrix_to_json(fit.Bhat.matrix())},
                {"Vq", matrix_to_json(fit.Vq.matrix())},
                {"best_start", fit.best_start},
                {"all_stalled", fit.all_stalled},
                {"starts", starts_json},
                {"refine", fit.refine ? trace_to_json(*fit.refine) : json(nullptr)},
                {"standardization", loaded.standardization},
                {"predictor_columns", loaded.predictor_columns}};

    json options{{"input", input},       {"response", response},   {"dim", k},
                 {"variant", variant_str}, {"bandwidth", bandwidth_str}, {"starts", starts},
                 {"maxit", maxit},       {"standardize", standardize}, {"threads", threads},
                 {"out", out_path}};
    write_json_file(out_path,
                    json{{"manifest", make_manifest("fit", options, seed, fnv1a_hex(input),
                                                    timer.seconds())},
                         {"result", result}});
    std::cout << "objective " << cve::format_full(fit.objective) << ", bandwidth "
              << cve::format_full(fit.bandwidth) << ", result written to " << out_path << "\n";
    if (fit.all_stalled) {
        std::cerr << "fit: every start stalled; result is best-effort\n";
        return 3;
    }
    return 0;
}

// ----------------------------------------------------------- simulate

int cmd_simulate(const std::string& model_str, int reps, int n, int p,
                 const std::string& variants_str, int starts, std::uint64_t seed, int threads,
                 bool select_dim, int lmax, double p_mix, double lambda, bool table_params,
                 const std::string& out_dir) {
    Timer timer;
    auto model = cve::sim::model_from_name(model_str);
    if (!model) throw cve::InvalidArgument("unknown model id '" + model_str + "' (M1..M7)");

    std::vector<cve::Variant> variants;
    std::vector<std::string> variant_names;
    std::stringstream ss(variants_str);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        variants.push_back(parse_variant(tok));
        variant_names.push_back(tok);
    }
    if (variants.empty()) throw cve::InvalidArgument("simulate: no variants given");

    cve::sim::ModelSpec spec = cve::sim::standard_model(*model, n, p, table_params, p_mix, lambda);
    cve::sim::StudyOptions opt;
    opt.reps = reps;
    opt.seed = seed;
    opt.threads = threads;
    opt.select_dim = select_dim;
    opt.lmax = lmax;
    opt.optim.m = starts;
    cve::sim::StudySummary summary = cve::sim::run_study({spec}, variants, opt);

    fs::create_directories(out_dir);
    {
        std::ofstream out(fs::path(out_dir) / "summary.csv");
        out << "model,variant,mean_err,sd_err,reps,failures";
        if (select_dim) out << ",dim_correct";
        out << "\n";
        for (const auto& cell : summary.cells) {
            out << cve::sim::model_name(cell.model) << "," << cve::variant_name(cell.variant)
                << "," << cve::format_full(cell.mean_err) << "," << cve::format_full(cell.sd_err)
                << "," << cell.reps << "," << cell.failures;
            if (select_dim) out << "," << cell.dim_correct;
            out << "\n";
        }
    }
    {
        std::ofstream out(fs::path(out_dir) / "errors.csv");
        out << "model,variant,rep,err";
        if (select_dim) out << ",khat";
        out << "\n";
        for (const auto& cell : summary.cells) {
            for (std::size_t r = 0; r < cell.errors.size(); ++r) {
                out << cve::sim::model_name(cell.model) << ","
                    << cve::variant_name(cell.variant) << "," << r << ","
                    << cve::format_full(cell.errors[r]);
                if (select_dim) out << "," << cell.khats[r];
                out << "\n";
            }
        }
    }
    json options{{"model", model_str},   {"reps", reps},
                 {"n", spec.n},          {"p", p},
                 {"variants", variant_names}, {"starts", starts},
                 {"select_dim", select_dim},  {"lmax", lmax},
                 {"p_mix", p_mix},       {"lambda", lambda},
                 {"table_error_params", table_params}, {"threads", threads},
                 {"out", out_dir}};
    json files{{"summary.csv", fnv1a_hex((fs::path(out_dir) / "summary.csv").string())},
               {"errors.csv", fnv1a_hex((fs::path(out_dir) / "errors.csv").string())}};
    write_json_file((fs::path(out_dir) / "manifest.json").string(),
                    json{{"manifest", make_manifest("simulate", options, seed, "", timer.seconds())},
                         {"files", files}});

    for (const auto& cell : summary.cells)
        std::cout << cve::sim::model_name(cell.model) << " " << cve::variant_name(cell.variant)
                  << ": mean_err " << cell.mean_err << " sd " << cell.sd_err << " ("
                  << cell.reps << " reps, " << cell.failures << " failures)"
                  << (select_dim ? " dim_correct " + std::to_string(cell.dim_correct) : "")
                  << "\n";
    return 0;
}

// ---------------------------------------------------------------- dim

int cmd_dim(const std::string& input, const std::string& response, int lmax,
            const std::string& variant_str, const std::string& bandwidth_str, int starts,
            int maxit, std::uint64_t seed, int threads, bool standardize,
            const std::string& out_dir) {
    Timer timer;
    cve::Variant variant = parse_variant(variant_str);
    if (variant == cve::Variant::random_baseline)
        throw cve::InvalidArgument("dim: variant must be cve, wcve or rcve");
    cve::BandwidthRule rule = parse_bandwidth(bandwidth_str);

    LoadedData loaded = load_dataset(input, response, standardize);
    int effective_lmax = lmax > 0 ? lmax : static_cast<int>(std::min<Eigen::Index>(loaded.data.p(), 10));
    cve::OptimConfig config;
    config.m = starts;
    config.maxit = maxit;
    config.seed = seed;
    cve::CvCurve curve = cve::cv_curve(loaded.data, effective_lmax, variant, rule, config, threads);

    fs::create_directories(out_dir);
    Eigen::MatrixXd rows(curve.values.size(), 3);
    for (std::size_t i = 0; i < curve.values.size(); ++i) {
        rows(static_cast<Eigen::Index>(i), 0) = curve.values[i].l;
        rows(static_cast<Eigen::Index>(i), 1) = curve.values[i].cv;
        rows(static_cast<Eigen::Index>(i), 2) = curve.values[i].fallbacks;
    }
    cve::write_csv((fs::path(out_dir) / "cv_curve.csv").string(), {"l", "cv", "fallbacks"}, rows);

    json curve_json = json::array();
    for (const auto& ptv : curve.values)
        curve_json.push_back(json{{"l", ptv.l}, {"cv", ptv.cv}, {"fallbacks", ptv.fallbacks}});
    json options{{"input", input},   {"response", response}, {"lmax", effective_lmax},
                 {"variant", variant_str}, {"bandwidth", bandwidth_str}, {"starts", starts},
                 {"maxit", maxit},   {"standardize", standardize}, {"threads", threads},
                 {"out", out_dir}};
    json files{{"cv_curve.csv", fnv1a_hex((fs::path(out_dir) / "cv_curve.csv").string())}};
    write_json_file((fs::path(out_dir) / "result.json").string(),
                    json{{"manifest", make_manifest("dim", options, seed, fnv1a_hex(input),
                                                    timer.seconds())},
                         {"files", files},
                         {"result", json{{"khat", curve.khat}, {"curve", curve_json}}}});
    std::cout << "khat " << curve.khat << ", curve written to " << out_dir << "\n";
    return 0;
}

// --------------------------------------------------------- sweep-theta

int cmd_sweep_theta(int n, double eta, int grid, std::uint64_t seed,
                    const std::string& out_path) {
    Timer timer;
    if (n < 2) throw cve::InvalidArgument("sweep-theta: need n >= 2");
    if (grid < 1) throw cve::InvalidArgument("sweep-theta: need grid >= 1");
    if (!(eta >= 0.0)) throw cve::InvalidArgument("sweep-theta: eta must be nonnegative");

    cve::Rng rng(seed);
    Eigen::MatrixXd X(n, 2);
    for (int i = 0; i < n; ++i) {
        X(i, 0) = rng.normal();
        X(i, 1) = rng.normal();
    }
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) y(i) = X(i, 0) + eta * rng.normal();
    cve::DataSet data(y, X);

    cve::KernelSpec kernel{cve::Kernel::gaussian, cve::bandwidth_rot(n, 2, 1, X)};
    Eigen::Vector2d B(1.0, 0.0);
    Eigen::Matrix2d Sigma = Eigen::Matrix2d::Identity();

    Eigen::MatrixXd rows(grid + 1, 3);
    for (int i = 0; i <= grid; ++i) {
        double theta = kPi * static_cast<double>(i) / static_cast<double>(grid);
        Eigen::MatrixXd v(2, 1);
        v(0, 0) = std::cos(theta);
        v(1, 0) = std::sin(theta);
        cve::StiefelPoint V(v);
        rows(i, 0) = theta;
        rows(i, 1) = cve::objective_Ln(data, V, kernel);
        rows(i, 2) = cve::oracle_L_toy(V, Sigma, B, eta * eta);
    }
    cve::write_csv(out_path, {"theta", "Ln", "oracle"}, rows);

    json options{{"n", n}, {"eta", eta}, {"grid", grid}, {"out", out_path}};
    write_json_file(out_path + ".manifest.json",
                    json{{"manifest", make_manifest("sweep-theta", options, seed, "",
                                                    timer.seconds())},
                         {"files", json{{fs::path(out_path).filename().string(),
                                         fnv1a_hex(out_path)}}}});
    std::cout << "sweep written to " << out_path << " (" << grid + 1 << " rows)\n";
    return 0;
}

// ----------------------------------------------------------- gradcheck

int cmd_gradcheck(std::uint64_t seed) {
    constexpr double kGate = 1e-4;
    constexpr double kStep = 1e-6;
    cve::Rng base(seed);
    double worst = 0.0;

    struct Shape { int n, p, q; };
    const Shape shapes[] = {{25, 5, 3}, {30, 6, 4}, {20, 4, 2}};
    int case_idx = 0;
    for (const auto& shape : shapes) {
        cve::Rng rng = base.substream({static_cast<std::uint64_t>(case_idx++)});
        Eigen::MatrixXd X(shape.n, shape.p);
        Eigen::VectorXd y(shape.n);
        for (int i = 0; i < shape.n; ++i) {
            for (int j = 0; j < shape.p; ++j) X(i, j) = rng.normal();
            y(i) = rng.normal();
        }
        cve::DataSet data(y, X);
        cve::StiefelPoint V = cve::random_stiefel(shape.p, shape.q, rng);
        cve::KernelSpec kernel{cve::Kernel::gaussian, 0.8};
        Eigen::VectorXd s0(shape.p);
        for (int j = 0; j < shape.p; ++j) s0(j) = rng.normal();

        auto report = [&](const std::string& name, double dev) {
            std::cout << name << " n=" << shape.n << " p=" << shape.p << " q=" << shape.q
                      << ": max relative discrepancy " << dev << "\n";
            if (dev > worst) worst = dev;
        };

        {
            cve::GradientResult g = cve::grad_Ltilde(data, V, s0, kernel);
            report("grad_Ltilde", cve::finite_diff_check(
                                      [&](const Eigen::MatrixXd& W) {
                                          cve::DataSet d2 = data;
                                          Eigen::MatrixXd Xc = d2.X.rowwise() - s0.transpose();
                                          Eigen::MatrixXd T = Xc * W;
                                          Eigen::VectorXd dist = Xc.rowwise().squaredNorm()
                                                               - T.rowwise().squaredNorm();
                                          Eigen::VectorXd kv(dist.size());
                                          for (Eigen::Index i = 0; i < dist.size(); ++i)
                                              kv(i) = kernel.eval(dist(i) / kernel.h);
                                          Eigen::VectorXd w = kv / kv.sum();
                                          double m1 = w.dot(d2.y);
                                          return w.dot(d2.y.cwiseProduct(d2.y)) - m1 * m1;
                                      },
                                      g, V, kStep));
        }
        {
            cve::GradientResult g = cve::grad_Ln(data, V, kernel);
            report("grad_Ln", cve::finite_diff_check(
                                  [&](const Eigen::MatrixXd& W) {
                                      return cve::detail::ambient_Ln(data, W, kernel);
                                  },
                                  g, V, kStep));
        }
        {
            cve::GradientResult g =
                cve::grad_Ln_weighted(data, V, kernel, cve::WeightedGradientMode::full);
            report("grad_Ln_weighted", cve::finite_diff_check(
                                           [&](const Eigen::MatrixXd& W) {
                                               return cve::detail::ambient_Ln_weighted(data, W,
                                                                                       kernel);
                                           },
                                           g, V, kStep));
        }
    }

    // constant response: every gradient is identically zero
    {
        cve::Rng rng = base.substream({99u});
        Eigen::MatrixXd X(15, 4);
        for (int i = 0; i < 15; ++i)
            for (int j = 0; j < 4; ++j) X(i, j) = rng.normal();
        cve::DataSet data(Eigen::VectorXd::Constant(15, 3.25), X);
        cve::StiefelPoint V = cve::random_stiefel(4, 2, rng);
        cve::KernelSpec kernel{cve::Kernel::gaussian, 0.7};
        cve::GradientResult g = cve::grad_Ln(data, V, kernel);
        double dev = cve::finite_diff_check(
            [&](const Eigen::MatrixXd& W) { return cve::detail::ambient_Ln(data, W, kernel); },
            g, V, kStep);
        std::cout << "grad_Ln constant-response: max relative discrepancy " << dev << "\n";
        if (dev > worst) worst = dev;
    }

    std::cout << (worst <= kGate ? "PASS" : "FAIL") << " (worst " << worst << ", gate " << kGate
              << ")\n";
    return worst <= kGate ? 0 : 3;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Conditional variance estimation for sufficient dimension reduction"};
    app.require_subcommand(1);

    // fit
    auto* fit = app.add_subcommand("fit", "Fit a k-dimensional reduction from a CSV file");
    std::string fit_input, fit_response, fit_variant = "cve", fit_bandwidth = "rot", fit_out;
    int fit_k = 0, fit_starts = 10, fit_maxit = 50, fit_threads = 1;
    std::uint64_t fit_seed = 0;
    bool fit_standardize = true;
    fit->add_option("input", fit_input, "input CSV with header row")->required();
    fit->add_option("--response", fit_response, "response column name")->required();
    fit->add_option("--dim", fit_k, "reduction dimension k")->required();
    fit->add_option("--variant", fit_variant, "cve|wcve|rcve (default cve)");
    fit->add_option("--bandwidth", fit_bandwidth, "rot | nobs=<x> | fixed=<h> (default rot)");
    fit->add_option("--starts", fit_starts, "number of random starts (default 10)");
    fit->add_option("--maxit", fit_maxit, "max accepted steps per start (default 50)");
    fit->add_option("--seed", fit_seed, "RNG seed (default 0)");
    fit->add_option("--threads", fit_threads, "worker threads (default 1)");
    fit->add_flag("--standardize,!--no-standardize", fit_standardize,
                  "center/scale columns (default on)");
    fit->add_option("--out", fit_out, "output JSON path")->required();

    // simulate
    auto* simulate = app.add_subcommand("simulate", "Replication study for models M1..M7");
    std::string sim_model, sim_variants = "cve", sim_out;
    int sim_reps = 20, sim_n = 0, sim_p = 20, sim_starts = 5, sim_lmax = 0, sim_threads = 1;
    std::uint64_t sim_seed = 0;
    bool sim_select_dim = false, sim_table_params = false, sim_full = false;
    double sim_pmix = 0.3, sim_lambda = 1.0;
    simulate->add_option("--model", sim_model, "model id M1..M7")->required();
    simulate->add_option("--reps", sim_reps, "replications (default 20)");
    simulate->add_option("--n", sim_n, "sample size override");
    simulate->add_option("--p", sim_p, "predictor dimension (default 20)");
    simulate->add_option("--variants", sim_variants, "comma list: cve,wcve,rcve,random");
    simulate->add_option("--starts", sim_starts, "random starts per fit (default 5)");
    simulate->add_option("--seed", sim_seed, "RNG seed (default 0)");
    simulate->add_option("--threads", sim_threads, "worker threads (default 1)");
    simulate->add_flag("--select-dim", sim_select_dim, "also run dimension selection");
    simulate->add_option("--lmax", sim_lmax, "dimension scan limit (default min(p,10))");
    simulate->add_option("--p-mix", sim_pmix, "M2 mixing probability (default 0.3)");
    simulate->add_option("--lambda", sim_lambda, "M2 mode distance (default 1)");
    simulate->add_flag("--table-error-params", sim_table_params,
                       "use the printed GN parameters instead of Var=0.25 scales");
    simulate->add_flag("--full", sim_full, "full protocol: reps=100, starts=10");
    simulate->add_option("--out", sim_out, "output directory")->required();

    // dim
    auto* dim = app.add_subcommand("dim", "Cross-validated dimension selection from a CSV file");
    std::string dim_input, dim_response, dim_variant = "cve", dim_bandwidth = "rot", dim_out;
    int dim_lmax = 0, dim_starts = 10, dim_maxit = 50, dim_threads = 1;
    std::uint64_t dim_seed = 0;
    bool dim_standardize = true;
    dim->add_option("input", dim_input, "input CSV with header row")->required();
    dim->add_option("--response", dim_response, "response column name")->required();
    dim->add_option("--lmax", dim_lmax, "scan l = 1..lmax (default min(p,10))");
    dim->add_option("--variant", dim_variant, "cve|wcve|rcve (default cve)");
    dim->add_option("--bandwidth", dim_bandwidth, "rot | nobs=<x> | fixed=<h>");
    dim->add_option("--starts", dim_starts, "random starts per fit (default 10)");
    dim->add_option("--maxit", dim_maxit, "max accepted steps per start (default 50)");
    dim->add_option("--seed", dim_seed, "RNG seed (default 0)");
    dim->add_option("--threads", dim_threads, "worker threads (default 1)");
    dim->add_flag("--standardize,!--no-standardize", dim_standardize,
                  "center/scale columns (default on)");
    dim->add_option("--out", dim_out, "output directory")->required();

    // sweep-theta
    auto* sweep = app.add_subcommand("sweep-theta",
                                     "Objective sweep over V(theta) for the bivariate toy model");
    int sweep_n = 500, sweep_grid = 100;
    double sweep_eta = 0.1;
    std::uint64_t sweep_seed = 0;
    std::string sweep_out;
    sweep->add_option("--n", sweep_n, "sample size (default 500)");
    sweep->add_option("--eta", sweep_eta, "noise standard deviation (default 0.1)");
    sweep->add_option("--grid", sweep_grid, "grid intervals over [0, pi] (default 100)");
    sweep->add_option("--seed", sweep_seed, "RNG seed (default 0)");
    sweep->add_option("--out", sweep_out, "output CSV path")->required();

    // gradcheck
    auto* gradcheck = app.add_subcommand("gradcheck",
                                         "Verify analytic gradients against finite differences");
    std::uint64_t gc_seed = 0;
    gradcheck->add_option("--seed", gc_seed, "RNG seed (default 0)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    }

    try {
        if (fit->parsed())
            return cmd_fit(fit_input, fit_response, fit_k, fit_variant, fit_bandwidth, fit_starts,
                           fit_maxit, fit_seed, fit_threads, fit_standardize, fit_out);
        if (simulate->parsed()) {
            if (sim_full) {
                if (simulate->count("--reps") == 0) sim_reps = 100;
                if (simulate->count("--starts") == 0) sim_starts = 10;
            }
            return cmd_simulate(sim_model, sim_reps, sim_n, sim_p, sim_variants, sim_starts,
                                sim_seed, sim_threads, sim_select_dim, sim_lmax, sim_pmix,
                                sim_lambda, sim_table_params, sim_out);
        }
        if (dim->parsed())
            return cmd_dim(dim_input, dim_response, dim_lmax, dim_variant, dim_bandwidth,
                           dim_starts, dim_maxit, dim_seed, dim_threads, dim_standardize, dim_out);
        if (sweep->parsed())
            return cmd_sweep_theta(sweep_n, sweep_eta, sweep_grid, sweep_seed, sweep_out);
        if (gradcheck->parsed()) return cmd_gradcheck(gc_seed);
    } catch (const cve::InvalidArgument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const cve::CsvError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const cve::DegenerateData& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    }
    return 2;
}
