#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <sys/wait.h>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "cve/csv.hpp"
#include "cve/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using Catch::Approx;

namespace {

int run_cli(const std::string& args, const std::string& log = "/dev/null") {
    std::string cmd = std::string(CVE_CLI_PATH) + " " + args + " >" + log + " 2>&1";
    int rc = std::system(cmd.c_str());
    if (rc == -1) return -1;
    return WEXITSTATUS(rc);
}

fs::path work_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / "cve_cli_tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json load_json(const fs::path& path) { return json::parse(slurp(path)); }

// toy single-index CSV: y = x1 + eta noise
void write_toy_csv(const fs::path& path, int n, double eta, std::uint64_t seed, int p = 2) {
    cve::Rng rng(seed);
    Eigen::MatrixXd values(n, p + 1);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < p; ++j) values(i, j + 1) = rng.normal();
    for (int i = 0; i < n; ++i) values(i, 0) = values(i, 1) + eta * rng.normal();
    std::vector<std::string> cols{"y"};
    for (int j = 1; j <= p; ++j) cols.push_back("x" + std::to_string(j));
    cve::write_csv(path.string(), cols, values);
}

} // namespace

TEST_CASE("cli fit recovers the toy direction and is deterministic", "[cli]") {
    auto dir = work_dir("fit");
    auto csv = dir / "toy.csv";
    write_toy_csv(csv, 200, 0.1, 3);

    std::string base = "fit " + csv.string() + " --response y --dim 1 --starts 5 --seed 7";
    REQUIRE(run_cli(base + " --out " + (dir / "a.json").string()) == 0);
    REQUIRE(run_cli(base + " --out " + (dir / "b.json").string()) == 0);

    json a = load_json(dir / "a.json");
    json b = load_json(dir / "b.json");
    REQUIRE(a["result"].dump() == b["result"].dump());

    auto bhat = a["result"]["Bhat"]["column_major"];
    REQUIRE(bhat.size() == 2);
    double b0 = bhat[0].get<double>();
    double b1 = bhat[1].get<double>();
    double angle = std::atan2(std::abs(b1), std::abs(b0));
    REQUIRE(angle <= 0.15);
    REQUIRE(a["result"]["all_stalled"].get<bool>() == false);
    REQUIRE(a["manifest"]["seed"].get<std::uint64_t>() == 7);
}

TEST_CASE("cli fit accepts every bandwidth spec and variant", "[cli]") {
    auto dir = work_dir("fit_variants");
    auto csv = dir / "toy.csv";
    write_toy_csv(csv, 120, 0.2, 8);
    std::string base = "fit " + csv.string() + " --response y --dim 1 --starts 2 --seed 1 ";
    REQUIRE(run_cli(base + "--bandwidth fixed=0.5 --out " + (dir / "f.json").string()) == 0);
    REQUIRE(run_cli(base + "--bandwidth nobs=20 --out " + (dir / "n.json").string()) == 0);
    REQUIRE(run_cli(base + "--variant wcve --out " + (dir / "w.json").string()) == 0);
    REQUIRE(run_cli(base + "--variant rcve --out " + (dir / "r.json").string()) == 0);
    json r = load_json(dir / "r.json");
    REQUIRE_FALSE(r["result"]["refine"].is_null());
    json f = load_json(dir / "f.json");
    REQUIRE(f["result"]["bandwidth"].get<double>() == 0.5);

    SECTION("bad bandwidth spec") {
        REQUIRE(run_cli(base + "--bandwidth magic --out " + (dir / "x.json").string()) == 2);
    }
    SECTION("degenerate bandwidth is a numerical failure") {
        REQUIRE(run_cli(base + "--variant wcve --bandwidth fixed=1e-12 --out "
                        + (dir / "d.json").string())
                == 3);
    }
}

TEST_CASE("cli fit input failures exit with code two", "[cli]") {
    auto dir = work_dir("fit_errors");
    auto csv = dir / "toy.csv";
    write_toy_csv(csv, 50, 0.1, 4);

    SECTION("dimension zero") {
        REQUIRE(run_cli("fit " + csv.string() + " --response y --dim 0 --out " + (dir / "o.json").string(),
                        (dir / "log.txt").string())
                == 2);
    }
    SECTION("dimension too large") {
        REQUIRE(run_cli("fit " + csv.string() + " --response y --dim 5 --out " + (dir / "o.json").string())
                == 2);
    }
    SECTION("missing response column") {
        int rc = run_cli("fit " + csv.string() + " --response z --dim 1 --out " + (dir / "o.json").string(),
                         (dir / "log.txt").string());
        REQUIRE(rc == 2);
        REQUIRE(slurp(dir / "log.txt").find("'z'") != std::string::npos);
    }
    SECTION("malformed cell names row and column") {
        auto bad = dir / "bad.csv";
        std::ofstream out(bad);
        out << "y,x1\n1.0,2.0\n1.5,abc\n";
        out.close();
        int rc = run_cli("fit " + bad.string() + " --response y --dim 1 --out " + (dir / "o.json").string(),
                         (dir / "log.txt").string());
        REQUIRE(rc == 2);
        std::string log = slurp(dir / "log.txt");
        REQUIRE(log.find("row 3") != std::string::npos);
        REQUIRE(log.find("x1") != std::string::npos);
    }
    SECTION("unknown flag") {
        REQUIRE(run_cli("fit " + csv.string() + " --response y --dim 1 --frobnicate --out x.json")
                == 2);
    }
}

TEST_CASE("cli simulate writes deterministic summaries across thread counts", "[cli][slow]") {
    auto dir = work_dir("simulate");
    std::string common = "simulate --model M3 --reps 3 --n 60 --starts 2 --seed 9 "
                         "--variants cve,random ";
    REQUIRE(run_cli(common + "--threads 1 --out " + (dir / "t1").string()) == 0);
    REQUIRE(run_cli(common + "--threads 4 --out " + (dir / "t4").string()) == 0);

    REQUIRE(slurp(dir / "t1" / "summary.csv") == slurp(dir / "t4" / "summary.csv"));
    REQUIRE(slurp(dir / "t1" / "errors.csv") == slurp(dir / "t4" / "errors.csv"));

    // digests recorded in the two manifests agree
    json m1 = load_json(dir / "t1" / "manifest.json");
    json m4 = load_json(dir / "t4" / "manifest.json");
    REQUIRE(m1["files"]["summary.csv"] == m4["files"]["summary.csv"]);
    REQUIRE(m1["files"]["errors.csv"] == m4["files"]["errors.csv"]);

    std::string summary = slurp(dir / "t1" / "summary.csv");
    REQUIRE(summary.rfind("model,variant,mean_err,sd_err,reps,failures", 0) == 0);
    REQUIRE(summary.find("\nM3,cve,") != std::string::npos);
    REQUIRE(summary.find("\nM3,random,") != std::string::npos);
}

TEST_CASE("cli simulate reproduces the M1 accuracy range", "[cli][slow]") {
    auto dir = work_dir("simulate_m1");
    REQUIRE(run_cli("simulate --model M1 --reps 20 --variants cve --starts 5 --seed 2024 "
                    "--threads 4 --out " + dir.string())
            == 0);
    std::string summary = slurp(dir / "summary.csv");
    auto row = summary.find("M1,cve,");
    REQUIRE(row != std::string::npos);
    std::string rest = summary.substr(row + 7);
    double mean = std::stod(rest.substr(0, rest.find(',')));
    REQUIRE(mean >= 0.25);
    REQUIRE(mean <= 0.55);
}

TEST_CASE("cli simulate rejects unknown models", "[cli]") {
    auto dir = work_dir("simulate_bad");
    REQUIRE(run_cli("simulate --model M9 --reps 1 --out " + (dir / "o").string()) == 2);
}

TEST_CASE("cli simulate --full keeps explicit overrides", "[cli][slow]") {
    auto dir = work_dir("simulate_full");
    REQUIRE(run_cli("simulate --model M3 --full --reps 2 --n 60 --seed 3 --out "
                    + dir.string())
            == 0);
    json m = load_json(dir / "manifest.json");
    REQUIRE(m["manifest"]["options"]["reps"].get<int>() == 2);   // explicit flag wins
    REQUIRE(m["manifest"]["options"]["starts"].get<int>() == 10); // --full default
}

TEST_CASE("cli dim selects one dimension on noiseless data", "[cli][slow]") {
    auto dir = work_dir("dim");
    auto csv = dir / "lin.csv";
    write_toy_csv(csv, 150, 0.0, 5, 4);
    REQUIRE(run_cli("dim " + csv.string() + " --response y --lmax 3 --starts 3 --seed 2 --out "
                    + (dir / "out").string())
            == 0);
    json r = load_json(dir / "out" / "result.json");
    REQUIRE(r["result"]["khat"].get<int>() == 1);
    cve::CsvTable curve = cve::read_csv((dir / "out" / "cv_curve.csv").string());
    REQUIRE(curve.values.rows() == 3);
    REQUIRE(curve.columns[0] == "l");

    SECTION("lmax one is forced") {
        REQUIRE(run_cli("dim " + csv.string() + " --response y --lmax 1 --starts 2 --out "
                        + (dir / "one").string())
                == 0);
        REQUIRE(load_json(dir / "one" / "result.json")["result"]["khat"].get<int>() == 1);
    }
}

TEST_CASE("cli sweep-theta grid contract", "[cli]") {
    auto dir = work_dir("sweep");
    auto out = dir / "sweep.csv";
    REQUIRE(run_cli("sweep-theta --n 120 --grid 4 --seed 1 --out " + out.string()) == 0);
    cve::CsvTable t = cve::read_csv(out.string());
    REQUIRE(t.values.rows() == 5);
    const double pi = 3.14159265358979323846;
    for (int i = 0; i < 5; ++i) REQUIRE(t.values(i, 0) == Approx(i * pi / 4.0).margin(1e-15));
    // theta = pi/2 row: oracle value is eta^2
    REQUIRE(t.values(2, 2) == Approx(0.01).margin(1e-12));

    SECTION("reruns are byte identical") {
        auto out2 = dir / "sweep2.csv";
        REQUIRE(run_cli("sweep-theta --n 120 --grid 4 --seed 1 --out " + out2.string()) == 0);
        REQUIRE(slurp(out) == slurp(out2));
    }
}

TEST_CASE("cli gradcheck passes", "[cli]") {
    auto dir = work_dir("gradcheck");
    REQUIRE(run_cli("gradcheck --seed 0", (dir / "log.txt").string()) == 0);
    REQUIRE(run_cli("gradcheck --seed 12345") == 0);
    std::string log = slurp(dir / "log.txt");
    REQUIRE(log.find("PASS") != std::string::npos);
}
