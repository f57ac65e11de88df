#include <catch2/catch.hpp>

#include <filesystem>
#include <fstream>

#include "localkernels/cli.hpp"

using namespace localkernels;
namespace lkc = localkernels::cli;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / fs::path("lk_cli_test");
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

} // namespace

TEST_CASE("run config validation and resolution") {
    lkc::RunConfig cfg;
    REQUIRE_NOTHROW(cfg.validate());

    PointCloud circle = generate_ellipse(16, 1.0);
    SECTION("epsilon auto resolves through the heuristic") {
        REQUIRE(cfg.resolve_epsilon(circle) == Approx(epsilon_heuristic(circle)));
    }
    SECTION("explicit epsilon parses") {
        cfg.epsilon = "0.125";
        REQUIRE(cfg.resolve_epsilon(circle) == 0.125);
        cfg.epsilon = "junk";
        REQUIRE_THROWS_AS(cfg.resolve_epsilon(circle), validation_error);
        cfg.epsilon = "-1";
        REQUIRE_THROWS_AS(cfg.resolve_epsilon(circle), validation_error);
    }
    SECTION("knn parses or selects dense") {
        cfg.knn = "dense";
        REQUIRE(cfg.resolve_sparsity(16).is_dense());
        cfg.knn = "8";
        REQUIRE(cfg.resolve_sparsity(16).k() == 8);
        cfg.knn = "16";
        REQUIRE_THROWS_AS(cfg.resolve_sparsity(16), validation_error);
        cfg.knn = "zero";
        REQUIRE_THROWS_AS(cfg.resolve_sparsity(16), validation_error);
    }
    SECTION("numeric preconditions checked before compute") {
        cfg.eigs = 0;
        REQUIRE_THROWS_AS(cfg.validate(), validation_error);
        cfg.eigs = 5;
        cfg.scale = 0.0;
        REQUIRE_THROWS_AS(cfg.validate(), validation_error);
    }
}

TEST_CASE("config file fills defaults") {
    TempDir tmp;
    const std::string path = tmp.file("config.json");
    {
        std::ofstream out(path);
        out << R"({"epsilon": "auto", "alpha": 0.5, "knn": "dense", "eigs": 7, "seed": 11})";
    }
    lkc::RunConfig cfg;
    lkc::load_config_file(cfg, path);
    REQUIRE(cfg.alpha == 0.5);
    REQUIRE(cfg.knn == "dense");
    REQUIRE(cfg.eigs == 7);
    REQUIRE(cfg.seed == 11);
    REQUIRE_THROWS_AS(lkc::load_config_file(cfg, tmp.file("missing.json")), io_error);
    {
        std::ofstream out(tmp.file("bad.json"));
        out << "{not json";
    }
    REQUIRE_THROWS_AS(lkc::load_config_file(cfg, tmp.file("bad.json")), io_error);
}

TEST_CASE("generate command writes clouds and reports shapes") {
    TempDir tmp;
    lkc::GenerateParams p;
    p.manifold = "ellipse";
    p.count = 200;
    p.minor = 0.5;
    p.cfg.out = tmp.file("ellipse.csv");
    REQUIRE(lkc::run_generate(p) == 0);
    PointCloud back = load_csv(p.cfg.out);
    REQUIRE(back.size() == 200);
    REQUIRE(back.ambient_dim() == 2);
    REQUIRE(back.has_intrinsic());

    p.manifold = "flat_torus_r4";
    p.grid = 12;
    p.cfg.out = tmp.file("torus.csv");
    REQUIRE(lkc::run_generate(p) == 0);
    REQUIRE(load_csv(p.cfg.out).ambient_dim() == 4);

    p.manifold = "diffeo_torus";
    p.grid = 10;
    p.cfg.out = tmp.file("warp.csv");
    REQUIRE(lkc::run_generate(p) == 0);
    REQUIRE(load_csv(p.cfg.out).ambient_dim() == 3);

    p.manifold = "klein_bottle";
    REQUIRE_THROWS_AS(lkc::run_generate(p), validation_error);
}

TEST_CASE("laplacian command produces a spectrum file") {
    TempDir tmp;
    lkc::GenerateParams gen;
    gen.manifold = "ellipse";
    gen.count = 300;
    gen.minor = 1.0;
    gen.cfg.out = tmp.file("circle.csv");
    REQUIRE(lkc::run_generate(gen) == 0);

    lkc::LaplacianParams lap;
    lap.in = gen.cfg.out;
    lap.cfg.out = tmp.file("out");
    lap.cfg.eigs = 4;
    lap.cfg.knn = "32";
    lap.save_operator = true;
    REQUIRE(lkc::run_laplacian(lap) == 0);

    std::ifstream spectrum(tmp.file("out") + "/spectrum.csv");
    REQUIRE(spectrum.good());
    std::string header, values;
    std::getline(spectrum, header);
    REQUIRE(header == "lambda_0,lambda_1,lambda_2,lambda_3,lambda_4");
    std::getline(spectrum, values);
    // first eigenvalue of -L is 0, the next pair is 1 within 5%
    auto fields = localkernels::detail::split_csv_line(values);
    REQUIRE(std::abs(std::stod(fields[0])) < 1e-8);
    REQUIRE(-std::stod(fields[1]) == Approx(1.0).epsilon(0.05));

    REQUIRE(fs::exists(tmp.file("out") + "/operator.txt"));

    SECTION("missing input maps to the io exit code") {
        lap.in = tmp.file("missing.csv");
        try {
            lkc::run_laplacian(lap);
            FAIL("expected io_error");
        } catch (const std::exception& e) {
            REQUIRE(lkc::exit_code_for(e) == 2);
        }
    }
    SECTION("conformal pipeline requires a dimension") {
        lap.conformal = true;
        lap.cfg.dim = 0;
        try {
            lkc::run_laplacian(lap);
            FAIL("expected validation_error");
        } catch (const std::exception& e) {
            REQUIRE(lkc::exit_code_for(e) == 1);
        }
        lap.cfg.dim = 1;
        REQUIRE(lkc::run_laplacian(lap) == 0);
    }
}

TEST_CASE("repro command writes summary and panels deterministically") {
    TempDir tmp;
    lkc::ReproParams p;
    p.figure = "fig3";
    p.cfg.scale = 0.08; // 320-point ellipse
    p.cfg.out = tmp.file("runA");
    const int codeA = lkc::run_repro(p);
    p.cfg.out = tmp.file("runB");
    const int codeB = lkc::run_repro(p);
    REQUIRE(codeA == codeB);

    const std::string a = slurp(tmp.file("runA") + "/summary.json");
    std::string b = slurp(tmp.file("runB") + "/summary.json");
    // The echoed output directory is the only allowed difference.
    const std::string runa = tmp.file("runA"), runb = tmp.file("runB");
    std::size_t at;
    while ((at = b.find(runb)) != std::string::npos) b.replace(at, runb.size(), runa);
    REQUIRE(a == b);
    REQUIRE(a.find("\"schema_version\": 1") != std::string::npos);
    REQUIRE(a.find("\"calibrated\"") != std::string::npos);
    REQUIRE(slurp(tmp.file("runA") + "/fig3_eigenfunctions.csv") ==
            slurp(tmp.file("runB") + "/fig3_eigenfunctions.csv"));

    SECTION("unknown figure id is a validation failure") {
        p.figure = "fig9";
        try {
            lkc::run_repro(p);
            FAIL("expected validation_error");
        } catch (const std::exception& e) {
            REQUIRE(lkc::exit_code_for(e) == 1);
        }
    }
}

TEST_CASE("exit codes map error classes") {
    REQUIRE(lkc::exit_code_for(validation_error("v")) == 1);
    REQUIRE(lkc::exit_code_for(io_error("i")) == 2);
    REQUIRE(lkc::exit_code_for(numerical_error("n")) == 3);
    REQUIRE(lkc::exit_code_for(std::runtime_error("r")) == 3);
}
