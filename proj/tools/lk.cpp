// Command-line front end: synthetic data generation, Laplacian pipelines, and
// experiment reproduction. See the README for usage.

#include <CLI11.hpp>

#include "localkernels/cli.hpp"

namespace lkc = localkernels::cli;

namespace {

void add_common_flags(CLI::App* cmd, lkc::RunConfig& cfg, std::string& config_path) {
    cmd->add_option("--config", config_path, "JSON config file mirroring the flag names");
    cmd->add_option("--epsilon", cfg.epsilon, "kernel bandwidth (positive real or 'auto')");
    cmd->add_option("--alpha", cfg.alpha, "right-normalization exponent in [0, 1]");
    cmd->add_option("--knn", cfg.knn, "neighbors kept per row (integer) or 'dense'");
    cmd->add_option("--eigs", cfg.eigs, "number of nontrivial eigenpairs");
    cmd->add_option("--dim", cfg.dim, "intrinsic dimension (conformal pipeline)");
    cmd->add_option("--seed", cfg.seed, "random seed");
    cmd->add_option("--threads", cfg.threads, "worker threads (0 = hardware)");
    cmd->add_option("--scale", cfg.scale, "experiment size multiplier");
    cmd->add_option("--out", cfg.out, "output path or directory");
}

// Values from the config file fill in every flag the user did not pass explicitly.
void merge_config_file(CLI::App* cmd, lkc::RunConfig& cfg, const std::string& config_path) {
    if (config_path.empty()) return;
    lkc::RunConfig from_file = cfg;
    lkc::load_config_file(from_file, config_path);
    auto keep_cli = [&](const char* flag) { return cmd->count(flag) > 0; };
    if (!keep_cli("--epsilon")) cfg.epsilon = from_file.epsilon;
    if (!keep_cli("--alpha")) cfg.alpha = from_file.alpha;
    if (!keep_cli("--knn")) cfg.knn = from_file.knn;
    if (!keep_cli("--eigs")) cfg.eigs = from_file.eigs;
    if (!keep_cli("--dim")) cfg.dim = from_file.dim;
    if (!keep_cli("--seed")) cfg.seed = from_file.seed;
    if (!keep_cli("--threads")) cfg.threads = from_file.threads;
    if (!keep_cli("--scale")) cfg.scale = from_file.scale;
    if (!keep_cli("--out")) cfg.out = from_file.out;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"local kernel geometry toolkit"};
    app.require_subcommand(1);

    lkc::GenerateParams gen;
    std::string gen_config;
    CLI::App* generate = app.add_subcommand("generate", "write a synthetic point cloud as CSV");
    generate->add_option("manifold", gen.manifold,
                         "flat_torus_r4 | torus_r3 | ellipse | diffeo_torus")
        ->required();
    generate->add_option("--grid", gen.grid, "grid points per axis (torus manifolds)");
    generate->add_option("--count", gen.count, "point count (ellipse)");
    generate->add_option("--minor", gen.minor, "ellipse minor axis length");
    generate->add_option("--major", gen.major, "torus major radius");
    generate->add_flag("--random", gen.random, "i.i.d. angles instead of a grid (uses --seed)");
    gen.cfg.out = "cloud.csv";
    add_common_flags(generate, gen.cfg, gen_config);

    lkc::LaplacianParams lap;
    std::string lap_config;
    CLI::App* laplacian =
        app.add_subcommand("laplacian", "build a generator from a CSV cloud and decompose it");
    laplacian->add_option("--in", lap.in, "input cloud CSV")->required();
    laplacian->add_flag("--conformal", lap.conformal,
                        "conformally invariant pipeline (needs --dim)");
    laplacian->add_flag("--save-operator", lap.save_operator,
                        "also write the operator as an i,j,value list");
    add_common_flags(laplacian, lap.cfg, lap_config);

    lkc::ReproParams rep;
    std::string rep_config;
    CLI::App* repro =
        app.add_subcommand("repro", "reproduce an experiment and write panel data + summary");
    repro->add_option("figure", rep.figure, "fig1 | fig2 | fig3 | fig4 | fig5")->required();
    add_common_flags(repro, rep.cfg, rep_config);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (generate->parsed()) {
            merge_config_file(generate, gen.cfg, gen_config);
            return lkc::run_generate(gen);
        }
        if (laplacian->parsed()) {
            merge_config_file(laplacian, lap.cfg, lap_config);
            return lkc::run_laplacian(lap);
        }
        merge_config_file(repro, rep.cfg, rep_config);
        return lkc::run_repro(rep);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return lkc::exit_code_for(e);
    }
}
