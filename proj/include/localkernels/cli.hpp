#ifndef LOCALKERNELS_CLI_HPP
#define LOCALKERNELS_CLI_HPP

#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>

#include "localkernels/experiments.hpp"
#include "localkernels/localkernels.hpp"

namespace localkernels::cli {

using nlohmann::json;

/// Shared command parameters, merged from a JSON config file (when given) and flags;
/// flags win. Every numeric value is validated before any compute starts.
struct RunConfig {
    std::string epsilon = "auto"; // positive real or "auto"
    double alpha = 1.0;
    std::string knn = "64"; // positive integer or "dense"
    Index eigs = 10;
    Index dim = 0;
    std::uint64_t seed = 0;
    int threads = 0;
    double scale = 1.0;
    std::string out = ".";

    double resolve_epsilon(const PointCloud& cloud) const {
        if (epsilon == "auto") {
            const double eps = epsilon_heuristic(cloud);
            std::cerr << "epsilon (auto) = " << detail::format_g17(eps) << "\n";
            return eps;
        }
        char* end = nullptr;
        const double eps = std::strtod(epsilon.c_str(), &end);
        if (end == epsilon.c_str() || *end != '\0' || !(eps > 0.0))
            throw validation_error("--epsilon must be a positive real or 'auto'");
        return eps;
    }

    Sparsity resolve_sparsity(Index n_points) const {
        if (knn == "dense") return Sparsity::dense();
        char* end = nullptr;
        const long k = std::strtol(knn.c_str(), &end, 10);
        if (end == knn.c_str() || *end != '\0' || k < 1)
            throw validation_error("--knn must be a positive integer or 'dense'");
        if (k >= n_points)
            throw validation_error("--knn must be smaller than the point count " +
                                   std::to_string(n_points));
        return Sparsity::knn(static_cast<Index>(k));
    }

    void validate() const {
        if (eigs < 1) throw validation_error("--eigs must be at least 1");
        if (!(scale > 0.0)) throw validation_error("--scale must be positive");
        if (threads < 0) throw validation_error("--threads must be nonnegative");
    }
};

/// Loads config values from a JSON file keyed by the flag names.
inline void load_config_file(RunConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open config file '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw io_error("config file '" + path + "': " + e.what());
    }
    auto set_string = [&](const char* key, std::string& slot) {
        if (!j.contains(key)) return;
        if (j[key].is_string())
            slot = j[key].get<std::string>();
        else
            slot = j[key].dump();
    };
    set_string("epsilon", cfg.epsilon);
    set_string("knn", cfg.knn);
    set_string("out", cfg.out);
    if (j.contains("alpha")) cfg.alpha = j["alpha"].get<double>();
    if (j.contains("eigs")) cfg.eigs = j["eigs"].get<Index>();
    if (j.contains("dim")) cfg.dim = j["dim"].get<Index>();
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("threads")) cfg.threads = j["threads"].get<int>();
    if (j.contains("scale")) cfg.scale = j["scale"].get<double>();
}

inline json config_echo(const RunConfig& cfg) {
    return json{{"epsilon", cfg.epsilon}, {"alpha", cfg.alpha},   {"knn", cfg.knn},
                {"eigs", cfg.eigs},       {"dim", cfg.dim},       {"seed", cfg.seed},
                {"threads", cfg.threads}, {"scale", cfg.scale},   {"out", cfg.out}};
}

struct GenerateParams {
    std::string manifold;
    Index grid = 100;
    Index count = 4000;
    double minor = 1.0 / 6.0;
    double major = 2.0;
    bool random = false;
    RunConfig cfg;
};

inline int run_generate(const GenerateParams& p) {
    PointCloud cloud;
    if (p.manifold == "flat_torus_r4") {
        cloud = p.random ? sample_flat_torus_r4(p.grid * p.grid, p.cfg.seed)
                         : generate_flat_torus_r4(p.grid);
    } else if (p.manifold == "torus_r3") {
        cloud = p.random ? sample_embedded_torus_r3(p.grid * p.grid, p.major, p.cfg.seed)
                         : generate_embedded_torus_r3(p.grid, p.major);
    } else if (p.manifold == "ellipse") {
        cloud = p.random ? sample_ellipse(p.count, p.minor, p.cfg.seed)
                         : generate_ellipse(p.count, p.minor);
    } else if (p.manifold == "diffeo_torus") {
        PointCloud base = p.random
                              ? sample_embedded_torus_r3(p.grid * p.grid, p.major, p.cfg.seed)
                              : generate_embedded_torus_r3(p.grid, p.major);
        cloud = apply_torus_diffeomorphism(base);
    } else {
        throw validation_error("unknown manifold '" + p.manifold +
                               "' (expected flat_torus_r4, torus_r3, ellipse, diffeo_torus)");
    }
    save_csv(cloud, p.cfg.out);
    std::cout << "N=" << cloud.size() << " n=" << cloud.ambient_dim()
              << " d=" << (cloud.has_intrinsic() ? cloud.intrinsic_dim() : 0) << " -> "
              << p.cfg.out << "\n";
    return 0;
}

struct LaplacianParams {
    std::string in;
    bool conformal = false;
    bool save_operator = false;
    RunConfig cfg;
};

inline int run_laplacian(const LaplacianParams& p) {
    p.cfg.validate();
    set_max_threads(p.cfg.threads);
    PointCloud cloud = load_csv(p.in);
    const double eps = p.cfg.resolve_epsilon(cloud);
    Sparsity sparsity = p.cfg.resolve_sparsity(cloud.size());
    if (p.cfg.eigs >= cloud.size())
        throw validation_error("--eigs must be smaller than the point count");

    std::filesystem::create_directories(p.cfg.out);
    GeneratorMatrix L;
    if (p.conformal) {
        if (p.cfg.dim < 1)
            throw validation_error("--dim (intrinsic dimension) is required with --conformal");
        DensityEstimate q = estimate_density(cloud, eps);
        SparseKernelMatrix K = conformal_kernel_matrix(cloud, q, static_cast<int>(p.cfg.dim),
                                                       eps, sparsity);
        L = intrinsic_laplacian(K, eps);
    } else {
        L = diffusion_maps_generator(cloud, LocalKernel::radial(gaussian_shape(), eps),
                                     p.cfg.alpha, sparsity);
    }
    DecomposeOptions dopt;
    dopt.seed = p.cfg.seed == 0 ? DecomposeOptions{}.seed : p.cfg.seed;
    SpectralEmbedding E = decompose(L, p.cfg.eigs + 1, dopt);
    const std::string spectrum_path = p.cfg.out + "/spectrum.csv";
    write_embedding_csv(E, spectrum_path);
    if (p.save_operator) save_generator(L, p.cfg.out + "/operator.txt");
    std::cout << "spectrum -> " << spectrum_path << "\n";
    return 0;
}

struct ReproParams {
    std::string figure;
    RunConfig cfg;
};

inline int run_repro(const ReproParams& p) {
    p.cfg.validate();
    set_max_threads(p.cfg.threads);
    Index knn = 0;
    if (p.cfg.knn == "dense")
        throw validation_error("repro experiments run with kNN truncation; pass a neighbor count");
    if (p.cfg.knn != "64") {
        char* end = nullptr;
        const long k = std::strtol(p.cfg.knn.c_str(), &end, 10);
        if (end == p.cfg.knn.c_str() || *end != '\0' || k < 1)
            throw validation_error("--knn must be a positive integer or 'dense'");
        knn = static_cast<Index>(k);
    }
    experiments::ExperimentResult r = experiments::run_figure(p.figure, p.cfg.scale, knn);
    std::filesystem::create_directories(p.cfg.out);
    json summary = experiments::to_json(r);
    summary["cli_config"] = config_echo(p.cfg);
    json panel_index = json::array();
    for (const auto& panel : r.panels) {
        const std::string path = p.cfg.out + "/" + panel.name + ".csv";
        experiments::write_panel_csv(panel, path);
        panel_index.push_back(path);
    }
    summary["panels"] = panel_index;
    const std::string summary_path = p.cfg.out + "/summary.json";
    {
        std::ofstream out(summary_path);
        if (!out) throw io_error("cannot open '" + summary_path + "' for writing");
        out << summary.dump(2) << "\n";
    }
    for (const auto& m : r.metrics)
        std::cout << p.figure << " " << m.name << " = " << m.value << " (" << m.comparison
                  << " " << m.threshold << ") " << (m.pass ? "PASS" : "FAIL") << "\n";
    std::cout << "summary -> " << summary_path << "\n";
    return r.pass() ? 0 : 1;
}

/// Maps library errors onto the documented exit codes.
inline int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const io_error*>(&e)) return 2;
    if (dynamic_cast<const numerical_error*>(&e)) return 3;
    if (dynamic_cast<const validation_error*>(&e)) return 1;
    return 3;
}

} // namespace localkernels::cli

#endif
