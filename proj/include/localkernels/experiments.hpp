#ifndef LOCALKERNELS_EXPERIMENTS_HPP
#define LOCALKERNELS_EXPERIMENTS_HPP

#include <cmath>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "localkernels/analytic.hpp"
#include "localkernels/conformal.hpp"
#include "localkernels/diffeo.hpp"
#include "localkernels/generators.hpp"
#include "localkernels/manifolds.hpp"
#include "localkernels/metrics.hpp"
#include "localkernels/spectral.hpp"

namespace localkernels::experiments {

using nlohmann::json;

inline constexpr int summary_schema_version = 1;

/// Frozen tolerances for the synthetic experiments. `calibrated` entries were fixed
/// once from measured runs at full scale (the conformal and diffeomorphism residual
/// levels are not reported numerically anywhere else); the rest encode the documented
/// expectations directly.
struct Thresholds {
    double generator_rel_l2 = 0.10;        // flat-torus generator and adjoint errors
    double flat_level_spread = 0.10;       // pairwise spread of the recovered 4-fold level
    double flat_r2_min = 0.95;             // regression of eigenvectors 1-4 on the harmonics
    double flat_baseline_r2_max = 0.80;    // at least one baseline eigenvector below this
    double ellipse_r2_min = 0.98;          // conformal/dm eigenfunction regressions
    double conformal_residual = 0.125;     // r*: calibrated from measured full-scale runs
    double diffeo_residual = 0.05;         // r**: calibrated from measured full-scale runs
    double separation = 3.0;               // baseline residual must exceed this multiple
    double eigenvalue_pairwise = 0.10;     // spectra agreement over the first 10 pairs
};

struct Metric {
    std::string name;
    double value = 0.0;
    double threshold = 0.0;
    std::string comparison; // "<=" or ">="
    bool pass = false;
    bool calibrated = false;
};

inline Metric check_le(const std::string& name, double value, double threshold,
                       bool calibrated = false) {
    return {name, value, threshold, "<=", value <= threshold, calibrated};
}

inline Metric check_ge(const std::string& name, double value, double threshold,
                       bool calibrated = false) {
    return {name, value, threshold, ">=", value >= threshold, calibrated};
}

struct Panel {
    std::string name;
    std::vector<std::string> columns;
    Eigen::MatrixXd data;
};

struct ExperimentResult {
    std::string id;
    json config;
    std::vector<Metric> metrics;
    std::vector<Panel> panels;

    bool pass() const {
        for (const auto& m : metrics)
            if (!m.pass) return false;
        return true;
    }
};

inline json to_json(const ExperimentResult& r) {
    json metrics = json::array();
    for (const auto& m : r.metrics)
        metrics.push_back({{"name", m.name},
                           {"value", m.value},
                           {"threshold", m.threshold},
                           {"comparison", m.comparison},
                           {"pass", m.pass},
                           {"calibrated", m.calibrated}});
    return json{{"schema_version", summary_schema_version},
                {"experiment", r.id},
                {"config", r.config},
                {"metrics", metrics},
                {"pass", r.pass()}};
}

namespace detail {

inline Index scaled_grid(Index full, double scale) {
    const double g = std::sqrt(scale) * static_cast<double>(full);
    return std::max<Index>(12, static_cast<Index>(std::lround(g)));
}

inline double loosen(double tol, double scale) { return scale < 1.0 ? 2.0 * tol : tol; }

inline Eigen::MatrixXd harmonic_basis(const Eigen::MatrixXd& intrinsic) {
    Eigen::MatrixXd basis(intrinsic.rows(), 4);
    for (Index i = 0; i < intrinsic.rows(); ++i) {
        basis(i, 0) = std::sin(intrinsic(i, 0));
        basis(i, 1) = std::cos(intrinsic(i, 0));
        basis(i, 2) = std::sin(intrinsic(i, 1));
        basis(i, 3) = std::cos(intrinsic(i, 1));
    }
    return basis;
}

} // namespace detail

/// Flat torus in R^4 with the designed anisotropic kernel: compares the discrete
/// generator and adjoint against the analytic closed forms, plus the coarse-bandwidth
/// convergence check.
inline ExperimentResult run_generator_validation(double scale = 1.0, Index knn = 128,
                                                 double epsilon = 1e-3,
                                                 bool convergence_check = true,
                                                 Thresholds tol = {}) {
    ExperimentResult out;
    out.id = "fig1";
    const Index grid = detail::scaled_grid(100, scale);
    // The reference bandwidth belongs to the 100x100 grid; a coarser grid needs the
    // bandwidth enlarged with the squared spacing to stay resolved.
    epsilon *= std::pow(100.0 / static_cast<double>(grid), 2.0);
    PointCloud cloud = generate_flat_torus_r4(grid);
    const Index k = std::min<Index>(knn, cloud.size() - 1);
    out.config = {{"grid", grid}, {"epsilon", epsilon}, {"knn", k}, {"scale", scale}};

    auto f = analytic::flat_torus::default_test_function();
    Eigen::VectorXd fv(cloud.size());
    for (Index i = 0; i < cloud.size(); ++i)
        fv(i) = f.value(cloud.intrinsic(i, 0), cloud.intrinsic(i, 1));
    Eigen::VectorXd oracle_L = analytic::flat_torus::generator_values(cloud.intrinsic);
    Eigen::VectorXd oracle_Ls = analytic::flat_torus::adjoint_values(cloud.intrinsic);

    auto run_at = [&](double eps) {
        SparseKernelMatrix K =
            assemble(cloud, analytic::flat_torus::designed_kernel(eps), Sparsity::knn(k));
        GeneratorMatrix L = local_kernel_generator(K, eps);
        GeneratorMatrix Ls = adjoint_generator(K, eps);
        return std::pair<Eigen::VectorXd, Eigen::VectorXd>{L.apply(fv), Ls.apply(fv)};
    };

    auto [Lf, Lsf] = run_at(epsilon);
    const double err_L = relative_l2(Lf, oracle_L);
    const double err_Ls = relative_l2(Lsf, oracle_Ls);
    const double lim = detail::loosen(tol.generator_rel_l2, scale);
    out.metrics.push_back(check_le("generator_rel_l2", err_L, lim));
    out.metrics.push_back(check_le("adjoint_rel_l2", err_Ls, lim));
    if (convergence_check) {
        auto [Lf4, Lsf4] = run_at(4.0 * epsilon);
        out.metrics.push_back(
            check_ge("coarse_bandwidth_error_ratio", relative_l2(Lf4, oracle_L) / err_L, 1.0));
    }

    Panel grid_panel{"fig1_grid", {"theta", "phi"}, cloud.intrinsic};
    out.panels.push_back(std::move(grid_panel));
    auto panel = [&](const std::string& name, const Eigen::VectorXd& v) {
        Eigen::MatrixXd d(cloud.size(), 3);
        d.col(0) = cloud.intrinsic.col(0);
        d.col(1) = cloud.intrinsic.col(1);
        d.col(2) = v;
        out.panels.push_back({name, {"theta", "phi", "value"}, std::move(d)});
    };
    panel("fig1_analytic_generator", oracle_L);
    panel("fig1_numeric_generator", Lf);
    panel("fig1_analytic_adjoint", oracle_Ls);
    panel("fig1_numeric_adjoint", Lsf);
    return out;
}

/// Curved torus, flat-metric recovery: the pullback kernel yields the flat-torus
/// eigenstructure (one near-degenerate 4-fold level spanned by the angle harmonics),
/// while plain diffusion maps on the same cloud does not.
inline ExperimentResult run_flat_metric_recovery(double scale = 1.0, Index knn = 128,
                                                 Thresholds tol = {}) {
    ExperimentResult out;
    out.id = "fig2";
    const Index grid = detail::scaled_grid(90, scale);
    PointCloud cloud = generate_embedded_torus_r3(grid, 2.0);
    const Index k = std::min<Index>(knn, cloud.size() - 1);
    const double eps = epsilon_heuristic(cloud);
    out.config = {{"grid", grid}, {"epsilon", eps}, {"knn", k}, {"scale", scale}};

    auto maps = analytic::curved_torus::flattening_maps(cloud, 2.0);
    GeneratorMatrix L =
        intrinsic_laplacian(cloud, LocalKernel::jacobian(maps, eps), eps, Sparsity::knn(k));
    SpectralEmbedding local = decompose(L, 5);
    GeneratorMatrix L_dm = diffusion_maps_generator(
        cloud, LocalKernel::radial(gaussian_shape(), eps), 1.0, Sparsity::knn(k));
    SpectralEmbedding dm = decompose(L_dm, 5);

    Eigen::VectorXd level = -local.eigenvalues.tail(4);
    const double spread = (level.maxCoeff() - level.minCoeff()) / level.minCoeff();
    out.metrics.push_back(
        check_le("flat_level_spread", spread, detail::loosen(tol.flat_level_spread, scale)));

    Eigen::MatrixXd basis = detail::harmonic_basis(cloud.intrinsic);
    double worst_local = 1.0, best_unfit_dm = 1.0;
    for (Index c = 1; c <= 4; ++c) {
        worst_local = std::min(worst_local,
                               align_and_compare(local.eigenvectors.col(c), basis).r_squared);
        best_unfit_dm =
            std::min(best_unfit_dm, align_and_compare(dm.eigenvectors.col(c), basis).r_squared);
    }
    const double r2_min = scale < 1.0 ? 1.0 - 2.0 * (1.0 - tol.flat_r2_min) : tol.flat_r2_min;
    out.metrics.push_back(check_ge("recovered_harmonic_r2_min", worst_local, r2_min));
    out.metrics.push_back(
        check_le("baseline_worst_harmonic_r2", best_unfit_dm, tol.flat_baseline_r2_max));

    auto panel = [&](const std::string& name, const SpectralEmbedding& e) {
        Eigen::MatrixXd d(cloud.size(), 6);
        d.col(0) = cloud.intrinsic.col(0);
        d.col(1) = cloud.intrinsic.col(1);
        d.block(0, 2, cloud.size(), 4) = e.eigenvectors.rightCols(4);
        out.panels.push_back(
            {name, {"theta", "phi", "v1", "v2", "v3", "v4"}, std::move(d)});
    };
    panel("fig2_local_eigenfunctions", local);
    panel("fig2_dm_eigenfunctions", dm);
    return out;
}

/// Conformal ellipse: the variable-bandwidth pipeline recovers the circle harmonics in
/// the original angle, while plain diffusion maps recovers the arc-length harmonics.
inline ExperimentResult run_conformal_ellipse(double scale = 1.0, Index knn = 64,
                                              Thresholds tol = {}) {
    ExperimentResult out;
    out.id = "fig3";
    const Index N = std::max<Index>(200, static_cast<Index>(std::lround(4000 * scale)));
    const double a = 1.0 / 6.0;
    PointCloud cloud = generate_ellipse(N, a);
    const Index k = std::min<Index>(knn, N - 1);
    out.config = {{"count", N}, {"minor_axis", a}, {"knn", k}, {"scale", scale}};

    ConformalOptions copt;
    copt.sparsity = Sparsity::knn(k);
    ConformalEmbeddingResult conf = conformal_embedding(cloud, 1, 4, copt);

    const double eps = epsilon_heuristic(cloud);
    GeneratorMatrix L_dm = diffusion_maps_generator(
        cloud, LocalKernel::radial(gaussian_shape(), eps), 1.0, Sparsity::knn(k));
    SpectralEmbedding dm = decompose(L_dm, 5);

    Eigen::MatrixXd circle(N, 2);
    for (Index i = 0; i < N; ++i) {
        circle(i, 0) = std::sin(cloud.intrinsic(i, 0));
        circle(i, 1) = std::cos(cloud.intrinsic(i, 0));
    }
    auto [sz, cz] = analytic::ellipse::eigenfunctions(cloud.intrinsic.col(0), a);
    Eigen::MatrixXd arc(N, 2);
    arc.col(0) = sz;
    arc.col(1) = cz;

    const double r2_min =
        scale < 1.0 ? 1.0 - 2.0 * (1.0 - tol.ellipse_r2_min) : tol.ellipse_r2_min;
    double conf_r2 = 1.0, dm_r2 = 1.0;
    for (Index c = 1; c <= 2; ++c) {
        conf_r2 = std::min(conf_r2,
                           align_and_compare(conf.embedding.eigenvectors.col(c), circle).r_squared);
        dm_r2 = std::min(dm_r2, align_and_compare(dm.eigenvectors.col(c), arc).r_squared);
    }
    out.metrics.push_back(check_ge("conformal_circle_r2", conf_r2, r2_min));
    out.metrics.push_back(check_ge("dm_arclength_r2", dm_r2, r2_min));

    Eigen::MatrixXd d(N, 9);
    d.col(0) = cloud.intrinsic.col(0);
    d.col(1) = conf.embedding.eigenvectors.col(1);
    d.col(2) = conf.embedding.eigenvectors.col(2);
    d.col(3) = dm.eigenvectors.col(1);
    d.col(4) = dm.eigenvectors.col(2);
    d.col(5) = circle.col(0);
    d.col(6) = circle.col(1);
    d.col(7) = arc.col(0);
    d.col(8) = arc.col(1);
    out.panels.push_back({"fig3_eigenfunctions",
                          {"theta", "conf_v1", "conf_v2", "dm_v1", "dm_v2", "sin_theta",
                           "cos_theta", "sin_z", "cos_z"},
                          std::move(d)});
    return out;
}

/// Conformal tori comparison: conformally invariant embeddings of the two tori and the
/// least-squares map between them, against the plain diffusion-maps baseline.
inline ExperimentResult run_conformal_tori(double scale = 1.0, Index knn = 64,
                                           Index n_eigs = 10, Thresholds tol = {}) {
    ExperimentResult out;
    out.id = "fig4";
    const Index grid = detail::scaled_grid(100, scale);
    PointCloud c1 = generate_embedded_torus_r3(grid, 2.0);
    PointCloud c2 = generate_embedded_torus_r3(grid, std::sqrt(2.0));
    const Index k = std::min<Index>(knn, c1.size() - 1);
    out.config = {{"grid", grid}, {"knn", k}, {"n_eigs", n_eigs}, {"scale", scale}};

    ConformalOptions copt;
    copt.sparsity = Sparsity::knn(k);
    ConformalEmbeddingResult e1 = conformal_embedding(c1, 2, n_eigs, copt);
    ConformalEmbeddingResult e2 = conformal_embedding(c2, 2, n_eigs, copt);
    Eigen::MatrixXd P1 = embed_range(e1.embedding, 1, n_eigs);
    Eigen::MatrixXd P2 = embed_range(e2.embedding, 1, n_eigs);
    LinearMap H = fit_linear_map(P2, P1);

    auto dm_embed = [&](const PointCloud& c) {
        const double eps = epsilon_heuristic(c);
        GeneratorMatrix L = diffusion_maps_generator(
            c, LocalKernel::radial(gaussian_shape(), eps), 1.0, Sparsity::knn(k));
        return embed_range(decompose(L, n_eigs + 1), 1, n_eigs);
    };
    Eigen::MatrixXd Q1 = dm_embed(c1);
    Eigen::MatrixXd Q2 = dm_embed(c2);
    LinearMap Hd = fit_linear_map(Q2, Q1);

    const double rstar = detail::loosen(tol.conformal_residual, scale);
    out.metrics.push_back(check_le("conformal_map_residual", H.relative_residual, rstar, true));
    out.metrics.push_back(check_ge("dm_map_residual", Hd.relative_residual,
                                   tol.separation * rstar, true));

    auto coords_panel = [&](const std::string& name, const Eigen::MatrixXd& own,
                            const Eigen::MatrixXd& mapped) {
        Eigen::MatrixXd d(own.rows(), own.cols() + mapped.cols());
        d.leftCols(own.cols()) = own;
        d.rightCols(mapped.cols()) = mapped;
        std::vector<std::string> cols;
        for (Index c = 1; c <= own.cols(); ++c) cols.push_back("phi_" + std::to_string(c));
        for (Index c = 1; c <= mapped.cols(); ++c)
            cols.push_back("mapped_phi_" + std::to_string(c));
        out.panels.push_back({name, cols, std::move(d)});
    };
    coords_panel("fig4_conformal_coords", P1, P2 * H.matrix.transpose());
    coords_panel("fig4_dm_coords", Q1, Q2 * Hd.matrix.transpose());
    return out;
}

/// Diffeomorphism reconstruction on the warped torus pair: the pushed-forward metric
/// aligns the eigenfunction coordinates up to a linear map, while the diffusion-maps
/// baseline does not; the two Laplacian spectra agree pairwise.
inline ExperimentResult run_diffeo_reconstruction(double scale = 1.0, Index knn = 64,
                                                  Index n_eigs = 10, Thresholds tol = {}) {
    ExperimentResult out;
    out.id = "fig5";
    const Index grid = detail::scaled_grid(100, scale);
    PointCloud source = generate_embedded_torus_r3(grid, 2.0);
    PointCloud target = apply_torus_diffeomorphism(source);
    const Index k = std::min<Index>(knn, source.size() - 1);
    out.config = {{"grid", grid}, {"knn", k}, {"n_eigs", n_eigs}, {"scale", scale}};

    DiffeoOptions dopt;
    dopt.sparsity = Sparsity::knn(k);
    DiffeomorphismReconstruction rec = reconstruct_diffeomorphism(source, target, n_eigs, dopt);

    const double eps_t = epsilon_heuristic(target);
    GeneratorMatrix L_dm = diffusion_maps_generator(
        target, LocalKernel::radial(gaussian_shape(), eps_t), 1.0, Sparsity::knn(k));
    SpectralEmbedding dm = decompose(L_dm, n_eigs + 1);
    LinearMap Hd = fit_linear_map(embed_range(dm, 1, n_eigs), rec.source_coords);

    const double rss = detail::loosen(tol.diffeo_residual, scale);
    out.metrics.push_back(
        check_le("pushforward_map_residual", rec.map.relative_residual, rss, true));
    out.metrics.push_back(
        check_ge("dm_map_residual", Hd.relative_residual, tol.separation * rss, true));

    double worst_pair = 0.0;
    for (Index j = 1; j <= n_eigs; ++j) {
        const double a = -rec.source_embedding.eigenvalues(j);
        const double b = -rec.target_embedding.eigenvalues(j);
        worst_pair = std::max(worst_pair, std::abs(b - a) / std::max(a, 1e-300));
    }
    out.metrics.push_back(check_le("spectrum_pairwise_rel_diff", worst_pair,
                                   detail::loosen(tol.eigenvalue_pairwise, scale)));

    Eigen::MatrixXd mapped = rec.target_coords * rec.map.matrix.transpose();
    Eigen::MatrixXd mapped_dm = embed_range(dm, 1, n_eigs) * Hd.matrix.transpose();
    Eigen::MatrixXd d(source.size(), 3 * n_eigs);
    d.leftCols(n_eigs) = rec.source_coords;
    d.middleCols(n_eigs, n_eigs) = mapped;
    d.rightCols(n_eigs) = mapped_dm;
    std::vector<std::string> cols;
    for (Index c = 1; c <= n_eigs; ++c) cols.push_back("source_phi_" + std::to_string(c));
    for (Index c = 1; c <= n_eigs; ++c) cols.push_back("mapped_phi_" + std::to_string(c));
    for (Index c = 1; c <= n_eigs; ++c) cols.push_back("mapped_dm_phi_" + std::to_string(c));
    out.panels.push_back({"fig5_coords", cols, std::move(d)});

    json spectra = json::array();
    for (Index j = 0; j <= n_eigs; ++j)
        spectra.push_back({{"source", -rec.source_embedding.eigenvalues(j)},
                           {"target", -rec.target_embedding.eigenvalues(j)}});
    out.config["spectra"] = spectra;
    return out;
}

inline ExperimentResult run_figure(const std::string& id, double scale, Index knn,
                                   Thresholds tol = {}) {
    if (id == "fig1") return run_generator_validation(scale, knn > 0 ? knn : 128, 1e-3, true, tol);
    if (id == "fig2") return run_flat_metric_recovery(scale, knn > 0 ? knn : 128, tol);
    if (id == "fig3") return run_conformal_ellipse(scale, knn > 0 ? knn : 64, tol);
    if (id == "fig4") return run_conformal_tori(scale, knn > 0 ? knn : 64, 10, tol);
    if (id == "fig5") return run_diffeo_reconstruction(scale, knn > 0 ? knn : 64, 10, tol);
    throw validation_error("unknown figure id '" + id + "' (expected fig1..fig5)");
}

inline void write_panel_csv(const Panel& p, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot open '" + path + "' for writing");
    for (std::size_t c = 0; c < p.columns.size(); ++c)
        out << (c ? "," : "") << p.columns[c];
    out << "\n";
    for (Index i = 0; i < p.data.rows(); ++i) {
        for (Index c = 0; c < p.data.cols(); ++c)
            out << (c ? "," : "") << localkernels::detail::format_g17(p.data(i, c));
        out << "\n";
    }
    if (!out) throw io_error("write failure on '" + path + "'");
}

} // namespace localkernels::experiments

#endif
