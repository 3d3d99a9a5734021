// Command-line front end: matrix I/O, algorithm dispatch, reproducible
// reports. Every solver run prints a JSON report to stdout and writes any
// factors as A.csv / W.csv in the output directory.
//
// Exit codes: 0 success, 1 I/O or parse failure, 2 not separable / unresolved
// / failed verification, 3 infeasible parameters or provable infeasibility.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "nmfpack/nmfpack.hpp"

using nlohmann::json;
using namespace nmfpack;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitIoError = 1;
constexpr int kExitUnresolved = 2;
constexpr int kExitInfeasible = 3;

std::uint64_t default_seed() {
    if (const char* env = std::getenv("NMF_SEED")) {
        char* end = nullptr;
        const unsigned long long v = std::strtoull(env, &end, 10);
        if (end && *end == '\0') return static_cast<std::uint64_t>(v);
    }
    return 0;
}

struct ReportClock {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
};

json base_report(const std::string& command, json inputs, std::uint64_t seed) {
    return {{"schema", 1}, {"command", command}, {"inputs", std::move(inputs)}, {"seed", seed}};
}

void finish_report(json& report, const ReportClock& clock) {
    report["wall_time"] = clock.seconds();
    std::cout << report.dump(2) << "\n";
}

void write_factors(const std::string& outdir, const Factorization& f) {
    std::filesystem::create_directories(outdir);
    write_matrix_csv(outdir + "/A.csv", f.a);
    write_matrix_csv(outdir + "/W.csv", f.w);
}

void attach_residuals(json& report, const Factorization& f) {
    report["residual_fro"] = f.residual_fro;
    report["residual_row_l1_max"] = f.residual_row_l1_max;
    report["inner_dim"] = f.inner_dim;
}

int run_separable(const std::string& path, std::size_t r, const SeparableOptions& opts,
                  const std::string& outdir) {
    ReportClock clock;
    json report = base_report("separable",
                              {{"matrix", path},
                               {"r", r},
                               {"loner_tol", opts.loner_tol},
                               {"dup_tol", opts.dup_tol}},
                              0);
    const Matrix m = parse_matrix_csv(path);
    try {
        const SeparableResult res = solve_separable(m, r, opts);
        write_factors(outdir, res.factorization);
        report["outcome"] = "Success";
        report["loner_rows"] = res.loner_row_indices;
        report["anchor_map"] = res.anchor_map;
        attach_residuals(report, res.factorization);
        finish_report(report, clock);
        return kExitOk;
    } catch (const not_separable_error& e) {
        report["outcome"] = "NotSeparable";
        report["distinct_loners"] = e.found_loners;
        finish_report(report, clock);
        return kExitUnresolved;
    }
}

int run_robust(const std::string& path, double eps, double alpha, std::optional<std::size_t> expect_r,
               const std::string& outdir) {
    ReportClock clock;
    json report = base_report(
        "robust", {{"matrix", path}, {"eps", eps}, {"alpha", alpha}}, 0);
    const Matrix m = parse_matrix_csv(path);
    const RobustParams params = derive_params(eps, alpha);
    report["derived"] = {{"d", params.d},
                         {"cluster_radius", params.cluster_radius},
                         {"hull_margin", params.hull_margin},
                         {"residual_bound", params.residual_bound()},
                         {"feasible", params.feasible}};
    if (!params.feasible) {
        report["outcome"] = "InfeasibleParams";
        finish_report(report, clock);
        return kExitInfeasible;
    }
    try {
        const RobustResult res = solve_separable_robust(m, params);
        write_factors(outdir, res.factorization);
        report["clusters"] = res.clusters;
        report["representatives"] = res.representatives;
        attach_residuals(report, res.factorization);
        if (expect_r && res.clusters.size() != *expect_r) {
            report["outcome"] = "ClusterCountMismatch";
            report["expected_r"] = *expect_r;
            finish_report(report, clock);
            return kExitUnresolved;
        }
        report["outcome"] = "Success";
        finish_report(report, clock);
        return kExitOk;
    } catch (const no_robust_loners_error&) {
        report["outcome"] = "NoRobustLoners";
        finish_report(report, clock);
        return kExitUnresolved;
    }
}

int run_sf(const std::string& path, std::size_t r, std::size_t budget, double tol,
           std::uint64_t seed, const std::string& outdir) {
    ReportClock clock;
    json report =
        base_report("sf", {{"matrix", path}, {"r", r}, {"budget", budget}, {"tol", tol}}, seed);
    const Matrix m = parse_matrix_csv(path);
    SfOptions opts;
    opts.restarts = budget;
    opts.tol = tol;
    opts.seed = seed;
    const SfOutcome out = solve_sf(m, r, opts);
    report["restarts_used"] = out.restarts_used;
    if (out.status == SolveStatus::solved) {
        write_factors(outdir, *out.factorization);
        report["outcome"] = "Success";
        attach_residuals(report, *out.factorization);
        finish_report(report, clock);
        return kExitOk;
    }
    report["outcome"] = "Unresolved";
    report["note"] = "no verified factorization within the restart budget; existence is not refuted";
    finish_report(report, clock);
    return kExitUnresolved;
}

int run_nmf(const std::string& path, std::size_t r, std::size_t budget, double tol,
            std::uint64_t seed, const std::string& outdir, const std::string& emit_system) {
    ReportClock clock;
    json report =
        base_report("nmf", {{"matrix", path}, {"r", r}, {"budget", budget}, {"tol", tol}}, seed);
    const Matrix m = parse_matrix_csv(path);

    if (!emit_system.empty()) {
        const PolySystem sys = build_proper_chain_system(
            m, r, trivial_partition(m.cols()), trivial_partition(m.rows()));
        std::ofstream sys_out(emit_system);
        if (!sys_out) throw nmf_error("cannot write '" + emit_system + "'");
        sys_out << poly_system_to_json(sys, m).dump(2) << "\n";
        report["system_file"] = emit_system;
    }

    GeneralOptions opts;
    opts.restarts_per_pair = budget;
    opts.tol = tol;
    opts.seed = seed;
    const GeneralOutcome out = solve_general_nmf(m, r, opts);
    report["pairs_tried"] = out.pairs_tried;
    report["restarts_used"] = out.restarts_used;
    switch (out.status) {
        case SolveStatus::solved:
            write_factors(outdir, *out.factorization);
            report["outcome"] = "Success";
            attach_residuals(report, *out.factorization);
            finish_report(report, clock);
            return kExitOk;
        case SolveStatus::provably_infeasible:
            report["outcome"] = "ProvablyInfeasible";
            report["note"] = "r is below the numeric rank of the input";
            finish_report(report, clock);
            return kExitInfeasible;
        case SolveStatus::unresolved:
        default:
            report["outcome"] = "Unresolved";
            report["note"] = "no verified factorization within budget; existence is not refuted";
            finish_report(report, clock);
            return kExitUnresolved;
    }
}

int run_approx(const std::string& path, std::size_t r, double eps, double delta, std::uint64_t seed,
               const std::string& outdir) {
    ReportClock clock;
    json report = base_report("approx", {{"matrix", path}, {"r", r}, {"eps", eps}}, seed);
    const Matrix m = parse_matrix_csv(path);
    ApproxConfig cfg;
    cfg.seed = seed;
    if (delta > 0.0) cfg.delta = delta;
    const ApproxOutcome out = approx_nmf(m, r, eps, cfg);
    write_factors(outdir, out.factorization);
    report["outcome"] = "Success";
    report["budget_exceeded"] = out.budget_exceeded;
    report["candidates_tried"] = out.candidates_tried;
    attach_residuals(report, out.factorization);
    finish_report(report, clock);
    return kExitOk;
}

int run_verify(const std::string& m_path, const std::string& a_path, const std::string& w_path,
               double tol) {
    ReportClock clock;
    json report =
        base_report("verify", {{"matrix", m_path}, {"a", a_path}, {"w", w_path}, {"tol", tol}}, 0);
    const Matrix m = parse_matrix_csv(m_path);
    Factorization f;
    f.a = parse_matrix_csv(a_path);
    f.w = parse_matrix_csv(w_path);
    f.inner_dim = f.a.cols();
    const VerifyReport rep = verify_factorization(m, f, tol);
    recompute_residuals(m, f);
    report["outcome"] = rep.ok ? "Success" : "VerifyFailed";
    report["min_entry"] = rep.min_entry;
    report["relative_residual"] = rep.relative_residual;
    attach_residuals(report, f);
    finish_report(report, clock);
    return rep.ok ? kExitOk : kExitUnresolved;
}

int run_enum_partitions(const std::string& path, std::size_t s, std::size_t k) {
    ReportClock clock;
    json report = base_report("enum-partitions", {{"matrix", path}, {"s", s}, {"k", k}}, 0);
    const Matrix m = parse_matrix_csv(path);
    const auto labelings = enumerate_hyperplane_partitions(m, s);
    report["hyperplane_partitions"] = labelings.size();
    if (k > 0) {
        const auto partitions = enumerate_simplicial_partitions(m, k, s);
        report["simplicial_partitions"] = partitions.size();
    }
    report["outcome"] = "Success";
    finish_report(report, clock);
    return kExitOk;
}

int run_gen_separable(std::size_t n, std::size_t m, std::size_t r, double alpha_min, double noise,
                      std::uint64_t seed, const std::string& outdir) {
    ReportClock clock;
    json report = base_report("gen separable",
                              {{"n", n}, {"m", m}, {"r", r}, {"alpha_min", alpha_min}, {"noise", noise}},
                              seed);
    const PlantedInstance inst = gen_separable(n, m, r, alpha_min, noise, seed);
    std::filesystem::create_directories(outdir);
    write_matrix_csv(outdir + "/m.csv", inst.m);
    write_matrix_csv(outdir + "/a.csv", inst.a_true);
    write_matrix_csv(outdir + "/w.csv", inst.w_true);
    std::ofstream meta(outdir + "/instance.json");
    meta << to_json(inst).dump(2) << "\n";
    report["outcome"] = "Success";
    report["alpha"] = inst.alpha;
    report["files"] = {outdir + "/m.csv", outdir + "/a.csv", outdir + "/w.csv",
                       outdir + "/instance.json"};
    finish_report(report, clock);
    return kExitOk;
}

std::vector<double> parse_value_list(const std::string& csv) {
    std::vector<double> values;
    std::size_t pos = 0;
    while (pos <= csv.size()) {
        const std::size_t comma = csv.find(',', pos);
        const std::string field =
            csv.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        if (!field.empty()) values.push_back(std::stod(field));
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return values;
}

int run_gen_gadget(const std::string& values_csv, double eps, const std::string& out_path) {
    ReportClock clock;
    json report = base_report("gen gadget", {{"values", values_csv}, {"eps", eps}}, 0);
    const Gadget2D g = build_gadget_2d(parse_value_list(values_csv), eps);
    std::ofstream out(out_path);
    if (!out) throw nmf_error("cannot write '" + out_path + "'");
    out << to_json(g).dump(2) << "\n";
    report["outcome"] = "Success";
    report["vertices"] = g.intersection_vertices.size();
    report["file"] = out_path;
    finish_report(report, clock);
    return kExitOk;
}

int run_gen_intermediate(const std::string& values_csv, std::size_t d, double eps,
                         const std::string& out_path) {
    ReportClock clock;
    json report =
        base_report("gen intermediate-simplex", {{"values", values_csv}, {"d", d}, {"eps", eps}}, 0);
    const IntermediateSimplexInstance inst =
        build_intermediate_simplex(parse_value_list(values_csv), d, eps);
    std::ofstream out(out_path);
    if (!out) throw nmf_error("cannot write '" + out_path + "'");
    out << to_json(inst).dump(2) << "\n";
    report["outcome"] = "Success";
    report["dim"] = inst.dim;
    report["num_points"] = inst.points.size();
    report["file"] = out_path;
    finish_report(report, clock);
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"nmfpack: provable nonnegative matrix factorization"};
    app.require_subcommand(1);

    unsigned threads = 0;
    app.add_option("--threads", threads, "worker threads (0 = hardware)")->capture_default_str();

    std::string matrix_path, outdir = ".";
    std::size_t r = 0;
    std::uint64_t seed = default_seed();

    auto add_seed = [&](CLI::App* cmd) {
        cmd->add_option("--seed", seed, "PRNG seed (env NMF_SEED overrides the default 0)");
    };

    // separable
    SeparableOptions sep_opts;
    auto* sep = app.add_subcommand("separable", "exact separable factorization");
    sep->add_option("matrix", matrix_path)->required();
    sep->add_option("-r", r, "inner dimension")->required();
    sep->add_option("--loner-tol", sep_opts.loner_tol, "hull-distance threshold")->capture_default_str();
    sep->add_option("--dup-tol", sep_opts.dup_tol, "duplicate-row threshold")->capture_default_str();
    sep->add_option("-o,--out", outdir, "output directory");

    // robust
    double eps = 0.0, alpha = 0.0;
    std::size_t expect_r = 0;
    auto* rob = app.add_subcommand("robust", "noise-tolerant separable factorization");
    rob->add_option("matrix", matrix_path)->required();
    rob->add_option("--eps", eps, "per-row l1 noise bound")->required();
    rob->add_option("--alpha", alpha, "robust-simplicial margin")->required();
    rob->add_option("-r", expect_r, "expected cluster count (flags a mismatch)");
    rob->add_option("-o,--out", outdir, "output directory");

    // sf
    std::size_t budget = 200;
    double solver_tol = 1e-7;
    auto* sf = app.add_subcommand("sf", "exact full-rank factorization search");
    sf->add_option("matrix", matrix_path)->required();
    sf->add_option("-r", r, "inner dimension")->required();
    sf->add_option("--budget", budget, "restart budget")->capture_default_str();
    sf->add_option("--tol", solver_tol, "verification tolerance")->capture_default_str();
    sf->add_option("-o,--out", outdir, "output directory");
    add_seed(sf);

    // nmf
    std::size_t nmf_budget = 50;
    std::string emit_system;
    auto* nmf = app.add_subcommand("nmf", "general exact factorization search");
    nmf->add_option("matrix", matrix_path)->required();
    nmf->add_option("-r", r, "inner dimension")->required();
    nmf->add_option("--budget", nmf_budget, "restarts per partition pair")->capture_default_str();
    nmf->add_option("--tol", solver_tol, "verification tolerance")->capture_default_str();
    nmf->add_option("--emit-system", emit_system, "write the bilinear system as JSON");
    nmf->add_option("-o,--out", outdir, "output directory");
    add_seed(nmf);

    // approx
    double approx_eps = 0.0, delta = 0.0;
    auto* approx = app.add_subcommand("approx", "approximate factorization");
    approx->add_option("matrix", matrix_path)->required();
    approx->add_option("-r", r, "inner dimension")->required();
    approx->add_option("--eps", approx_eps, "approximation quality the caller asserts")->required();
    approx->add_option("--delta", delta, "override the svd cutoff fraction");
    approx->add_option("-o,--out", outdir, "output directory");
    add_seed(approx);

    // verify
    std::string a_path, w_path;
    double tol = 1e-7;
    auto* verify = app.add_subcommand("verify", "check a factorization");
    verify->add_option("matrix", matrix_path)->required();
    verify->add_option("a", a_path)->required();
    verify->add_option("w", w_path)->required();
    verify->add_option("--tol", tol, "acceptance tolerance")->capture_default_str();

    // enum-partitions
    std::size_t enum_s = 1, enum_k = 0;
    auto* enum_parts = app.add_subcommand("enum-partitions", "count hyperplane partitions (debug)");
    enum_parts->add_option("matrix", matrix_path)->required();
    enum_parts->add_option("-s", enum_s, "hyperplanes per set")->required();
    enum_parts->add_option("-k", enum_k, "hyperplane-set groups (0 skips the simplicial pass)");

    // gen
    auto* gen = app.add_subcommand("gen", "instance generators");
    gen->require_subcommand(1);
    std::size_t gen_n = 20, gen_m = 10, gen_r = 3, gen_d = 1;
    double gen_alpha = 0.3, gen_noise = 0.0, gen_eps = 0.01;
    std::string values_csv, out_path = "instance.json";

    auto* gen_sep = gen->add_subcommand("separable", "planted separable instance");
    gen_sep->add_option("--n", gen_n)->required();
    gen_sep->add_option("--m", gen_m)->required();
    gen_sep->add_option("--r", gen_r)->required();
    gen_sep->add_option("--alpha-min", gen_alpha)->capture_default_str();
    gen_sep->add_option("--noise", gen_noise)->capture_default_str();
    gen_sep->add_option("-o,--out", outdir, "output directory");
    add_seed(gen_sep);

    auto* gen_gadget = gen->add_subcommand("gadget", "two-dimensional hardness gadget");
    gen_gadget->add_option("--values", values_csv, "comma separated values in [0,1]")->required();
    gen_gadget->add_option("--eps", gen_eps)->capture_default_str();
    gen_gadget->add_option("-o,--out", out_path, "output JSON path");

    auto* gen_inter = gen->add_subcommand("intermediate-simplex", "lifted hardness instance");
    gen_inter->add_option("--values", values_csv)->required();
    gen_inter->add_option("--d", gen_d)->required();
    gen_inter->add_option("--eps", gen_eps)->capture_default_str();
    gen_inter->add_option("-o,--out", out_path, "output JSON path");

    CLI11_PARSE(app, argc, argv);
    set_num_threads(threads);

    try {
        if (sep->parsed()) return run_separable(matrix_path, r, sep_opts, outdir);
        if (rob->parsed())
            return run_robust(matrix_path, eps, alpha,
                              expect_r > 0 ? std::optional<std::size_t>(expect_r) : std::nullopt, outdir);
        if (sf->parsed()) return run_sf(matrix_path, r, budget, solver_tol, seed, outdir);
        if (nmf->parsed())
            return run_nmf(matrix_path, r, nmf_budget, solver_tol, seed, outdir, emit_system);
        if (approx->parsed()) return run_approx(matrix_path, r, approx_eps, delta, seed, outdir);
        if (verify->parsed()) return run_verify(matrix_path, a_path, w_path, tol);
        if (enum_parts->parsed()) return run_enum_partitions(matrix_path, enum_s, enum_k);
        if (gen->parsed()) {
            if (gen_sep->parsed())
                return run_gen_separable(gen_n, gen_m, gen_r, gen_alpha, gen_noise, seed, outdir);
            if (gen_gadget->parsed()) return run_gen_gadget(values_csv, gen_eps, out_path);
            if (gen_inter->parsed()) return run_gen_intermediate(values_csv, gen_d, gen_eps, out_path);
        }
    } catch (const infeasible_params_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInfeasible;
    } catch (const rank_mismatch_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInfeasible;
    } catch (const invalid_params_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInfeasible;
    } catch (const eps_too_large_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInfeasible;
    } catch (const duplicate_values_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInfeasible;
    } catch (const generation_failure_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInfeasible;
    } catch (const nmf_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIoError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIoError;
    }
    return kExitIoError;
}
