#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "srec/diagnostics.hpp"
#include "srec/ensemble.hpp"
#include "srec/harness.hpp"
#include "srec/io.hpp"
#include "srec/linalg.hpp"
#include "srec/lsh.hpp"
#include "srec/rng.hpp"

namespace srec {

namespace {

std::string read_config_file(const std::string& path) {
    if (!std::filesystem::exists(path)) throw IoError("config file not found: " + path);
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::vector<std::string> split_csv(const std::string& text) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : text) {
        if (c == ',') {
            if (!cur.empty()) parts.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) parts.push_back(cur);
    return parts;
}

struct CommonFlags {
    std::string config;
    std::string out;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int threads = 0;
    std::string algos;
    std::string timing;
};

void add_common(CLI::App* sub, CommonFlags& flags) {
    sub->add_option("--config", flags.config, "JSON experiment config");
    sub->add_option("--out", flags.out, "output directory");
    sub->add_option("--seed", flags.seed, "override base seed")
        ->each([&flags](const std::string&) { flags.seed_set = true; });
    sub->add_option("--threads", flags.threads, "worker thread count");
    sub->add_option("--algo", flags.algos, "comma-separated algorithm filter");
    sub->add_option("--timing", flags.timing, "time columns: zero (default, reproducible) or measured")
        ->check(CLI::IsMember({"zero", "measured"}));
}

ExperimentSpec spec_for(ExperimentKind kind, const CommonFlags& flags,
                        const std::string& default_out) {
    ExperimentSpec spec =
        flags.config.empty() ? default_spec(kind) : parse_experiment_spec(read_config_file(flags.config));
    if (spec.kind != kind) throw BadArguments("config kind does not match the subcommand");
    if (!flags.out.empty()) spec.output_dir = flags.out;
    if (spec.output_dir.empty()) spec.output_dir = default_out;
    if (flags.seed_set) spec.base_seed = flags.seed;
    if (flags.threads > 0) spec.threads = flags.threads;
    if (!flags.timing.empty())
        spec.timing = flags.timing == "measured" ? TimingMode::measured : TimingMode::zero;
    if (!flags.algos.empty()) {
        if (kind == ExperimentKind::lsh_benchmark)
            throw BadArguments("the lsh benchmark roster is fixed; --algo is not supported here");
        std::vector<AlgorithmSpec> kept;
        for (const std::string& name : split_csv(flags.algos)) {
            bool matched = false;
            for (const AlgorithmSpec& a : spec.algorithms)
                if (a.name == name) {
                    kept.push_back(a);
                    matched = true;
                    break;
                }
            if (!matched) kept.push_back(algorithm_spec_by_name(name));
        }
        if (kept.empty()) throw BadArguments("--algo filtered out every algorithm");
        spec.algorithms = std::move(kept);
    }
    return spec;
}

int do_run(std::uint64_t seed, index_t m, index_t n, int k, double noise,
           const std::string& algos, double tol, int max_iters) {
    MeasurementProblem problem = make_problem(m, n, k, seed);
    if (noise > 0.0) problem = add_noise(problem, noise, derive_stream(seed, 2));

    std::vector<std::string> names = split_csv(algos.empty() ? "ompr,omp" : algos);
    for (const std::string& name : names) {
        double objective = 0.0;
        int iters = 0;
        RunStatus status;
        Vector x;
        if (name == "ompr_hash") {
            LshIndex index = build_index(problem.A, default_lsh_bits(n), default_lsh_tables(n),
                                         derive_stream(seed, 3));
            AlgorithmConfig cfg = omprl_config(k, 1);
            cfg.tol = tol;
            if (max_iters > 0) cfg.max_iters = max_iters;
            HashRunResult hr = run_ompr_hash(problem.A, problem.b, cfg, index);
            objective = hr.state.objective;
            iters = hr.state.iteration;
            status = hr.trace.status;
            x = hr.state.x;
        } else {
            AlgorithmSpec spec = algorithm_spec_by_name(name);
            spec.tol = tol;
            if (max_iters > 0) spec.max_iters = max_iters;
            AlgorithmConfig cfg = spec.config_for(k);
            RunResult rr = run_algorithm(problem.A, problem.b, cfg);
            objective = rr.state.objective;
            iters = rr.state.iteration;
            status = rr.trace.status;
            x = rr.state.x;
        }
        double num = 0.0;
        for (index_t j = 0; j < n; ++j) {
            double d = x[j] - problem.truth->x_star[j];
            num += d * d;
        }
        double rel = std::sqrt(num / norm2_squared(problem.truth->x_star));
        const char* status_str = status == RunStatus::Converged  ? "converged"
                                 : status == RunStatus::MaxIters ? "max_iters"
                                                                 : "stalled";
        std::printf("%s rel_err=%.12g resid=%.12g f=%.12g iters=%d status=%s\n", name.c_str(),
                    rel, std::sqrt(2.0 * objective), objective, iters, status_str);
    }
    return 0;
}

int do_diag(const std::string& family, index_t m, index_t n, int k, int l, double eta,
            std::uint64_t seed, double noise, int max_iters, const std::string& init,
            const std::string& out_dir) {
    MeasurementProblem problem = make_problem(m, n, k, seed);
    if (noise > 0.0) problem = add_noise(problem, noise, derive_stream(seed, 2));
    RipContext rip = compute_rip_context(problem.A, k, l);

    std::vector<DiagnosticsRow> rows;
    AlgorithmConfig cfg;
    cfg.k = k;
    cfg.l = l;
    cfg.eta = eta;
    cfg.seed = seed;
    cfg.max_iters = max_iters > 0 ? max_iters : 10 * k + 50;
    if (init == "random")
        cfg.init = InitMode::random;
    else if (init != "topk_correlation")
        throw BadArguments("diag init must be topk_correlation or random");

    if (family == "ompr_l") {
        cfg.family = Family::ompr_l;
        run_omprl(problem.A, problem.b, cfg, std::nullopt,
                  [&](const RecoveryState& before, const RecoveryState& after) {
                      IterationDiagnostics d =
                          check_ompr_iteration(problem, before, after, cfg, rip);
                      auto batch = diagnostics_rows(seed, d, after.iteration);
                      rows.insert(rows.end(), batch.begin(), batch.end());
                  });
    } else if (family == "two_stage") {
        cfg.family = Family::two_stage;
        run_two_stage(problem.A, problem.b, cfg, std::nullopt,
                      [&](const RecoveryState& before, const RecoveryState& after) {
                          IterationDiagnostics d =
                              check_two_stage_iteration(problem, before, after, cfg, rip);
                          auto batch = diagnostics_rows(seed, d, after.iteration);
                          rows.insert(rows.end(), batch.begin(), batch.end());
                      });
    } else {
        throw BadArguments("diag family must be ompr_l or two_stage");
    }

    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create output directory: " + out_dir);
    std::ofstream csv(out_dir + "/diag.csv", std::ios::binary);
    if (!csv) throw IoError("cannot open for writing: " + out_dir + "/diag.csv");
    write_diagnostics_csv(csv, rows);

    int hold = 0, fail = 0, skip = 0;
    for (const DiagnosticsRow& r : rows) {
        if (r.status == CheckStatus::Hold) ++hold;
        if (r.status == CheckStatus::Fail) ++fail;
        if (r.status == CheckStatus::Skip) ++skip;
    }
    std::printf("diag: %d hold, %d fail, %d skip -> %s/diag.csv\n", hold, fail, skip,
                out_dir.c_str());
    return fail == 0 ? 0 : 1;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
    CLI::App app{"sparse recovery toolkit: greedy thresholding algorithms, LSH-accelerated "
                 "OMPR, convergence diagnostics and reproducible experiments"};
    app.require_subcommand(1);

    CommonFlags phase_flags, noise_flags, lsh_flags;
    CLI::App* phase = app.add_subcommand("phase", "success-probability grid over (rho, delta)");
    add_common(phase, phase_flags);
    CLI::App* noise = app.add_subcommand("noise", "residual sweep over sparsity and noise level");
    add_common(noise, noise_flags);
    CLI::App* lsh = app.add_subcommand("lsh", "OMPR vs OMPR-Hash error/time benchmark");
    add_common(lsh, lsh_flags);

    CLI::App* run = app.add_subcommand("run", "run algorithms on one seeded instance");
    std::uint64_t run_seed = 0;
    index_t run_m = 64, run_n = 256;
    int run_k = 8, run_max_iters = 0;
    double run_noise = 0.0, run_tol = 1e-10;
    std::string run_algos;
    run->add_option("--seed", run_seed, "instance seed");
    run->add_option("--m", run_m, "rows");
    run->add_option("--n", run_n, "columns");
    run->add_option("--k", run_k, "sparsity");
    run->add_option("--noise", run_noise, "noise level (norm ratio)");
    run->add_option("--algo", run_algos, "comma-separated algorithms");
    run->add_option("--tol", run_tol, "objective tolerance");
    run->add_option("--max-iters", run_max_iters, "iteration cap (0 = auto)");

    CLI::App* diag = app.add_subcommand("diag", "replay one run and emit per-iteration checks");
    std::string diag_family = "ompr_l", diag_out = "srec_diag", diag_init = "topk_correlation";
    index_t diag_m = 16, diag_n = 20;
    int diag_k = 2, diag_l = 1, diag_max_iters = 0;
    double diag_eta = 0.9, diag_noise = 0.0;
    std::uint64_t diag_seed = 1;
    diag->add_option("--family", diag_family, "ompr_l or two_stage");
    diag->add_option("--m", diag_m, "rows");
    diag->add_option("--n", diag_n, "columns");
    diag->add_option("--k", diag_k, "sparsity");
    diag->add_option("--l", diag_l, "replacement size");
    diag->add_option("--eta", diag_eta, "step size");
    diag->add_option("--seed", diag_seed, "instance seed");
    diag->add_option("--noise", diag_noise, "noise level");
    diag->add_option("--max-iters", diag_max_iters, "iteration cap (0 = auto)");
    diag->add_option("--init", diag_init, "initial support: topk_correlation or random");
    diag->add_option("--out", diag_out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (phase->parsed()) {
            ExperimentSpec spec = spec_for(ExperimentKind::phase_transition, phase_flags, "srec_phase");
            GridResult grid = run_phase_transition(spec);
            std::printf("phase: %zu x %zu grid, %d trials/cell -> %s\n", grid.rhos.size(),
                        grid.deltas.size(), spec.trials_per_cell, spec.output_dir.c_str());
            return 0;
        }
        if (noise->parsed()) {
            ExperimentSpec spec = spec_for(ExperimentKind::noise_sweep, noise_flags, "srec_noise");
            NoiseResult res = run_noise_sweep(spec);
            std::printf("noise: %zu x %zu cells, %d trials/cell -> %s\n", res.k_values.size(),
                        res.noise_levels.size(), spec.trials_per_cell, spec.output_dir.c_str());
            return 0;
        }
        if (lsh->parsed()) {
            ExperimentSpec spec = spec_for(ExperimentKind::lsh_benchmark, lsh_flags, "srec_lsh");
            LshBenchResult res = run_lsh_benchmark(spec);
            std::printf("lsh: %zu sizes, %d trials each -> %s\n", res.n_values.size(),
                        spec.trials_per_cell, spec.output_dir.c_str());
            return 0;
        }
        if (run->parsed())
            return do_run(run_seed, run_m, run_n, run_k, run_noise, run_algos, run_tol,
                          run_max_iters);
        if (diag->parsed())
            return do_diag(diag_family, diag_m, diag_n, diag_k, diag_l, diag_eta, diag_seed,
                           diag_noise, diag_max_iters, diag_init, diag_out);
    } catch (const IoError& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return 2;
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 1;
}

}  // namespace srec
