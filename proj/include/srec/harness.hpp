#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "srec/algorithms.hpp"
#include "srec/types.hpp"

namespace srec {

enum class ExperimentKind { phase_transition, noise_sweep, lsh_benchmark, single_run };

/// Replacement size of an algorithm entry, either a fixed value or a
/// multiple of the per-cell sparsity ("k" and "2k" in configs).
struct ReplacementSpec {
    bool times_k = false;
    int value = 1;  // fixed l, or the multiplier when times_k

    int resolve(int k) const { return times_k ? value * k : value; }
};

struct AlgorithmSpec {
    std::string name;
    Family family = Family::ompr_l;
    ReplacementSpec l;
    double eta = 1.0;
    int max_iters = 0;  // 0 = auto (10k + 50)
    double tol = 1e-10;
    InitMode init = InitMode::topk_correlation;

    AlgorithmConfig config_for(int k) const;
};

enum class TimingMode { zero, measured };

/// One experiment description; mirrors the JSON config key for key.
/// Unknown JSON keys are rejected.
struct ExperimentSpec {
    ExperimentKind kind = ExperimentKind::phase_transition;
    index_t m = 100;
    index_t n = 400;
    std::vector<double> rho_grid;    // phase_transition
    std::vector<double> delta_grid;  // phase_transition
    std::vector<int> k_values;       // noise_sweep
    std::vector<double> noise_levels;
    std::vector<index_t> n_values;  // lsh_benchmark
    int k = 0;                      // lsh_benchmark / single_run sparsity (0 = m/10)
    int lsh_bits = 0;               // 0 = ceil(log2 n)
    int lsh_tables = 0;             // 0 = ceil(sqrt n)
    std::vector<AlgorithmSpec> algorithms;
    int trials_per_cell = 50;
    double success_threshold = 0.01;
    std::uint64_t base_seed = 1;
    std::string output_dir;
    int threads = 1;
    TimingMode timing = TimingMode::zero;
};

/// Parses a config document; throws BadArguments on unknown keys or bad
/// values.
ExperimentSpec parse_experiment_spec(const std::string& json_text);

/// Fills empty grids, rosters and trial counts with the per-kind defaults.
void apply_kind_defaults(ExperimentSpec& spec);

/// Ready-to-run spec with the documented defaults for a kind.
ExperimentSpec default_spec(ExperimentKind kind);

/// Roster entry for a well-known algorithm name: ompr, omp, iht_newton,
/// iht_newton_half, sp, cosamp.
AlgorithmSpec algorithm_spec_by_name(const std::string& name);

struct TrialOutcome {
    std::uint64_t seed = 0;
    bool errored = false;
    bool success = false;
    double rel_err = 0.0;
    double resid = 0.0;
    double time_s = 0.0;
    RunStatus status = RunStatus::MaxIters;
};

struct CellStats {
    double success_prob = 0.0;
    double mean_rel_err = 0.0;
    double mean_resid = 0.0;
    double mean_time_s = 0.0;
    int trials = 0;
};

struct GridResult {
    std::vector<double> rhos;
    std::vector<double> deltas;
    std::vector<std::string> algo_names;
    // [algo][cell] with cell = rho_index * deltas.size() + delta_index
    std::vector<std::vector<CellStats>> cells;
    std::vector<std::vector<std::vector<TrialOutcome>>> trials;  // [algo][cell][trial]
};

struct NoiseCell {
    double mean_resid = 0.0;
    double stderr_resid = 0.0;
    int trials = 0;
};

struct NoiseResult {
    std::vector<int> k_values;
    std::vector<double> noise_levels;
    std::vector<std::string> algo_names;
    std::vector<std::vector<NoiseCell>> cells;                   // [algo][cell]
    std::vector<std::vector<std::vector<TrialOutcome>>> trials;  // [algo][cell][trial]
};

struct LshBenchResult {
    std::vector<index_t> n_values;
    std::vector<std::string> algo_names;
    std::vector<std::vector<CellStats>> cells;                   // [algo][n_index]
    std::vector<std::vector<std::vector<TrialOutcome>>> trials;  // [algo][n_index][trial]
};

/// Per-cell success-probability grid over (ρ, δ); writes grid_<algo>.csv,
/// trials_<algo>.csv and grid_<algo>.svg under output_dir when set.
GridResult run_phase_transition(const ExperimentSpec& spec);

/// Residual-norm sweep over (k, noise level); writes noise_<algo>.csv,
/// paired-difference files and per-trial records under output_dir when set.
NoiseResult run_noise_sweep(const ExperimentSpec& spec);

/// Error/time comparison of OMPR, OMPR-Hash and IHT-Newton (η = 1 and 1/2)
/// as n grows; index construction happens offline and is excluded from the
/// reconstruction wall time.
LshBenchResult run_lsh_benchmark(const ExperimentSpec& spec);

/// Entry point behind the `srec` binary. Exit codes: 0 success, 1 config
/// error, 2 I/O error.
int cli_main(int argc, const char* const* argv);

}  // namespace srec
