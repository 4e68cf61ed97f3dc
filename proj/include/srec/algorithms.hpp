#pragma once

#include <cstdint>
#include <functional>
#include <optional>

#include "srec/thresholding.hpp"
#include "srec/types.hpp"

namespace srec {

enum class Family { ompr_l, omp, two_stage };
enum class InitMode { topk_correlation, random };

/// Shared configuration for every recovery family.
/// ompr_l with l = 1 is OMPR; ompr_l with l = k is IHT-Newton/HTP. two_stage
/// with l = 2k is CoSaMP and with l = k is Subspace Pursuit. All aliases run
/// through the same code path.
struct AlgorithmConfig {
    Family family = Family::ompr_l;
    int k = 1;
    int l = 1;
    double eta = 1.0;
    int max_iters = 1000;
    double tol = 1e-10;  // convergence on f(x) = ½‖Ax−b‖² <= tol
    std::uint64_t seed = 0;
    InitMode init = InitMode::topk_correlation;
};

AlgorithmConfig ompr_config(int k);
AlgorithmConfig omprl_config(int k, int l, double eta = 1.0);
AlgorithmConfig iht_newton_config(int k, double eta = 1.0);
AlgorithmConfig omp_config(int k);
AlgorithmConfig two_stage_config(int k, int l);
AlgorithmConfig cosamp_config(int k);
AlgorithmConfig subspace_pursuit_config(int k);

enum class RunStatus { Converged, MaxIters, Stalled };

/// Iterate snapshot: x is zero outside `support`; after every iteration the
/// iterate is least-squares optimal on its support.
struct RecoveryState {
    Vector x;
    SupportSet support;
    double objective = 0.0;
    int iteration = 0;
};

struct TraceSnapshot {
    int iteration = 0;
    SupportSet support;
    double objective = 0.0;
    SupportSet found;
    SupportSet lost;
};

struct RecoveryTrace {
    std::vector<TraceSnapshot> snapshots;  // snapshot 0 is the initial state
    RunStatus status = RunStatus::MaxIters;
};

struct RunResult {
    RecoveryState state;
    RecoveryTrace trace;
};

/// Called after each completed iteration with the states it connects.
using IterationObserver =
    std::function<void(const RecoveryState& before, const RecoveryState& after)>;

/// Size-k starting iterate: top-k of |Aᵀb| (default) or a seeded uniform
/// k-subset, then a least-squares solve on it.
RecoveryState initialize_support(const DenseMatrix& a, const Vector& b, int k, InitMode mode,
                                 std::uint64_t seed);

/// Partial-hard-thresholding family: gradient step, threshold keeping at most
/// l new support elements, least-squares re-solve on the new support.
RunResult run_omprl(const DenseMatrix& a, const Vector& b, const AlgorithmConfig& cfg,
                    std::optional<SupportSet> init_support = std::nullopt,
                    const IterationObserver& observer = {});

/// Classic greedy pursuit: grow the support by the best-correlated column,
/// re-solve, for exactly k iterations (or early residual convergence).
RunResult run_omp(const DenseMatrix& a, const Vector& b, const AlgorithmConfig& cfg);

/// Two-stage family: enlarge the support by the top-l correlations, solve on
/// the enlarged set, hard threshold back to k, solve again.
RunResult run_two_stage(const DenseMatrix& a, const Vector& b, const AlgorithmConfig& cfg,
                        std::optional<SupportSet> init_support = std::nullopt,
                        const IterationObserver& observer = {});

/// Dispatch on cfg.family.
RunResult run_algorithm(const DenseMatrix& a, const Vector& b, const AlgorithmConfig& cfg);

}  // namespace srec
