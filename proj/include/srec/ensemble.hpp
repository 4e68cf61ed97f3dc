#pragma once

#include <cstdint>
#include <optional>

#include "srec/types.hpp"

namespace srec {

struct SignalTruth {
    Vector x_star;       // length n
    SupportSet support;  // supp(x_star)
};

/// One recovery instance: measurements b observed through A, with the
/// generating signal and noise retained when known.
struct MeasurementProblem {
    DenseMatrix A;
    Vector b;
    std::optional<SignalTruth> truth;
    std::optional<Vector> noise;
    std::uint64_t seed = 0;
};

/// m×n matrix with i.i.d. standard normal entries, each column rescaled to
/// unit l2 norm. Bitwise deterministic per seed.
DenseMatrix gaussian_matrix(index_t m, index_t n, std::uint64_t seed);

/// k-sparse signal: a uniform k-subset support with ±1 entries.
SignalTruth sparse_signal(index_t n, int k, std::uint64_t seed);

/// Noiseless instance b = A·x*. The matrix, signal and any later noise draw
/// use the derived streams (seed, 0), (seed, 1) and (seed, 2).
MeasurementProblem make_problem(index_t m, index_t n, int k, std::uint64_t seed);

/// Replaces b with A·x* + e where e is seeded Gaussian rescaled so that
/// ‖e‖ = level·‖A·x*‖ exactly. Requires the problem to carry its truth.
MeasurementProblem add_noise(const MeasurementProblem& problem, double level, std::uint64_t seed);

/// Re-verifies the container invariants: unit columns and b = A·x* (+ e)
/// to 1e-12. Throws BadArguments on violation.
void validate_problem(const MeasurementProblem& problem);

}  // namespace srec
