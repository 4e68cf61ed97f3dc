#pragma once

#include <cmath>

#include "srec/ensemble.hpp"
#include "srec/linalg.hpp"
#include "srec/rng.hpp"

namespace srec::testing {

/// (n−1)×n frame whose rows span the complement of the flat direction
/// (1,…,1)/√n, optionally jittered and re-normalized. The unjittered Gram is
/// (I − vvᵀ)/(1−1/n), whose restricted eigenvalues give the exact constant
/// δ_s = (s−1)/(n−1) — small enough to open the step-size/RIP gates that the
/// inequality checks need. Random near-square Gaussian frames never get
/// close (δ₄ ≈ 0.6 already at 20×24).
inline DenseMatrix near_isometry_matrix(index_t n, double jitter, std::uint64_t seed) {
    const index_t m = n - 1;
    // Householder mapping e₀ to v = (1,…,1)/√n; columns 1..n−1 of the
    // reflector are an orthonormal basis of the complement of v.
    Vector w(n);
    double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n));
    w[0] = 1.0 - inv_sqrt_n;
    for (index_t i = 1; i < n; ++i) w[i] = -inv_sqrt_n;
    double wnorm_sq = 0.0;
    for (double v : w) wnorm_sq += v * v;

    DenseMatrix a(m, n);
    for (index_t r = 0; r < m; ++r) {
        index_t basis_col = r + 1;  // reflector column
        for (index_t j = 0; j < n; ++j) {
            double q = (j == basis_col ? 1.0 : 0.0) - 2.0 * w[j] * w[basis_col] / wnorm_sq;
            a.at(r, j) = q;
        }
    }

    if (jitter > 0.0) {
        SplitMix64 rng(seed);
        for (double& v : a.data) v += jitter * rng.gaussian() / std::sqrt(static_cast<double>(m));
    }
    for (index_t j = 0; j < n; ++j) {
        double nrm = std::sqrt(dot(a.col(j), a.col(j), m));
        for (index_t i = 0; i < m; ++i) a.at(i, j) /= nrm;
    }
    return a;
}

/// Problem over a caller-supplied measurement matrix with a ±1 signal.
inline MeasurementProblem problem_on_matrix(DenseMatrix a, int k, std::uint64_t seed) {
    MeasurementProblem p;
    p.seed = seed;
    p.truth = sparse_signal(a.cols, k, derive_stream(seed, 1));
    p.b = matvec_on_support(a, p.truth->x_star, p.truth->support);
    p.A = std::move(a);
    return p;
}

}  // namespace srec::testing
