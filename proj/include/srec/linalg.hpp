#pragma once

#include <cstdint>

#include "srec/types.hpp"

namespace srec {

double dot(const double* a, const double* b, index_t n);
double norm2(const Vector& v);
double norm2_squared(const Vector& v);

/// A·x for dense x of length cols.
Vector matvec(const DenseMatrix& a, const Vector& x);

/// A·x when x is supported on I (only those columns are touched).
Vector matvec_on_support(const DenseMatrix& a, const Vector& x, const SupportSet& support);

/// Aᵀr, one inner product per column.
Vector correlate(const DenseMatrix& a, const Vector& r);

/// Aᵀ(b − A·x); the correlation of every column with the residual.
Vector residual_correlation(const DenseMatrix& a, const Vector& x, const Vector& b);

/// ½‖A·x − b‖² with x supported on `support`.
double objective_on_support(const DenseMatrix& a, const Vector& x, const SupportSet& support,
                            const Vector& b);

/// argmin over x supported on I of ‖A·x − b‖₂, returned as a length-n vector
/// that is exactly zero outside I. Solves the normal equations by Cholesky;
/// falls back to conjugate gradients (tol 1e-10, cap 10·|I| iterations) if the
/// factorization reports near-singularity while the conditioning precondition
/// still holds. Throws RankDeficient when σ_min(A_I) ≤ 1e-10·σ_max(A_I).
Vector least_squares_on_support(const DenseMatrix& a, const Vector& b, const SupportSet& support);

/// Exact RIP constant of the given order by enumerating every support of that
/// size and taking eigenvalue extremes of the restricted Gram matrix.
/// Guards the enumeration at C(n, order) ≤ 10^6 and throws TooLarge beyond it.
RipEstimate rip_constant_exhaustive(const DenseMatrix& a, int order);

/// Lower bound on the RIP constant from `samples` random supports. Never
/// certifies a hypothesis; diagnostics gate only on exhaustive estimates.
RipEstimate rip_constant_sampled(const DenseMatrix& a, int order, int samples,
                                 std::uint64_t seed);

/// C(n, k) with saturation at 2^63-1.
std::uint64_t binomial_guard(index_t n, int k);

}  // namespace srec
