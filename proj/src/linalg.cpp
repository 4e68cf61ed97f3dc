#include "srec/linalg.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "srec/rng.hpp"

namespace srec {

namespace {

using EMatrix = Eigen::MatrixXd;
using EVector = Eigen::VectorXd;
using ConstMap = Eigen::Map<const EMatrix>;

ConstMap as_eigen(const DenseMatrix& a) { return ConstMap(a.data.data(), a.rows, a.cols); }

EMatrix gather_columns(const DenseMatrix& a, const SupportSet& support) {
    EMatrix sub(a.rows, support.size());
    for (index_t c = 0; c < support.size(); ++c)
        sub.col(c) = Eigen::Map<const EVector>(a.col(support.idx[c]), a.rows);
    return sub;
}

void check_column_indices(const DenseMatrix& a, const SupportSet& support) {
    if (!support.empty() && support.idx.back() >= a.cols)
        throw DimensionMismatch("support index out of range for matrix with " +
                                std::to_string(a.cols) + " columns");
}

}  // namespace

double dot(const double* a, const double* b, index_t n) {
    return Eigen::Map<const EVector>(a, n).dot(Eigen::Map<const EVector>(b, n));
}

double norm2_squared(const Vector& v) {
    return Eigen::Map<const EVector>(v.data(), static_cast<index_t>(v.size())).squaredNorm();
}

double norm2(const Vector& v) { return std::sqrt(norm2_squared(v)); }

Vector matvec(const DenseMatrix& a, const Vector& x) {
    if (static_cast<index_t>(x.size()) != a.cols)
        throw DimensionMismatch("matvec: x has length " + std::to_string(x.size()) +
                                ", matrix has " + std::to_string(a.cols) + " columns");
    Vector out(a.rows);
    Eigen::Map<EVector>(out.data(), a.rows) =
        as_eigen(a) * Eigen::Map<const EVector>(x.data(), a.cols);
    return out;
}

Vector matvec_on_support(const DenseMatrix& a, const Vector& x, const SupportSet& support) {
    if (static_cast<index_t>(x.size()) != a.cols)
        throw DimensionMismatch("matvec_on_support: shape mismatch");
    check_column_indices(a, support);
    Vector out(a.rows, 0.0);
    Eigen::Map<EVector> acc(out.data(), a.rows);
    for (index_t j : support)
        acc += x[j] * Eigen::Map<const EVector>(a.col(j), a.rows);
    return out;
}

Vector correlate(const DenseMatrix& a, const Vector& r) {
    if (static_cast<index_t>(r.size()) != a.rows)
        throw DimensionMismatch("correlate: r has length " + std::to_string(r.size()) +
                                ", matrix has " + std::to_string(a.rows) + " rows");
    Vector out(a.cols);
    Eigen::Map<EVector>(out.data(), a.cols) =
        as_eigen(a).transpose() * Eigen::Map<const EVector>(r.data(), a.rows);
    return out;
}

Vector residual_correlation(const DenseMatrix& a, const Vector& x, const Vector& b) {
    if (static_cast<index_t>(b.size()) != a.rows)
        throw DimensionMismatch("residual_correlation: b has wrong length");
    Vector ax = matvec(a, x);
    Vector r(a.rows);
    for (index_t i = 0; i < a.rows; ++i) r[i] = b[i] - ax[i];
    return correlate(a, r);
}

double objective_on_support(const DenseMatrix& a, const Vector& x, const SupportSet& support,
                            const Vector& b) {
    Vector ax = matvec_on_support(a, x, support);
    double acc = 0.0;
    for (index_t i = 0; i < a.rows; ++i) {
        double d = ax[i] - b[i];
        acc += d * d;
    }
    return 0.5 * acc;
}

Vector least_squares_on_support(const DenseMatrix& a, const Vector& b, const SupportSet& support) {
    if (static_cast<index_t>(b.size()) != a.rows)
        throw DimensionMismatch("least_squares_on_support: b has wrong length");
    check_column_indices(a, support);

    Vector x(a.cols, 0.0);
    if (support.empty()) return x;
    if (support.size() > a.rows)
        throw RankDeficient("least_squares_on_support: |I| = " + std::to_string(support.size()) +
                            " exceeds row count " + std::to_string(a.rows));

    EMatrix sub = gather_columns(a, support);
    EMatrix gram = sub.transpose() * sub;
    EVector rhs = sub.transpose() * Eigen::Map<const EVector>(b.data(), a.rows);

    // Conditioning precondition: sigma_min(A_I) > 1e-10 * sigma_max(A_I),
    // i.e. lambda_min(G) > 1e-20 * lambda_max(G).
    Eigen::SelfAdjointEigenSolver<EMatrix> eig(gram, Eigen::EigenvaluesOnly);
    double lmax = eig.eigenvalues().maxCoeff();
    double lmin = eig.eigenvalues().minCoeff();
    if (lmax <= 0.0 || lmin <= 1e-20 * lmax)
        throw RankDeficient("least_squares_on_support: restricted matrix is numerically singular");

    Eigen::LLT<EMatrix> llt(gram);
    EVector coeffs;
    if (llt.info() == Eigen::Success) {
        coeffs = llt.solve(rhs);
    } else {
        // Near-singular factorization: conjugate-gradient fallback on the
        // normal equations, tolerance 1e-10, at most 10|I| iterations.
        const index_t dim = support.size();
        coeffs = EVector::Zero(dim);
        EVector residual = rhs;
        EVector direction = residual;
        double rho = residual.squaredNorm();
        const double stop = 1e-10 * std::sqrt(std::max(rhs.squaredNorm(), 1e-300));
        for (index_t it = 0; it < 10 * dim && std::sqrt(rho) > stop; ++it) {
            EVector gd = gram * direction;
            double denom = direction.dot(gd);
            if (denom <= 0.0) break;
            double alpha = rho / denom;
            coeffs += alpha * direction;
            residual -= alpha * gd;
            double rho_next = residual.squaredNorm();
            direction = residual + (rho_next / rho) * direction;
            rho = rho_next;
        }
    }

    for (index_t c = 0; c < support.size(); ++c) x[support.idx[c]] = coeffs[c];
    return x;
}

std::uint64_t binomial_guard(index_t n, int k) {
    if (k < 0 || k > n) return 0;
    k = std::min<int>(k, n - k);
    unsigned __int128 acc = 1;
    const unsigned __int128 cap = static_cast<unsigned __int128>(std::numeric_limits<std::int64_t>::max());
    for (int i = 1; i <= k; ++i) {
        acc = acc * static_cast<unsigned>(n - k + i) / static_cast<unsigned>(i);
        if (acc > cap) return std::numeric_limits<std::int64_t>::max();
    }
    return static_cast<std::uint64_t>(acc);
}

namespace {

// Gram-restricted eigenvalue extremes for one support; `gram` is the full
// n×n Gram matrix when available (small n), otherwise columns are gathered.
double support_deviation(const DenseMatrix& a, const EMatrix* gram,
                         const std::vector<index_t>& support) {
    const int k = static_cast<int>(support.size());
    EMatrix g(k, k);
    if (gram) {
        for (int r = 0; r < k; ++r)
            for (int c = 0; c < k; ++c) g(r, c) = (*gram)(support[r], support[c]);
    } else {
        for (int r = 0; r < k; ++r)
            for (int c = r; c < k; ++c) {
                double v = dot(a.col(support[r]), a.col(support[c]), a.rows);
                g(r, c) = v;
                g(c, r) = v;
            }
    }
    Eigen::SelfAdjointEigenSolver<EMatrix> eig(g, Eigen::EigenvaluesOnly);
    double lmax = eig.eigenvalues().maxCoeff();
    double lmin = eig.eigenvalues().minCoeff();
    return std::max(lmax - 1.0, 1.0 - lmin);
}

double clamp_delta(double d) { return std::min(1.0, std::max(0.0, d)); }

}  // namespace

RipEstimate rip_constant_exhaustive(const DenseMatrix& a, int order) {
    if (order < 1 || order > a.cols)
        throw BadArguments("rip_constant_exhaustive: order out of range");
    if (binomial_guard(a.cols, order) > 1000000ull)
        throw TooLarge("rip_constant_exhaustive: C(n, order) exceeds 10^6");

    double worst = 0.0;
    if (order == 1) {
        for (index_t j = 0; j < a.cols; ++j) {
            double nsq = dot(a.col(j), a.col(j), a.rows);
            worst = std::max(worst, std::max(nsq - 1.0, 1.0 - nsq));
        }
        return RipEstimate{1, clamp_delta(worst), RipEstimate::Method::exhaustive};
    }

    // Full Gram is affordable: the guard caps n at ~1400 for order >= 2.
    EMatrix gram = as_eigen(a).transpose() * as_eigen(a);

    std::vector<index_t> support(order);
    for (int i = 0; i < order; ++i) support[i] = i;
    while (true) {
        worst = std::max(worst, support_deviation(a, &gram, support));
        // next combination in lexicographic order
        int pos = order - 1;
        while (pos >= 0 && support[pos] == a.cols - order + pos) --pos;
        if (pos < 0) break;
        ++support[pos];
        for (int i = pos + 1; i < order; ++i) support[i] = support[i - 1] + 1;
    }
    return RipEstimate{order, clamp_delta(worst), RipEstimate::Method::exhaustive};
}

RipEstimate rip_constant_sampled(const DenseMatrix& a, int order, int samples,
                                 std::uint64_t seed) {
    if (order < 1 || order > a.cols)
        throw BadArguments("rip_constant_sampled: order out of range");
    if (samples < 1) throw BadArguments("rip_constant_sampled: samples must be positive");

    SplitMix64 rng(seed);
    std::vector<index_t> pool(a.cols);
    for (index_t i = 0; i < a.cols; ++i) pool[i] = i;

    double worst = 0.0;
    std::vector<index_t> support(order);
    for (int s = 0; s < samples; ++s) {
        for (int i = 0; i < order; ++i) {
            std::uint64_t j = i + rng.bounded(static_cast<std::uint64_t>(a.cols - i));
            std::swap(pool[i], pool[j]);
            support[i] = pool[i];
        }
        worst = std::max(worst, support_deviation(a, nullptr, support));
    }
    return RipEstimate{order, clamp_delta(worst), RipEstimate::Method::sampled_lower_bound};
}

}  // namespace srec
