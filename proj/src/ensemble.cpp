#include "srec/ensemble.hpp"

#include <cmath>

#include "srec/linalg.hpp"
#include "srec/rng.hpp"

namespace srec {

DenseMatrix gaussian_matrix(index_t m, index_t n, std::uint64_t seed) {
    if (m < 1 || n < 1) throw BadArguments("gaussian_matrix: dimensions must be positive");
    DenseMatrix a(m, n);
    SplitMix64 rng(seed);
    for (index_t j = 0; j < n; ++j) {
        double* column = a.col(j);
        for (int attempt = 0; attempt < 2; ++attempt) {
            double norm_sq = 0.0;
            for (index_t i = 0; i < m; ++i) {
                column[i] = rng.gaussian();
                norm_sq += column[i] * column[i];
            }
            if (norm_sq > 0.0) {
                double inv = 1.0 / std::sqrt(norm_sq);
                for (index_t i = 0; i < m; ++i) column[i] *= inv;
                break;
            }
            if (attempt == 1) throw DegenerateColumn("gaussian_matrix: zero column after redraw");
        }
    }
    return a;
}

SignalTruth sparse_signal(index_t n, int k, std::uint64_t seed) {
    if (n < 1 || k < 0 || k > n) throw BadArguments("sparse_signal: need 0 <= k <= n");
    SignalTruth truth;
    truth.x_star.assign(n, 0.0);

    SplitMix64 rng(seed);
    std::vector<index_t> pool(n);
    for (index_t i = 0; i < n; ++i) pool[i] = i;
    for (int i = 0; i < k; ++i) {
        std::uint64_t j = i + rng.bounded(static_cast<std::uint64_t>(n - i));
        std::swap(pool[i], pool[static_cast<index_t>(j)]);
    }
    pool.resize(k);
    truth.support = SupportSet::from_indices(std::move(pool));
    for (index_t j : truth.support) truth.x_star[j] = (rng.next() & 1ull) ? 1.0 : -1.0;
    return truth;
}

MeasurementProblem make_problem(index_t m, index_t n, int k, std::uint64_t seed) {
    MeasurementProblem p;
    p.seed = seed;
    p.A = gaussian_matrix(m, n, derive_stream(seed, 0));
    p.truth = sparse_signal(n, k, derive_stream(seed, 1));
    p.b = matvec_on_support(p.A, p.truth->x_star, p.truth->support);
    return p;
}

MeasurementProblem add_noise(const MeasurementProblem& problem, double level, std::uint64_t seed) {
    if (!problem.truth) throw BadArguments("add_noise: problem has no ground truth");
    if (level < 0.0) throw BadArguments("add_noise: level must be nonnegative");

    MeasurementProblem out = problem;
    Vector clean = matvec_on_support(out.A, out.truth->x_star, out.truth->support);
    const index_t m = out.A.rows;

    Vector e(m, 0.0);
    if (level > 0.0) {
        SplitMix64 rng(seed);
        double norm_sq = 0.0;
        for (index_t i = 0; i < m; ++i) {
            e[i] = rng.gaussian();
            norm_sq += e[i] * e[i];
        }
        if (norm_sq <= 0.0) throw DegenerateColumn("add_noise: degenerate noise draw");
        double scale = level * norm2(clean) / std::sqrt(norm_sq);
        for (index_t i = 0; i < m; ++i) e[i] *= scale;
    }

    for (index_t i = 0; i < m; ++i) out.b[i] = clean[i] + e[i];
    out.noise = std::move(e);
    return out;
}

void validate_problem(const MeasurementProblem& problem) {
    const index_t m = problem.A.rows;
    const index_t n = problem.A.cols;
    if (static_cast<index_t>(problem.b.size()) != m)
        throw BadArguments("problem: b has wrong length");
    for (index_t j = 0; j < n; ++j) {
        double nrm = std::sqrt(dot(problem.A.col(j), problem.A.col(j), m));
        if (std::abs(nrm - 1.0) > 1e-12)
            throw BadArguments("problem: column " + std::to_string(j) + " is not unit norm");
    }
    if (problem.truth) {
        if (static_cast<index_t>(problem.truth->x_star.size()) != n)
            throw BadArguments("problem: x* has wrong length");
        Vector ax = matvec_on_support(problem.A, problem.truth->x_star, problem.truth->support);
        for (index_t i = 0; i < m; ++i) {
            double expect = ax[i] + (problem.noise ? (*problem.noise)[i] : 0.0);
            if (std::abs(problem.b[i] - expect) > 1e-12)
                throw BadArguments("problem: b deviates from A·x* (+ e)");
        }
    }
}

}  // namespace srec
