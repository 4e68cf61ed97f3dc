#include <doctest.h>

#include <cmath>

#include "srec/ensemble.hpp"
#include "srec/linalg.hpp"
#include "srec/rng.hpp"

using namespace srec;

namespace {

// Naive double-loop Aᵀ(b − Ax), independent of the library kernels.
Vector naive_residual_correlation(const DenseMatrix& a, const Vector& x, const Vector& b) {
    Vector r(a.rows, 0.0);
    for (index_t i = 0; i < a.rows; ++i) {
        double ax = 0.0;
        for (index_t j = 0; j < a.cols; ++j) ax += a.at(i, j) * x[j];
        r[i] = b[i] - ax;
    }
    Vector out(a.cols, 0.0);
    for (index_t j = 0; j < a.cols; ++j)
        for (index_t i = 0; i < a.rows; ++i) out[j] += a.at(i, j) * r[i];
    return out;
}

// 2x2 symmetric eigenvalue extremes in closed form.
void eig2x2(double g00, double g01, double g11, double& lo, double& hi) {
    double mean = 0.5 * (g00 + g11);
    double rad = std::sqrt(0.25 * (g00 - g11) * (g00 - g11) + g01 * g01);
    lo = mean - rad;
    hi = mean + rad;
}

}  // namespace

TEST_CASE("least squares on identity support") {
    DenseMatrix a = identity_matrix(3);
    Vector b = {1, 2, 3};
    Vector x = least_squares_on_support(a, b, SupportSet({0, 2}));
    CHECK(x[0] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(x[1] == 0.0);
    CHECK(x[2] == doctest::Approx(3.0).epsilon(1e-14));
}

TEST_CASE("least squares single scaled column") {
    DenseMatrix a(2, 2);
    a.at(0, 0) = 1.0;
    a.at(1, 1) = 2.0;
    Vector x = least_squares_on_support(a, {2, 2}, SupportSet({1}));
    CHECK(x[0] == 0.0);
    CHECK(x[1] == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("least squares recovers an interpolated sparse signal (elimination oracle)") {
    DenseMatrix a = gaussian_matrix(6, 8, 7);
    Vector xstar(8, 0.0);
    xstar[1] = 2.0;
    xstar[4] = -1.0;
    SupportSet support({1, 4});
    Vector b = matvec_on_support(a, xstar, support);

    Vector x = least_squares_on_support(a, b, support);
    CHECK(std::abs(x[1] - xstar[1]) < 1e-8);
    CHECK(std::abs(x[4] - xstar[4]) < 1e-8);
    for (index_t j : {0, 2, 3, 5, 6, 7}) CHECK(x[j] == 0.0);

    // hand-rolled 2x2 normal equations: G c = rhs solved by elimination
    double g11 = 0, g14 = 0, g44 = 0, c1 = 0, c4 = 0;
    for (index_t i = 0; i < 6; ++i) {
        g11 += a.at(i, 1) * a.at(i, 1);
        g14 += a.at(i, 1) * a.at(i, 4);
        g44 += a.at(i, 4) * a.at(i, 4);
        c1 += a.at(i, 1) * b[i];
        c4 += a.at(i, 4) * b[i];
    }
    double factor = g14 / g11;
    double coeff4 = (c4 - factor * c1) / (g44 - factor * g14);
    double coeff1 = (c1 - g14 * coeff4) / g11;
    CHECK(std::abs(x[1] - coeff1) < 1e-10);
    CHECK(std::abs(x[4] - coeff4) < 1e-10);
}

TEST_CASE("least squares is a projection and orthogonalizes the residual") {
    DenseMatrix a = gaussian_matrix(10, 20, 21);
    SignalTruth t = sparse_signal(20, 4, 22);
    Vector b = matvec_on_support(a, t.x_star, t.support);
    for (double& v : b) v += 0.1;  // keep the residual nonzero

    SupportSet support({2, 5, 11, 17});
    Vector x1 = least_squares_on_support(a, b, support);
    // projection property: re-solving against the fitted value reproduces it
    Vector x2 = least_squares_on_support(a, matvec_on_support(a, x1, support), support);
    for (index_t j = 0; j < 20; ++j) CHECK(x2[j] == doctest::Approx(x1[j]).epsilon(1e-12));

    Vector corr = residual_correlation(a, x1, b);
    for (index_t j : support) CHECK(std::abs(corr[j]) <= 1e-8);
}

TEST_CASE("least squares error paths") {
    DenseMatrix a = identity_matrix(3);
    CHECK_THROWS_AS(least_squares_on_support(a, {1, 2}, SupportSet({0})), DimensionMismatch);
    CHECK_THROWS_AS(least_squares_on_support(a, {1, 2, 3}, SupportSet({0, 1, 2, 5})),
                    DimensionMismatch);

    // duplicate column: numerically rank deficient
    DenseMatrix dup(4, 2);
    dup.at(0, 0) = 1.0;
    dup.at(0, 1) = 1.0;
    CHECK_THROWS_AS(least_squares_on_support(dup, {1, 0, 0, 0}, SupportSet({0, 1})),
                    RankDeficient);

    // |I| > m cannot be full column rank
    DenseMatrix wide = gaussian_matrix(2, 5, 3);
    CHECK_THROWS_AS(least_squares_on_support(wide, {1, 1}, SupportSet({0, 1, 2})), RankDeficient);
}

TEST_CASE("residual correlation examples") {
    DenseMatrix a = identity_matrix(2);
    Vector out = residual_correlation(a, {0, 0}, {1, -2});
    CHECK(out[0] == doctest::Approx(1.0));
    CHECK(out[1] == doctest::Approx(-2.0));

    // exact solution: zero correlation
    DenseMatrix g = gaussian_matrix(5, 5, 17);
    Vector x = {1, -2, 0.5, 0, 3};
    Vector b = matvec(g, x);
    Vector corr = residual_correlation(g, x, b);
    for (double v : corr) CHECK(std::abs(v) < 1e-10);
}

TEST_CASE("residual correlation matches a naive double loop") {
    DenseMatrix a = gaussian_matrix(4, 5, 3);
    Vector x(5, 0.0);
    x[0] = 1.0;
    Vector e1(5, 0.0);
    e1[1] = 1.0;
    Vector b = matvec(a, e1);
    Vector got = residual_correlation(a, x, b);
    Vector want = naive_residual_correlation(a, x, b);
    for (index_t j = 0; j < 5; ++j) CHECK(got[j] == doctest::Approx(want[j]).epsilon(1e-12));
}

TEST_CASE("rip constant: orthonormal columns give zero") {
    DenseMatrix a = identity_matrix(5);
    for (int order : {1, 2, 3}) {
        RipEstimate est = rip_constant_exhaustive(a, order);
        CHECK(est.delta == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(est.method == RipEstimate::Method::exhaustive);
    }
}

TEST_CASE("rip constant: duplicated unit column gives one") {
    DenseMatrix a(4, 2);
    a.at(0, 0) = 1.0;
    a.at(0, 1) = 1.0;
    RipEstimate est = rip_constant_exhaustive(a, 2);
    CHECK(est.delta == doctest::Approx(1.0));
}

TEST_CASE("rip constant order 2 equals the closed-form pair oracle") {
    DenseMatrix a = gaussian_matrix(6, 8, 11);
    RipEstimate est = rip_constant_exhaustive(a, 2);

    double worst = 0.0;
    for (index_t i = 0; i < 8; ++i)
        for (index_t j = i + 1; j < 8; ++j) {
            double g00 = 0, g01 = 0, g11 = 0;
            for (index_t r = 0; r < 6; ++r) {
                g00 += a.at(r, i) * a.at(r, i);
                g01 += a.at(r, i) * a.at(r, j);
                g11 += a.at(r, j) * a.at(r, j);
            }
            double lo, hi;
            eig2x2(g00, g01, g11, lo, hi);
            worst = std::max(worst, std::max(hi - 1.0, 1.0 - lo));
        }
    CHECK(est.delta == doctest::Approx(worst).epsilon(1e-8));
}

TEST_CASE("rip constant is monotone in the order") {
    DenseMatrix a = gaussian_matrix(6, 8, 11);
    double prev = 0.0;
    for (int order = 1; order <= 4; ++order) {
        double d = rip_constant_exhaustive(a, order).delta;
        CHECK(d >= prev - 1e-12);
        prev = d;
    }
}

TEST_CASE("rip sandwich holds for random sparse vectors") {
    DenseMatrix a = gaussian_matrix(8, 12, 19);
    const int order = 3;
    double delta = rip_constant_exhaustive(a, order).delta;
    SplitMix64 rng(99);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<index_t> pool(12);
        for (index_t i = 0; i < 12; ++i) pool[i] = i;
        Vector x(12, 0.0);
        SupportSet s;
        for (int i = 0; i < order; ++i) {
            std::uint64_t j = i + rng.bounded(12 - i);
            std::swap(pool[i], pool[j]);
        }
        std::vector<index_t> chosen(pool.begin(), pool.begin() + order);
        s = SupportSet::from_indices(chosen);
        double norm_sq = 0.0;
        for (index_t j : s) {
            x[j] = rng.gaussian();
            norm_sq += x[j] * x[j];
        }
        double ax_sq = norm2_squared(matvec_on_support(a, x, s));
        CHECK(ax_sq >= (1.0 - delta) * norm_sq - 1e-9);
        CHECK(ax_sq <= (1.0 + delta) * norm_sq + 1e-9);
    }
}

TEST_CASE("rip guard and argument errors") {
    DenseMatrix a = gaussian_matrix(4, 2000, 1);
    CHECK_THROWS_AS(rip_constant_exhaustive(a, 3), TooLarge);
    CHECK_THROWS_AS(rip_constant_exhaustive(a, 0), BadArguments);
    DenseMatrix tiny = identity_matrix(3);
    CHECK_THROWS_AS(rip_constant_exhaustive(tiny, 4), BadArguments);
}

TEST_CASE("sampled rip estimate never exceeds the exhaustive constant") {
    DenseMatrix a = gaussian_matrix(6, 10, 23);
    double exact = rip_constant_exhaustive(a, 3).delta;
    RipEstimate sampled = rip_constant_sampled(a, 3, 40, 5);
    CHECK(sampled.method == RipEstimate::Method::sampled_lower_bound);
    CHECK(sampled.delta <= exact + 1e-12);
}
