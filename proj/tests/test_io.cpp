#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "srec/ensemble.hpp"
#include "srec/io.hpp"
#include "srec/lsh.hpp"
#include "srec/rng.hpp"

using namespace srec;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name)
        : path((std::filesystem::temp_directory_path() / name).string()) {}
    ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("matrix container round trip is bitwise") {
    TempFile f("srec_test_matrix.bin");
    DenseMatrix a = gaussian_matrix(7, 11, 99);
    save_matrix(a, f.path);
    DenseMatrix back = load_matrix(f.path);
    CHECK(back.rows == a.rows);
    CHECK(back.cols == a.cols);
    CHECK(back.data == a.data);
}

TEST_CASE("problem container carries truth, noise and seed") {
    TempFile f("srec_test_problem.bin");
    MeasurementProblem p = add_noise(make_problem(9, 15, 3, 1234), 0.2, 77);
    save_problem(p, f.path);
    MeasurementProblem back = load_problem(f.path);
    CHECK(back.seed == p.seed);
    CHECK(back.b == p.b);
    REQUIRE(back.truth.has_value());
    CHECK(back.truth->x_star == p.truth->x_star);
    CHECK(back.truth->support == p.truth->support);
    REQUIRE(back.noise.has_value());
    CHECK(*back.noise == *p.noise);
    validate_problem(back);
}

TEST_CASE("index container reproduces buckets and answers") {
    TempFile f("srec_test_index.bin");
    DenseMatrix a = gaussian_matrix(8, 30, 5);
    LshIndex index = build_index(a, 6, 4, 2025);
    save_index(index, f.path);
    LshIndex back = load_index(f.path);

    CHECK(back.s == index.s);
    CHECK(back.q == index.q);
    CHECK(back.seed == index.seed);
    CHECK(back.hyperplanes == index.hyperplanes);
    REQUIRE(back.tables.size() == index.tables.size());
    for (std::size_t t = 0; t < back.tables.size(); ++t) {
        CHECK(back.tables[t].keys == index.tables[t].keys);
        CHECK(back.tables[t].offsets == index.tables[t].offsets);
        CHECK(back.tables[t].columns == index.tables[t].columns);
    }

    Vector r(a.col(3), a.col(3) + 8);
    auto [c1, rep1] = query_max_abs_correlation(index, a, r, SupportSet{});
    auto [c2, rep2] = query_max_abs_correlation(back, a, r, SupportSet{});
    CHECK(c1 == c2);
    CHECK(rep1.candidates_examined == rep2.candidates_examined);
}

TEST_CASE("matrix-only file refuses to load as a problem") {
    TempFile f("srec_test_matonly.bin");
    save_matrix(gaussian_matrix(4, 6, 1), f.path);
    CHECK_THROWS_AS(load_problem(f.path), IoError);
}

TEST_CASE("bad magic and truncation are io errors") {
    TempFile f("srec_test_bad.bin");
    {
        std::ofstream out(f.path, std::ios::binary);
        out << "NOPE!x";
    }
    CHECK_THROWS_AS(load_matrix(f.path), IoError);
    CHECK_THROWS_AS(load_index(f.path), IoError);

    TempFile t("srec_test_trunc.bin");
    save_matrix(gaussian_matrix(4, 6, 1), t.path);
    std::filesystem::resize_file(t.path, 40);
    CHECK_THROWS_AS(load_matrix(t.path), IoError);

    CHECK_THROWS_AS(load_matrix("/nonexistent/path/matrix.bin"), IoError);
}
