#include "srec/io.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

namespace srec {

namespace {

constexpr char kMatrixMagic[5] = {'S', 'R', 'E', 'C', '1'};
constexpr char kIndexMagic[5] = {'S', 'L', 'S', 'H', '1'};

// All integers and doubles are written little-endian; this code assumes a
// little-endian host (checked once at file open).
bool host_is_little_endian() {
    const std::uint16_t probe = 1;
    return *reinterpret_cast<const std::uint8_t*>(&probe) == 1;
}

struct Writer {
    std::ofstream out;
    explicit Writer(const std::string& path) : out(path, std::ios::binary) {
        if (!host_is_little_endian()) throw IoError("serialization requires a little-endian host");
        if (!out) throw IoError("cannot open for writing: " + path);
    }
    void bytes(const void* p, std::size_t n) {
        out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
        if (!out) throw IoError("write failed");
    }
    void u8(std::uint8_t v) { bytes(&v, 1); }
    void u32(std::uint32_t v) { bytes(&v, 4); }
    void u64(std::uint64_t v) { bytes(&v, 8); }
    void f64(double v) { bytes(&v, 8); }
    void f64_array(const double* p, std::size_t n) { bytes(p, n * 8); }
};

struct Reader {
    std::ifstream in;
    std::string path;
    explicit Reader(const std::string& p) : in(p, std::ios::binary), path(p) {
        if (!host_is_little_endian()) throw IoError("serialization requires a little-endian host");
        if (!in) throw IoError("cannot open for reading: " + p);
    }
    void bytes(void* p, std::size_t n) {
        in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
        if (in.gcount() != static_cast<std::streamsize>(n))
            throw IoError("truncated file: " + path);
    }
    std::uint8_t u8() {
        std::uint8_t v;
        bytes(&v, 1);
        return v;
    }
    std::uint32_t u32() {
        std::uint32_t v;
        bytes(&v, 4);
        return v;
    }
    std::uint64_t u64() {
        std::uint64_t v;
        bytes(&v, 8);
        return v;
    }
    double f64() {
        double v;
        bytes(&v, 8);
        return v;
    }
    void f64_array(double* p, std::size_t n) { bytes(p, n * 8); }
    bool at_eof() { return in.peek() == std::ifstream::traits_type::eof(); }
};

void write_matrix_block(Writer& w, const DenseMatrix& a) {
    w.bytes(kMatrixMagic, 5);
    w.u32(static_cast<std::uint32_t>(a.rows));
    w.u32(static_cast<std::uint32_t>(a.cols));
    w.f64_array(a.data.data(), a.data.size());
}

DenseMatrix read_matrix_block(Reader& r) {
    char magic[5];
    r.bytes(magic, 5);
    if (std::memcmp(magic, kMatrixMagic, 5) != 0)
        throw IoError("bad magic in " + r.path + " (expected SREC1)");
    std::uint32_t m = r.u32();
    std::uint32_t n = r.u32();
    if (m == 0 || n == 0) throw IoError("zero dimension in " + r.path);
    DenseMatrix a(static_cast<index_t>(m), static_cast<index_t>(n));
    r.f64_array(a.data.data(), a.data.size());
    for (double v : a.data)
        if (!std::isfinite(v)) throw IoError("non-finite matrix entry in " + r.path);
    return a;
}

void write_support(Writer& w, const SupportSet& s) {
    w.u32(static_cast<std::uint32_t>(s.size()));
    for (index_t j : s) w.u32(static_cast<std::uint32_t>(j));
}

SupportSet read_support(Reader& r, index_t n) {
    std::uint32_t count = r.u32();
    std::vector<index_t> idx(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        idx[i] = static_cast<index_t>(r.u32());
        if (idx[i] >= n) throw IoError("support index out of range in " + r.path);
    }
    return SupportSet::from_indices(std::move(idx));
}

}  // namespace

void save_matrix(const DenseMatrix& a, const std::string& path) {
    Writer w(path);
    write_matrix_block(w, a);
}

DenseMatrix load_matrix(const std::string& path) {
    Reader r(path);
    return read_matrix_block(r);
}

void save_problem(const MeasurementProblem& problem, const std::string& path) {
    Writer w(path);
    write_matrix_block(w, problem.A);
    w.u8(problem.truth ? 1 : 0);
    w.u8(problem.noise ? 1 : 0);
    w.u64(problem.seed);
    w.f64_array(problem.b.data(), problem.b.size());
    if (problem.truth) {
        write_support(w, problem.truth->support);
        w.f64_array(problem.truth->x_star.data(), problem.truth->x_star.size());
    }
    if (problem.noise) w.f64_array(problem.noise->data(), problem.noise->size());
}

MeasurementProblem load_problem(const std::string& path) {
    Reader r(path);
    MeasurementProblem p;
    p.A = read_matrix_block(r);
    if (r.at_eof()) throw IoError("matrix-only file, no problem extension: " + path);
    std::uint8_t has_truth = r.u8();
    std::uint8_t has_noise = r.u8();
    p.seed = r.u64();
    p.b.resize(p.A.rows);
    r.f64_array(p.b.data(), p.b.size());
    if (has_truth) {
        SignalTruth truth;
        truth.support = read_support(r, p.A.cols);
        truth.x_star.resize(p.A.cols);
        r.f64_array(truth.x_star.data(), truth.x_star.size());
        p.truth = std::move(truth);
    }
    if (has_noise) {
        Vector e(p.A.rows);
        r.f64_array(e.data(), e.size());
        p.noise = std::move(e);
    }
    return p;
}

void save_index(const LshIndex& index, const std::string& path) {
    Writer w(path);
    w.bytes(kIndexMagic, 5);
    w.u32(static_cast<std::uint32_t>(index.s));
    w.u32(static_cast<std::uint32_t>(index.q));
    w.u64(index.seed);
    w.u32(static_cast<std::uint32_t>(index.dim));
    w.u32(static_cast<std::uint32_t>(index.num_columns));
    w.f64_array(index.hyperplanes.data(), index.hyperplanes.size());
    for (const LshIndex::Table& t : index.tables) {
        w.u32(static_cast<std::uint32_t>(t.keys.size()));
        for (std::size_t i = 0; i < t.keys.size(); ++i) {
            w.u64(t.keys[i]);
            std::uint32_t begin = t.offsets[i];
            std::uint32_t end = t.offsets[i + 1];
            w.u32(end - begin);
            w.bytes(t.columns.data() + begin, static_cast<std::size_t>(end - begin) * 4);
        }
    }
}

LshIndex load_index(const std::string& path) {
    Reader r(path);
    char magic[5];
    r.bytes(magic, 5);
    if (std::memcmp(magic, kIndexMagic, 5) != 0)
        throw IoError("bad magic in " + path + " (expected SLSH1)");

    LshIndex index;
    index.s = static_cast<int>(r.u32());
    index.q = static_cast<int>(r.u32());
    index.seed = r.u64();
    index.dim = static_cast<index_t>(r.u32());
    index.num_columns = static_cast<index_t>(r.u32());
    if (index.s < 1 || index.s > 63 || index.q < 1 || index.dim < 1 || index.num_columns < 1)
        throw IoError("bad index header in " + path);

    index.hyperplanes.resize(static_cast<std::size_t>(index.q) * index.s * index.dim);
    r.f64_array(index.hyperplanes.data(), index.hyperplanes.size());

    index.tables.resize(index.q);
    for (LshIndex::Table& t : index.tables) {
        std::uint32_t buckets = r.u32();
        t.keys.resize(buckets);
        t.offsets.resize(buckets + 1);
        t.offsets[0] = 0;
        std::vector<std::vector<std::uint32_t>> contents(buckets);
        std::uint64_t total = 0;
        for (std::uint32_t i = 0; i < buckets; ++i) {
            t.keys[i] = r.u64();
            if (i > 0 && t.keys[i] <= t.keys[i - 1])
                throw IoError("bucket keys out of order in " + path);
            std::uint32_t len = r.u32();
            contents[i].resize(len);
            r.bytes(contents[i].data(), static_cast<std::size_t>(len) * 4);
            total += len;
        }
        if (total != static_cast<std::uint64_t>(index.num_columns))
            throw IoError("table does not cover every column exactly once in " + path);
        t.columns.reserve(index.num_columns);
        for (std::uint32_t i = 0; i < buckets; ++i) {
            t.columns.insert(t.columns.end(), contents[i].begin(), contents[i].end());
            t.offsets[i + 1] = static_cast<std::uint32_t>(t.columns.size());
        }
    }
    return index;
}

}  // namespace srec
