#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "srec/errors.hpp"

namespace srec {

using index_t = std::int32_t;
using Vector = std::vector<double>;

/// Strictly increasing set of column indices in [0, n).
struct SupportSet {
    std::vector<index_t> idx;

    SupportSet() = default;
    explicit SupportSet(std::vector<index_t> sorted_unique) : idx(std::move(sorted_unique)) {}

    // Builds from arbitrary order, sorting and rejecting duplicates/negatives.
    static SupportSet from_indices(std::vector<index_t> indices) {
        std::sort(indices.begin(), indices.end());
        for (std::size_t i = 0; i < indices.size(); ++i) {
            if (indices[i] < 0) throw BadArguments("SupportSet: negative index");
            if (i > 0 && indices[i] == indices[i - 1])
                throw BadArguments("SupportSet: duplicate index " + std::to_string(indices[i]));
        }
        return SupportSet(std::move(indices));
    }

    index_t size() const { return static_cast<index_t>(idx.size()); }
    bool empty() const { return idx.empty(); }

    bool contains(index_t j) const { return std::binary_search(idx.begin(), idx.end(), j); }

    bool operator==(const SupportSet& o) const { return idx == o.idx; }

    auto begin() const { return idx.begin(); }
    auto end() const { return idx.end(); }
};

inline SupportSet set_union(const SupportSet& a, const SupportSet& b) {
    SupportSet r;
    std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(r.idx));
    return r;
}

inline SupportSet set_difference(const SupportSet& a, const SupportSet& b) {
    SupportSet r;
    std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(r.idx));
    return r;
}

inline SupportSet set_intersection(const SupportSet& a, const SupportSet& b) {
    SupportSet r;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(r.idx));
    return r;
}

/// Dense real matrix, column-major: entry (i, j) lives at data[j*rows + i].
/// Column-major keeps column extraction contiguous, which is the hot path in
/// support-restricted solves and LSH indexing.
struct DenseMatrix {
    index_t rows = 0;
    index_t cols = 0;
    std::vector<double> data;  // rows*cols entries

    DenseMatrix() = default;
    DenseMatrix(index_t m, index_t n) : rows(m), cols(n), data(static_cast<std::size_t>(m) * n, 0.0) {
        if (m <= 0 || n <= 0) throw BadArguments("DenseMatrix: dimensions must be positive");
    }

    double& at(index_t i, index_t j) { return data[static_cast<std::size_t>(j) * rows + i]; }
    double at(index_t i, index_t j) const { return data[static_cast<std::size_t>(j) * rows + i]; }

    double* col(index_t j) { return data.data() + static_cast<std::size_t>(j) * rows; }
    const double* col(index_t j) const { return data.data() + static_cast<std::size_t>(j) * rows; }
};

inline DenseMatrix identity_matrix(index_t n) {
    DenseMatrix a(n, n);
    for (index_t i = 0; i < n; ++i) a.at(i, i) = 1.0;
    return a;
}

/// Restricted isometry estimate of a given order.
struct RipEstimate {
    enum class Method { exhaustive, sampled_lower_bound };
    int order = 0;
    double delta = 0.0;  // in [0, 1]
    Method method = Method::exhaustive;
};

}  // namespace srec
