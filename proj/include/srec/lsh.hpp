#pragma once

#include <cstdint>
#include <optional>

#include "srec/algorithms.hpp"
#include "srec/types.hpp"

namespace srec {

/// Sign-random-projection index over the columns of a matrix.
/// Each of the q tables hashes a vector to an s-bit key whose bit u is
/// [uᵀ·v ≥ 0] for that table's u-th Gaussian hyperplane (sign(0) counts as
/// +1). Buckets are stored flat: per table, columns grouped by key with an
/// offset array, keys sorted ascending — no per-bucket heap nodes.
struct LshIndex {
    struct Table {
        std::vector<std::uint64_t> keys;   // sorted unique keys
        std::vector<std::uint32_t> offsets;  // keys.size()+1 bucket boundaries
        std::vector<std::uint32_t> columns;  // all n columns grouped by key

        /// Bucket for `key` as [begin, end) into `columns`; empty if absent.
        std::pair<const std::uint32_t*, const std::uint32_t*> bucket(std::uint64_t key) const;
    };

    int s = 0;
    int q = 0;
    std::uint64_t seed = 0;
    index_t dim = 0;          // m, hyperplane dimensionality
    index_t num_columns = 0;  // n, indexed column count
    std::vector<double> hyperplanes;  // q tables × s planes × dim, contiguous
    std::vector<Table> tables;

    const double* table_planes(int table) const {
        return hyperplanes.data() + static_cast<std::size_t>(table) * s * dim;
    }
};

int default_lsh_bits(index_t n);    // ⌈log2 n⌉
int default_lsh_tables(index_t n);  // ⌈√n⌉

/// Hash `v` (length index.dim) into table `table`'s key.
std::uint64_t lsh_key(const LshIndex& index, int table, const double* v);

/// Builds the index; hyperplanes come from per-table derived streams so the
/// result is identical no matter how many threads participate.
LshIndex build_index(const DenseMatrix& a, int s, int q, std::uint64_t seed, int threads = 1);

struct QueryReport {
    index_t candidates_examined = 0;
    std::optional<index_t> chosen;
    bool exact_fallback_used = false;
    double chosen_abs_correlation = 0.0;  // |⟨A_chosen, r⟩|, 0 when none
};

/// Probes every table with the keys of r and −r, unions the buckets, drops
/// excluded columns and returns the candidate maximizing |⟨A_j, r⟩|
/// (lowest index on ties), or nullopt when no candidate survives.
std::pair<std::optional<index_t>, QueryReport> query_max_abs_correlation(
    const LshIndex& index, const DenseMatrix& a, const Vector& r, const SupportSet& exclude);

enum class HashFallback { exact, skip };

struct HashRunResult {
    RecoveryState state;
    RecoveryTrace trace;
    std::vector<QueryReport> reports;  // one per completed iteration
};

/// OMPR (l = 1) with the column-selection argmax served by the LSH index.
/// Under HashFallback::exact an empty or zero-correlation query answer
/// triggers one exact scan of the complement; under skip it ends the run as
/// Stalled.
HashRunResult run_ompr_hash(const DenseMatrix& a, const Vector& b, const AlgorithmConfig& cfg,
                            const LshIndex& index, HashFallback fallback = HashFallback::exact,
                            std::optional<SupportSet> init_support = std::nullopt);

}  // namespace srec
