#include "srec/lsh.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "srec/linalg.hpp"
#include "srec/rng.hpp"

namespace srec {

namespace {

using EMatrix = Eigen::MatrixXd;
using EVector = Eigen::VectorXd;

std::uint64_t key_from_projections(const double* proj, int s) {
    std::uint64_t key = 0;
    for (int u = 0; u < s; ++u)
        if (proj[u] >= 0.0) key |= (1ull << u);  // sign(0) = +1
    return key;
}

std::uint64_t negated_key(const double* proj, int s) {
    std::uint64_t key = 0;
    for (int u = 0; u < s; ++u)
        if (proj[u] <= 0.0) key |= (1ull << u);  // sign of -proj, sign(0) = +1
    return key;
}

void build_table(const DenseMatrix& a, LshIndex& index, int table) {
    const int s = index.s;
    const index_t m = a.rows;
    const index_t n = a.cols;

    Eigen::Map<const EMatrix> planes(index.table_planes(table), m, s);
    Eigen::Map<const EMatrix> cols(a.data.data(), m, n);
    EMatrix proj = planes.transpose() * cols;  // s × n

    std::vector<std::pair<std::uint64_t, std::uint32_t>> keyed(n);
    for (index_t j = 0; j < n; ++j)
        keyed[j] = {key_from_projections(proj.col(j).data(), s), static_cast<std::uint32_t>(j)};
    std::sort(keyed.begin(), keyed.end());

    LshIndex::Table& t = index.tables[table];
    t.columns.resize(n);
    for (index_t j = 0; j < n; ++j) {
        if (j == 0 || keyed[j].first != keyed[j - 1].first) {
            t.keys.push_back(keyed[j].first);
            t.offsets.push_back(static_cast<std::uint32_t>(j));
        }
        t.columns[j] = keyed[j].second;
    }
    t.offsets.push_back(static_cast<std::uint32_t>(n));
}

}  // namespace

std::pair<const std::uint32_t*, const std::uint32_t*> LshIndex::Table::bucket(
    std::uint64_t key) const {
    auto it = std::lower_bound(keys.begin(), keys.end(), key);
    if (it == keys.end() || *it != key) return {nullptr, nullptr};
    std::size_t pos = static_cast<std::size_t>(it - keys.begin());
    return {columns.data() + offsets[pos], columns.data() + offsets[pos + 1]};
}

int default_lsh_bits(index_t n) {
    int bits = 0;
    while ((1ll << bits) < n) ++bits;
    return std::max(1, bits);
}

int default_lsh_tables(index_t n) {
    return static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))));
}

std::uint64_t lsh_key(const LshIndex& index, int table, const double* v) {
    Eigen::Map<const EMatrix> planes(index.table_planes(table), index.dim, index.s);
    EVector proj = planes.transpose() * Eigen::Map<const EVector>(v, index.dim);
    return key_from_projections(proj.data(), index.s);
}

LshIndex build_index(const DenseMatrix& a, int s, int q, std::uint64_t seed, int threads) {
    if (s < 1 || s > 63) throw BadArguments("build_index: need 1 <= s <= 63");
    if (q < 1) throw BadArguments("build_index: need q >= 1");
    if (threads < 1) threads = 1;

    LshIndex index;
    index.s = s;
    index.q = q;
    index.seed = seed;
    index.dim = a.rows;
    index.num_columns = a.cols;
    index.hyperplanes.resize(static_cast<std::size_t>(q) * s * a.rows);
    index.tables.resize(q);

    for (int t = 0; t < q; ++t) {
        SplitMix64 rng(derive_stream(seed, static_cast<std::uint64_t>(t)));
        double* planes = index.hyperplanes.data() + static_cast<std::size_t>(t) * s * a.rows;
        for (std::size_t i = 0; i < static_cast<std::size_t>(s) * a.rows; ++i)
            planes[i] = rng.gaussian();
    }

    if (threads == 1 || q == 1) {
        for (int t = 0; t < q; ++t) build_table(a, index, t);
    } else {
        std::vector<std::thread> workers;
        std::atomic<int> next{0};
        int pool = std::min(threads, q);
        workers.reserve(pool);
        for (int w = 0; w < pool; ++w) {
            workers.emplace_back([&] {
                for (int t = next.fetch_add(1); t < q; t = next.fetch_add(1))
                    build_table(a, index, t);
            });
        }
        for (auto& worker : workers) worker.join();
    }
    return index;
}

std::pair<std::optional<index_t>, QueryReport> query_max_abs_correlation(
    const LshIndex& index, const DenseMatrix& a, const Vector& r, const SupportSet& exclude) {
    if (index.dim != a.rows || index.num_columns != a.cols)
        throw BadArguments("query: index was built for a different matrix shape");
    if (static_cast<index_t>(r.size()) != a.rows)
        throw DimensionMismatch("query: r has wrong length");

    // 0 = unseen, 1 = already a candidate or excluded.
    std::vector<std::uint8_t> seen(a.cols, 0);
    for (index_t j : exclude) seen[j] = 1;

    QueryReport report;
    index_t best = -1;
    double best_abs = 0.0;

    EVector proj(index.s);
    Eigen::Map<const EVector> rv(r.data(), a.rows);
    for (int t = 0; t < index.q; ++t) {
        Eigen::Map<const EMatrix> planes(index.table_planes(t), index.dim, index.s);
        proj = planes.transpose() * rv;
        std::uint64_t key_pos = key_from_projections(proj.data(), index.s);
        std::uint64_t key_neg = negated_key(proj.data(), index.s);

        auto probe = [&](std::uint64_t key) {
            auto [begin, end] = index.tables[t].bucket(key);
            for (const std::uint32_t* it = begin; it != end; ++it) {
                index_t j = static_cast<index_t>(*it);
                if (seen[j]) continue;
                seen[j] = 1;
                ++report.candidates_examined;
                double c = std::abs(dot(a.col(j), r.data(), a.rows));
                if (best < 0 || c > best_abs || (c == best_abs && j < best)) {
                    best = j;
                    best_abs = c;
                }
            }
        };
        probe(key_pos);
        if (key_neg != key_pos) probe(key_neg);
    }

    if (best < 0) return {std::nullopt, report};
    report.chosen = best;
    report.chosen_abs_correlation = best_abs;
    return {best, report};
}

HashRunResult run_ompr_hash(const DenseMatrix& a, const Vector& b, const AlgorithmConfig& cfg,
                            const LshIndex& index, HashFallback fallback,
                            std::optional<SupportSet> init_support) {
    if (cfg.family != Family::ompr_l || cfg.l != 1)
        throw BadArguments("run_ompr_hash: config must be the ompr_l family with l = 1");
    if (index.dim != a.rows || index.num_columns != a.cols)
        throw BadArguments("run_ompr_hash: index does not match the matrix");

    if (static_cast<index_t>(b.size()) != a.rows)
        throw DimensionMismatch("run_ompr_hash: b has wrong length");
    if (cfg.k < 1 || cfg.k > a.rows) throw BadArguments("run_ompr_hash: need 1 <= k <= m");
    if (cfg.max_iters < 1 || cfg.eta <= 0.0 || cfg.tol < 0.0)
        throw BadArguments("run_ompr_hash: bad config");

    HashRunResult res;
    if (init_support) {
        if (init_support->size() != cfg.k)
            throw BadArguments("run_ompr_hash: init support must have size k");
        res.state.support = *init_support;
        res.state.x = least_squares_on_support(a, b, res.state.support);
        res.state.objective = objective_on_support(a, res.state.x, res.state.support, b);
        res.state.iteration = 0;
    } else {
        res.state = initialize_support(a, b, cfg.k, cfg.init, cfg.seed);
    }
    res.trace.snapshots.push_back(
        TraceSnapshot{0, res.state.support, res.state.objective, {}, {}});
    if (res.state.objective <= cfg.tol) {
        res.trace.status = RunStatus::Converged;
        return res;
    }

    constexpr double stall_rel = 1e-14;

    for (int t = 1; t <= cfg.max_iters; ++t) {
        Vector ax = matvec_on_support(a, res.state.x, res.state.support);
        Vector r(b.size());
        for (std::size_t i = 0; i < b.size(); ++i) r[i] = b[i] - ax[i];

        auto [candidate, report] = query_max_abs_correlation(index, a, r, res.state.support);

        // One exact scan of the complement; also the answer of record when
        // the hash answer failed.
        auto exact_scan = [&](const Vector& residual) -> index_t {
            Vector corr = correlate(a, residual);
            index_t best = -1;
            for (index_t j = 0; j < a.cols; ++j) {
                if (res.state.support.contains(j)) continue;
                if (best < 0 || selection_before(corr, j, best)) best = j;
            }
            if (best >= 0 && corr[best] == 0.0) best = -1;
            return best;
        };

        index_t selected = candidate.value_or(-1);
        if (report.chosen_abs_correlation == 0.0) selected = -1;
        if (selected < 0) {
            if (fallback == HashFallback::skip) {
                res.reports.push_back(report);
                res.trace.status = RunStatus::Stalled;
                return res;
            }
            report.exact_fallback_used = true;
            selected = exact_scan(r);
            if (selected < 0) {
                res.reports.push_back(report);
                res.trace.status = RunStatus::Stalled;
                return res;
            }
            report.chosen = selected;
            report.chosen_abs_correlation = std::abs(dot(a.col(selected), r.data(), a.rows));
        }

        // z restricted to J = I ∪ {selected}; elsewhere z is η·correlation of
        // columns we already rejected, so it never enters the top-k.
        auto keep_after_swap = [&](index_t chosen_col) {
            std::vector<index_t> joined(res.state.support.idx);
            joined.insert(std::lower_bound(joined.begin(), joined.end(), chosen_col), chosen_col);
            std::vector<double> zvals(joined.size());
            for (std::size_t p = 0; p < joined.size(); ++p) {
                index_t j = joined[p];
                double corr_j = dot(a.col(j), r.data(), a.rows);
                zvals[p] = res.state.x[j] + cfg.eta * corr_j;
            }
            // drop the last element in the shared selection order (k+1 -> k)
            std::size_t worst = 0;
            for (std::size_t p = 1; p < joined.size(); ++p) {
                double fw = std::abs(zvals[worst]);
                double fp = std::abs(zvals[p]);
                if (fw > fp || (fw == fp && joined[worst] < joined[p])) worst = p;
            }
            std::vector<index_t> kept;
            kept.reserve(joined.size() - 1);
            for (std::size_t p = 0; p < joined.size(); ++p)
                if (p != worst) kept.push_back(joined[p]);
            return kept;
        };

        std::vector<index_t> kept = keep_after_swap(selected);

        // A rejected hash candidate leaves the support unchanged and the
        // iteration would repeat verbatim; treat it as an LSH failure and
        // fall back to one exact scan before conceding a stall.
        if (fallback == HashFallback::exact && !report.exact_fallback_used &&
            SupportSet(kept) == res.state.support) {
            report.exact_fallback_used = true;
            index_t rescan = exact_scan(r);
            if (rescan >= 0) {
                report.chosen = rescan;
                report.chosen_abs_correlation =
                    std::abs(dot(a.col(rescan), r.data(), a.rows));
                selected = rescan;
                kept = keep_after_swap(selected);
            }
        }
        res.reports.push_back(report);

        RecoveryState next;
        next.support = SupportSet(std::move(kept));
        next.x = least_squares_on_support(a, b, next.support);
        next.objective = objective_on_support(a, next.x, next.support, b);
        next.iteration = t;

        RecoveryState prev = std::move(res.state);
        res.state = std::move(next);
        res.trace.snapshots.push_back(TraceSnapshot{
            t, res.state.support, res.state.objective,
            set_difference(res.state.support, prev.support),
            set_difference(prev.support, res.state.support)});

        if (res.state.objective <= cfg.tol) {
            res.trace.status = RunStatus::Converged;
            return res;
        }
        if (res.state.support == prev.support) {
            double rel = (prev.objective - res.state.objective) / std::max(prev.objective, 1e-300);
            if (rel < stall_rel) {
                res.trace.status = RunStatus::Stalled;
                return res;
            }
        }
    }
    res.trace.status = RunStatus::MaxIters;
    return res;
}

}  // namespace srec
