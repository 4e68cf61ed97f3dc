#include "srec/algorithms.hpp"

#include <algorithm>
#include <cmath>

#include "srec/linalg.hpp"
#include "srec/rng.hpp"

namespace srec {

AlgorithmConfig ompr_config(int k) { return omprl_config(k, 1); }

AlgorithmConfig omprl_config(int k, int l, double eta) {
    AlgorithmConfig cfg;
    cfg.family = Family::ompr_l;
    cfg.k = k;
    cfg.l = l;
    cfg.eta = eta;
    return cfg;
}

AlgorithmConfig iht_newton_config(int k, double eta) { return omprl_config(k, k, eta); }

AlgorithmConfig omp_config(int k) {
    AlgorithmConfig cfg;
    cfg.family = Family::omp;
    cfg.k = k;
    cfg.l = 1;
    return cfg;
}

AlgorithmConfig two_stage_config(int k, int l) {
    AlgorithmConfig cfg;
    cfg.family = Family::two_stage;
    cfg.k = k;
    cfg.l = l;
    return cfg;
}

AlgorithmConfig cosamp_config(int k) { return two_stage_config(k, 2 * k); }

AlgorithmConfig subspace_pursuit_config(int k) { return two_stage_config(k, k); }

namespace {

constexpr double kStallRelativeDecrease = 1e-14;

Vector residual_vector(const DenseMatrix& a, const RecoveryState& state, const Vector& b) {
    Vector ax = matvec_on_support(a, state.x, state.support);
    Vector r(b.size());
    for (std::size_t i = 0; i < b.size(); ++i) r[i] = b[i] - ax[i];
    return r;
}

RecoveryState solve_state(const DenseMatrix& a, const Vector& b, SupportSet support, int iteration) {
    RecoveryState st;
    st.support = std::move(support);
    st.x = least_squares_on_support(a, b, st.support);
    st.objective = objective_on_support(a, st.x, st.support, b);
    st.iteration = iteration;
    return st;
}

void record(RecoveryTrace& trace, const RecoveryState& st, SupportSet found, SupportSet lost) {
    trace.snapshots.push_back(TraceSnapshot{st.iteration, st.support, st.objective,
                                            std::move(found), std::move(lost)});
}

// Shared stopping logic: returns true when the loop should end.
// Stall means the support did not move and the objective dropped by less than
// a 1e-14 relative amount; with deterministic updates the next iteration
// would repeat exactly, so continuing is pointless.
bool should_stop(const RecoveryState& prev, const RecoveryState& next, const AlgorithmConfig& cfg,
                 RunStatus& status) {
    if (next.objective <= cfg.tol) {
        status = RunStatus::Converged;
        return true;
    }
    if (next.support == prev.support) {
        double decrease = prev.objective - next.objective;
        double rel = decrease / std::max(prev.objective, 1e-300);
        if (rel < kStallRelativeDecrease) {
            status = RunStatus::Stalled;
            return true;
        }
    }
    return false;
}

void validate_common(const DenseMatrix& a, const Vector& b, const AlgorithmConfig& cfg) {
    if (static_cast<index_t>(b.size()) != a.rows)
        throw DimensionMismatch("run: b has length " + std::to_string(b.size()) +
                                ", matrix has " + std::to_string(a.rows) + " rows");
    if (cfg.k < 1 || cfg.k > a.cols) throw BadArguments("run: need 1 <= k <= n");
    if (cfg.max_iters < 1) throw BadArguments("run: max_iters must be positive");
    if (cfg.eta <= 0.0) throw BadArguments("run: step size must be positive");
    if (cfg.tol < 0.0) throw BadArguments("run: tol must be nonnegative");
}

}  // namespace

RecoveryState initialize_support(const DenseMatrix& a, const Vector& b, int k, InitMode mode,
                                 std::uint64_t seed) {
    if (k < 1 || k > a.cols) throw BadArguments("initialize_support: need 1 <= k <= n");
    if (k > a.rows) throw BadArguments("initialize_support: k exceeds row count");
    SupportSet support;
    if (mode == InitMode::topk_correlation) {
        Vector corr = correlate(a, b);
        std::vector<index_t> all(a.cols);
        for (index_t i = 0; i < a.cols; ++i) all[i] = i;
        support = SupportSet(top_abs_indices(corr, std::move(all), k));
    } else {
        SplitMix64 rng(seed);
        std::vector<index_t> pool(a.cols);
        for (index_t i = 0; i < a.cols; ++i) pool[i] = i;
        for (int i = 0; i < k; ++i) {
            std::uint64_t j = i + rng.bounded(static_cast<std::uint64_t>(a.cols - i));
            std::swap(pool[i], pool[static_cast<index_t>(j)]);
        }
        pool.resize(k);
        support = SupportSet::from_indices(std::move(pool));
    }
    return solve_state(a, b, std::move(support), 0);
}

RunResult run_omprl(const DenseMatrix& a, const Vector& b, const AlgorithmConfig& cfg,
                    std::optional<SupportSet> init_support, const IterationObserver& observer) {
    validate_common(a, b, cfg);
    if (cfg.family != Family::ompr_l) throw BadArguments("run_omprl: family mismatch");
    if (cfg.l < 1 || cfg.l > cfg.k) throw BadArguments("run_omprl: need 1 <= l <= k");
    if (cfg.k > a.rows) throw BadArguments("run_omprl: k exceeds row count");

    RunResult res;
    if (init_support) {
        if (init_support->size() != cfg.k) throw BadArguments("run_omprl: init support must have size k");
        res.state = solve_state(a, b, *init_support, 0);
    } else {
        res.state = initialize_support(a, b, cfg.k, cfg.init, cfg.seed);
    }
    record(res.trace, res.state, {}, {});
    if (res.state.objective <= cfg.tol) {
        res.trace.status = RunStatus::Converged;
        return res;
    }

    for (int t = 1; t <= cfg.max_iters; ++t) {
        Vector r = residual_vector(a, res.state, b);
        Vector z = correlate(a, r);
        for (index_t j = 0; j < a.cols; ++j) z[j] = res.state.x[j] + cfg.eta * z[j];

        ThresholdResult th = partial_hard_threshold(z, res.state.support, cfg.l, cfg.k);
        RecoveryState next = solve_state(a, b, th.support, t);

        RecoveryState prev = std::move(res.state);
        res.state = std::move(next);
        record(res.trace, res.state, th.found, th.lost);
        if (observer) observer(prev, res.state);

        if (should_stop(prev, res.state, cfg, res.trace.status)) return res;
    }
    res.trace.status = RunStatus::MaxIters;
    return res;
}

RunResult run_omp(const DenseMatrix& a, const Vector& b, const AlgorithmConfig& cfg) {
    validate_common(a, b, cfg);
    if (cfg.family != Family::omp) throw BadArguments("run_omp: family mismatch");
    if (cfg.k > a.rows) throw BadArguments("run_omp: k exceeds row count");

    RunResult res;
    res.state.x.assign(a.cols, 0.0);
    res.state.objective = 0.5 * norm2_squared(b);
    res.state.iteration = 0;
    record(res.trace, res.state, {}, {});
    if (res.state.objective <= cfg.tol) {
        res.trace.status = RunStatus::Converged;
        return res;
    }

    for (int t = 1; t <= cfg.k; ++t) {
        Vector r = residual_vector(a, res.state, b);
        Vector corr = correlate(a, r);

        index_t best = -1;
        for (index_t j = 0; j < a.cols; ++j) {
            if (res.state.support.contains(j)) continue;
            if (best < 0 || selection_before(corr, j, best)) best = j;
        }
        // All remaining correlations are exactly zero: the residual cannot be
        // reduced by adding a column, so stop rather than pick arbitrarily.
        if (best < 0 || corr[best] == 0.0) {
            res.trace.status = RunStatus::Stalled;
            return res;
        }

        SupportSet grown = set_union(res.state.support, SupportSet({best}));
        RecoveryState next = solve_state(a, b, std::move(grown), t);
        res.state = std::move(next);
        record(res.trace, res.state, SupportSet({best}), {});

        if (res.state.objective <= cfg.tol) {
            res.trace.status = RunStatus::Converged;
            return res;
        }
    }
    res.trace.status =
        res.state.objective <= cfg.tol ? RunStatus::Converged : RunStatus::MaxIters;
    return res;
}

RunResult run_two_stage(const DenseMatrix& a, const Vector& b, const AlgorithmConfig& cfg,
                        std::optional<SupportSet> init_support, const IterationObserver& observer) {
    validate_common(a, b, cfg);
    if (cfg.family != Family::two_stage) throw BadArguments("run_two_stage: family mismatch");
    if (cfg.l < 1 || cfg.l > 2 * cfg.k) throw BadArguments("run_two_stage: need 1 <= l <= 2k");
    if (cfg.k + cfg.l > a.rows)
        throw BadArguments("run_two_stage: k + l exceeds row count");

    RunResult res;
    if (init_support) {
        if (init_support->size() != cfg.k)
            throw BadArguments("run_two_stage: init support must have size k");
        res.state = solve_state(a, b, *init_support, 0);
    } else {
        res.state = initialize_support(a, b, cfg.k, cfg.init, cfg.seed);
    }
    record(res.trace, res.state, {}, {});
    if (res.state.objective <= cfg.tol) {
        res.trace.status = RunStatus::Converged;
        return res;
    }

    for (int t = 1; t <= cfg.max_iters; ++t) {
        Vector r = residual_vector(a, res.state, b);
        Vector corr = correlate(a, r);

        // Enlarge by the l best-correlated columns outside the support. The
        // current support's correlations vanish after the least-squares
        // solve, so restricting to the complement keeps |J| = k + l exact.
        std::vector<index_t> complement;
        complement.reserve(a.cols - res.state.support.size());
        {
            auto it = res.state.support.begin();
            for (index_t j = 0; j < a.cols; ++j) {
                if (it != res.state.support.end() && *it == j) {
                    ++it;
                } else {
                    complement.push_back(j);
                }
            }
        }
        std::vector<index_t> top = top_abs_indices(corr, std::move(complement), cfg.l);
        SupportSet enlarged = set_union(res.state.support, SupportSet(std::move(top)));

        Vector z = least_squares_on_support(a, b, enlarged);
        ThresholdResult th = hard_threshold(z, cfg.k);
        RecoveryState next = solve_state(a, b, th.support, t);

        RecoveryState prev = std::move(res.state);
        res.state = std::move(next);
        record(res.trace, res.state, set_difference(res.state.support, prev.support),
               set_difference(prev.support, res.state.support));
        if (observer) observer(prev, res.state);

        if (should_stop(prev, res.state, cfg, res.trace.status)) return res;
    }
    res.trace.status = RunStatus::MaxIters;
    return res;
}

RunResult run_algorithm(const DenseMatrix& a, const Vector& b, const AlgorithmConfig& cfg) {
    switch (cfg.family) {
        case Family::ompr_l:
            return run_omprl(a, b, cfg);
        case Family::omp:
            return run_omp(a, b, cfg);
        case Family::two_stage:
            return run_two_stage(a, b, cfg);
    }
    throw BadArguments("run_algorithm: unknown family");
}

}  // namespace srec
