#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "srec/algorithms.hpp"
#include "srec/ensemble.hpp"
#include "srec/types.hpp"

namespace srec {

/// Exhaustive (or sampled) RIP constants at the orders the per-iteration
/// checks consume. Sampled estimates are lower bounds and never gate an
/// assertion; checks that need an absent or sampled value report Skip.
struct RipContext {
    std::optional<RipEstimate> delta_2k;
    std::optional<RipEstimate> delta_2l;
    std::optional<RipEstimate> delta_2kl;  // order 2k + l
    std::optional<RipEstimate> delta_2;
};

/// Fills every order that fits under the enumeration budget with the
/// exhaustive constant; the rest stay unavailable.
RipContext compute_rip_context(const DenseMatrix& a, int k, int l,
                               std::uint64_t enumeration_budget = 1000000ull);

enum class CheckStatus { Hold, Fail, Skip };

struct CheckResult {
    std::string name;
    CheckStatus status = CheckStatus::Skip;
    double slack = 0.0;  // signed; >= 0 when the inequality holds
};

/// Everything measured about one iteration against the ground truth:
/// md/fa/co partition the truth/iterate supports, found/lost are the support
/// turnover, and `checks` carries one entry per inequality evaluated.
struct IterationDiagnostics {
    SupportSet md;  // missed detections, I* \ I_t
    SupportSet fa;  // false alarms,     I_t \ I*
    SupportSet co;  // correct,          I_t ∩ I*
    SupportSet found;
    SupportSet lost;
    double f_before = 0.0;
    double f_after = 0.0;
    double z_md_sq = 0.0;
    double x_fa_sq = 0.0;
    double y_found_sq = 0.0;
    std::optional<double> c_const;
    bool converged_input = false;  // f(x^t) at numerical zero; checks skipped
    std::vector<CheckResult> checks;
};

/// Evaluates the per-iteration inequalities of the partial-hard-thresholding
/// family between two consecutive states of a run:
///   decrease_bound   f(y^{t+1}) − f(x^t) ≤ (1 + δ_2l − 1/η)·‖y_F‖²
///   md_energy        2(2η − 1/(1−δ_2k))·f(x^t) ≤ ‖z_MD‖² − ‖x_FA‖²
///   flb_lower/upper  ((1−η)²/η)‖x*_MD‖² ≤ f(x^t) ≤ ‖z_MD‖²/(4η(1−η)²)
///   found_progress   F ≠ ∅ and ‖y_F‖² ≥ (l/k)·c·f(x^t)
/// Checks whose hypotheses fail (step-size/RIP gates, noisy data for the
/// exact-case bounds) are reported Skip, not Fail.
IterationDiagnostics check_ompr_iteration(const MeasurementProblem& problem,
                                          const RecoveryState& before,
                                          const RecoveryState& after,
                                          const AlgorithmConfig& cfg, const RipContext& rip);

/// Two-stage decrease check: when δ_{2k+l} ≤ 0.35 holds exhaustively and the
/// signal is ±1-valued, asserts f(x^{t+1}) ≤ f(x^t) − 0.0001·min(l, |MD_t|).
IterationDiagnostics check_two_stage_iteration(const MeasurementProblem& problem,
                                               const RecoveryState& before,
                                               const RecoveryState& after,
                                               const AlgorithmConfig& cfg,
                                               const RipContext& rip);

/// Step sizes with guaranteed recovery: the open interval
/// (1/(2(1−δ_2k)), 1/(1+δ_2l)), possibly empty.
struct StepSizeInterval {
    double lo = 0.0;
    double hi = 0.0;
    bool is_empty = true;
};

StepSizeInterval admissible_step_sizes(const RipContext& rip);

struct DiagnosticsRow {
    std::uint64_t trial_seed = 0;
    int iter = 0;
    std::string check_name;
    CheckStatus status = CheckStatus::Skip;
    double slack = 0.0;
};

/// Header `trial_seed,iter,check_name,status,slack`; status spelled
/// hold/fail/skip.
void write_diagnostics_csv(std::ostream& out, const std::vector<DiagnosticsRow>& rows);

std::vector<DiagnosticsRow> diagnostics_rows(std::uint64_t trial_seed,
                                             const IterationDiagnostics& diag, int iter);

}  // namespace srec
