#pragma once

#include "srec/types.hpp"

namespace srec {

/// Outcome of a (partial) hard-thresholding step. `support` is the retained
/// index set (size min(k, candidates)); entries of y can be exactly zero on
/// it in degenerate inputs, never nonzero off it. `found`/`lost` are the
/// support turnover relative to the incumbent set I.
struct ThresholdResult {
    Vector y;
    SupportSet support;
    SupportSet found;  // support \ I
    SupportSet lost;   // I \ support
};

/// Selection order shared by every top-k style decision in the toolkit:
/// larger magnitude first, lower index wins ties. Keeping one total order
/// makes thresholding, greedy argmax and LSH re-ranking bit-reproducible and
/// mutually consistent.
inline bool selection_before(const Vector& z, index_t a, index_t b) {
    double fa = std::abs(z[a]);
    double fb = std::abs(z[b]);
    if (fa != fb) return fa > fb;
    return a < b;
}

/// Top `count` candidate indices under selection_before, via partial
/// selection (O(|candidates|) expected). Returned sorted ascending.
std::vector<index_t> top_abs_indices(const Vector& z, std::vector<index_t> candidates, int count);

/// Keep the k largest-magnitude entries of z, zero the rest.
/// found/lost follow the I = ∅ convention: found = support, lost = ∅.
ThresholdResult hard_threshold(const Vector& z, int k);

/// Best approximation of z among vectors y with ‖y‖₀ ≤ k whose support adds
/// at most l indices outside I. Computed as: Top = top-l of |z| outside I,
/// J = I ∪ Top, y = hard threshold of z restricted to J.
/// Requires |I| = k and 1 ≤ l ≤ k.
ThresholdResult partial_hard_threshold(const Vector& z, const SupportSet& incumbent, int l, int k);

}  // namespace srec
