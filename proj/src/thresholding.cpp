#include "srec/thresholding.hpp"

#include <algorithm>
#include <cmath>

namespace srec {

std::vector<index_t> top_abs_indices(const Vector& z, std::vector<index_t> candidates, int count) {
    if (count < 0) throw BadArguments("top_abs_indices: negative count");
    const int take = std::min<int>(count, static_cast<int>(candidates.size()));
    auto before = [&z](index_t a, index_t b) { return selection_before(z, a, b); };
    std::nth_element(candidates.begin(), candidates.begin() + take, candidates.end(), before);
    candidates.resize(take);
    std::sort(candidates.begin(), candidates.end());
    return candidates;
}

namespace {

ThresholdResult build_result(const Vector& z, std::vector<index_t> retained,
                             const SupportSet& incumbent) {
    ThresholdResult res;
    res.y.assign(z.size(), 0.0);
    res.support = SupportSet(std::move(retained));
    for (index_t j : res.support) res.y[j] = z[j];
    res.found = set_difference(res.support, incumbent);
    res.lost = set_difference(incumbent, res.support);
    return res;
}

}  // namespace

ThresholdResult hard_threshold(const Vector& z, int k) {
    const index_t n = static_cast<index_t>(z.size());
    if (k < 1 || k > n) throw BadArguments("hard_threshold: need 1 <= k <= n");
    std::vector<index_t> all(n);
    for (index_t i = 0; i < n; ++i) all[i] = i;
    return build_result(z, top_abs_indices(z, std::move(all), k), SupportSet{});
}

ThresholdResult partial_hard_threshold(const Vector& z, const SupportSet& incumbent, int l, int k) {
    const index_t n = static_cast<index_t>(z.size());
    if (k < 1 || k > n) throw BadArguments("partial_hard_threshold: need 1 <= k <= n");
    if (incumbent.size() != k)
        throw BadArguments("partial_hard_threshold: |I| = " + std::to_string(incumbent.size()) +
                           ", expected k = " + std::to_string(k));
    if (l < 1 || l > k) throw BadArguments("partial_hard_threshold: need 1 <= l <= k");
    if (!incumbent.empty() && incumbent.idx.back() >= n)
        throw BadArguments("partial_hard_threshold: incumbent index out of range");

    std::vector<index_t> complement;
    complement.reserve(n - incumbent.size());
    {
        auto it = incumbent.begin();
        for (index_t j = 0; j < n; ++j) {
            if (it != incumbent.end() && *it == j) {
                ++it;
            } else {
                complement.push_back(j);
            }
        }
    }

    std::vector<index_t> top = top_abs_indices(z, std::move(complement), l);
    std::vector<index_t> joined;
    joined.reserve(incumbent.idx.size() + top.size());
    std::merge(incumbent.begin(), incumbent.end(), top.begin(), top.end(),
               std::back_inserter(joined));

    return build_result(z, top_abs_indices(z, std::move(joined), k), incumbent);
}

}  // namespace srec
