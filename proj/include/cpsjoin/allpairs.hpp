#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "cpsjoin/common.hpp"
#include "cpsjoin/dataset.hpp"

namespace cpsjoin {

namespace detail {
// Absorbs floating error in products such as 0.5 / 1.5 * 6.
inline constexpr double kThresholdEps = 1e-9;
}

/// Smallest overlap o with o / (|x| + |y| - o) >= λ.
inline std::size_t min_overlap(std::size_t size_x, std::size_t size_y, double lambda) {
    const double bound = lambda / (1.0 + lambda) * static_cast<double>(size_x + size_y);
    return static_cast<std::size_t>(std::ceil(bound - detail::kThresholdEps));
}

/// ⌈λ·s⌉, the smallest partner size allowed by the Jaccard size filter.
inline std::size_t min_partner_size(std::size_t size, double lambda) {
    return static_cast<std::size_t>(std::ceil(lambda * static_cast<double>(size) - detail::kThresholdEps));
}

/// Size filter: J(x,y) >= λ is only possible if λ·max(|x|,|y|) <= min(|x|,|y|).
inline bool passes_size_filter(std::size_t size_x, std::size_t size_y, double lambda) {
    const std::size_t lo = std::min(size_x, size_y), hi = std::max(size_x, size_y);
    return lo >= min_partner_size(hi, lambda);
}

/// Number of AllPairs prefix tokens for a record of the given size.
inline std::size_t prefix_length(std::size_t size, double lambda) {
    return size - min_partner_size(size, lambda) + 1;
}

struct Verdict {
    bool similar = false;
    /// Exact when the merge ran to completion. After an early exit it is
    /// the largest Jaccard value still reachable, which is below λ.
    double jaccard = 0.0;
};

/// Merge-based verification with early termination once the overlap
/// required for J >= λ can no longer be reached.
inline Verdict verify(TokenView x, TokenView y, double lambda) {
    const std::size_t required = min_overlap(x.size(), y.size(), lambda);
    const auto jaccard_of = [&](std::size_t overlap) {
        return static_cast<double>(overlap) / static_cast<double>(x.size() + y.size() - overlap);
    };
    std::size_t i = 0, j = 0, overlap = 0;
    while (i < x.size() && j < y.size()) {
        const std::size_t reachable = overlap + std::min(x.size() - i, y.size() - j);
        if (reachable < required) return {false, jaccard_of(reachable)};
        if (x[i] < y[j]) ++i;
        else if (y[j] < x[i]) ++j;
        else { ++overlap; ++i; ++j; }
    }
    return {overlap >= required, jaccard_of(overlap)};
}

/// O(n²) exact self-join; the ground truth for recall measurements.
inline ResultPairSet brute_force_join(const Dataset& data, double lambda) {
    ResultPairSet out;
    std::vector<std::uint32_t> scratch;
    for (std::size_t a = 0; a < data.size(); ++a) {
        for (std::size_t b = a + 1; b < data.size(); ++b) {
            const auto& x = data.records[a];
            const auto& y = data.records[b];
            scratch.clear();
            std::set_intersection(x.begin(), x.end(), y.begin(), y.end(), std::back_inserter(scratch));
            if (scratch.size() >= min_overlap(x.size(), y.size(), lambda))
                out.emplace_back(static_cast<RecordId>(a), static_cast<RecordId>(b));
        }
    }
    return out;  // generated in sorted order
}

/// AllPairs prefix-filter self-join (Bayardo et al.), basic variant.
///
/// Records are processed in canonical (size) order. Each record probes the
/// inverted lists of its prefix tokens, where every earlier record has
/// indexed its own prefix; the rarest tokens come first in a canonical
/// dataset. Pre-candidates are probe hits that pass the size filter,
/// candidates the distinct ones. With `prefix_filter` off every token is
/// indexed and probed, which finds the same pairs with more work.
inline ResultPairSet allpairs_join(const Dataset& data, double lambda, JoinStats* stats = nullptr,
                                   bool prefix_filter = true) {
    if (!data.canonical)
        throw Error(ErrorCode::RequiresCanonicalOrder, "allpairs_join needs a frequency-ordered dataset");
    if (!(lambda > 0.0 && lambda <= 1.0)) throw Error(ErrorCode::InvalidArgument, "lambda must lie in (0,1]");

    JoinStats local;
    ResultPairSet out;
    std::vector<std::vector<RecordId>> index(data.universe);
    std::vector<std::size_t> list_start(data.universe, 0);
    std::vector<std::uint8_t> seen(data.size(), 0);
    std::vector<RecordId> touched;

    for (std::size_t xi = 0; xi < data.size(); ++xi) {
        const auto& x = data.records[xi];
        const std::size_t min_size = min_partner_size(x.size(), lambda);
        const std::size_t prefix = prefix_filter ? prefix_length(x.size(), lambda) : x.size();
        touched.clear();
        for (std::size_t p = 0; p < prefix; ++p) {
            const std::uint32_t tok = x[p];
            auto& list = index[tok];
            std::size_t& start = list_start[tok];
            // Later probes are never smaller, so too-small entries can be skipped for good.
            while (start < list.size() && data.records[list[start]].size() < min_size) ++start;
            for (std::size_t k = start; k < list.size(); ++k) {
                const RecordId yi = list[k];
                ++local.pre_candidates;
                if (!seen[yi]) {
                    seen[yi] = 1;
                    touched.push_back(yi);
                }
            }
        }
        local.candidates += touched.size();
        for (RecordId yi : touched) {
            seen[yi] = 0;
            if (verify(x, data.records[yi], lambda).similar) {
                out.emplace_back(yi, static_cast<RecordId>(xi));
                ++local.results;
            }
        }
        for (std::size_t p = 0; p < prefix; ++p) index[x[p]].push_back(static_cast<RecordId>(xi));
    }
    dedup_pairs(out);
    if (stats) *stats += local;
    return out;
}

}  // namespace cpsjoin
