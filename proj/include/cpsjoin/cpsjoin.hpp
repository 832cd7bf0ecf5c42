#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "cpsjoin/common.hpp"
#include "cpsjoin/dataset.hpp"
#include "cpsjoin/embedding.hpp"
#include "cpsjoin/sketch.hpp"
#include "cpsjoin/tabulation.hpp"

namespace cpsjoin {

struct CpsConfig {
    double lambda = 0.5;
    std::size_t t = 128;
    std::size_t sketch_words = 8;
    double delta = 0.05;
    double eps = 0.1;
    std::size_t limit = 250;
    std::size_t reps = 10;
    std::uint64_t seed = 0;

    void validate() const {
        if (!(lambda > 0.0 && lambda < 1.0)) throw Error(ErrorCode::InvalidArgument, "lambda must lie in (0,1)");
        if (limit < 2) throw Error(ErrorCode::InvalidArgument, "limit must be at least 2");
        if (reps < 1) throw Error(ErrorCode::InvalidArgument, "reps must be at least 1");
        if (!(eps >= 0.0)) throw Error(ErrorCode::InvalidArgument, "eps must be non-negative");
        if (!(delta > 0.0 && delta < 1.0)) throw Error(ErrorCode::InvalidArgument, "delta must lie in (0,1)");
        if (t == 0 || sketch_words == 0) throw Error(ErrorCode::InvalidArgument, "t and sketch words must be positive");
    }
};

/// Positions of [t] chosen independently with probability min(1, 1/(λt)),
/// an expected 1/λ of them.
inline std::vector<std::uint32_t> sample_coordinates(std::size_t t, double lambda, Rng& rng) {
    const double p = std::min(1.0, 1.0 / (lambda * static_cast<double>(t)));
    std::vector<std::uint32_t> out;
    for (std::size_t i = 0; i < t; ++i)
        if (bernoulli(rng, p)) out.push_back(static_cast<std::uint32_t>(i));
    return out;
}

/// Splits a bucket on signature position i: one child per distinct value.
/// Children are reported in value order and only if they hold two or more
/// records.
template <class Visit>
void split_on_coordinate(std::span<const RecordId> bucket, std::uint32_t i, const EmbeddedDataset& emb,
                         Visit&& visit) {
    std::vector<std::pair<std::uint32_t, RecordId>> keyed;
    keyed.reserve(bucket.size());
    for (RecordId id : bucket) keyed.emplace_back(emb.signature(id)[i], id);
    std::sort(keyed.begin(), keyed.end());
    std::vector<RecordId> child;
    for (std::size_t a = 0; a < keyed.size();) {
        std::size_t b = a + 1;
        while (b < keyed.size() && keyed[b].first == keyed[a].first) ++b;
        if (b - a >= 2) {
            child.clear();
            for (std::size_t k = a; k < b; ++k) child.push_back(keyed[k].second);
            visit(keyed[a].first, std::span<const RecordId>(child));
        }
        a = b;
    }
}

/// State of one CPSJoin repetition.
class CpsRun {
public:
    // Recursion below this depth is not expected on any input; the guard
    // turns pathological inputs into brute force instead of stack overflow.
    static constexpr std::uint32_t kDepthGuard = 512;

    CpsRun(const EmbeddedDataset& emb, const CpsConfig& cfg, std::uint64_t rep_seed, JoinStats& stats,
           std::vector<RecordPair>& sink)
        : emb_(emb), cfg_(cfg), rep_seed_(rep_seed), verifier_(emb, cfg.lambda, cfg.delta, stats, sink), stats_(stats) {}

    /// BruteForce with the single-pass pooled-sketch heuristic. Small
    /// buckets are joined exactly and nothing is returned. Otherwise every
    /// record whose estimated average similarity to the bucket exceeds
    /// (1-ε)λ is removed: in bucket order, each one is compared against the
    /// records not removed before it.
    std::vector<RecordId> brute_force_step(std::span<const RecordId> bucket, Rng& rng) {
        if (bucket.size() <= cfg_.limit) {
            brute_force_pairs(bucket, verifier_);
            return {};
        }
        std::vector<std::uint64_t> pooled(emb_.sketch_words());
        pooled_sketch_into(
            bucket.size(), [&](std::size_t k) { return emb_.sketch(bucket[k]); }, rng, pooled);

        const double cut = (1.0 - cfg_.eps) * cfg_.lambda;
        std::vector<RecordId> removed, kept;
        for (RecordId id : bucket) {
            if (estimate_similarity(emb_.sketch(id), pooled) > cut) removed.push_back(id);
            else kept.push_back(id);
        }
        // Removed record k sees the kept records and the removed ones after it.
        for (std::size_t k = 0; k < removed.size(); ++k) {
            brute_force_point(kept, removed[k], verifier_);
            brute_force_point(std::span<const RecordId>(removed).subspan(k), removed[k], verifier_);
        }
        return kept;
    }

    /// One node of the Chosen Path tree.
    void recurse(std::span<const RecordId> bucket, std::uint32_t depth, std::uint64_t path) {
        stats_.max_depth = std::max(stats_.max_depth, depth);
        if (depth >= kDepthGuard) {
            brute_force_pairs(bucket, verifier_);
            return;
        }
        Rng rng(derive_seed(rep_seed_, path));
        const std::vector<RecordId> rest = brute_force_step(bucket, rng);
        if (rest.size() < 2) return;
        for (std::uint32_t i : sample_coordinates(emb_.signature_length(), cfg_.lambda, rng)) {
            split_on_coordinate(rest, i, emb_, [&](std::uint32_t value, std::span<const RecordId> child) {
                const std::uint64_t key = (std::uint64_t{i} << 32) | value;
                recurse(child, depth + 1, derive_seed(path, key));
            });
        }
    }

    void run() {
        std::vector<RecordId> all(emb_.size());
        for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<RecordId>(i);
        if (all.size() >= 2) recurse(all, 0, 0);
    }

    PairVerifier& verifier() { return verifier_; }

private:
    const EmbeddedDataset& emb_;
    const CpsConfig& cfg_;
    std::uint64_t rep_seed_;
    PairVerifier verifier_;
    JoinStats& stats_;
};

/// CPSJoin over a preprocessed dataset. Repetitions can be run one at a
/// time so callers can stop once a recall target is met.
class CpsJoin {
public:
    CpsJoin(const Dataset& data, CpsConfig cfg) : cfg_(std::move(cfg)) {
        cfg_.validate();
        const auto start = std::chrono::steady_clock::now();
        emb_.emplace(data, cfg_.t, cfg_.sketch_words, derive_seed(cfg_.seed, 0x656d626564ULL));
        preprocess_seconds_ = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }

    /// Runs repetition `rep`, appending verified pairs (with duplicates) to `sink`.
    void run_repetition(std::size_t rep, std::vector<RecordPair>& sink, JoinStats& stats) const {
        CpsRun run(*emb_, cfg_, derive_seed(cfg_.seed, 0x72657000ULL + rep), stats, sink);
        run.run();
    }

    const CpsConfig& config() const { return cfg_; }
    const EmbeddedDataset& embedding() const { return *emb_; }
    double preprocess_seconds() const { return preprocess_seconds_; }

private:
    CpsConfig cfg_;
    std::optional<EmbeddedDataset> emb_;
    double preprocess_seconds_ = 0.0;
};

/// Approximate self-join: cfg.reps independent repetitions, union of the
/// verified pairs with duplicates removed. Every reported pair has exact
/// Jaccard similarity >= λ. stats.results is the number of distinct pairs.
inline JoinOutput cps_join(const Dataset& data, const CpsConfig& cfg) {
    JoinOutput out;
    if (data.size() < 2) {
        cfg.validate();
        return out;
    }
    const CpsJoin join(data, cfg);
    out.stats.preprocess_seconds = join.preprocess_seconds();
    const auto start = std::chrono::steady_clock::now();
    std::vector<RecordPair> found;
    for (std::size_t rep = 0; rep < cfg.reps; ++rep) join.run_repetition(rep, found, out.stats);
    dedup_pairs(found);
    out.stats.join_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out.stats.results = found.size();
    out.pairs = std::move(found);
    return out;
}

/// Whether some path of exactly `depth` splits keeps both signatures in the
/// same bucket, splitting as the recursion does but without brute force.
inline bool co_bucketed_at_depth(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b, double lambda,
                                 std::uint32_t depth, Rng& rng) {
    if (depth == 0) return true;
    for (std::uint32_t i : sample_coordinates(a.size(), lambda, rng))
        if (a[i] == b[i] && co_bucketed_at_depth(a, b, lambda, depth - 1, rng)) return true;
    return false;
}

}  // namespace cpsjoin
