#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "cpsjoin/common.hpp"
#include "cpsjoin/dataset.hpp"
#include "cpsjoin/embedding.hpp"
#include "cpsjoin/tabulation.hpp"

namespace cpsjoin {

struct LshConfig {
    double lambda = 0.5;
    double recall = 0.9;
    /// 0 selects k with choose_k.
    std::size_t k = 0;
    /// 0 derives L from the recall target.
    std::size_t L = 0;
    std::size_t t = 128;
    std::size_t sketch_words = 8;
    double delta = 0.05;
    std::uint64_t seed = 0;

    void validate() const {
        if (!(lambda > 0.0 && lambda < 1.0)) throw Error(ErrorCode::InvalidArgument, "lambda must lie in (0,1)");
        if (!(recall > 0.0 && recall < 1.0)) throw Error(ErrorCode::InvalidArgument, "recall must lie in (0,1)");
        if (!(delta > 0.0 && delta < 1.0)) throw Error(ErrorCode::InvalidArgument, "delta must lie in (0,1)");
        if (t == 0 || sketch_words == 0) throw Error(ErrorCode::InvalidArgument, "t and sketch words must be positive");
        if (k > t) throw Error(ErrorCode::InvalidArgument, "k cannot exceed the signature length");
    }
};

/// L = ⌈ln(1/(1-φ)) / λ^k⌉, at least 1.
inline std::size_t repetitions_for_recall(double lambda, std::size_t k, double recall) {
    if (!(lambda > 0.0 && lambda <= 1.0)) throw Error(ErrorCode::InvalidArgument, "lambda must lie in (0,1]");
    if (!(recall > 0.0 && recall < 1.0)) throw Error(ErrorCode::InvalidArgument, "recall must lie in (0,1)");
    if (k == 0) throw Error(ErrorCode::InvalidArgument, "k must be at least 1");
    const double reps = std::ceil(std::log(1.0 / (1.0 - recall)) / std::pow(lambda, static_cast<double>(k)));
    return std::max<std::size_t>(1, static_cast<std::size_t>(reps));
}

/// k distinct signature positions, sampled without replacement.
inline std::vector<std::uint32_t> sample_positions(std::size_t t, std::size_t k, Rng& rng) {
    std::vector<std::uint32_t> all(t);
    for (std::size_t i = 0; i < t; ++i) all[i] = static_cast<std::uint32_t>(i);
    for (std::size_t i = 0; i < k; ++i) std::swap(all[i], all[i + uniform_index(rng, t - i)]);
    all.resize(k);
    return all;
}

/// Groups records by the hash of their (position, value) tuples at the
/// given positions. Each group is visited in key order; distinct tuples
/// sharing a 64-bit key merely add candidates.
template <class Visit>
void bucket_by_positions(const EmbeddedDataset& emb, std::span<const std::uint32_t> positions, Visit&& visit) {
    std::vector<std::pair<std::uint64_t, RecordId>> keyed(emb.size());
    for (std::size_t id = 0; id < emb.size(); ++id) {
        const auto sig = emb.signature(static_cast<RecordId>(id));
        std::uint64_t key = 0;
        for (std::uint32_t pos : positions) key = mix64(key ^ ((std::uint64_t{pos} << 32) | sig[pos]));
        keyed[id] = {key, static_cast<RecordId>(id)};
    }
    std::sort(keyed.begin(), keyed.end());
    std::vector<RecordId> group;
    for (std::size_t a = 0; a < keyed.size();) {
        std::size_t b = a + 1;
        while (b < keyed.size() && keyed[b].first == keyed[a].first) ++b;
        group.clear();
        for (std::size_t j = a; j < b; ++j) group.push_back(keyed[j].second);
        visit(std::span<const RecordId>(group));
        a = b;
    }
}

inline constexpr std::size_t kMinK = 2;
inline constexpr std::size_t kMaxK = 10;

/// Cost-model weights in relative units.
struct LshCostModel {
    double verify = 1.0;
    double hash = 1.0;
};

/// Picks k in [2, 10] minimising the estimated join time
/// (Σ_B |B|(|B|-1)/2 · c_verify + n · c_hash) · L(k), measured on one
/// splitting pass per k. Ties go to the smaller k. If `costs` is given it
/// receives the estimate for every k (indexed by k).
inline std::size_t choose_k(const EmbeddedDataset& emb, double lambda, double recall, std::uint64_t seed,
                            std::array<double, kMaxK + 1>* costs = nullptr, LshCostModel model = {}) {
    std::size_t best_k = kMinK;
    double best_cost = std::numeric_limits<double>::infinity();
    const std::size_t max_k = std::min(kMaxK, emb.signature_length());
    for (std::size_t k = kMinK; k <= max_k; ++k) {
        Rng rng(derive_seed(seed, k));
        const auto positions = sample_positions(emb.signature_length(), k, rng);
        double pairs = 0.0;
        bucket_by_positions(emb, positions, [&](std::span<const RecordId> b) {
            const double m = static_cast<double>(b.size());
            pairs += m * (m - 1.0) / 2.0;
        });
        const double per_rep = pairs * model.verify + static_cast<double>(emb.size()) * model.hash;
        const double cost = per_rep * static_cast<double>(repetitions_for_recall(lambda, k, recall));
        if (costs) (*costs)[k] = cost;
        if (cost < best_cost) {
            best_cost = cost;
            best_k = k;
        }
    }
    return best_k;
}

/// MinHash LSH self-join over a preprocessed dataset.
class MinHashLsh {
public:
    MinHashLsh(const Dataset& data, LshConfig cfg) : cfg_(std::move(cfg)) {
        cfg_.validate();
        const auto start = std::chrono::steady_clock::now();
        emb_.emplace(data, cfg_.t, cfg_.sketch_words, derive_seed(cfg_.seed, 0x656d626564ULL));
        preprocess_seconds_ = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        k_ = cfg_.k != 0 ? cfg_.k : choose_k(*emb_, cfg_.lambda, cfg_.recall, derive_seed(cfg_.seed, 0x6b));
        L_ = cfg_.L != 0 ? cfg_.L : repetitions_for_recall(cfg_.lambda, k_, cfg_.recall);
    }

    /// One LSH table: bucket on k fresh signature positions and brute-force
    /// every bucket with two or more records.
    void run_repetition(std::size_t rep, std::vector<RecordPair>& sink, JoinStats& stats) const {
        Rng rng(derive_seed(cfg_.seed, 0x6c736800ULL + rep));
        const auto positions = sample_positions(emb_->signature_length(), k_, rng);
        PairVerifier verifier(*emb_, cfg_.lambda, cfg_.delta, stats, sink);
        bucket_by_positions(*emb_, positions, [&](std::span<const RecordId> bucket) {
            if (bucket.size() >= 2) brute_force_pairs(bucket, verifier);
        });
    }

    std::size_t k() const { return k_; }
    std::size_t L() const { return L_; }
    const LshConfig& config() const { return cfg_; }
    const EmbeddedDataset& embedding() const { return *emb_; }
    double preprocess_seconds() const { return preprocess_seconds_; }

private:
    LshConfig cfg_;
    std::optional<EmbeddedDataset> emb_;
    std::size_t k_ = 0;
    std::size_t L_ = 0;
    double preprocess_seconds_ = 0.0;
};

struct LshOutput : JoinOutput {
    std::size_t k = 0;
    std::size_t L = 0;
};

/// L repetitions of MinHash LSH with duplicates removed across tables.
inline LshOutput lsh_join(const Dataset& data, const LshConfig& cfg) {
    LshOutput out;
    const MinHashLsh lsh(data, cfg);
    out.k = lsh.k();
    out.L = lsh.L();
    out.stats.preprocess_seconds = lsh.preprocess_seconds();
    const auto start = std::chrono::steady_clock::now();
    std::vector<RecordPair> found;
    for (std::size_t rep = 0; rep < lsh.L(); ++rep) lsh.run_repetition(rep, found, out.stats);
    dedup_pairs(found);
    out.stats.join_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out.stats.results = found.size();
    out.pairs = std::move(found);
    return out;
}

}  // namespace cpsjoin
