#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cpsjoin/allpairs.hpp"
#include "cpsjoin/common.hpp"
#include "cpsjoin/dataset.hpp"
#include "cpsjoin/minhash.hpp"
#include "cpsjoin/sketch.hpp"

namespace cpsjoin {

/// Preprocessed view of a dataset: a t-value MinHash signature and an
/// ℓ-word 1-bit sketch per record, stored row-major. Built once and shared
/// by every repetition of the approximate joins.
class EmbeddedDataset {
public:
    EmbeddedDataset(const Dataset& data, std::size_t t, std::size_t sketch_words, std::uint64_t seed)
        : data_(&data), t_(t), words_(sketch_words) {
        const MinHashFamily family(t, derive_seed(seed, 1));
        const SketchFamily sketches(sketch_words, derive_seed(seed, 2));
        signatures_.resize(data.size() * t);
        sketch_words_.resize(data.size() * sketch_words);
        for (std::size_t i = 0; i < data.size(); ++i) {
            embed_into(family, data.records[i], std::span<std::uint32_t>(signatures_).subspan(i * t, t));
            sketches.build_into(data.records[i],
                                std::span<std::uint64_t>(sketch_words_).subspan(i * sketch_words, sketch_words));
        }
    }

    const Dataset& data() const { return *data_; }
    std::size_t size() const { return data_->size(); }
    std::size_t signature_length() const { return t_; }
    std::size_t sketch_words() const { return words_; }
    std::size_t sketch_bits() const { return 64 * words_; }

    std::span<const std::uint32_t> signature(RecordId id) const {
        return std::span<const std::uint32_t>(signatures_).subspan(std::size_t{id} * t_, t_);
    }
    std::span<const std::uint64_t> sketch(RecordId id) const {
        return std::span<const std::uint64_t>(sketch_words_).subspan(std::size_t{id} * words_, words_);
    }
    TokenView record(RecordId id) const { return data_->records[id]; }

private:
    const Dataset* data_;
    std::size_t t_;
    std::size_t words_;
    std::vector<std::uint32_t> signatures_;
    std::vector<std::uint64_t> sketch_words_;
};

/// Size filter, sketch filter and exact verification for one candidate
/// pair, shared by the brute-force subroutines of both approximate joins.
class PairVerifier {
public:
    PairVerifier(const EmbeddedDataset& emb, double lambda, double delta, JoinStats& stats,
                 std::vector<RecordPair>& sink)
        : emb_(emb), lambda_(lambda), cutoff_(threshold(lambda, emb.sketch_bits(), delta)), stats_(stats), sink_(sink) {}

    void compare(RecordId a, RecordId b) {
        ++stats_.pre_candidates;
        const TokenView x = emb_.record(a), y = emb_.record(b);
        if (!passes_size_filter(x.size(), y.size(), lambda_)) return;
        if (estimate_similarity(emb_.sketch(a), emb_.sketch(b)) < cutoff_) return;
        ++stats_.candidates;
        if (verify(x, y, lambda_).similar) {
            ++stats_.results;
            sink_.emplace_back(a, b);
        }
    }

    const EmbeddedDataset& embedding() const { return emb_; }
    double lambda() const { return lambda_; }
    double sketch_cutoff() const { return cutoff_; }
    JoinStats& stats() { return stats_; }

private:
    const EmbeddedDataset& emb_;
    double lambda_;
    double cutoff_;
    JoinStats& stats_;
    std::vector<RecordPair>& sink_;
};

/// Compares every unordered pair of the bucket.
inline void brute_force_pairs(std::span<const RecordId> bucket, PairVerifier& verifier) {
    for (std::size_t i = 0; i < bucket.size(); ++i)
        for (std::size_t j = i + 1; j < bucket.size(); ++j) verifier.compare(bucket[i], bucket[j]);
}

/// Compares x against every other member of the bucket.
inline void brute_force_point(std::span<const RecordId> bucket, RecordId x, PairVerifier& verifier) {
    for (RecordId y : bucket)
        if (y != x) verifier.compare(x, y);
}

}  // namespace cpsjoin
